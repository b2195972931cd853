"""Layer and volume potentials on the discretized scatterer.

Thin public layer over :mod:`cscat.surface` (SL, DL on the obstacle boundary)
and :mod:`cscat.volume` (V_q on the medium).  Conventions:

* ``Phi = exp(i k r) / (4 pi r)``.
* Normals are stored outward from the obstacle, i.e. pointing into the
  exterior domain G, which is the orientation used by the double layer.
* ``V_q f(x) = k^2 int_Omega Phi(x, y) (1 - q(y)) f(y) dV``.
"""

from __future__ import annotations

import numpy as np

from .surface import (BoundaryGrid, LayerMatrices, NearSingularWarning, apply_layer_potential,
                      assemble_layer_matrices, build_boundary_grid, layer_evaluation_matrices, layer_far_field)
from .volume import (LatticeOperator, VolumeGrid, apply_volume_potential, build_volume_grid, cell_averages,
                     volume_evaluation_matrix, volume_far_field, volume_integral_at)

__all__ = [
    "BoundaryGrid", "VolumeGrid", "LayerMatrices", "LatticeOperator", "NearSingularWarning",
    "build_boundary_grid", "build_volume_grid", "assemble_layer_matrices", "layer_evaluation_matrices",
    "layer_far_field", "apply_layer_potential", "apply_volume_potential", "volume_evaluation_matrix",
    "volume_far_field", "volume_integral_at", "cell_averages", "boundary_trace",
]


def boundary_trace(kind: str, grid: BoundaryGrid, source, k: float, volume_grid: VolumeGrid | None = None,
                   matrices: LayerMatrices | None = None) -> np.ndarray:
    """Exterior one-sided trace on the boundary nodes.

    DL jumps: its trace from G is the principal value plus half the density.
    SL and V are continuous across the surface.
    """
    if kind == "V":
        if volume_grid is None:
            raise ValueError("V trace needs the volume grid")
        return volume_evaluation_matrix(volume_grid, grid.nodes, k) @ np.asarray(source, complex)
    mats = matrices if matrices is not None else assemble_layer_matrices(grid, k)
    psi = np.asarray(source, complex)
    if kind == "SL":
        return mats.S @ psi
    if kind == "DL":
        return mats.K @ psi + 0.5 * psi
    raise ValueError(f"unknown trace kind {kind!r}")
