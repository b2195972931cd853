"""Forward scattering by a sound-soft obstacle with attached and detached media.

The scattered field is represented as

    u^s = -V_q (u^s + u^i) + (DL + i k SL) psi

with the unknowns ``u^s`` on the medium cells and ``psi`` on the obstacle
boundary.  Taking the exterior trace on the obstacle and imposing
``u^s = -u^i`` there gives the second equation

    (1/2 + K + i k S) psi - T V_q u^s = -u^i + T V_q u^i

where ``K`` is the principal-value double layer.  Both blocks are second kind.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres
from scipy.spatial import cKDTree

from .errors import ConfigurationError, DomainError, NonConvergenceError, PreconditionError
from .geometry import SceneC
from .specialfn import PlaneWave, PointSource, fundamental_solution
from .surface import assemble_layer_matrices, build_boundary_grid, layer_evaluation_matrices, layer_far_field
from .volume import (LatticeOperator, build_volume_grid, cell_averages, volume_evaluation_matrix,
                     volume_far_field, volume_integral_at)


@dataclass(frozen=True)
class IncidentField:
    """Plane wave, point source or a finite plane-wave superposition."""

    kind: str
    payload: object

    def __post_init__(self):
        if self.kind not in ("plane_wave", "point_source", "herglotz_superposition"):
            raise ConfigurationError(f"unknown incident kind {self.kind!r}")

    @classmethod
    def plane_wave(cls, direction, k):
        return cls("plane_wave", PlaneWave(np.asarray(direction, float), k))

    @classmethod
    def point_source(cls, kind, location, k, axis=(0.0, 0.0, 1.0)):
        return cls("point_source", PointSource(kind, np.asarray(location, float), k, np.asarray(axis, float)))

    @classmethod
    def herglotz(cls, directions, weights, k):
        return cls("herglotz_superposition", (np.atleast_2d(directions), np.asarray(weights, complex), float(k)))

    @property
    def wave_number(self):
        if self.kind == "herglotz_superposition":
            return self.payload[2]
        return self.payload.wave_number

    @property
    def singular_point(self):
        return self.payload.location if self.kind == "point_source" else None

    def __call__(self, points):
        pts = np.atleast_2d(points)
        if self.kind == "herglotz_superposition":
            d, g, k = self.payload
            return np.exp(1j * k * pts @ d.T) @ g
        return self.payload(pts)


@dataclass
class Resolution:
    panels_per_edge: int = 2
    order: int = 6
    h: float = 0.1
    refine_point: tuple | None = None
    refine_gamma: float = 2.0
    refine_min: float = 0.05
    max_iter: int = 300

    def __post_init__(self):
        if self.panels_per_edge < 1 or self.order < 2 or self.h <= 0:
            raise ConfigurationError("resolution parameters must be positive (order >= 2)")


@dataclass
class DensityPair:
    volume_density: np.ndarray
    boundary_density: np.ndarray

    def norms(self):
        return {"volume": float(np.linalg.norm(self.volume_density)),
                "boundary": float(np.linalg.norm(self.boundary_density))}


@dataclass
class FarFieldMatrix:
    observation_dirs: np.ndarray
    incident_dirs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.observation_dirs), len(self.incident_dirs)):
            raise ValueError("far-field matrix shape does not match the direction lists")


class ForwardSolver:
    """Discretized scene with assembled operators; reusable across incident fields."""

    def __init__(self, scene: SceneC, resolution: Resolution | None = None):
        self.scene = scene
        self.res = resolution or Resolution()
        self.k = scene.wave_number
        k = self.k
        t0 = time.perf_counter()
        contacts = [m.contact for m in scene.media if m.contact is not None]
        self.bgrid = None
        self.vgrid = build_volume_grid(scene, self.res.h) if scene.media else None
        if scene.obstacle is not None:
            r = self.res
            self.bgrid = build_boundary_grid(scene.obstacle, r.panels_per_edge, r.order, r.refine_point,
                                             r.refine_gamma, r.refine_min, contacts=contacts)
            mats = assemble_layer_matrices(self.bgrid, k)
            self.mats = mats
            self.A_bb = 0.5 * np.eye(self.bgrid.n_nodes) + mats.K + 1j * k * mats.S
            self.lu = sla.lu_factor(self.A_bb)
        if self.vgrid is not None:
            self.lattice = LatticeOperator(self.vgrid, k)
        if self.bgrid is not None and self.vgrid is not None:
            S, D = layer_evaluation_matrices(self.bgrid, self.vgrid.centers, k, warn=False)
            self.B_vb = D + 1j * k * S
            self.B_bv = volume_evaluation_matrix(self.vgrid, self.bgrid.nodes, k)
        self.setup_time = time.perf_counter() - t0

    @property
    def n_unknowns(self):
        n = 0 if self.vgrid is None else self.vgrid.n_cells
        return n + (0 if self.bgrid is None else self.bgrid.n_nodes)

    # -- solve -------------------------------------------------------------
    def _incident_cells(self, inc: IncidentField):
        if self.vgrid is None:
            return None
        return cell_averages(self.vgrid, inc, inc.singular_point)

    def _check_incident(self, inc: IncidentField):
        if abs(inc.wave_number - self.k) > 1e-12 * self.k:
            raise PreconditionError("incident wave number differs from the scene's")
        x0 = inc.singular_point
        if x0 is not None and (self.scene.inside_sigma(x0[None])[0]
                               or self.scene.sigma_distance(x0[None])[0] <= 0.0):
            raise PreconditionError(f"point source at {x0.tolist()} is not in the exterior of the scatterer")

    def solve(self, inc: IncidentField, tol: float = 1e-8) -> "ScatteredField":
        if not 1e-10 <= tol <= 1e-2:
            raise ConfigurationError(f"tol={tol} outside the admissible range [1e-10, 1e-2]")
        self._check_incident(inc)
        t0 = time.perf_counter()
        ui_cells = self._incident_cells(inc)
        ui_nodes = inc(self.bgrid.nodes) if self.bgrid is not None else None
        history = []
        if self.bgrid is None and self.vgrid is None:
            dens = DensityPair(np.zeros(0, complex), np.zeros(0, complex))
            return ScatteredField(self, inc, dens, ui_cells, {"relative_residual": 0.0, "iterations": 0})
        if self.vgrid is None:
            psi = sla.lu_solve(self.lu, -ui_nodes)
            u = np.zeros(0, complex)
            resid = np.linalg.norm(self.A_bb @ psi + ui_nodes) / max(np.linalg.norm(ui_nodes), 1e-300)
            info = {"relative_residual": float(resid), "iterations": 1, "method": "dense_lu"}
        else:
            M = self.vgrid.n_cells
            N = 0 if self.bgrid is None else self.bgrid.n_nodes
            rhs_v = -self.lattice(ui_cells)
            if N:
                rhs_b = -ui_nodes + self.B_bv @ ui_cells
                rhs = np.concatenate([rhs_v, rhs_b])
            else:
                rhs = rhs_v

            def matvec(x):
                u, psi = x[:M], x[M:]
                top = u + self.lattice(u)
                if N:
                    top = top - self.B_vb @ psi
                    bot = self.A_bb @ psi - self.B_bv @ u
                    return np.concatenate([top, bot])
                return top

            def precond(x):
                if not N:
                    return x
                return np.concatenate([x[:M], sla.lu_solve(self.lu, x[M:])])

            A = LinearOperator((M + N, M + N), matvec=matvec, dtype=complex)
            P = LinearOperator((M + N, M + N), matvec=precond, dtype=complex)
            bnorm = np.linalg.norm(rhs)
            if bnorm == 0:
                x = np.zeros(M + N, complex)
                it = 0
            else:
                cb = lambda r: history.append(float(r))  # noqa: E731
                x, it = gmres(A, rhs, rtol=tol, atol=0.0, restart=min(100, M + N), maxiter=self.res.max_iter,
                              M=P, callback=cb, callback_type="pr_norm")
            resid = float(np.linalg.norm(matvec(x) - rhs) / bnorm) if bnorm else 0.0
            if it != 0 or resid > 10 * tol:
                raise NonConvergenceError(f"GMRES did not reach tol={tol} (residual {resid:.2e})", history)
            u, psi = x[:M], x[M:]
            info = {"relative_residual": resid, "iterations": len(history), "method": "gmres"}
        info["solve_time"] = time.perf_counter() - t0
        dens = DensityPair(u, psi if psi is not None else np.zeros(0, complex))
        sf = ScatteredField(self, inc, dens, ui_cells, info)
        if self.bgrid is not None:
            on = self.boundary_values(sf)
            info["boundary_residual"] = float(np.max(np.abs(on + ui_nodes)) / max(np.max(np.abs(ui_nodes)), 1e-300))
        return sf

    # -- evaluation --------------------------------------------------------
    def boundary_values(self, sf: "ScatteredField"):
        """u^s on the obstacle nodes via the exterior trace."""
        psi = sf.densities.boundary_density
        val = self.A_bb @ psi
        if self.vgrid is not None:
            val = val - self.B_bv @ (sf.densities.volume_density + sf.incident_cells)
        return val

    def evaluate(self, sf: "ScatteredField", points, accurate_incident: bool = True):
        pts = np.atleast_2d(np.asarray(points, float))
        out = np.zeros(len(pts), complex)
        if self.scene.obstacle is not None and np.any(self.scene.obstacle.contains(pts, 1e-10)):
            bad = pts[self.scene.obstacle.contains(pts, 1e-10)][0]
            raise DomainError(f"evaluation point {bad.tolist()} lies inside the obstacle")
        on_node = np.full(len(pts), -1)
        if self.bgrid is not None:
            dist, idx = cKDTree(self.bgrid.nodes).query(pts)
            on_node = np.where(dist < 1e-12, idx, -1)
            if np.any(on_node >= 0):
                out[on_node >= 0] = self.boundary_values(sf)[on_node[on_node >= 0]]
        off = on_node < 0
        P = pts[off]
        if len(P) == 0:
            return out
        val = np.zeros(len(P), complex)
        if self.bgrid is not None:
            S, D = layer_evaluation_matrices(self.bgrid, P, self.k)
            val += (D + 1j * self.k * S) @ sf.densities.boundary_density
        if self.vgrid is not None:
            Vm = volume_evaluation_matrix(self.vgrid, P, self.k)
            val -= Vm @ sf.densities.volume_density
            inc = sf.incident
            if inc.singular_point is not None and accurate_incident:
                val -= np.array([volume_integral_at(self.vgrid, x, self.k, inc) for x in P])
            else:
                val -= Vm @ sf.incident_cells
        out[off] = val
        return out

    def far_field(self, sf: "ScatteredField", directions):
        d = np.atleast_2d(np.asarray(directions, float))
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        out = np.zeros(len(d), complex)
        if self.bgrid is not None:
            S, D = layer_far_field(self.bgrid, d, self.k)
            out += (D + 1j * self.k * S) @ sf.densities.boundary_density
        if self.vgrid is not None:
            out -= volume_far_field(self.vgrid, d, self.k) @ (sf.densities.volume_density + sf.incident_cells)
        return out


@dataclass
class ScatteredField:
    solver: ForwardSolver
    incident: IncidentField
    densities: DensityPair
    incident_cells: np.ndarray | None
    info: dict = field(default_factory=dict)

    def __call__(self, points):
        return self.solver.evaluate(self, points)

    def far_field(self, directions):
        return self.solver.far_field(self, directions)


def solve_scattering(scene: SceneC, incident: IncidentField, resolution: Resolution | None = None,
                     tol: float = 1e-8, solver: ForwardSolver | None = None) -> ScatteredField:
    """Solve the coupled system for one incident field (pass ``solver`` to reuse assembled operators)."""
    if solver is None:
        solver = ForwardSolver(scene, resolution)
    elif solver.scene is not scene:
        raise PreconditionError("solver was built for a different scene")
    return solver.solve(incident, tol)


def far_field_pattern(field: ScatteredField, observation_dirs) -> np.ndarray:
    return field.far_field(observation_dirs)


def evaluate_scattered(field: ScatteredField, points) -> np.ndarray:
    return field.solver.evaluate(field, points)


def far_field_matrix(solver: ForwardSolver, observation_dirs, incident_dirs, tol: float = 1e-8) -> FarFieldMatrix:
    obs = np.atleast_2d(observation_dirs)
    incs = np.atleast_2d(incident_dirs)
    vals = np.column_stack([solver.solve(IncidentField.plane_wave(d, solver.k), tol).far_field(obs) for d in incs])
    return FarFieldMatrix(obs, incs, vals)


# ---------------------------------------------------------------------------
# Difference equation check
# ---------------------------------------------------------------------------

@dataclass
class DifferenceResidualReport:
    max_relative_residual: float
    mean_relative_residual: float
    points: np.ndarray
    residuals: np.ndarray
    dominant: np.ndarray
    boundary_mismatch: float | None
    passed: bool
    opposite_sign_residual: float = float("nan")   # same check with the sign of the source term flipped

    def to_dict(self):
        return {"max_relative_residual": self.max_relative_residual,
                "mean_relative_residual": self.mean_relative_residual,
                "opposite_sign_residual": self.opposite_sign_residual,
                "boundary_mismatch": self.boundary_mismatch, "passed": self.passed,
                "n_points": int(len(self.points))}


def _same_geometry(a: SceneC, b: SceneC) -> bool:
    if (a.obstacle is None) != (b.obstacle is None) or len(a.media) != len(b.media):
        return False
    if a.obstacle is not None and a.obstacle.to_dict() != b.obstacle.to_dict():
        return False
    return all(m1.shape.to_dict() == m2.shape.to_dict() for m1, m2 in zip(a.media, b.media)) \
        and a.wave_number == b.wave_number


def _stencil_cells(grid, n, m, margin, rng):
    """Random cells whose +-m lattice neighbours are all full cells lying ``margin`` inside Omega."""
    lookup = {tuple(ix): i for i, ix in enumerate(grid.index)}
    full = grid.fraction > 1 - 1e-12
    offs = np.vstack([np.zeros(3, int), np.eye(3, dtype=int), -np.eye(3, dtype=int)]) * m
    cands = []
    for i in rng.permutation(grid.n_cells):
        if not full[i]:
            continue
        ids = [lookup.get(tuple(grid.index[i] + o)) for o in offs]
        if any(j is None or not full[j] for j in ids):
            continue
        cands.append(ids)
        if len(cands) == n:
            break
    if not cands:
        raise PreconditionError("no interior cells with a complete difference stencil; refine h")
    return np.array(cands)


def difference_residual(scene_q: SceneC, scene_qt: SceneC, incident: IncidentField,
                        resolution: Resolution | None = None, n_points: int = 32, stencil: int = 1,
                        seed: int = 0, tol: float = 1e-8, threshold: float = 0.1) -> DifferenceResidualReport:
    """Residual of Delta w + k^2 q w + k^2 (q - qt) u_t for w = u - u_t on the medium lattice.

    Total fields are read from the solved cell values; the Laplacian is the
    7-point difference with spacing ``stencil * h``.
    """
    if not _same_geometry(scene_q, scene_qt):
        raise PreconditionError("the two scenes must share geometry and wave number")
    if not scene_q.media:
        raise PreconditionError("difference residual needs a medium")
    res = resolution or Resolution()
    sq, st = ForwardSolver(scene_q, res), ForwardSolver(scene_qt, res)
    fq, ft = sq.solve(incident, tol), st.solve(incident, tol)
    k = scene_q.wave_number
    g = sq.vgrid
    ids = _stencil_cells(g, n_points, stencil, 0.0, np.random.default_rng(seed))
    u = (fq.densities.volume_density + fq.incident_cells)[ids]
    ut = (ft.densities.volume_density + ft.incident_cells)[ids]
    w = u - ut
    hstep = stencil * g.h
    lap = (w[:, 1:].sum(axis=1) - 6 * w[:, 0]) / hstep**2
    pts = g.centers[ids[:, 0]]
    q = 1.0 - scene_q.contrast_at(pts)
    qt = 1.0 - scene_qt.contrast_at(pts)
    t2 = k * k * q * w[:, 0]
    t3 = k * k * (q - qt) * ut[:, 0]
    # subtracting the two Helmholtz equations gives Delta w + k^2 q w = -k^2 (q - qt) u_t
    resid = lap + t2 + t3
    dom = np.max(np.abs(np.stack([lap, t2, t3])), axis=0)
    rel = np.abs(resid) / dom
    literal = float(np.max(np.abs(lap + t2 - t3) / dom))
    mismatch = None
    if sq.bgrid is not None:
        wb = sq.boundary_values(fq) - st.boundary_values(ft)
        mismatch = float(np.max(np.abs(wb)))
    return DifferenceResidualReport(float(rel.max()), float(rel.mean()), pts, resid, dom, mismatch,
                                    bool(rel.max() < threshold), literal)


__all__ = ["IncidentField", "Resolution", "DensityPair", "FarFieldMatrix", "ForwardSolver", "ScatteredField",
           "solve_scattering", "far_field_pattern", "evaluate_scattered", "far_field_matrix",
           "difference_residual", "DifferenceResidualReport", "fundamental_solution"]
