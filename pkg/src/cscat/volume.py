"""Voxel discretization of the medium and the volume potential V_q.

The medium is covered by a regular lattice of cubes with side ``h``.  Each
active cell carries the fraction of its volume inside Omega (from
subsampling), the centroid of that part and the contrast 1 - q sampled
there.  The lattice operator is a discrete convolution with cell-averaged
kernel values, applied by FFT.  Off-lattice targets use direct sums with an
octree-refined correction for nearby cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import fft
from scipy.spatial import cKDTree

from .specialfn import FOUR_PI

SUBSAMPLE = 6


@dataclass
class VolumeGrid:
    h: float
    origin: np.ndarray          # lower corner of cell (0, 0, 0)
    shape: tuple
    index: np.ndarray           # (M, 3) lattice indices of active cells
    centers: np.ndarray         # (M, 3) cell centres (lattice points)
    centroids: np.ndarray       # (M, 3) centroids of the inside part
    fraction: np.ndarray        # (M,)
    contrast_values: np.ndarray  # (M,) 1 - q at the centroid
    medium: np.ndarray          # (M,) owning medium index
    inside_fn: object           # callable: points -> bool, membership in Omega
    contrast_fn: object         # callable: points -> 1 - q (zero outside)

    @property
    def weights(self):
        return self.fraction * self.h**3

    @property
    def volume(self):
        return float(self.weights.sum())

    @property
    def n_cells(self):
        return len(self.fraction)

    def flat_index(self):
        return np.ravel_multi_index(self.index.T, self.shape)


def _lattice_origin(lo, h, contacts):
    origin = lo.copy()
    for c in contacts:
        n = c.plane_normal
        ax = int(np.argmax(np.abs(n)))
        if abs(abs(n[ax]) - 1.0) < 1e-12:
            z = c.plane_point[ax]
            origin[ax] = z - np.ceil((z - lo[ax]) / h) * h
    return origin


def build_volume_grid(scene, h: float = 0.1, subsample: int = SUBSAMPLE) -> VolumeGrid | None:
    """Voxelize the media of ``scene``; returns None if the scene has no medium."""
    if not scene.media:
        return None
    lo = np.min([m.shape.bounding_box()[0] for m in scene.media], axis=0) - h
    hi = np.max([m.shape.bounding_box()[1] for m in scene.media], axis=0) + h
    origin = _lattice_origin(lo, h, [m.contact for m in scene.media if m.contact is not None])
    shape = tuple(int(np.ceil((hi[i] - origin[i]) / h)) for i in range(3))
    idx = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), axis=-1).reshape(-1, 3)
    centers = origin + (idx + 0.5) * h
    half_diag = 0.5 * np.sqrt(3.0) * h

    sdf = np.full(len(centers), np.inf)
    owner = np.full(len(centers), -1)
    for k, m in enumerate(scene.media):
        d = m.shape.signed_distance(centers)
        better = d < sdf
        sdf[better], owner[better] = d[better], k
    full = sdf < -half_diag
    cut = np.abs(sdf) <= half_diag
    frac = full.astype(float)
    cen = centers.copy()

    s = subsample
    off = ((np.arange(s) + 0.5) / s - 0.5) * h
    sub = np.stack(np.meshgrid(off, off, off, indexing="ij"), axis=-1).reshape(-1, 3)
    cut_idx = np.nonzero(cut)[0]
    for start in range(0, len(cut_idx), 2000):
        ci = cut_idx[start:start + 2000]
        pts = (centers[ci, None, :] + sub[None]).reshape(-1, 3)
        ins = np.zeros(len(pts), bool)
        for m in scene.media:
            ins |= m.shape.contains(pts)
        ins = ins.reshape(len(ci), -1)
        frac[ci] = ins.mean(axis=1)
        cnt = np.maximum(ins.sum(axis=1), 1)
        cen[ci] = np.einsum("cs,csd->cd", ins, pts.reshape(len(ci), -1, 3)) / cnt[:, None]
    active = frac > 0
    inside_fn = lambda p: scene_inside_media(scene, p)  # noqa: E731
    contrast_fn = scene.contrast_at
    contrast = scene.contrast_at(cen[active])
    # centroids sit inside by construction; guard against empty-contrast rounding on the surface
    miss = contrast == 0
    if np.any(miss):
        contrast[miss] = np.array([scene.media[o].contrast(p[None])[0]
                                   for o, p in zip(owner[active][miss], cen[active][miss])])
    return VolumeGrid(h, origin, shape, idx[active], centers[active], cen[active], frac[active], contrast,
                      owner[active], inside_fn, contrast_fn)


def scene_inside_media(scene, pts):
    pts = np.atleast_2d(pts)
    ins = np.zeros(len(pts), bool)
    for m in scene.media:
        ins |= m.shape.contains(pts)
    return ins


# ---------------------------------------------------------------------------
# Cell-averaged kernels
# ---------------------------------------------------------------------------

def cube_inverse_distance_integral(h: float, n_gauss: int = 24) -> float:
    """Integral of 1/(4 pi r) over a cube of side h centred at the origin (pyramid split)."""
    g, w = leggauss(n_gauss)
    a = 0.5 * h
    X, Y = np.meshgrid(a * g, a * g, indexing="ij")
    face = np.sum(np.outer(w, w) * a * a / np.sqrt(X**2 + Y**2 + a * a))
    return 6.0 * (a / 2.0) * face / FOUR_PI


def _cube_avg(offsets, h, k, n):
    g, w = leggauss(n)
    pts = 0.5 * h * np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    ww = np.einsum("i,j,k->ijk", w, w, w).ravel() * (0.5 * h) ** 3
    out = np.empty(len(offsets), complex)
    for s in range(0, len(offsets), 20000):
        y = offsets[s:s + 20000, None, :] + pts[None]
        r = np.linalg.norm(y, axis=-1)
        out[s:s + 20000] = (np.exp(1j * k * r) / (FOUR_PI * r)) @ ww
    return out


def kernel_table(shape, h, k):
    """K[m] = integral over the cube at lattice offset m of Phi(0, y), on the doubled FFT grid."""
    big = tuple(2 * s for s in shape)
    axes = [np.fft.fftfreq(b, 1.0 / b).astype(int) for b in big]
    M = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    cheb = np.max(np.abs(M), axis=1)
    off = M * h
    K = np.empty(len(M), complex)
    far = cheb > 2
    K[far] = _cube_avg(off[far], h, k, 3)
    near = (cheb <= 2) & (cheb > 0)
    K[near] = _cube_avg(off[near], h, k, 8)
    z = cheb == 0
    g, w = leggauss(6)
    pts = 0.5 * h * np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    ww = np.einsum("i,j,k->ijk", w, w, w).ravel() * (0.5 * h) ** 3
    r = np.linalg.norm(pts, axis=1)
    smooth = np.sum(ww * (np.exp(1j * k * r) - 1.0) / (FOUR_PI * r))
    K[z] = cube_inverse_distance_integral(h) + smooth
    return K.reshape(big)


class LatticeOperator:
    """f -> kappa^2 sum_m K(j - m) c_m frac_m f_m at active cells, by FFT."""

    def __init__(self, grid: VolumeGrid, k: float):
        self.grid = grid
        self.k = k
        self.big = tuple(2 * s for s in grid.shape)
        self.kfft = fft.fftn(kernel_table(grid.shape, grid.h, k))
        self.flat = grid.flat_index()
        self.coef = k * k * grid.contrast_values * grid.fraction

    def __call__(self, f):
        f = np.asarray(f, complex)
        arr = np.zeros(self.grid.shape, complex)
        arr.reshape(-1)[self.flat] = self.coef * f
        conv = fft.ifftn(fft.fftn(arr, self.big) * self.kfft)
        s = self.grid.shape
        return conv[: s[0], : s[1], : s[2]].reshape(-1)[self.flat]


# ---------------------------------------------------------------------------
# Refined cell integrals for off-lattice targets
# ---------------------------------------------------------------------------

_G2, _W2 = leggauss(2)
_LEAF = np.stack(np.meshgrid(_G2, _G2, _G2, indexing="ij"), -1).reshape(-1, 3) * 0.5
_LEAF_W = np.einsum("i,j,k->ijk", _W2, _W2, _W2).ravel() / 8.0


def refined_cell_integrals(x, centers, h, inside_fn, integrand, ratio=1.5, max_level=6):
    """Integral over (cell intersect Omega) of ``integrand(y)`` for each cell, octree-refined around x.

    ``integrand`` maps (n, 3) points to values; leaves use a 2x2x2 Gauss rule
    with an inside test per point.
    """
    x = np.asarray(x, float)
    items = np.arange(len(centers))
    cur_c = np.asarray(centers, float).copy()
    size = h
    out = np.zeros(len(centers), complex)
    octs = np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)]) * 0.25
    for level in range(max_level + 1):
        dist = np.linalg.norm(cur_c - x, axis=1)
        ok = (dist > ratio * np.sqrt(3.0) * size) | (level == max_level)
        if np.any(ok):
            pts = (cur_c[ok, None, :] + size * _LEAF[None]).reshape(-1, 3)
            val = np.zeros(len(pts), complex)
            ins = inside_fn(pts)
            if np.any(ins):
                val[ins] = integrand(pts[ins])
            val = val.reshape(-1, len(_LEAF)) @ _LEAF_W * size**3
            np.add.at(out, items[ok], val)
        cur_c, items = cur_c[~ok], items[~ok]
        if len(cur_c) == 0:
            break
        cur_c = (cur_c[:, None, :] + size * octs[None]).reshape(-1, 3)
        items = np.repeat(items, 8)
        size *= 0.5
    return out


def volume_evaluation_matrix(grid: VolumeGrid, targets, k: float, near_cells: float = 2.5):
    """Matrix M with (M f)(x) = kappa^2 int_Omega Phi(x, y) (1 - q) f dy for cellwise-constant f."""
    T = np.atleast_2d(np.asarray(targets, float))
    M = np.empty((len(T), grid.n_cells), complex)
    coef = k * k * grid.contrast_values * grid.weights
    step = max(1, 2_000_000 // max(grid.n_cells, 1))
    for s in range(0, len(T), step):
        r = np.linalg.norm(T[s:s + step, None, :] - grid.centroids[None], axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            M[s:s + step] = np.exp(1j * k * r) / (FOUR_PI * r) * coef
    tree = cKDTree(grid.centers)
    near = tree.query_ball_point(T, near_cells * grid.h)
    for i, cells in enumerate(near):
        if not cells:
            continue
        cells = np.asarray(cells)
        x = T[i]
        vals = refined_cell_integrals(
            x, grid.centers[cells], grid.h, grid.inside_fn,
            lambda y, x=x: _phi(x, y, k) * grid.contrast_fn(y))
        M[i, cells] = k * k * vals
    return M


def _phi(x, y, k):
    r = np.linalg.norm(y - x, axis=-1)
    return np.exp(1j * k * r) / (FOUR_PI * r)


def apply_volume_potential(grid: VolumeGrid, field, targets, k: float):
    """kappa^2 int_Omega Phi(x, y) (1 - q(y)) field(y) dy at arbitrary targets (cellwise-constant field)."""
    return volume_evaluation_matrix(grid, targets, k) @ np.asarray(field, complex)


def volume_integral_at(scene_grid: VolumeGrid, x, k: float, func, near_cells: float = 3.0, ratio: float = 1.5,
                       max_level: int = 7):
    """kappa^2 int_Omega Phi(x, y) (1 - q) func(y) dy for a smooth-or-singular callable ``func``."""
    g = scene_grid
    x = np.asarray(x, float)
    dist = np.linalg.norm(g.centers - x, axis=1)
    near = dist < near_cells * g.h
    total = 0.0 + 0.0j
    if np.any(~near):
        y = g.centroids[~near]
        total += np.sum(_phi(x, y, k) * g.contrast_values[~near] * func(y) * g.weights[~near])
    if np.any(near):
        vals = refined_cell_integrals(x, g.centers[near], g.h, g.inside_fn,
                                      lambda y: _phi(x, y, k) * g.contrast_fn(y) * func(y),
                                      ratio=ratio, max_level=max_level)
        total += vals.sum()
    return k * k * total


def cell_averages(grid: VolumeGrid, func, singular_point=None, near_cells: float = 3.0, max_level: int = 5):
    """Average of ``func`` over the inside part of each cell (refined near ``singular_point``)."""
    vals = func(grid.centroids).astype(complex)
    if singular_point is None:
        return vals
    x = np.asarray(singular_point, float)
    near = np.nonzero(np.linalg.norm(grid.centers - x, axis=1) < near_cells * grid.h)[0]
    if len(near):
        integ = refined_cell_integrals(x, grid.centers[near], grid.h, grid.inside_fn, func, max_level=max_level)
        vals[near] = integ / grid.weights[near]
    return vals


def volume_far_field(grid: VolumeGrid, directions, k: float):
    """Far-field kernel of V_q: rows over directions, columns over cells."""
    xh = np.atleast_2d(directions)
    return k * k * np.exp(-1j * k * xh @ grid.centroids.T) / FOUR_PI * (grid.contrast_values * grid.weights)
