"""Reflected complex geometrical optics (CGO) solutions and the Fourier identity.

Coordinates.  For a medium component resting on a contact plane we work in
``y = U^T x`` where the columns of ``U`` are (t1, t2, n) and ``n`` is the
plane normal, so the plane becomes ``y3 = c``.  Detached components use
``U = I``.  The phase vectors zeta are stored in the frame e(1), e(2), e(3)
built from xi (itself expressed in the working coordinates); ``CGOPhase.working``
converts them back.

Remainders.  ``u = exp(i zeta.y)(1 + omega)`` solves ``(Delta + V) u = 0`` iff

    (Delta + 2i zeta.grad) omega = -V (1 + omega),

which is solved by Picard iteration with the spectral symbol
``|k + s|^2 + 2 zeta.(k + s)``.  The Bloch shift ``s`` (half a reciprocal
cell along each axis) keeps the symbol away from zero.  ``V = -k0^2 c_hat``
where ``c_hat`` is the mirror-extended contrast 1 - q, i.e. the compactly
supported part of ``k0^2 q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import fft, ndimage

from .errors import (CoverageError, DegenerateFrequencyError, DivergenceError, NonConvergenceError,
                     PreconditionError, SymbolZeroError)
from .geometry import Ball, MediumComponent, PlanarContact, SceneC, SphericalCap, orthonormal_frame

# ---------------------------------------------------------------------------
# Phase vectors
# ---------------------------------------------------------------------------


def contact_frame(contact: PlanarContact | None) -> tuple[np.ndarray, float]:
    """Rotation U (world = U @ working) and plane offset c with U^T(plane) = {y3 = c}."""
    if contact is None:
        return np.eye(3), 0.0
    t1, t2, n = orthonormal_frame(contact.plane_normal)
    return np.column_stack([t1, t2, n]), float(n @ contact.plane_point)


@dataclass(frozen=True)
class CGOPhase:
    eta: np.ndarray     # frequency in world coordinates
    xi: np.ndarray      # frequency in working coordinates, U^T eta
    tau: float
    frame: np.ndarray   # rows e(1), e(2), e(3) in working coordinates
    zeta1: np.ndarray   # e-frame components
    zeta1_star: np.ndarray
    zeta2: np.ndarray
    zeta2_star: np.ndarray
    U: np.ndarray
    c: float

    @property
    def xi1e(self) -> float:
        return float(np.hypot(self.xi[0], self.xi[1]))

    def working(self, z) -> np.ndarray:
        """e-frame components to working coordinates."""
        return np.asarray(z) @ self.frame

    def zeta(self, which: int, star: bool = False) -> np.ndarray:
        table = {(1, False): self.zeta1, (1, True): self.zeta1_star,
                 (2, False): self.zeta2, (2, True): self.zeta2_star}
        if (which, star) not in table:
            raise PreconditionError(f"zeta index must be 1 or 2, got {which!r}")
        return table[which, star]

    def plane_phase(self, which: int) -> complex:
        """zeta(l) . (0, 0, 2c) in the e-frame."""
        return complex(self.zeta(which)[2] * 2.0 * self.c)

    def identities(self) -> dict:
        """Residuals of the algebraic relations; each should be at rounding level."""
        x = np.array([self.xi1e, 0.0, self.xi[2]])
        null = max(abs(z @ z) / max(np.vdot(z, z).real, 1e-300)
                   for z in (self.zeta1, self.zeta1_star, self.zeta2, self.zeta2_star))
        scale = max(np.linalg.norm(x), 1e-300)
        sum_res = np.linalg.norm(self.zeta1 + self.zeta2 - x) / scale
        cross = np.array([self.xi1e, 0.0, 2 * self.tau * self.xi1e])
        cross_res = np.linalg.norm(self.zeta1 + self.zeta2_star - cross) / np.linalg.norm(cross)
        cross2 = np.array([self.xi1e, 0.0, -2 * self.tau * self.xi1e])
        cross2_res = np.linalg.norm(self.zeta1_star + self.zeta2 - cross2) / np.linalg.norm(cross2)
        frame_res = np.abs(self.frame @ self.frame.T - np.eye(3)).max()
        return {"null": float(null), "sum": float(sum_res), "cross": float(cross_res),
                "cross_star": float(cross2_res), "frame": float(frame_res),
                "plane_phase_imag": float(max(abs(self.plane_phase(1).imag), abs(self.plane_phase(2).imag)))}

    def to_dict(self):
        cz = lambda z: [[float(v.real), float(v.imag)] for v in z]  # noqa: E731
        return {"eta": self.eta.tolist(), "xi": self.xi.tolist(), "tau": self.tau, "c": self.c,
                "frame": self.frame.tolist(), "U": self.U.tolist(),
                "zeta1": cz(self.zeta1), "zeta1_star": cz(self.zeta1_star),
                "zeta2": cz(self.zeta2), "zeta2_star": cz(self.zeta2_star)}


def build_phase(xi, tau: float, contact: PlanarContact | None = None) -> CGOPhase:
    """Phase vectors for frequency ``xi`` (world coordinates) and parameter ``tau``."""
    eta = np.asarray(xi, float).reshape(3)
    if not tau > 0:
        raise PreconditionError(f"tau must be positive, got {tau!r}")
    U, c = contact_frame(contact)
    x = U.T @ eta
    x1e = float(np.hypot(x[0], x[1]))
    if x1e <= 1e-14 * max(1.0, float(np.linalg.norm(x))):
        raise DegenerateFrequencyError(
            f"in-plane part of xi vanishes (xi1e = {x1e:.3g}); the frequency is outside the admissible set")
    e1 = np.array([x[0], x[1], 0.0]) / x1e
    e3 = np.array([0.0, 0.0, 1.0])
    e2 = np.cross(e3, e1)
    x3 = float(x[2])
    m = float(np.linalg.norm(x)) * np.sqrt(0.25 + tau * tau)
    z1 = np.array([x1e / 2 - tau * x3, 1j * m, x3 / 2 + tau * x1e])
    z1s = np.array([x1e / 2 - tau * x3, 1j * m, -x3 / 2 - tau * x1e])
    z2 = np.array([x1e / 2 + tau * x3, -1j * m, x3 / 2 - tau * x1e])
    z2s = np.array([x1e / 2 + tau * x3, -1j * m, -x3 / 2 + tau * x1e])
    return CGOPhase(eta, x, float(tau), np.vstack([e1, e2, e3]), z1, z1s, z2, z2s, U, c)


def _check_orthogonal(U, what="U"):
    U = np.asarray(U, float)
    if U.shape != (3, 3) or np.abs(U.T @ U - np.eye(3)).max() > 1e-12:
        raise PreconditionError(f"{what} is not orthogonal to 1e-12")
    return U


def unitary_conjugate_check(phase: CGOPhase, U, tol: float = 1e-12) -> bool:
    """Whether U zeta . U zeta = 0 (bilinear) for all four phase vectors, relative to |zeta|^2."""
    U = _check_orthogonal(U)
    for z in (phase.zeta1, phase.zeta1_star, phase.zeta2, phase.zeta2_star):
        w = U @ phase.working(z)
        if abs(w @ w) > tol * np.vdot(w, w).real:
            return False
    return True


# ---------------------------------------------------------------------------
# Cube grids and contrast extension
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CubeGrid:
    """``n^3`` nodes ``center + (j - n/2) h`` in working coordinates (world = U @ y).

    When ``plane`` is set the centre sits on ``y3 = plane``, so node j and
    node n - j along the third axis are mirror images for 1 <= j < n.  The
    layer j = 0 has no partner on the grid.
    """

    center: np.ndarray
    side: float
    n: int
    U: np.ndarray
    plane: float | None = None
    b0_center: np.ndarray = None
    b0_radius: float = 0.0

    @property
    def h(self) -> float:
        return self.side / self.n

    def axis(self, i: int) -> np.ndarray:
        return self.center[i] + (np.arange(self.n) - self.n // 2) * self.h

    def points(self) -> np.ndarray:
        g = np.meshgrid(self.axis(0), self.axis(1), self.axis(2), indexing="ij")
        return np.stack(g, axis=-1)

    def world_points(self) -> np.ndarray:
        return self.points() @ self.U.T

    @property
    def symmetric(self) -> bool:
        return self.plane is not None and self.n % 2 == 0 and self.center[2] == self.plane

    def mirror_index(self) -> np.ndarray:
        if not self.symmetric:
            raise PreconditionError("grid has no node-aligned mirror plane")
        return (self.n - np.arange(self.n)) % self.n

    def paired(self) -> np.ndarray:
        """Third-axis layers whose mirror image is a grid layer."""
        return np.arange(1, self.n)

    def b0_mask(self) -> np.ndarray:
        return np.linalg.norm(self.points() - self.b0_center, axis=-1) < self.b0_radius


def cube_for_component(component: MediumComponent, n: int = 64, factor: float = 2.2,
                       contact: PlanarContact | None = "auto") -> CubeGrid:
    """Cube of side ``factor`` times the diameter of B_0, the ball holding the component and its mirror."""
    if n < 8 or n % 2:
        raise PreconditionError("cube resolution must be an even number >= 8")
    contact = component.contact if contact == "auto" else contact
    U, c = contact_frame(contact)
    bc, br = component.shape.bounding_sphere()
    if contact is None:
        center = U.T @ bc
        r0 = float(br)
    else:
        d = float(contact.plane_distance(bc)[0])
        center = U.T @ (bc - d * contact.plane_normal)
        center[2] = c
        r0 = float(br + abs(d))
    return CubeGrid(center, factor * 2 * r0, n, U, None if contact is None else c, center.copy(), r0)


@dataclass
class ContrastExtension:
    """Contrast 1 - q on the cube nodes, mirrored across the contact plane when there is one."""

    index: int
    grid: CubeGrid
    values: np.ndarray
    wave_number: float

    @property
    def potential(self) -> np.ndarray:
        """V with u solving (Delta + V) u = 0."""
        return -self.wave_number**2 * self.values

    def mirror_defect(self) -> float:
        if not self.grid.symmetric:
            return 0.0
        return float(np.abs(self.values - self.values[:, :, self.grid.mirror_index()]).max())

    def node_weights(self) -> np.ndarray:
        """One-sided node rule for Omega_l: h^3, halved on the mirror plane (a boundary of Omega_l)."""
        w = np.full(self.values.shape, self.grid.h**3)
        if self.grid.symmetric:
            w[:, :, self.grid.n // 2] *= 0.5
        return w

    def integral(self, mask=None) -> complex:
        """Node-rule integral of the (extended) contrast over the cube."""
        v = self.values * self.grid.h**3
        return complex((v if mask is None else np.where(mask, v, 0)).sum())

    def component_integral(self) -> complex:
        """Node-rule integral over Omega_l alone (the half space holding the component)."""
        if not self.grid.symmetric:
            return self.integral()
        v = self.values * self.node_weights()
        return complex(v[:, :, self.grid.n // 2:].sum())


def _coverage(component, grid: CubeGrid, contact):
    lo = grid.center - grid.n // 2 * grid.h
    hi = grid.center + (grid.n // 2 - 1) * grid.h
    bc, br = component.shape.bounding_sphere()
    pts = [bc] if contact is None else [bc, contact.reflect(bc)]
    need_lo = np.min([grid.U.T @ p for p in pts], axis=0) - br
    need_hi = np.max([grid.U.T @ p for p in pts], axis=0) + br
    if np.any(need_lo < lo) or np.any(need_hi > hi):
        raise CoverageError(f"cube [{lo.round(4).tolist()}, {hi.round(4).tolist()}] does not contain the "
                            f"required box [{need_lo.round(4).tolist()}, {need_hi.round(4).tolist()}]")


def mirror_extend(component: MediumComponent, grid: CubeGrid, wave_number: float = 1.0,
                  index: int = 0) -> ContrastExtension:
    """Even mirror extension of the component's contrast across its contact plane."""
    if component.contact is None:
        raise PreconditionError("mirror extension needs a component with a contact plane")
    if not grid.symmetric:
        raise PreconditionError("grid is not symmetric about the contact plane")
    _coverage(component, grid, component.contact)
    v = _sample_component(component, grid)
    v = v + v[:, :, grid.mirror_index()]
    # the contact plane itself: closure of Omega_l (one-sided limit of the contrast)
    j = grid.n // 2
    X = grid.world_points()[:, :, j].reshape(-1, 3)
    on = component.shape.signed_distance(X) <= 1e-12 * component.shape.radius
    layer = np.zeros(len(X), complex)
    if np.any(on):
        layer[on] = component.contrast(X[on])
    v[:, :, j] = layer.reshape(grid.n, grid.n)
    return ContrastExtension(index, grid, v, float(wave_number))


def restrict_component(component: MediumComponent, grid: CubeGrid, wave_number: float = 1.0,
                       index: int = 0) -> ContrastExtension:
    """Contrast of a detached component on its cube (no reflection)."""
    _coverage(component, grid, None)
    return ContrastExtension(index, grid, _sample_component(component, grid), float(wave_number))


def _sample_component(component, grid):
    X = grid.world_points().reshape(-1, 3)
    inside = component.shape.contains(X)
    v = np.zeros(len(X), complex)
    if np.any(inside):
        v[inside] = component.contrast(X[inside])
    return v.reshape(grid.n, grid.n, grid.n)


# ---------------------------------------------------------------------------
# Remainder equation
# ---------------------------------------------------------------------------

_SHIFTS = ((1, 1, 1), (1, -1, 1), (-1, 1, 1), (1, 1, -1), (1, -1, -1))
# eighth-order central differences
_D1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
_D2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
_HW = 4


class _Faddeev:
    """Inverse of -(Delta + 2i zeta.grad) on Bloch-shifted trigonometric polynomials."""

    def __init__(self, grid: CubeGrid, zeta_w: np.ndarray):
        n, h = grid.n, grid.h
        k = 2 * np.pi * np.fft.fftfreq(n, h)
        y = grid.points() - grid.points()[0, 0, 0]
        for s in _SHIFTS:
            shift = np.array(s) * np.pi / grid.side
            K = np.stack(np.meshgrid(k + shift[0], k + shift[1], k + shift[2], indexing="ij"), axis=-1)
            sym = np.sum(K * K, axis=-1) + 2 * (K @ zeta_w)
            scale = np.abs(sym).max()
            if np.abs(sym).min() > 1e-10 * scale:
                break
        else:
            raise SymbolZeroError("spectral symbol vanishes on every trial lattice shift")
        self.shift = shift
        self.inv = 1.0 / sym
        self.bloch = np.exp(1j * (y @ shift))
        self.min_symbol = float(np.abs(sym).min())

    def __call__(self, f):
        return self.bloch * fft.ifftn(fft.fftn(f / self.bloch) * self.inv)


def _fd(a, axis, coef, h, p):
    out = 0.0
    for j, w in enumerate(coef):
        if w:
            out = out + w * np.roll(a, _HW - j, axis=axis)
    return out / h**p


@dataclass
class CGOSolution:
    """One CGO solution u = exp(i zeta.y)(1 + omega) on a cube grid."""

    phase: CGOPhase
    which: int
    ext: ContrastExtension
    omega: np.ndarray
    iterations: int
    relative_residual: float
    l2_b0: float
    shift: np.ndarray
    history: list = field(default_factory=list, repr=False)

    @property
    def grid(self) -> CubeGrid:
        return self.ext.grid

    @property
    def zeta_working(self) -> np.ndarray:
        return self.phase.working(self.phase.zeta(self.which))

    def exponential(self, y=None) -> np.ndarray:
        y = self.grid.points() if y is None else y
        return np.exp(1j * (y @ self.zeta_working))

    def u_values(self) -> np.ndarray:
        return self.exponential() * (1 + self.omega)

    def conjugated_residual(self) -> np.ndarray:
        """exp(-i zeta.y) (Delta + V) u by finite differences (valid away from the cube edge)."""
        h, w = self.grid.h, self.omega
        z = self.zeta_working
        lap = sum(_fd(w, a, _D2, h, 2) for a in range(3))
        grad = sum(z[a] * _fd(w, a, _D1, h, 1) for a in range(3))
        return lap + 2j * grad + self.ext.potential * (1 + w)

    def check_mask(self, margin: int = 5) -> np.ndarray:
        """Nodes inside B_0, away from the cube edge and at least ``margin`` cells from the support interface."""
        n = self.grid.n
        supp = self.ext.values != 0
        far = np.ones_like(supp) if not supp.any() else (
            (ndimage.distance_transform_edt(supp) > margin) | (ndimage.distance_transform_edt(~supp) > margin))
        m = far & self.grid.b0_mask()
        edge = np.zeros((n, n, n), bool)
        e = max(margin, _HW + 1)   # stencils must not wrap; [e, n - e] is mirror-invariant
        edge[e:n - e + 1, e:n - e + 1, e:n - e + 1] = True
        return m & edge

    def fd_residual(self, margin: int = 5) -> float:
        """Relative finite-difference residual of the PDE over ``check_mask``."""
        m = self.check_mask(margin)
        if not m.any():
            return float("nan")
        r = self.conjugated_residual()[m]
        ref = (self.ext.potential * (1 + self.omega))[m]
        den = np.linalg.norm(ref)
        return float(np.linalg.norm(r) / den) if den > 0 else float(np.linalg.norm(r))

    def to_dict(self):
        return {"which": self.which, "tau": self.phase.tau, "iterations": self.iterations,
                "relative_residual": self.relative_residual, "l2_b0": self.l2_b0,
                "grid_n": self.grid.n, "cube_side": self.grid.side, "shift": self.shift.tolist()}


def solve_remainder(ext: ContrastExtension, phase: CGOPhase, which: int = 1, tol: float = 1e-10,
                    max_iter: int = 200, accept: float = 1e-6) -> CGOSolution:
    """Picard iteration ``omega <- G[V (1 + omega)]`` with the Bloch-shifted Faddeev symbol."""
    grid = ext.grid
    if grid.n < 32:
        raise PreconditionError("remainder grid must be at least 32^3")
    if not np.allclose(grid.U, phase.U, atol=1e-12, rtol=0) or (grid.plane is not None and grid.plane != phase.c):
        raise PreconditionError("phase was not built with this component's contact frame")
    zeta = phase.working(phase.zeta(which))
    V = ext.potential
    op = _Faddeev(grid, zeta)
    omega = np.zeros_like(V)
    hist = []
    if np.any(V != 0):
        for it in range(1, max_iter + 1):
            new = op(V * (1 + omega))
            nn = np.linalg.norm(new)
            step = np.linalg.norm(new - omega) / nn if nn > 0 else 0.0
            omega = new
            hist.append(float(step))
            if not np.isfinite(step) or (it > 3 and step > 10 * hist[0]) or (it > 5 and step > hist[-2] > hist[-3]):
                raise DivergenceError(f"fixed-point iteration diverges at tau = {phase.tau}; "
                                      "increase tau or reduce the contrast")
            if step <= tol:
                break
    res = omega - op(V * (1 + omega))
    nrm = np.linalg.norm(omega)
    rel = float(np.linalg.norm(res) / nrm) if nrm > 0 else 0.0
    if rel > accept:
        raise NonConvergenceError(f"remainder residual {rel:.2e} above {accept:.0e} after {len(hist)} iterations",
                                  hist)
    l2 = float(np.sqrt(np.sum(np.abs(omega[grid.b0_mask()]) ** 2) * grid.h**3))
    return CGOSolution(phase, which, ext, omega, len(hist), rel, l2, op.shift, hist)


# ---------------------------------------------------------------------------
# Reflected solutions and the product identity
# ---------------------------------------------------------------------------

@dataclass
class ReflectedSolution:
    """psi(y) = u(y) - u(y*) on the symmetric grid."""

    solution: CGOSolution
    psi: np.ndarray

    @property
    def grid(self):
        return self.solution.grid

    def on_plane_max(self) -> float:
        return float(np.abs(self.psi[:, :, self.grid.n // 2]).max())

    def antisymmetry_defect(self) -> float:
        j = self.grid.paired()
        return float(np.abs(self.psi[:, :, self.grid.mirror_index()[j]] + self.psi[:, :, j]).max())

    def fd_residual(self, margin: int = 5) -> float:
        """Relative residual of (Delta + V) psi, assembled from the two mirrored conjugated residuals."""
        sol = self.solution
        g = self.grid
        mi = g.mirror_index()
        zeta3 = sol.phase.zeta(sol.which)[2]
        y3 = g.axis(2)
        # exp(i zeta.(y* - y)) has unit modulus: Im zeta has no y3 component
        ph = np.exp(2j * zeta3 * (g.plane - y3))[None, None, :]
        r = sol.conjugated_residual()
        m = sol.check_mask(margin)
        m &= m[:, :, mi]
        if not m.any():
            return float("nan")
        rp = r - ph * r[:, :, mi]
        f = sol.ext.potential * (1 + sol.omega)
        den = np.hypot(np.linalg.norm(f[m]), np.linalg.norm(f[:, :, mi][m]))
        return float(np.linalg.norm(rp[m]) / den) if den > 0 else float(np.linalg.norm(rp[m]))


def reflected_pair(sol: CGOSolution, contact: PlanarContact) -> ReflectedSolution:
    g = sol.grid
    U, c = contact_frame(contact)
    if not g.symmetric or g.plane != c or not np.allclose(U, g.U, atol=1e-12, rtol=0):
        raise PreconditionError("remainder grid is not symmetric about this contact plane")
    u = sol.u_values()
    return ReflectedSolution(sol, u - u[:, :, g.mirror_index()])


@dataclass
class ProductCheck:
    max_discrepancy: float
    direct: np.ndarray = field(repr=False)
    terms: np.ndarray = field(repr=False)      # (4, n) signed terms of the expansion
    leading_defect: float = 0.0                # |exp(i(zeta1+zeta2).y) - exp(i xi.y)| relative


def product_expansion_check(pair1: ReflectedSolution, pair2: ReflectedSolution, n_samples: int = 1000,
                            seed: int = 0) -> ProductCheck:
    """Compare psi1 psi2 with its four-term expansion at random grid nodes."""
    s1, s2 = pair1.solution, pair2.solution
    p = s1.phase
    if (s1.which, s2.which) != (1, 2) or s2.phase is not p and (
            s2.phase.tau != p.tau or not np.array_equal(s2.phase.xi, p.xi) or s2.phase.c != p.c):
        raise PreconditionError("pairs must come from zeta(1) and zeta(2) of one phase")
    if s1.grid != s2.grid:
        raise PreconditionError("pairs live on different grids")
    g = s1.grid
    rng = np.random.default_rng(seed)
    idx = tuple(rng.integers(0, g.n, size=(2, n_samples))) + (rng.integers(1, g.n, size=n_samples),)
    midx = (idx[0], idx[1], g.mirror_index()[idx[2]])
    y = g.points()[idx]
    ys = y.copy()
    ys[:, 2] = 2 * g.plane - ys[:, 2]
    w1, w2 = s1.omega[idx], s2.omega[idx]
    w1s, w2s = s1.omega[midx], s2.omega[midx]
    direct = pair1.psi[idx] * pair2.psi[idx]
    xi_w = p.xi
    ap = p.working(np.array([p.xi1e, 0.0, 2 * p.tau * p.xi1e]))
    am = p.working(np.array([p.xi1e, 0.0, -2 * p.tau * p.xi1e]))
    t = np.array([
        np.exp(1j * y @ xi_w) * (1 + w1) * (1 + w2),
        -np.exp(1j * y @ ap) * np.exp(1j * p.plane_phase(2)) * (1 + w1) * (1 + w2s),
        -np.exp(1j * y @ am) * np.exp(1j * p.plane_phase(1)) * (1 + w1s) * (1 + w2),
        np.exp(1j * ys @ xi_w) * (1 + w1s) * (1 + w2s),
    ])
    scale = np.abs(t).sum(axis=0)
    disc = np.abs(direct - t.sum(axis=0)) / np.where(scale > 0, scale, 1.0)
    z12 = s1.zeta_working + s2.zeta_working
    lead = np.abs(np.exp(1j * y @ z12) - np.exp(1j * y @ xi_w)).max()
    return ProductCheck(float(disc.max()), direct, t, float(lead))


# ---------------------------------------------------------------------------
# Quadrature on catalogue shapes
# ---------------------------------------------------------------------------

def body_quadrature(shape, n_axial: int = 64, n_radial: int = 32, n_angle: int = 64):
    """Points and weights for a ball or cap: Gauss along the axis, polar Gauss-trapezoid on each slice."""
    if isinstance(shape, SphericalCap):
        c, R, a, lo = shape.center, shape.radius, shape.axis, shape.offset
    elif isinstance(shape, Ball):
        c, R, a, lo = shape.center, shape.radius, np.array([0.0, 0.0, 1.0]), -shape.radius
    else:
        raise PreconditionError(f"no quadrature for shape {type(shape).__name__}")
    u, v, _ = orthonormal_frame(a)
    tx, tw = leggauss(n_axial)
    t = lo + (R - lo) * (tx + 1) / 2
    tw = tw * (R - lo) / 2
    rx, rw = leggauss(n_radial)
    th = 2 * np.pi * np.arange(n_angle) / n_angle
    rho = np.sqrt(np.maximum(R * R - t * t, 0.0))
    r = rho[:, None] * (rx + 1) / 2                               # (na, nr)
    wr = tw[:, None] * rho[:, None] / 2 * rw * r * (2 * np.pi / n_angle)
    dirs = np.cos(th)[:, None] * u + np.sin(th)[:, None] * v     # (nt, 3)
    pts = (c + t[:, None, None, None] * a + r[:, :, None, None] * dirs[None, None])
    w = np.broadcast_to(wr[:, :, None], pts.shape[:3])
    return pts.reshape(-1, 3), w.reshape(-1)


def ball_fourier_oracle(radius: float, eta_norm: float, n: int = 200) -> float:
    """int_{|x|<R} exp(i eta.x) dx by radial Gauss quadrature of 4 pi r^2 sinc(|eta| r)."""
    x, w = leggauss(n)
    r = radius * (x + 1) / 2
    return float(np.sum(w * radius / 2 * 4 * np.pi * r * r * np.sinc(eta_norm * r / np.pi)))


# ---------------------------------------------------------------------------
# Fourier identity
# ---------------------------------------------------------------------------

@dataclass
class FourierReport:
    eta: np.ndarray
    taus: list
    integrals: list          # I(tau); None where a solve failed
    reference: complex       # F(eta)
    discrepancies: list      # |I - F|
    omega_norms: list        # per tau: list of (||omega1||, ||omega2||) per component
    delta_norm: float
    failures: dict = field(default_factory=dict)
    extrapolated: complex | None = None

    @property
    def relative(self) -> list:
        f = abs(self.reference)
        return [None if d is None else (d / f if f > 0 else d) for d in self.discrepancies]

    def monotone(self) -> bool:
        d = [x for x in self.discrepancies if x is not None]
        return len(d) == len(self.discrepancies) and all(b < a for a, b in zip(d, d[1:]))

    def remainder_constants(self) -> list:
        """|I - F| / ((sum ||w1|| + ||w2|| + ||w1|| ||w2||) ||delta||) per tau."""
        out = []
        for d, norms in zip(self.discrepancies, self.omega_norms):
            s = sum(a + b + a * b for a, b in norms) * self.delta_norm
            out.append(None if d is None or s == 0 else d / s)
        return out

    def rows(self):
        for t, i, d, rel in zip(self.taus, self.integrals, self.discrepancies, self.relative):
            yield (t, np.nan if i is None else i.real, np.nan if i is None else i.imag,
                   np.nan if d is None else d, np.nan if rel is None else rel)

    def to_dict(self):
        cz = lambda z: None if z is None else [float(z.real), float(z.imag)]  # noqa: E731
        return {"eta": self.eta.tolist(), "taus": list(self.taus),
                "integrals": [cz(i) for i in self.integrals], "reference": cz(self.reference),
                "discrepancies": self.discrepancies, "relative": self.relative,
                "omega_norms": self.omega_norms, "delta_norm": self.delta_norm,
                "monotone": self.monotone(), "extrapolated": cz(self.extrapolated),
                "failures": {str(k): v for k, v in self.failures.items()}}


def _same_geometry(a: SceneC, b: SceneC) -> bool:
    if len(a.media) != len(b.media):
        return False
    for ma, mb in zip(a.media, b.media):
        if ma.shape.to_dict() != mb.shape.to_dict():
            return False
        if (ma.contact is None) != (mb.contact is None):
            return False
        if ma.contact is not None and ma.contact.to_dict() != mb.contact.to_dict():
            return False
    return True


def fourier_identity_run(scene_q: SceneC, scene_qt: SceneC, eta, taus, n: int = 64,
                         quad: tuple = (96, 32, 64), tol: float = 1e-10) -> FourierReport:
    """I(tau) = int delta_q phi v over the media against F(eta) for the even-extended delta_q.

    phi is built for q~ from zeta(1), v for q from zeta(2).  Exponential-only
    parts are integrated with ``body_quadrature``; the remainder-dependent
    parts with the node rule of the cube grid.
    """
    if not _same_geometry(scene_q, scene_qt):
        raise PreconditionError("the two scenes must share the medium geometry")
    eta = np.asarray(eta, float).reshape(3)
    k = scene_q.wave_number
    if scene_qt.wave_number != k:
        raise PreconditionError("the two scenes must share the wave number")
    comps = list(zip(scene_q.media, scene_qt.media))
    for m, _ in comps:
        if m.contact is not None:
            try:
                build_phase(eta, 1.0, m.contact)
            except DegenerateFrequencyError as exc:
                raise PreconditionError(f"eta is outside the admissible set: {exc}") from None

    # reference and exponential-only parts
    quads = []
    ref = 0j
    dnorm2 = 0.0
    for m, mt in comps:
        X, W = body_quadrature(m.shape, *quad)
        delta = mt.contrast(X) - m.contrast(X)          # q - q~ = c~ - c
        dnorm2 += float(np.sum(W * np.abs(delta) ** 2))
        ref += np.sum(W * delta * np.exp(1j * X @ eta))
        if m.contact is not None:
            ref += np.sum(W * delta * np.exp(1j * m.contact.reflect(X) @ eta))
        quads.append((X, W, delta))

    grids = []
    for i, (m, mt) in enumerate(comps):
        g = cube_for_component(m, n)
        make = mirror_extend if m.contact is not None else restrict_component
        grids.append((g, make(mt, g, k, i), make(m, g, k, i)))

    integrals, discs, norms, failures = [], [], [], {}
    for tau in taus:
        try:
            total, nn = 0j, []
            for (m, _), (X, W, delta), (g, ext_t, ext_q) in zip(comps, quads, grids):
                ph = build_phase(eta, tau, m.contact)
                s1 = solve_remainder(ext_t, ph, 1, tol)
                s2 = solve_remainder(ext_q, ph, 2, tol)
                nn.append((s1.l2_b0, s2.l2_b0))
                total += _component_integral(m, ph, s1, s2, X, W, delta)
            integrals.append(total)
            discs.append(float(abs(total - ref)))
            norms.append(nn)
        except (DivergenceError, NonConvergenceError, SymbolZeroError) as exc:
            failures[tau] = f"{type(exc).__name__}: {exc}"
            integrals.append(None)
            discs.append(None)
            norms.append([])
    ok = [(t, i) for t, i in zip(taus, integrals) if i is not None]
    extrap = None
    if len(ok) >= 2:
        (t1, i1), (t2, i2) = ok[-2], ok[-1]
        extrap = (t2 * t2 * i2 - t1 * t1 * i1) / (t2 * t2 - t1 * t1)
    return FourierReport(eta, list(taus), integrals, complex(ref), discs, norms, float(np.sqrt(dnorm2)),
                         failures, extrap)


def _component_integral(m, ph: CGOPhase, s1: CGOSolution, s2: CGOSolution, X, W, delta) -> complex:
    """int_{Omega_l} delta phi v for one component."""
    g = s1.grid
    Y = X @ ph.U
    if m.contact is None:
        exp_part = np.sum(W * delta * np.exp(1j * Y @ ph.xi))
    else:
        ap = ph.working(np.array([ph.xi1e, 0.0, 2 * ph.tau * ph.xi1e]))
        am = ph.working(np.array([ph.xi1e, 0.0, -2 * ph.tau * ph.xi1e]))
        Ys = Y.copy()
        Ys[:, 2] = 2 * ph.c - Ys[:, 2]
        kern = (np.exp(1j * Y @ ph.xi) - np.exp(1j * Y @ ap + 1j * ph.plane_phase(2))
                - np.exp(1j * Y @ am + 1j * ph.plane_phase(1)) + np.exp(1j * Ys @ ph.xi))
        exp_part = np.sum(W * delta * kern)

    # remainder-dependent part on the nodes of Omega_l
    y = g.points()
    sd = m.shape.signed_distance(y.reshape(-1, 3) @ ph.U.T).reshape(y.shape[:3])
    inside = sd <= 1e-12 * m.shape.radius
    yi = y[inside]
    wq = s1.ext.node_weights()[inside]
    # q - q~ = (1 - q~) - (1 - q); on Omega_l nodes the extensions hold the plain contrasts
    d = s1.ext.values[inside] - s2.ext.values[inside]
    w1, w2 = s1.omega[inside], s2.omega[inside]
    if m.contact is None:
        extra = np.exp(1j * yi @ ph.xi) * (w1 + w2 + w1 * w2)
    else:
        mi = g.mirror_index()
        w1s, w2s = s1.omega[:, :, mi][inside], s2.omega[:, :, mi][inside]
        yis = yi.copy()
        yis[:, 2] = 2 * ph.c - yis[:, 2]
        ap = ph.working(np.array([ph.xi1e, 0.0, 2 * ph.tau * ph.xi1e]))
        am = ph.working(np.array([ph.xi1e, 0.0, -2 * ph.tau * ph.xi1e]))
        bump = lambda a, b: (1 + a) * (1 + b) - 1  # noqa: E731
        extra = (np.exp(1j * yi @ ph.xi) * bump(w1, w2)
                 - np.exp(1j * yi @ ap + 1j * ph.plane_phase(2)) * bump(w1, w2s)
                 - np.exp(1j * yi @ am + 1j * ph.plane_phase(1)) * bump(w1s, w2)
                 + np.exp(1j * yis @ ph.xi) * bump(w1s, w2s))
    return complex(exp_part + np.sum(wq * d * extra))
