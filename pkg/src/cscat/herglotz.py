"""Plane-wave (Herglotz) approximation of point sources on a compact region.

Given a target source and sample points of a region E, we fit weights g_j so
that ``sum_j g_j exp(i k theta_j . x)`` matches the target's values and
gradients on E in the regularized least-squares sense.  Gradients of both the
dictionary and the target are analytic, so the C^1 surrogate needs no finite
differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditioningError, PreconditionError
from .specialfn import PointSource, fibonacci_sphere


@dataclass(frozen=True)
class SampleRegion:
    """A compact region E given by a signed distance and fit / held-out sample points."""

    points: np.ndarray
    holdout: np.ndarray
    signed_distance: object = field(repr=False)
    descriptor: dict = field(default_factory=dict)

    def contains(self, x) -> bool:
        return bool(self.signed_distance(np.atleast_2d(np.asarray(x, float)))[0] <= 0.0)

    def distance(self, x) -> float:
        return float(max(self.signed_distance(np.atleast_2d(np.asarray(x, float)))[0], 0.0))

    def to_dict(self):
        return dict(self.descriptor, n_points=int(len(self.points)), n_holdout=int(len(self.holdout)))


def ball_region(center, radius: float, n_surface: int = 200, n_interior: int = 200, seed: int = 0) -> SampleRegion:
    """Fit samples on the sphere and random interior points; held-out samples drawn independently."""
    c = np.asarray(center, float).reshape(3)
    rng = np.random.default_rng(seed)

    def draw(ns, ni):
        surf = c + radius * fibonacci_sphere(ns)
        v = rng.normal(size=(ni, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        inner = c + radius * rng.uniform(0, 1, ni)[:, None] ** (1 / 3) * v
        return np.vstack([surf, inner])

    fit = draw(n_surface, n_interior)
    rot = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    hold = np.vstack([c + radius * fibonacci_sphere(n_surface + 7) @ rot.T, draw(0, n_interior)])
    sd = lambda x: np.linalg.norm(np.atleast_2d(x) - c, axis=1) - radius  # noqa: E731
    return SampleRegion(fit, hold, sd, {"type": "ball", "center": c.tolist(), "radius": float(radius)})


def scatterer_region(scene, fatten: float = 0.0, n_points: int = 600, seed: int = 0) -> SampleRegion:
    """Samples of the closed scatterer (boundary points pushed out by ``fatten`` plus interior points)."""
    from .geometry import boundary_partition, sample_interior
    rng = np.random.default_rng(seed)
    cloud = boundary_partition(scene, n_points)
    surf = cloud.points + fatten * cloud.normals
    comps = scene.components()
    inner = np.vstack([sample_interior(s, max(10, n_points // (4 * len(comps))), rng) for s in comps])
    cloud2 = boundary_partition(scene, n_points + 37)
    hold = cloud2.points + fatten * cloud2.normals
    sd = lambda x: scene.sigma_distance(x) - fatten  # noqa: E731
    return SampleRegion(np.vstack([surf, inner]), hold, sd, {"type": "scatterer", "fatten": float(fatten)})


@dataclass
class HerglotzDensity:
    directions: np.ndarray
    weights: np.ndarray
    wave_number: float
    target: object
    region: SampleRegion
    value_error: float
    gradient_error: float
    holdout_value_error: float
    holdout_gradient_error: float
    target_sup: float
    regularization: float
    singular_values: np.ndarray = field(repr=False, default=None)

    def __call__(self, points):
        return np.exp(1j * self.wave_number * np.atleast_2d(points) @ self.directions.T) @ self.weights

    def gradient(self, points):
        e = np.exp(1j * self.wave_number * np.atleast_2d(points) @ self.directions.T) * self.weights
        return 1j * self.wave_number * e @ self.directions

    @property
    def relative_error(self):
        return self.holdout_value_error / self.target_sup

    def to_dict(self):
        return {"directions": self.directions.tolist(),
                "weights_re": self.weights.real.tolist(), "weights_im": self.weights.imag.tolist(),
                "wave_number": self.wave_number, "region": self.region.to_dict(),
                "value_error": self.value_error, "gradient_error": self.gradient_error,
                "holdout_value_error": self.holdout_value_error,
                "holdout_gradient_error": self.holdout_gradient_error,
                "target_sup": self.target_sup, "regularization": self.regularization}


def _target_eval(target, pts):
    if isinstance(target, PointSource):
        return target(pts), target.gradient(pts)
    return target(pts), target.gradient(pts)


def _design(directions, k, pts):
    E = np.exp(1j * k * pts @ directions.T)
    G = 1j * k * E[:, None, :] * directions.T[None, :, :]
    return np.vstack([E, G.reshape(-1, len(directions))])


def fit_density(target, region: SampleRegion, n_dirs: int, regularization: float | None = None,
                directions=None) -> HerglotzDensity:
    """Tikhonov-regularized least-squares fit of values and gradients on the region samples.

    ``regularization=None`` selects 1e-8 times the largest normal-equation diagonal.
    """
    if n_dirs < 6:
        raise PreconditionError("n_dirs must be at least 6")
    if regularization is not None and regularization < 0:
        raise PreconditionError("regularization must be nonnegative")
    k = float(target.wave_number)
    x0 = getattr(target, "location", None)
    if x0 is not None:
        if region.contains(x0):
            raise PreconditionError("source location lies inside the approximation region")
        if region.distance(x0) < 0.1:
            raise PreconditionError("source location is closer than 0.1 to the approximation region")
    dirs = fibonacci_sphere(n_dirs) if directions is None else np.atleast_2d(np.asarray(directions, float))
    A = _design(dirs, k, region.points)
    v, g = _target_eval(target, region.points)
    b = np.concatenate([v, g.reshape(-1)])
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    diag_max = float(np.max(np.sum(np.abs(A) ** 2, axis=0)))
    lam = 1e-8 * diag_max if regularization is None else float(regularization)
    if lam == 0.0:
        cond = (s[0] / s[-1]) ** 2 if s[-1] > 0 else np.inf
        if cond > 1e16:
            raise IllConditioningError(f"normal equations have condition number {cond:.2e} > 1e16; "
                                       "use a positive regularization")
        filt = 1.0 / s
    else:
        filt = s / (s * s + lam)
    w = Vh.conj().T @ (filt * (U.conj().T @ b))

    def errors(pts):
        Ai = np.exp(1j * k * pts @ dirs.T)
        vv, gg = _target_eval(target, pts)
        ev = np.abs(Ai @ w - vv)
        eg = np.linalg.norm((1j * k * (Ai * w) @ dirs) - gg, axis=1)
        return float(ev.max()), float(eg.max()), float(np.abs(vv).max())

    ve, ge, sup_fit = errors(region.points)
    hve, hge, sup_hold = errors(region.holdout)
    return HerglotzDensity(dirs, w, k, target, region, ve, ge, hve, hge, max(sup_fit, sup_hold), lam, s)


def _direction_key(d):
    return tuple(np.round(np.asarray(d, float), 12).tolist())


def synthesize_scattered_response(density: HerglotzDensity, plane_wave_fields, eval_points) -> np.ndarray:
    """sum_j g_j u^s(x; theta_j).

    ``plane_wave_fields`` maps direction tuples (rounded to 12 decimals) to
    solved fields, or is a sequence aligned with ``density.directions``.
    """
    if isinstance(plane_wave_fields, dict):
        lookup = {_direction_key(k): v for k, v in plane_wave_fields.items()}
        missing = [d.tolist() for d in density.directions if _direction_key(d) not in lookup]
        if missing:
            raise PreconditionError(f"no solved plane-wave field for {len(missing)} direction(s): {missing}")
        fields = [lookup[_direction_key(d)] for d in density.directions]
    else:
        fields = list(plane_wave_fields)
        if len(fields) != len(density.directions):
            raise PreconditionError(f"expected {len(density.directions)} fields, got {len(fields)}")
    pts = np.atleast_2d(eval_points)
    solvers = {id(f.solver) for f in fields}
    if len(solvers) == 1 and fields:
        # linear in the densities: combine first, evaluate once
        from .forward import DensityPair, IncidentField, ScatteredField
        f0 = fields[0]
        g = density.weights
        vol = sum(gj * f.densities.volume_density for gj, f in zip(g, fields))
        bnd = sum(gj * f.densities.boundary_density for gj, f in zip(g, fields))
        cells = None if f0.incident_cells is None else sum(gj * f.incident_cells for gj, f in zip(g, fields))
        inc = IncidentField.herglotz(density.directions, g, density.wave_number)
        combo = ScatteredField(f0.solver, inc, DensityPair(np.asarray(vol), np.asarray(bnd)), cells)
        return f0.solver.evaluate(combo, pts)
    return sum(gj * f(pts) for gj, f in zip(density.weights, fields))
