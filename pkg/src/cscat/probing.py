"""Singular-source probing of candidate boundary points.

A source is placed at ``x_n = x0 + d_n nu`` with ``d_n`` shrinking toward zero
and the scattered response is recorded at ``x_n`` itself.  On a sound-soft
boundary the response follows the source singularity (slope -1 for the
monopole, -2 for the dipole on log-log axes).  On a penetrable boundary
only the dipole response grows, and only logarithmically.  Away from the
scatterer both stay bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergenceError, PreconditionError
from .forward import ForwardSolver, IncidentField, Resolution
from .geometry import LabeledCloud, SceneC
from .herglotz import fit_density, scatterer_region, synthesize_scattered_response
from .specialfn import PointSource

CLASSES = ("obstacle_boundary", "medium_boundary", "not_boundary", "indeterminate")
TRUTH = {"obstacle_exterior": "obstacle_boundary", "medium_exterior": "medium_boundary",
         "free_space": "not_boundary"}


@dataclass(frozen=True)
class ProbeSpec:
    x0: tuple
    normal: tuple
    h: float = 0.25
    n_max: int = 12
    source_kind: str = "monopole"
    access_mode: str = "direct"
    sequence: str = "harmonic"

    def __post_init__(self):
        n = np.asarray(self.normal, float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise PreconditionError("probe normal must be a unit vector")
        if self.h <= 0 or self.n_max < 2:
            raise PreconditionError("probe needs h > 0 and n_max >= 2")
        if self.source_kind not in ("monopole", "dipole"):
            raise PreconditionError(f"unknown source kind {self.source_kind!r}")
        if self.access_mode not in ("direct", "farfield"):
            raise PreconditionError(f"unknown access mode {self.access_mode!r}")
        if self.sequence not in ("harmonic", "geometric"):
            raise PreconditionError(f"unknown sequence {self.sequence!r}")

    @property
    def distances(self) -> np.ndarray:
        n = np.arange(1, self.n_max + 1)
        return self.h / n if self.sequence == "harmonic" else self.h * 2.0 ** (-n.astype(float))

    def points(self) -> np.ndarray:
        return np.asarray(self.x0, float) + np.outer(self.distances, np.asarray(self.normal, float))

    def with_kind(self, kind):
        return ProbeSpec(self.x0, self.normal, self.h, self.n_max, kind, self.access_mode, self.sequence)

    def to_dict(self):
        return {"x0": list(map(float, self.x0)), "normal": list(map(float, self.normal)), "h": self.h,
                "n_max": self.n_max, "source_kind": self.source_kind, "access_mode": self.access_mode,
                "sequence": self.sequence}


def fit_tail_slope(distances, magnitudes):
    """Least-squares slope of log|m| against log d over the final half of the sequence."""
    d = np.asarray(distances, float)
    m = np.asarray(magnitudes, float)
    ok = np.isfinite(m) & (m > 0)
    n_tail = max(2, len(d) // 2)
    idx = np.arange(len(d))[-n_tail:]
    idx = idx[ok[idx]]
    if len(idx) < 2:
        return float("nan"), float("nan")
    x, y = np.log(d[idx]), np.log(m[idx])
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    if len(idx) > 2:
        r = y - A @ coef
        s2 = r @ r / (len(idx) - 2)
        err = float(np.sqrt(s2 * np.linalg.inv(A.T @ A)[0, 0]))
    else:
        err = 0.0
    return float(coef[0]), err


@dataclass
class IndicatorCurve:
    spec: ProbeSpec
    distances: np.ndarray
    values: np.ndarray
    slope: float
    slope_stderr: float
    evaluation_policy: str = "probe_point"
    failures: dict = field(default_factory=dict)

    @property
    def magnitudes(self):
        return np.abs(self.values)

    def to_rows(self):
        return [(i + 1, d, v.real, v.imag, abs(v)) for i, (d, v) in enumerate(zip(self.distances, self.values))]

    def to_dict(self):
        return {"spec": self.spec.to_dict(), "slope": self.slope, "slope_stderr": self.slope_stderr,
                "evaluation_policy": self.evaluation_policy,
                "failures": {str(k): v for k, v in self.failures.items()}}


def check_spec(scene: SceneC, spec: ProbeSpec):
    pts = spec.points()
    bad = scene.inside_sigma(pts) | (scene.sigma_distance(pts) <= 0.0)
    if np.any(bad):
        raise PreconditionError(f"probe point {pts[bad][0].tolist()} is not in the exterior of the scatterer")


def probe_solver(scene: SceneC, spec: ProbeSpec, resolution: Resolution | None = None) -> ForwardSolver:
    """Solver whose obstacle mesh is graded toward the probe's x0."""
    base = resolution or Resolution(order=4)
    if scene.obstacle is None:
        return ForwardSolver(scene, base)
    dmin = float(spec.distances.min())
    res = Resolution(base.panels_per_edge, base.order, base.h, tuple(map(float, spec.x0)),
                     base.refine_gamma, min(base.refine_min, 0.5 * dmin), base.max_iter)
    return ForwardSolver(scene, res)


def probe_curve(scene: SceneC, spec: ProbeSpec, resolution: Resolution | None = None,
                solver: ForwardSolver | None = None, n_dirs: int = 196, regularization: float | None = None,
                tol: float = 1e-8, plane_wave_fields=None) -> IndicatorCurve:
    """Record the scattered response at each probe point and fit the tail slope."""
    check_spec(scene, spec)
    solver = solver or probe_solver(scene, spec, resolution)
    k = scene.wave_number
    nu = np.asarray(spec.normal, float)
    pts = spec.points()
    vals = np.full(len(pts), np.nan + 0j)
    failures = {}
    if spec.access_mode == "farfield":
        region = scatterer_region(scene)
        if plane_wave_fields is None:
            from .specialfn import fibonacci_sphere
            plane_wave_fields = [solver.solve(IncidentField.plane_wave(d, k), tol) for d in fibonacci_sphere(n_dirs)]
    for i, x in enumerate(pts):
        try:
            if spec.access_mode == "direct":
                f = solver.solve(IncidentField.point_source(spec.source_kind, x, k, nu), tol)
                vals[i] = f(x[None])[0]
            else:
                dens = fit_density(PointSource(spec.source_kind, x, k, nu), region, n_dirs, regularization)
                vals[i] = synthesize_scattered_response(dens, plane_wave_fields, x[None])[0]
        except (NonConvergenceError, PreconditionError) as exc:
            failures[i + 1] = f"{type(exc).__name__}: {exc}"
    slope, err = fit_tail_slope(spec.distances, np.abs(vals))
    return IndicatorCurve(spec, spec.distances, vals, slope, err, "probe_point", failures)


@dataclass(frozen=True)
class Thresholds:
    blowup: float = -0.7
    bounded: float = -0.2


def classify_point(curve_phi: IndicatorCurve, curve_psi: IndicatorCurve, thresholds: Thresholds = Thresholds()) -> str:
    a, b = curve_phi.spec, curve_psi.spec
    if (not np.allclose(a.x0, b.x0) or not np.allclose(a.normal, b.normal) or a.h != b.h
            or a.n_max != b.n_max or a.sequence != b.sequence):
        raise PreconditionError("the two curves must probe the same x0, normal and distance sequence")
    if not np.isfinite(curve_psi.slope) or not np.isfinite(curve_phi.slope):
        return "indeterminate"
    if curve_psi.slope >= thresholds.bounded:
        return "not_boundary"
    if curve_phi.slope <= thresholds.blowup:
        return "obstacle_boundary"
    if curve_phi.slope >= thresholds.bounded:
        return "medium_boundary"
    return "indeterminate"


# ---------------------------------------------------------------------------
# Candidate selection and batch scan
# ---------------------------------------------------------------------------

def select_candidates(cloud: LabeledCloud, n: int, exclude=("contact",), seed: int = 0) -> LabeledCloud:
    """Farthest-point subsample of ``cloud`` (labels in ``exclude`` dropped)."""
    keep = ~np.isin(cloud.labels, list(exclude))
    pts = cloud.points[keep]
    if len(pts) < n:
        raise PreconditionError(f"only {len(pts)} eligible candidate points, {n} requested")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(len(pts)))]
    dist = np.linalg.norm(pts - pts[chosen[0]], axis=1)
    for _ in range(n - 1):
        j = int(np.argmax(dist))
        chosen.append(j)
        dist = np.minimum(dist, np.linalg.norm(pts - pts[j], axis=1))
    idx = np.nonzero(keep)[0][np.array(chosen)]
    return LabeledCloud(cloud.points[idx], cloud.normals[idx], cloud.labels[idx], cloud.owners[idx])


def free_space_candidates(cloud: LabeledCloud, offset: float = 0.5) -> LabeledCloud:
    """Points ``offset`` outside the boundary along the normal, labelled free_space."""
    return LabeledCloud(cloud.points + offset * cloud.normals, cloud.normals.copy(),
                        np.full(len(cloud), "free_space"), np.full(len(cloud), -2))


@dataclass
class ScanResult:
    points: np.ndarray
    truth: np.ndarray
    predicted: np.ndarray
    slope_phi: np.ndarray
    slope_psi: np.ndarray
    curves: list = field(repr=False, default_factory=list)

    def accuracy(self, label=None) -> float:
        mask = np.ones(len(self.truth), bool) if label is None else self.truth == label
        mask &= self.truth != "excluded"
        if not np.any(mask):
            return float("nan")
        return float(np.mean(self.predicted[mask] == self.truth[mask]))

    def confusion(self) -> dict:
        out = {}
        for t, p in zip(self.truth, self.predicted):
            out.setdefault(str(t), {}).setdefault(str(p), 0)
            out[str(t)][str(p)] += 1
        return out

    def to_dict(self):
        labels = sorted(set(self.truth) - {"excluded"})
        return {"n_points": int(len(self.truth)), "accuracy": self.accuracy(),
                "accuracy_by_truth": {lab: self.accuracy(lab) for lab in labels},
                "confusion": self.confusion()}


def scan_boundary(scene: SceneC, candidates: LabeledCloud, h: float = 0.25, n_max: int = 12,
                  sequence: str = "harmonic", resolution: Resolution | None = None,
                  thresholds: Thresholds = Thresholds(), tol: float = 1e-8, keep_curves: bool = False) -> ScanResult:
    """Probe every candidate with both sources (direct mode) and classify it."""
    shared = ForwardSolver(scene, resolution or Resolution(order=4)) if scene.obstacle is None else None
    truth, pred, sphi, spsi, curves = [], [], [], [], []
    for x0, nu, lab in zip(candidates.points, candidates.normals, candidates.labels):
        truth.append(TRUTH.get(str(lab), "excluded"))
        spec = ProbeSpec(tuple(x0), tuple(nu), h, n_max, "monopole", "direct", sequence)
        try:
            check_spec(scene, spec)
        except PreconditionError:
            pred.append("indeterminate")
            sphi.append(np.nan)
            spsi.append(np.nan)
            continue
        solver = shared or probe_solver(scene, spec, resolution)
        cphi = probe_curve(scene, spec, solver=solver, tol=tol)
        cpsi = probe_curve(scene, spec.with_kind("dipole"), solver=solver, tol=tol)
        pred.append(classify_point(cphi, cpsi, thresholds))
        sphi.append(cphi.slope)
        spsi.append(cpsi.slope)
        if keep_curves:
            curves.append((cphi, cpsi))
    return ScanResult(candidates.points, np.array(truth), np.array(pred), np.array(sphi), np.array(spsi), curves)
