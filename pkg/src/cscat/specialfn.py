"""Point sources, plane waves and separation-of-variables reference far fields.

Conventions
-----------
The fundamental solution is normalized so that (Delta + k^2) Phi = -delta::

    Phi(x, y) = exp(i k |x - y|) / (4 pi |x - y|)

A printed formula that writes ``exp(i k r) / r`` maps onto this one by a
factor 4 pi.  Far fields follow ``u^s(x) ~ exp(i k |x|) / |x| * A(xhat)``, so
the far field of ``Phi(., y)`` is ``exp(-i k xhat . y) / (4 pi)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_legendre, spherical_jn, spherical_yn

from .errors import ConfigurationError, SingularEvaluationError

FOUR_PI = 4.0 * np.pi


class AccuracyWarning(UserWarning):
    """Raised when a truncated series has not converged."""


def _as_points(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def fundamental_solution(x, y, k: float) -> np.ndarray | complex:
    """Helmholtz fundamental solution for arrays of points (broadcast on the last axis)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(x - y, axis=-1)
    if np.any(r == 0.0):
        raise SingularEvaluationError("fundamental solution evaluated at its source point")
    out = np.exp(1j * k * r) / (FOUR_PI * r)
    return out[()] if out.ndim == 0 else out


def fundamental_solution_gradient(x, y, k: float) -> np.ndarray:
    """Gradient of Phi(x, y) with respect to x, shape (..., 3)."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0.0):
        raise SingularEvaluationError("fundamental solution evaluated at its source point")
    g = np.exp(1j * k * r) * (1j * k * r - 1.0) / (FOUR_PI * r**3)
    return g[..., None] * d


def spherical_hankel_1_1(z) -> np.ndarray | complex:
    """First-kind spherical Hankel function of order one, -exp(iz)(z + i)/z^2."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0):
        raise ValueError("spherical_hankel_1_1 requires z > 0")
    out = -np.exp(1j * z) * (z + 1j) / z**2
    return out[()] if out.ndim == 0 else out


def _h1_derivative(z):
    # d/dz h_1(z) = h_0(z) - 2 h_1(z) / z, with h_0(z) = -i exp(iz) / z
    return -1j * np.exp(1j * z) / z - 2.0 * spherical_hankel_1_1(z) / z


@dataclass(frozen=True)
class PlaneWave:
    direction: np.ndarray
    wave_number: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float).reshape(3)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ConfigurationError(f"plane wave direction must be a unit vector, got |d| = {np.linalg.norm(d)!r}")
        object.__setattr__(self, "direction", d)

    def __call__(self, points) -> np.ndarray:
        return np.exp(1j * self.wave_number * (_as_points(points) @ self.direction))

    def gradient(self, points) -> np.ndarray:
        return 1j * self.wave_number * self(points)[:, None] * self.direction[None, :]


@dataclass(frozen=True)
class PointSource:
    """Monopole ``Phi(., x0)`` or dipole ``h_1(k rho) cos(angle to axis)`` located at ``location``."""

    kind: str
    location: np.ndarray
    wave_number: float
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if self.kind not in ("monopole", "dipole"):
            raise ConfigurationError(f"unknown point source kind {self.kind!r}; expected 'monopole' or 'dipole'")
        object.__setattr__(self, "location", np.asarray(self.location, dtype=float).reshape(3))
        a = np.asarray(self.axis, dtype=float).reshape(3)
        if self.kind == "dipole" and abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ConfigurationError("dipole axis must be a unit vector")
        object.__setattr__(self, "axis", a)

    def __call__(self, points) -> np.ndarray:
        return evaluate_source(self, points)

    def gradient(self, points) -> np.ndarray:
        y = _as_points(points)
        if self.kind == "monopole":
            return fundamental_solution_gradient(y, self.location[None, :], self.wave_number)
        d = y - self.location
        rho = np.linalg.norm(d, axis=1)
        if np.any(rho == 0.0):
            raise SingularEvaluationError("dipole source evaluated at its location")
        k = self.wave_number
        rhat = d / rho[:, None]
        c = rhat @ self.axis
        h = spherical_hankel_1_1(k * rho)
        dh = k * _h1_derivative(k * rho)
        # grad cos(angle) = (axis - c rhat) / rho
        return (dh * c)[:, None] * rhat + (h / rho)[:, None] * (self.axis[None, :] - c[:, None] * rhat)


def evaluate_source(src: PointSource, y) -> np.ndarray:
    y = _as_points(y)
    if src.kind == "monopole":
        return fundamental_solution(y, src.location[None, :], src.wave_number)
    d = y - src.location
    rho = np.linalg.norm(d, axis=1)
    if np.any(rho == 0.0):
        raise SingularEvaluationError("dipole source evaluated at its location")
    cos_psi = (d @ src.axis) / rho
    return spherical_hankel_1_1(src.wave_number * rho) * cos_psi


def _sph_h(n, z):
    return spherical_jn(n, z) + 1j * spherical_yn(n, z)


def _sph_h_prime(n, z):
    return spherical_jn(n, z, derivative=True) + 1j * spherical_yn(n, z, derivative=True)


@dataclass(frozen=True)
class MieResult:
    values: np.ndarray
    converged: bool
    last_term_ratio: float


def mie_coefficients(kind: str, radius: float, k: float, n_terms: int, contrast: complex = 0.0) -> np.ndarray:
    """Outgoing coefficients b_n of u^s = sum b_n h_n(k r) P_n(cos gamma) for a unit plane wave."""
    n = np.arange(n_terms)
    ka = k * radius
    inc = (1j**n) * (2 * n + 1)
    if kind == "soft_sphere":
        return -inc * spherical_jn(n, ka) / _sph_h(n, ka)
    if kind == "homogeneous_ball":
        if contrast == 0:
            return np.zeros(n_terms, complex)
        k1 = k * np.sqrt(complex(1.0 - contrast))
        k1a = k1 * radius
        j_in = spherical_jn(n, k1a)
        dj_in = spherical_jn(n, k1a, derivative=True)
        num = k1 * dj_in * spherical_jn(n, ka) - k * spherical_jn(n, ka, derivative=True) * j_in
        den = k * _sph_h_prime(n, ka) * j_in - k1 * dj_in * _sph_h(n, ka)
        return inc * num / den
    raise ConfigurationError(f"unknown Mie scatterer kind {kind!r}")


def mie_oracle(kind: str, radius: float, k: float, incident_dir, obs_dirs, n_terms: int | None = None,
               contrast: complex = 0.0) -> MieResult:
    """Far field of a centred sound-soft sphere or homogeneous ball under a unit plane wave.

    ``contrast`` is 1 - q inside the ball (only used for ``homogeneous_ball``).
    """
    if n_terms is None:
        n_terms = int(np.ceil(k * radius)) + 20
    if n_terms < k * radius + 10:
        raise ConfigurationError(f"n_terms={n_terms} must be at least k*radius + 10 = {k * radius + 10:.1f}")
    theta = np.asarray(incident_dir, dtype=float).reshape(3)
    xh = _as_points(obs_dirs)
    cosg = np.clip(xh @ theta / np.linalg.norm(xh, axis=1) / np.linalg.norm(theta), -1.0, 1.0)
    b = mie_coefficients(kind, radius, k, n_terms, contrast)
    n = np.arange(n_terms)
    far = b * (-1j) ** (n + 1) / k
    vals = np.zeros(len(xh), dtype=complex)
    for m in range(n_terms):
        vals += far[m] * eval_legendre(m, cosg)
    scale = np.max(np.abs(far))
    ratio = float(np.abs(far[-1]) / scale) if scale > 0 else 0.0
    converged = ratio <= 1e-10
    if not converged:
        warnings.warn(f"Mie series not converged: last term ratio {ratio:.2e}", AccuracyWarning, stacklevel=2)
    return MieResult(vals, converged, ratio)


def born_ball_far_field(radius: float, k: float, contrast: complex, incident_dir, obs_dirs) -> np.ndarray:
    """First Born far field of a centred homogeneous ball with contrast ``1 - q``."""
    theta = np.asarray(incident_dir, dtype=float).reshape(3)
    xh = _as_points(obs_dirs)
    xh = xh / np.linalg.norm(xh, axis=1, keepdims=True)
    s = k * radius * np.linalg.norm(theta[None, :] / np.linalg.norm(theta) - xh, axis=1)
    small = s < 1e-4
    ss = np.where(small, 1.0, s)
    form = np.where(small, 1.0 - s * s / 10.0, 3.0 * (np.sin(ss) - ss * np.cos(ss)) / ss**3)
    return -k * k * contrast * radius**3 / 3.0 * form


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic near-uniform unit vectors."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    r = np.sqrt(1.0 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
