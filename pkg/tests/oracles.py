"""Reference values computed independently of the package.

Nothing here imports ``cscat``.  Series use mpmath, integrals use
``scipy.integrate.quad``, and the CGO vectors are rebuilt directly in world
coordinates.
"""

from __future__ import annotations

import cmath
import math

import mpmath as mp
import numpy as np
from scipy import integrate


def green(x, y, k):
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    return cmath.exp(1j * k * r) / (4 * math.pi * r)


def hankel1_closed(z):
    """h_1^(1)(z) = -exp(iz)(z + i)/z^2."""
    return -cmath.exp(1j * z) * (z + 1j) / z**2


def j1_closed(z):
    return math.sin(z) / z**2 - math.cos(z) / z


def y1_closed(z):
    return -math.cos(z) / z**2 - math.sin(z) / z


def _sph_j(n, z):
    return mp.sqrt(mp.pi / (2 * z)) * mp.besselj(n + 0.5, z)


def _sph_y(n, z):
    return mp.sqrt(mp.pi / (2 * z)) * mp.bessely(n + 0.5, z)


def mie_soft_far_field(k, radius, cos_angle, n_terms=40):
    """Far field of a sound-soft sphere for u_i = exp(ik theta.x), u_s ~ exp(ikr)/r A."""
    mp.mp.dps = 30
    ka = mp.mpf(k * radius)
    total = mp.mpc(0)
    for n in range(n_terms):
        h = _sph_j(n, ka) + 1j * _sph_y(n, ka)
        b = -(1j**n) * (2 * n + 1) * _sph_j(n, ka) / h
        total += b * (-1j) ** (n + 1) / k * mp.legendre(n, cos_angle)
    return complex(total)


def ball_transform(radius, eta_norm):
    """int over the ball of exp(i eta.x) by radial quadrature."""
    f = lambda r: 4 * math.pi * r * r * (math.sin(eta_norm * r) / (eta_norm * r) if r > 0 else 1.0)  # noqa: E731
    return integrate.quad(f, 0.0, radius, epsabs=1e-14, epsrel=1e-13)[0]


def ball_transform_closed(radius, eta_norm):
    s = eta_norm * radius
    return 4 * math.pi * (math.sin(s) - s * math.cos(s)) / eta_norm**3


def born_ball_far_field(k, radius, contrast, theta, xhat):
    """-k^2 c / (4 pi) int_ball exp(ik(theta - xhat).y) dy by radial quadrature."""
    q = k * float(np.linalg.norm(np.asarray(theta, float) - np.asarray(xhat, float)))
    vol = ball_transform(radius, q) if q > 1e-12 else 4 * math.pi * radius**3 / 3
    return -k * k * contrast * vol / (4 * math.pi)


def single_layer_sphere_center(radius, k):
    """int_{|y|=R} Phi(0, y) dS = R exp(ikR)."""
    return radius * cmath.exp(1j * k * radius)


def volume_ball_center(radius, k):
    """k^2 int_{|y|<R} Phi(0, y) dy = k^2 int_0^R r exp(ikr) dr."""
    re = integrate.quad(lambda r: r * math.cos(k * r), 0, radius)[0]
    im = integrate.quad(lambda r: r * math.sin(k * r), 0, radius)[0]
    return k * k * complex(re, im)


def fd_laplacian(f, x, h):
    """Second-order 7-point Laplacian of a scalar callable at x."""
    x = np.asarray(x, float)
    acc = -6.0 * f(x)
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        acc += f(x + e) + f(x - e)
    return acc / h**2


def cgo_vectors_world(xi, tau, normal):
    """zeta(1), zeta(2), zeta*(1), zeta*(2) in world coordinates for a plane with unit ``normal``."""
    xi = np.asarray(xi, float)
    n = np.asarray(normal, float) / np.linalg.norm(normal)
    x3 = xi @ n
    inplane = xi - x3 * n
    x1e = np.linalg.norm(inplane)
    e1 = inplane / x1e
    e2 = np.cross(n, e1)
    m = np.linalg.norm(xi) * math.sqrt(0.25 + tau * tau)
    z1 = (x1e / 2 - tau * x3) * e1 + 1j * m * e2 + (x3 / 2 + tau * x1e) * n
    z2 = (x1e / 2 + tau * x3) * e1 - 1j * m * e2 + (x3 / 2 - tau * x1e) * n
    z1s = (x1e / 2 - tau * x3) * e1 + 1j * m * e2 - (x3 / 2 + tau * x1e) * n
    z2s = (x1e / 2 + tau * x3) * e1 - 1j * m * e2 - (x3 / 2 - tau * x1e) * n
    return z1, z2, z1s, z2s, (e1, e2, n), x1e, x3


def reflect(x, plane_point, normal):
    n = np.asarray(normal, float) / np.linalg.norm(normal)
    x = np.asarray(x, float)
    return x - 2 * ((x - plane_point) @ n)[..., None] * n


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rotation_about(axis, angle):
    a = np.asarray(axis, float) / np.linalg.norm(axis)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K
