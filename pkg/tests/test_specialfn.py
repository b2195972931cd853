import cmath

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import (born_ball_far_field, fd_laplacian, green, hankel1_closed, j1_closed, mie_soft_far_field,
                     y1_closed)

from cscat.errors import ConfigurationError, SingularEvaluationError
from cscat.specialfn import (PointSource, born_ball_far_field as born_pkg, fibonacci_sphere, fundamental_solution,
                             mie_oracle, spherical_hankel_1_1)

pts = st.tuples(*[st.floats(-3, 3, allow_nan=False)] * 3).map(np.array)


def test_fundamental_solution_at_unit_distance():
    v = fundamental_solution(np.zeros(3), np.array([1.0, 0, 0]), 1.0)
    assert abs(v - cmath.exp(1j) / (4 * np.pi)) < 1e-15
    assert abs(v - (0.043000 + 0.066961j)) < 1e-5


@given(pts, pts, st.floats(0.1, 10))
def test_fundamental_solution_symmetric(x, y, k):
    if np.linalg.norm(x - y) < 1e-3:
        return
    a, b = fundamental_solution(x, y, k), fundamental_solution(y, x, k)
    assert a == b
    assert abs(a - green(x, y, k)) <= 1e-13 * abs(a)


def test_fundamental_solution_solves_helmholtz():
    y = np.zeros(3)
    x = np.array([2.0, 0, 0])
    k = 1.3
    f = lambda p: complex(fundamental_solution(p, y, k))  # noqa: E731
    r = fd_laplacian(f, x, 1e-3) + k * k * f(x)
    assert abs(r) / abs(f(x)) < 1e-4


def test_singular_point_rejected():
    with pytest.raises(SingularEvaluationError):
        fundamental_solution(np.zeros(3), np.zeros(3), 1.0)


def test_hankel_closed_form():
    assert abs(spherical_hankel_1_1(1.0) - hankel1_closed(1.0)) < 1e-14
    assert abs(spherical_hankel_1_1(1.0) - (0.301169 - 1.381773j)) < 1e-6


def test_hankel_small_argument_law():
    z = 1e-3
    assert abs(z * z * spherical_hankel_1_1(z) + 1j) < 2e-3


def test_hankel_is_j_plus_iy():
    z = 2.0
    assert abs(spherical_hankel_1_1(z) - (j1_closed(z) + 1j * y1_closed(z))) < 1e-12


@given(st.floats(0.05, 30))
def test_hankel_matches_closed_form(z):
    assert abs(spherical_hankel_1_1(z) - hankel1_closed(z)) <= 1e-12 * abs(hankel1_closed(z))


def test_dipole_on_axis_and_equator():
    k = 1.0
    src = PointSource("dipole", np.zeros(3), k, np.array([0, 0, 1.0]))
    for rho in (0.3, 1.0, 2.5):
        assert abs(src(np.array([[0, 0, rho]]))[0] - hankel1_closed(k * rho)) < 1e-13
        assert abs(src(np.array([[rho, 0, 0]]))[0]) < 1e-15


def test_dipole_quadratic_singularity():
    k = 1.0
    src = PointSource("dipole", np.zeros(3), k, np.array([0, 0, 1.0]))
    for rho in (1e-1, 1e-2, 1e-3):
        assert abs(rho**2 * abs(src(np.array([[0, 0, rho]]))[0]) - 1 / k**2) < 0.1 / k**2


def test_dipole_axis_must_be_unit():
    with pytest.raises(ConfigurationError):
        PointSource("dipole", np.zeros(3), 1.0, np.array([0, 0, 2.0]))


@given(st.integers(0, 2**31 - 1))
def test_source_gradient_matches_differences(seed):
    rng = np.random.default_rng(seed)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    src = PointSource(["monopole", "dipole"][seed % 2], np.zeros(3), 1.2, axis)
    x = rng.normal(size=3)
    x *= 1.5 / np.linalg.norm(x)
    h = 1e-5
    g = np.array([(src((x + h * e)[None])[0] - src((x - h * e)[None])[0]) / (2 * h) for e in np.eye(3)])
    assert np.allclose(src.gradient(x[None])[0], g, atol=1e-6 * np.abs(g).max() + 1e-9)


def test_mie_soft_sphere_matches_mpmath_series():
    d = fibonacci_sphere(16)
    theta = np.array([0, 0, 1.0])
    vals = mie_oracle("soft_sphere", 1.0, 1.5, theta, d).values
    ref = np.array([mie_soft_far_field(1.5, 1.0, c) for c in d @ theta])
    assert np.abs(vals - ref).max() < 1e-12 * np.abs(ref).max()


def test_mie_low_frequency_limit():
    a = mie_oracle("soft_sphere", 1.0, 0.01, [0, 0, 1], [[1, 0, 0]]).values[0]
    assert abs(a + 1) < 0.05


def test_mie_zero_contrast_ball_is_silent():
    v = mie_oracle("homogeneous_ball", 1.0, 1.0, [0, 0, 1], fibonacci_sphere(10), contrast=0.0).values
    assert np.all(v == 0)


def test_mie_depends_on_angle_only():
    th1, th2 = np.array([0, 0, 1.0]), np.array([1.0, 0, 0])
    x1 = np.array([np.sin(0.7), 0, np.cos(0.7)])
    x2 = np.array([np.cos(0.7), np.sin(0.7), 0])
    a = mie_oracle("soft_sphere", 1.0, 2.0, th1, [x1]).values[0]
    b = mie_oracle("soft_sphere", 1.0, 2.0, th2, [x2]).values[0]
    assert abs(a - b) < 1e-12


def test_mie_requires_enough_terms():
    with pytest.raises(ConfigurationError):
        mie_oracle("soft_sphere", 1.0, 5.0, [0, 0, 1], [[1, 0, 0]], n_terms=5)


def test_born_closed_form_matches_radial_quadrature():
    theta = np.array([0, 0, 1.0])
    d = fibonacci_sphere(12)
    pkg = born_pkg(1.0, 1.3, 0.05, theta, d)
    ref = np.array([born_ball_far_field(1.3, 1.0, 0.05, theta, x) for x in d])
    assert np.allclose(pkg, ref, rtol=1e-10, atol=1e-14)


def test_born_agrees_with_weak_contrast_series():
    d = fibonacci_sphere(32)
    th = np.array([0, 0, 1.0])
    m = mie_oracle("homogeneous_ball", 1.0, 1.0, th, d, contrast=1e-4).values
    b = born_pkg(1.0, 1.0, 1e-4, th, d)
    assert np.linalg.norm(m - b) / np.linalg.norm(m) < 1e-3


def test_fibonacci_directions_are_unit_and_deterministic():
    d = fibonacci_sphere(50)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.array_equal(d, fibonacci_sphere(50))
    assert np.linalg.norm(d.mean(axis=0)) < 0.05
