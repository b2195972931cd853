import numpy as np
import pytest
from conftest import composite_scene, medium_ball, soft_sphere

from cscat.errors import ConfigurationError, DomainError, PreconditionError
from cscat.forward import (ForwardSolver, IncidentField, Resolution, difference_residual, far_field_matrix,
                           far_field_pattern, solve_scattering)
from cscat.specialfn import fibonacci_sphere, mie_oracle

THETA = np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="module")
def soft_solver():
    return ForwardSolver(soft_sphere(), Resolution(2, 6))


@pytest.fixture(scope="module")
def soft_field(soft_solver):
    return soft_solver.solve(IncidentField.plane_wave(THETA, 1.0))


def test_empty_scene_scatters_nothing():
    from cscat.geometry import SceneC
    sf = solve_scattering(SceneC(None, []), IncidentField.plane_wave(THETA, 1.0))
    assert np.all(sf(np.array([[2.0, 0, 0]])) == 0)
    assert np.all(far_field_pattern(sf, fibonacci_sphere(4)) == 0)


def test_zero_contrast_medium_scatters_nothing():
    sf = solve_scattering(medium_ball(0.0), IncidentField.plane_wave(THETA, 1.0), Resolution(h=0.2))
    assert np.abs(sf.densities.volume_density).max() < 1e-12
    assert np.abs(sf.far_field(fibonacci_sphere(8))).max() < 1e-12


def test_soft_sphere_matches_mie(soft_field):
    d = fibonacci_sphere(128)
    ref = mie_oracle("soft_sphere", 1.0, 1.0, THETA, d).values
    err = np.linalg.norm(soft_field.far_field(d) - ref) / np.linalg.norm(ref)
    assert err < 1e-2


def test_soft_sphere_boundary_condition(soft_solver, soft_field):
    ui = soft_field.incident(soft_solver.bgrid.nodes)
    us = soft_solver.boundary_values(soft_field)
    assert np.abs(us + ui).max() < 1e-8


def test_reciprocity(soft_solver):
    dirs = fibonacci_sphere(6)
    M = far_field_matrix(soft_solver, -dirs, dirs).values
    assert np.abs(M - M.T).max() < 1e-3 * np.abs(M).max()


def test_reciprocity_on_asymmetric_scene():
    solver = ForwardSolver(composite_scene(0.2, detached=False), Resolution(2, 4, 0.15))
    dirs = fibonacci_sphere(4)
    M = far_field_matrix(solver, -dirs, dirs).values
    assert np.abs(M - M.T).max() < 1e-2 * np.abs(M).max()


def test_far_field_depends_on_angle_only(soft_solver):
    a = soft_solver.solve(IncidentField.plane_wave([0, 0, 1.0], 1.0))
    b = soft_solver.solve(IncidentField.plane_wave([1.0, 0, 0], 1.0))
    t = 0.9
    va = a.far_field([[np.sin(t), 0, np.cos(t)]])[0]
    vb = b.far_field([[np.cos(t), np.sin(t), 0]])[0]
    assert abs(va - vb) < 1e-3 * abs(va)


def test_far_field_asymptotics(soft_field):
    xh = np.array([0.6, 0.0, 0.8])
    A = soft_field.far_field(xh[None])[0]
    r = np.array([20.0, 30.0, 45.0, 60.0, 80.0])
    u = soft_field(r[:, None] * xh)
    dev = np.abs(u - np.exp(1j * r) / r * A)
    slope = np.polyfit(np.log(r), np.log(dev), 1)[0]
    assert abs(slope + 2) < 0.3


def test_radiation_condition(soft_field):
    xh = np.array([0.0, 0.6, 0.8])
    r = np.array([10.0, 20.0, 40.0, 80.0])
    h = 1e-4
    up = soft_field((r + h)[:, None] * xh)
    um = soft_field((r - h)[:, None] * xh)
    u = soft_field(r[:, None] * xh)
    res = r * np.abs((up - um) / (2 * h) - 1j * u)
    assert np.all(np.diff(res) < 0)


def test_evaluation_inside_obstacle_rejected(soft_field):
    with pytest.raises(DomainError):
        soft_field(np.zeros((1, 3)))


def test_point_source_inside_scatterer_rejected(soft_solver):
    with pytest.raises(PreconditionError):
        soft_solver.solve(IncidentField.point_source("monopole", [0, 0, 0.5], 1.0))


def test_tolerance_range_enforced(soft_solver):
    with pytest.raises(ConfigurationError):
        soft_solver.solve(IncidentField.plane_wave(THETA, 1.0), tol=1.0)


def test_identical_contrasts_give_zero_difference():
    inc = IncidentField.plane_wave(THETA, 1.0)
    res = Resolution(h=0.15)
    a = solve_scattering(medium_ball(0.05), inc, res)
    b = solve_scattering(medium_ball(0.05), inc, res)
    w = a(np.array([[0.2, 0.1, 0.0], [2.0, 0, 0]])) - b(np.array([[0.2, 0.1, 0.0], [2.0, 0, 0]]))
    assert np.abs(w).max() < 1e-10


def test_difference_vanishes_on_obstacle():
    inc = IncidentField.plane_wave([1.0, 0, 0], 1.0)
    rep = difference_residual(composite_scene(0.05, detached=False), composite_scene(0.06, detached=False), inc,
                              Resolution(2, 4, 0.1))
    assert rep.boundary_mismatch < 1e-6
    assert rep.passed


def test_difference_needs_matching_geometry():
    with pytest.raises(PreconditionError):
        difference_residual(medium_ball(0.05), medium_ball(0.06, radius=0.9), IncidentField.plane_wave(THETA, 1.0))
