import numpy as np
import pytest
from conftest import soft_sphere
from hypothesis import given
from hypothesis import strategies as st

from cscat.errors import IllConditioningError, PreconditionError
from cscat.forward import ForwardSolver, IncidentField, Resolution
from cscat.herglotz import ball_region, fit_density, synthesize_scattered_response
from cscat.specialfn import PlaneWave, PointSource, fibonacci_sphere

K = 1.0


@pytest.fixture(scope="module")
def region():
    return ball_region([0, 0, 0], 1.0)


@pytest.fixture(scope="module")
def density(region):
    return fit_density(PointSource("monopole", np.array([0, 0, 4.0]), K), region, 49)


def test_plane_wave_in_dictionary_is_recovered(region):
    dirs = fibonacci_sphere(49)
    fit = fit_density(PlaneWave(dirs[7], K), region, 49, regularization=0.0, directions=dirs)
    expect = np.zeros(49)
    expect[7] = 1.0
    assert np.abs(fit.weights - expect).max() < 1e-10
    assert fit.holdout_value_error < 1e-10


def test_monopole_at_distance_three(region):
    fit = fit_density(PointSource("monopole", np.array([4.0, 0, 0]), K), region, 196, regularization=None)
    assert fit.holdout_value_error < 1e-2 * fit.target_sup


def test_error_drops_with_more_directions(region):
    src = PointSource("monopole", np.array([0, 2.5, 0]), K)
    e49 = fit_density(src, region, 49, 1e-10).holdout_value_error
    e196 = fit_density(src, region, 196, 1e-10).holdout_value_error
    assert e196 <= 0.8 * e49


def test_source_inside_region_rejected(region):
    with pytest.raises(PreconditionError):
        fit_density(PointSource("monopole", np.array([0, 0, 0.5]), K), region, 49)
    with pytest.raises(PreconditionError):
        fit_density(PointSource("monopole", np.array([0, 0, 1.05]), K), region, 49)


def test_bad_arguments(region):
    src = PointSource("monopole", np.array([0, 0, 4.0]), K)
    with pytest.raises(PreconditionError):
        fit_density(src, region, 3)
    with pytest.raises(PreconditionError):
        fit_density(src, region, 49, regularization=-1.0)
    with pytest.raises(IllConditioningError):
        fit_density(src, region, 400, regularization=0.0)


@pytest.fixture(scope="module")
def plane_wave_fields(density):
    solver = ForwardSolver(soft_sphere(K), Resolution(2, 4))
    return solver, [solver.solve(IncidentField.plane_wave(d, K)) for d in density.directions]


def test_zero_weights_give_zero_response(density, plane_wave_fields):
    import dataclasses
    _, fields = plane_wave_fields
    zero = dataclasses.replace(density, weights=np.zeros_like(density.weights))
    assert np.all(synthesize_scattered_response(zero, fields, np.array([[0, 0, 2.0]])) == 0)


@given(st.integers(0, 2**31 - 1))
def test_direction_order_does_not_matter(density, plane_wave_fields, seed):
    import dataclasses
    _, fields = plane_wave_fields
    p = np.random.default_rng(seed).permutation(len(fields))
    perm = dataclasses.replace(density, directions=density.directions[p], weights=density.weights[p])
    pts = np.array([[0, 0, 2.0], [1.5, 0.3, 0.0]])
    a = synthesize_scattered_response(density, fields, pts)
    b = synthesize_scattered_response(perm, [fields[i] for i in p], pts)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-15)


def test_lookup_by_direction(density, plane_wave_fields):
    _, fields = plane_wave_fields
    table = {tuple(d): f for d, f in zip(density.directions, fields)}
    pts = np.array([[0, 0, 2.0]])
    assert np.allclose(synthesize_scattered_response(density, table, pts),
                       synthesize_scattered_response(density, fields, pts), rtol=1e-12)
    table.pop(next(iter(table)))
    with pytest.raises(PreconditionError):
        synthesize_scattered_response(density, table, pts)


def test_synthesis_tracks_direct_solve(density, plane_wave_fields):
    solver, fields = plane_wave_fields
    pts = 1.5 * fibonacci_sphere(8)
    synth = synthesize_scattered_response(density, fields, pts)
    direct = solver.solve(IncidentField.point_source("monopole", [0, 0, 4.0], K))(pts)
    rel = np.abs(synth - direct).max() / np.abs(direct).max()
    assert rel <= 3 * density.relative_error
