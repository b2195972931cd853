import numpy as np
import pytest
from conftest import composite_scene, medium_ball, soft_sphere
from hypothesis import given
from hypothesis import strategies as st

from cscat.errors import PreconditionError
from cscat.geometry import boundary_partition
from cscat.probing import (IndicatorCurve, ProbeSpec, Thresholds, check_spec, classify_point, fit_tail_slope,
                           free_space_candidates, probe_curve, select_candidates)

UP = (0.0, 0.0, 1.0)


@given(st.floats(-3, 1), st.floats(0.01, 100), st.integers(4, 30))
def test_tail_slope_of_exact_power_law(p, c, n):
    d = 0.25 / np.arange(1, n + 1)
    s, err = fit_tail_slope(d, c * d**p)
    assert abs(s - p) < 1e-9
    assert err < 1e-8


def test_tail_slope_uses_last_half_only():
    d = 0.25 / np.arange(1, 13)
    m = np.where(np.arange(12) < 6, 1e6, d**-1.0)
    assert abs(fit_tail_slope(d, m)[0] + 1) < 1e-12


def test_spec_distances():
    s = ProbeSpec(UP, UP, 0.25, 12)
    assert np.all(np.diff(s.distances) < 0)
    assert s.distances[0] == 0.25 and s.distances[-1] == pytest.approx(0.25 / 12)
    g = ProbeSpec(UP, UP, 0.25, 6, sequence="geometric")
    assert np.allclose(g.distances, 0.25 * 2.0 ** -np.arange(1, 7))


@pytest.mark.parametrize("kw", [dict(normal=(0, 0, 2.0)), dict(h=0.0), dict(n_max=1), dict(source_kind="x"),
                                dict(access_mode="x"), dict(sequence="x")])
def test_spec_validation(kw):
    base = dict(x0=UP, normal=UP)
    base.update(kw)
    with pytest.raises(PreconditionError):
        ProbeSpec(**base)


def test_probe_points_must_be_exterior():
    with pytest.raises(PreconditionError):
        check_spec(soft_sphere(), ProbeSpec(UP, (0.0, 0.0, -1.0)))


def _curve(slope, kind, spec=None):
    spec = (spec or ProbeSpec(UP, UP)).with_kind(kind)
    return IndicatorCurve(spec, spec.distances, spec.distances**slope + 0j, slope, 0.0)


@pytest.mark.parametrize("phi,psi,label", [(-1.0, -2.0, "obstacle_boundary"), (0.0, -0.35, "medium_boundary"),
                                           (0.05, 0.02, "not_boundary"), (-0.5, -0.5, "indeterminate"),
                                           (np.nan, -2.0, "indeterminate")])
def test_classification_rules(phi, psi, label):
    assert classify_point(_curve(phi, "monopole"), _curve(psi, "dipole"), Thresholds()) == label


def test_classification_requires_matching_curves():
    other = ProbeSpec(UP, UP, 0.2)
    with pytest.raises(PreconditionError):
        classify_point(_curve(-1, "monopole"), _curve(-2, "dipole", other))


@pytest.fixture(scope="module")
def soft_curves():
    spec = ProbeSpec((0.0, 0.0, 1.0), UP)
    return probe_curve(soft_sphere(), spec), probe_curve(soft_sphere(), spec.with_kind("dipole"))


def test_soft_boundary_slopes(soft_curves):
    phi, psi = soft_curves
    assert abs(phi.slope + 1) <= 0.15
    assert abs(psi.slope + 2) <= 0.3
    assert np.all(np.isfinite(phi.magnitudes)) and np.all(np.isfinite(psi.magnitudes))
    assert classify_point(phi, psi) == "obstacle_boundary"


def test_soft_response_approaches_minus_source(soft_curves):
    from cscat.specialfn import fundamental_solution
    phi, _ = soft_curves
    x = phi.spec.points()[-1]
    # the image of the monopole: u_s(x_n) ~ -Phi(x_n, x_n*) with the mirror point across the tangent plane
    image = np.array([0.0, 0.0, 2.0 - x[2]])
    ratio = phi.values[-1] / -fundamental_solution(x, image, 1.0)
    assert abs(ratio - 1) < 0.1


def test_free_space_point_is_bounded():
    spec = ProbeSpec((0.0, 0.0, 1.5), UP)
    phi = probe_curve(soft_sphere(), spec)
    psi = probe_curve(soft_sphere(), spec.with_kind("dipole"))
    assert abs(phi.slope) <= 0.2 and abs(psi.slope) <= 0.2
    assert classify_point(phi, psi) == "not_boundary"


def test_medium_boundary_point():
    scene = medium_ball(0.3)
    spec = ProbeSpec((1.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    phi = probe_curve(scene, spec)
    psi = probe_curve(scene, spec.with_kind("dipole"))
    assert abs(phi.slope) <= 0.2
    assert psi.slope < -0.2
    assert classify_point(phi, psi) == "medium_boundary"


def test_candidate_selection_is_deterministic_and_skips_contacts():
    cloud = boundary_partition(composite_scene(detached=False), 600)
    a = select_candidates(cloud, 12, seed=3)
    b = select_candidates(cloud, 12, seed=3)
    assert np.array_equal(a.points, b.points)
    assert "contact" not in set(a.labels)
    fs = free_space_candidates(a, 0.5)
    assert set(fs.labels) == {"free_space"}
    assert np.allclose(fs.points - a.points, 0.5 * a.normals)
    with pytest.raises(PreconditionError):
        select_candidates(cloud, 10_000)
