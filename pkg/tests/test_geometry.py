import numpy as np
import pytest
from conftest import Z, composite_scene, medium_ball, soft_sphere
from hypothesis import given
from hypothesis import strategies as st
from oracles import reflect

from cscat.errors import ConfigurationError
from cscat.geometry import (Ball, ConstantContrast, GaussianContrast, HalfBall, MediumComponent, PlanarContact,
                            SceneC, SphericalCap, boundary_partition, contact_for_cap, orthonormal_frame,
                            reflect_point, scene_from_dict, validate_class_c)

finite = st.floats(-5, 5, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
unit = vec3.filter(lambda v: np.linalg.norm(v) > 1e-3).map(lambda v: v / np.linalg.norm(v))


def plane(p, n):
    return PlanarContact(np.asarray(p, float), np.asarray(n, float), np.asarray(p, float), 1.0)


def test_reflect_coordinate_plane():
    assert np.allclose(reflect_point(plane([0, 0, 0], Z), np.array([1.0, 2.0, 3.0])), [1, 2, -3], atol=0)


@given(vec3, unit, vec3)
def test_reflect_is_an_involution(p, n, x):
    c = plane(p, n)
    assert np.allclose(reflect_point(c, reflect_point(c, x)), x, atol=1e-12)
    assert np.allclose(reflect_point(c, x), reflect(x, p, n), atol=1e-12)


@given(vec3, unit, st.floats(-3, 3), st.floats(-3, 3))
def test_points_on_plane_are_fixed(p, n, a, b):
    t1, t2, _ = orthonormal_frame(n)
    x = p + a * t1 + b * t2
    assert np.allclose(reflect_point(plane(p, n), x), x, atol=1e-12)


@given(unit)
def test_orthonormal_frame(n):
    t1, t2, m = orthonormal_frame(n)
    F = np.column_stack([t1, t2, m])
    assert np.allclose(F.T @ F, np.eye(3), atol=1e-12)
    assert np.allclose(m, n, atol=1e-12)


def test_non_unit_normal_rejected():
    with pytest.raises(ConfigurationError):
        PlanarContact(np.zeros(3), np.array([0, 0, 2.0]), np.zeros(3), 1.0)


def test_composite_scene_passes_all_conditions():
    rep = validate_class_c(composite_scene(), samples_per_component=2000, voxels=48)
    assert rep.passed, rep.to_dict()
    assert set(rep.conditions) == {"i", "ii", "iii", "iv", "v", "vi"}


def test_overlapping_medium_fails_with_witness_in_overlap():
    ob = Ball([0, 0, 0], 1.0)
    scene = SceneC(ob, [MediumComponent(Ball([1.2, 0, 0], 0.5), ConstantContrast(0.1))])
    rep = validate_class_c(scene, samples_per_component=2000, voxels=32)
    failed = rep.failed()
    assert "ii" in failed or "iv" in failed
    key = "ii" if "ii" in failed else "iv"
    w = np.asarray(rep.conditions[key].witnesses[0])
    assert np.linalg.norm(w) <= 1.0 + 1e-6
    assert np.linalg.norm(w - [1.2, 0, 0]) <= 0.5 + 1e-6


def test_mirror_images_meeting_a_detached_component_fail_vi():
    # a tall cap (negative offset) whose mirror image reaches below the half-ball
    ob = HalfBall([0, 0, 0], 1.0, Z)
    cap = SphericalCap([0, 0, 0.8], 1.0, Z, -0.8)
    m = MediumComponent(cap, ConstantContrast(0.1), contact=contact_for_cap(ob, cap))
    lone = MediumComponent(Ball([0, 0, -1.6], 0.15), ConstantContrast(0.1))
    rep = validate_class_c(SceneC(ob, [m, lone]), samples_per_component=4000, voxels=32)
    assert "vi" in rep.failed()
    w = np.asarray(rep.conditions["vi"].witnesses[0])
    assert np.linalg.norm(w - [0, 0, -1.6]) <= 0.15 + 1e-9


def test_contrast_below_eps0_fails_iii():
    scene = SceneC(None, [MediumComponent(Ball([0, 0, 0], 1.0), ConstantContrast(1e-4), eps0=1e-3)])
    assert "iii" in validate_class_c(scene, samples_per_component=500, voxels=16).failed()


@given(st.floats(0.05, 1.0), st.floats(0.1, 2.0), st.integers(0, 2**31 - 1))
def test_gaussian_difference_quotients_bounded_by_lipschitz(amp, width, seed):
    c = GaussianContrast(0.1, amp, (0.0, 0.0, 0.0), width)
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 200, 3))
    q = np.abs(c(x) - c(y)) / np.linalg.norm(x - y, axis=1)
    assert q.max() <= c.lipschitz * (1 + 1e-9)


def test_partition_of_a_sphere_is_radial():
    cloud = boundary_partition(soft_sphere(), 300)
    assert set(cloud.labels) == {"obstacle_exterior"}
    r = np.linalg.norm(cloud.points, axis=1)
    assert np.allclose(r, 1.0, atol=1e-12)
    assert np.allclose(cloud.normals, cloud.points / r[:, None], atol=1e-10)


def test_partition_of_composite_scene():
    scene = composite_scene(detached=False)
    cloud = boundary_partition(scene, 800)
    contact = scene.media[0].contact
    cap = scene.media[0].shape
    lab = cloud.labels
    assert {"obstacle_exterior", "medium_exterior", "contact"} <= set(lab)
    c = cloud.points[lab == "contact"]
    assert np.allclose(c[:, 2], 0.0, atol=1e-12)
    assert np.all(np.hypot(c[:, 0], c[:, 1]) <= contact.radius + 1e-9)
    m = cloud.points[lab == "medium_exterior"]
    on_sphere = np.abs(np.linalg.norm(m - cap.center, axis=1) - cap.radius) < 1e-9
    assert np.all(on_sphere & (m[:, 2] >= -1e-12))
    # outward normals point away from the owner
    assert np.all(np.sum(cloud.normals[lab == "medium_exterior"] * (m - cap.center), axis=1) > 0)


def test_partition_of_detached_medium():
    cloud = boundary_partition(medium_ball(0.1), 200)
    assert set(cloud.labels) == {"medium_exterior"}


def test_shape_volumes_and_areas():
    cap = SphericalCap([0, 0, -0.5], 1.0, Z, 0.5)
    h = 0.5
    assert cap.volume == pytest.approx(np.pi * h * h * (3 - h) / 3, rel=1e-12)
    half = HalfBall([0, 0, 0], 1.0, Z)
    assert half.volume == pytest.approx(2 * np.pi / 3, rel=1e-12)
    assert Ball([0, 0, 0], 2.0).surface_area == pytest.approx(16 * np.pi, rel=1e-12)


def test_scene_dict_round_trip_with_auto_contact():
    d = {"obstacle": {"type": "half_ball", "center": [0, 0, 0], "radius": 1.0, "face_normal": [0, 0, 1]},
         "media": [{"shape": {"type": "cap", "center": [0, 0, -0.5], "radius": 1.0, "axis": [0, 0, 1],
                              "offset": 0.5}, "contrast": 0.1, "contact": "auto"}]}
    s = scene_from_dict(d)
    assert s.media[0].contact is not None
    s2 = scene_from_dict(s.to_dict())
    assert s2.to_dict() == s.to_dict()


def test_unsupported_shape_rejected():
    with pytest.raises(ConfigurationError):
        scene_from_dict({"obstacle": {"type": "torus"}})
