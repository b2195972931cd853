import dataclasses

import numpy as np
import pytest
from conftest import Z, medium_ball
from oracles import fd_laplacian, single_layer_sphere_center, volume_ball_center

from cscat.geometry import Ball, HalfBall, SphericalCap
from cscat.potentials import (apply_layer_potential, apply_volume_potential, assemble_layer_matrices,
                              boundary_trace, build_boundary_grid, build_volume_grid)

SHAPES = [Ball([0, 0, 0], 1.0), HalfBall([0, 0, 0], 1.0, Z), SphericalCap([0, 0, -0.5], 1.0, Z, 0.5)]


@pytest.mark.parametrize("shape", SHAPES, ids=lambda s: s.kind)
def test_boundary_weights_sum_to_area(shape):
    g = build_boundary_grid(shape, 2, 6)
    assert g.area == pytest.approx(shape.surface_area, rel=1e-2)
    assert np.allclose(np.linalg.norm(g.normals, axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("h", [0.1, 0.07])
def test_volume_weights_sum_to_volume(h):
    g = build_volume_grid(medium_ball(0.2), h)
    assert g.volume == pytest.approx(4 * np.pi / 3, rel=1e-2)
    assert np.all(np.abs(g.contrast_values) >= 1e-3)


def test_zero_density_gives_zero():
    g = build_boundary_grid(SHAPES[0], 2, 4)
    t = np.array([[0, 0, 3.0], [0.1, 0.2, 0.3]])
    for kind in ("SL", "DL"):
        assert np.all(apply_layer_potential(kind, g, np.zeros(g.n_nodes), t, 1.0) == 0)
    vg = build_volume_grid(medium_ball(0.1), 0.2)
    assert np.all(apply_volume_potential(vg, np.zeros(vg.n_cells), t, 1.0) == 0)


def test_single_layer_of_unit_density_at_sphere_centre():
    g = build_boundary_grid(SHAPES[0], 2, 6)
    k = 1e-6
    v = apply_layer_potential("SL", g, np.ones(g.n_nodes), np.zeros((1, 3)), k)[0]
    assert abs(v - 1.0) < 1e-3
    k = 1.7
    v = apply_layer_potential("SL", g, np.ones(g.n_nodes), np.zeros((1, 3)), k)[0]
    assert abs(v - single_layer_sphere_center(1.0, k)) < 1e-3


def test_single_layer_self_convergence():
    t = np.array([[0.3, -0.2, 0.5], [0, 0, 1.4]])

    def run(m):
        g = build_boundary_grid(SHAPES[0], m, 4)
        dens = np.cos(2 * g.nodes[:, 0]) * (1 + g.nodes[:, 2] ** 2)
        return apply_layer_potential("SL", g, dens, t, 1.0)

    a, b, c = run(1), run(2), run(4)
    assert np.abs(c - b).max() <= 0.5 * np.abs(b - a).max()


def test_gauss_double_layer_identity():
    g = build_boundary_grid(SHAPES[0], 2, 6)
    tr = boundary_trace("DL", g, np.ones(g.n_nodes), 1e-6)
    assert np.abs(tr).max() < 1e-2
    out = apply_layer_potential("DL", g, np.ones(g.n_nodes), np.array([[0, 0, 2.0]]), 1e-6)[0]
    inside = apply_layer_potential("DL", g, np.ones(g.n_nodes), np.array([[0, 0, 0.2]]), 1e-6)[0]
    assert abs(out) < 1e-3
    assert abs(abs(inside) - 1) < 1e-3


def test_single_layer_far_target_is_permutation_invariant(rng):
    g = build_boundary_grid(SHAPES[0], 2, 4)
    dens = rng.normal(size=g.n_nodes) + 1j * rng.normal(size=g.n_nodes)
    t = np.array([[0, 0, 4.0], [3.0, 1.0, -2.0]])
    p = rng.permutation(g.n_nodes)
    g2 = dataclasses.replace(g, nodes=g.nodes[p], normals=g.normals[p], weights=g.weights[p], jac=g.jac[p],
                             node_param=g.node_param[p], labels=g.labels[p])
    a = apply_layer_potential("SL", g, dens, t, 1.0)
    b = apply_layer_potential("SL", g2, dens[p], t, 1.0)
    assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_volume_potential_of_unit_ball_at_centre():
    k = 1e-3
    g = build_volume_grid(medium_ball(1.0 - 1e-12), 0.1)
    v = apply_volume_potential(g, np.ones(g.n_cells), np.zeros((1, 3)), k)[0]
    assert abs(v / (k * k * 0.5) - 1) < 1e-2
    k = 1.0
    v = apply_volume_potential(g, np.ones(g.n_cells), np.zeros((1, 3)), k)[0]
    assert abs(v - volume_ball_center(1.0, k)) < 1e-2 * abs(volume_ball_center(1.0, k))


def test_volume_potential_solves_inhomogeneous_helmholtz():
    k, c = 1.0, 0.3
    g = build_volume_grid(medium_ball(c), 0.1)
    f = lambda x: complex(apply_volume_potential(g, np.ones(g.n_cells), x[None], k)[0])  # noqa: E731
    for x in (np.array([0.1, 0.2, -0.1]), np.array([-0.3, 0.0, 0.35])):
        lhs = fd_laplacian(f, x, 0.05) + k * k * f(x)
        rhs = -k * k * c
        assert abs(lhs - rhs) < 0.05 * abs(rhs)


def test_volume_trace_is_continuous():
    from cscat.geometry import ConstantContrast, MediumComponent, SceneC
    scene = SceneC(Ball([0, 0, 0], 1.0), [MediumComponent(Ball([3, 0, 0], 0.8), ConstantContrast(0.2))])
    bg = build_boundary_grid(scene.obstacle, 1, 4)
    vg = build_volume_grid(scene, 0.2)
    field = np.exp(1j * vg.centers[:, 0])
    a = boundary_trace("V", bg, field, 1.0, vg)
    b = apply_volume_potential(vg, field, bg.nodes, 1.0)
    assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_layer_matrices_are_reused_by_trace():
    g = build_boundary_grid(SHAPES[0], 1, 4)
    m = assemble_layer_matrices(g, 1.0)
    d = np.ones(g.n_nodes)
    assert np.array_equal(boundary_trace("SL", g, d, 1.0, matrices=m), m.S @ d)
