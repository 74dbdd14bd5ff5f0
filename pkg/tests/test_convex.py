import math

import numpy as np
import pytest

from minklab.bodies import ellipsoid_support
from minklab.convex import (
    AXES,
    BoxBody,
    DirectionalBound,
    bmf_gap,
    box_firey,
    box_h_convexity,
    example_boxes,
    firey_combination,
    grid_directions,
    mixed_volume_p,
    mixed_volume_p_limit_oracle,
    p_mean,
    polytope_volume,
    read_off,
    volume_from_support,
    wulff_shape,
    write_off,
)
from minklab.errors import DomainError, UnboundedBody
from minklab.sphere import build_grid


# ---------------------------------------------------------------- p-means


def test_half_mean_of_one_and_a_half():
    assert p_mean(1.0, 0.5, 0.5, 0.5) == pytest.approx(((1 + math.sqrt(0.5)) / 2) ** 2, abs=1e-15)
    assert p_mean(1.0, 0.5, 0.5, 0.5) == pytest.approx(0.7285533, abs=1e-7)


def test_geometric_mean():
    assert p_mean(1.0, 4.0, 0.5, 0) == pytest.approx(2.0, abs=1e-15)


@pytest.mark.parametrize("p", [-3.0, -1.0, 0.0, 0.5, 1.0, 2.0])
def test_endpoints_and_equal_arguments_are_exact(p):
    assert p_mean(1.3, 0.7, 0.0, p) == 1.3
    assert p_mean(1.3, 0.7, 1.0, p) == 0.7
    assert p_mean(0.9, 0.9, 0.37, p) == 0.9


def test_infinite_orders():
    assert p_mean(1.0, 3.0, 0.2, np.inf) == 3.0
    assert p_mean(1.0, 3.0, 0.2, -np.inf) == 1.0


def test_extreme_ratios_do_not_overflow():
    assert p_mean(1e-200, 1e200, 0.5, 4.0) == pytest.approx(1e200 * 0.5**0.25, rel=1e-12)
    assert p_mean(1e-200, 1e200, 0.5, -4.0) == pytest.approx(1e-200 * 0.5**-0.25, rel=1e-12)


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.5, 1.0), (-1.0, 1.0, 0.5, 1.0), (1.0, 1.0, 1.5, 1.0)])
def test_p_mean_domain(args):
    with pytest.raises(DomainError):
        p_mean(*args)


def test_p_mean_broadcasts():
    out = p_mean(np.array([1.0, 2.0]), 4.0, np.array([[0.5], [1.0]]), 0)
    assert out.shape == (2, 2)
    assert out[0, 0] == pytest.approx(2.0)
    assert np.all(out[1] == 4.0)


# ---------------------------------------------------------------- polytopes


def test_cube_from_axis_bounds():
    P = wulff_shape(DirectionalBound(AXES, np.ones(6)))
    P.check()
    assert polytope_volume(P) == pytest.approx(8.0, abs=1e-12)
    assert len(P.faces) == 6
    assert len(P.vertices) == 8


def test_tetrahedron_volume_matches_determinant_formula():
    n = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    P = wulff_shape(DirectionalBound(n, np.full(4, 0.5)))
    P.check()
    v = P.vertices
    exact = abs(np.linalg.det(v[1:] - v[0])) / 6
    assert len(v) == 4
    assert polytope_volume(P) == pytest.approx(exact, rel=1e-12)


def test_wulff_shape_of_ball_directions_approaches_ball_volume():
    g = build_grid(32, 64)
    P = wulff_shape(DirectionalBound(grid_directions(g), np.ones(g.size)))
    v = polytope_volume(P)
    assert v > 4 * np.pi / 3
    assert v == pytest.approx(4 * np.pi / 3, rel=1e-2)


def test_directions_in_a_half_space_are_unbounded():
    d = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=float)
    with pytest.raises(UnboundedBody):
        wulff_shape(DirectionalBound(d, np.ones(4)))


def test_bounds_must_be_positive():
    with pytest.raises(DomainError):
        DirectionalBound(AXES, np.array([1, 1, 1, 1, 1, 0.0]))


def test_off_round_trip(tmp_path):
    P = wulff_shape(DirectionalBound(AXES, np.arange(1.0, 7.0)))
    write_off(P, tmp_path / "box.off")
    verts, faces = read_off(tmp_path / "box.off")
    assert np.array_equal(verts, P.vertices)
    assert faces == P.faces


# ---------------------------------------------------------------- smooth bodies


def test_volume_of_ellipsoid_from_support():
    g = build_grid(64, 128)
    v = volume_from_support(ellipsoid_support(g, 1.3, 1.0, 0.8))
    assert v == pytest.approx(4 * np.pi / 3 * 1.3 * 0.8, rel=1e-6)


def test_mixed_volume_of_balls():
    g = build_grid(32, 64)
    for p in (0.5, 1.0, 2.0):
        # V_p(B_r, B_s) = s^p r^(3-p) V(B)
        v = mixed_volume_p(g.constant(2.0), g.constant(0.5), p)
        assert v == pytest.approx(0.5**p * 2.0 ** (3 - p) * 4 * np.pi / 3, rel=1e-10)


def test_mixed_volume_with_itself_is_volume():
    g = build_grid(32, 64)
    u = ellipsoid_support(g, 1.2, 1.0, 0.9)
    assert mixed_volume_p(u, u, 1.7) == pytest.approx(volume_from_support(u), rel=1e-14)


def test_mixed_volume_agrees_with_limit_quotient():
    g = build_grid(64, 128)
    uK = ellipsoid_support(g, 1.2, 1.0, 0.9)
    uL = ellipsoid_support(g, 0.8, 1.1, 1.0)
    for p in (0.5, 2.0):
        a = mixed_volume_p(uK, uL, p)
        b = mixed_volume_p_limit_oracle(uK, uL, p)
        assert abs(a - b) <= 1e-3 * abs(a)


# ---------------------------------------------------------------- Firey combinations of boxes


def test_firey_combination_of_a_body_with_itself():
    g = build_grid(16, 32)
    K = BoxBody(np.array([0.1, 0, 0]), np.array([1.0, 0.8, 0.6])).bound(grid_directions(g, with_axes=True))
    for p in (0.5, 1.0, 3.0):
        assert polytope_volume(firey_combination(K, K, 0.3, p)) == pytest.approx(
            polytope_volume(wulff_shape(K)), rel=1e-12
        )


def test_box_gap_at_one_half_is_negative():
    # M_0.5(1, 1.5, 1/2) = ((1 + sqrt 1.5)/2)^2 = 1.2373724; volume 4 (0.7285533 + 1.2373724)
    K, L = example_boxes(1.0, 0.5)
    expected = 4 * (((1 + math.sqrt(0.5)) / 2) ** 2 + ((1 + math.sqrt(1.5)) / 2) ** 2) - 8
    assert bmf_gap(K, L, 0.5, 0.5) == pytest.approx(expected, abs=1e-14)
    assert bmf_gap(K, L, 0.5, 0.5) == pytest.approx(-0.1362967, abs=1e-7)


def test_box_gap_at_two_is_positive():
    K, L = example_boxes(1.0, 0.5)
    expected = 4 * (math.sqrt(0.625) + math.sqrt(1.625)) - 8
    assert bmf_gap(K, L, 0.5, 2.0) == pytest.approx(expected, abs=1e-14)
    assert bmf_gap(K, L, 0.5, 2.0) == pytest.approx(0.2612972, abs=1e-7)


def test_box_formula_matches_wulff_shape_for_p_at_most_one():
    K, L = example_boxes(1.0, 0.5)
    dirs = grid_directions(build_grid(32, 64), with_axes=True)
    for p in (0.5, 1.0):
        box = box_firey(K, L, 0.5, p)
        w = polytope_volume(firey_combination(K.bound(dirs), L.bound(dirs), 0.5, p))
        assert w == pytest.approx(box.volume, abs=1e-10)


def test_box_formula_bounds_wulff_shape_for_p_above_one():
    K, L = example_boxes(1.0, 0.5)
    dirs = grid_directions(build_grid(32, 64), with_axes=True)
    w = polytope_volume(firey_combination(K.bound(dirs), L.bound(dirs), 0.5, 2.0))
    assert w < box_firey(K, L, 0.5, 2.0).volume


@pytest.mark.parametrize("p, convex", [(1.0, False), (0.5, True), (3.0, False)])
def test_h_convexity_pattern(p, convex):
    rep = box_h_convexity(1.0, 0.5, p)
    assert rep.endpoints_exact
    assert rep.sign_ok
    if convex:
        assert np.all(rep.second_diff > 0)
    else:
        assert np.all(rep.second_diff <= 1e-14)


def test_example_boxes_domain():
    with pytest.raises(DomainError):
        example_boxes(1.0, 1.0)
    with pytest.raises(DomainError):
        BoxBody(np.array([2.0, 0, 0]), np.ones(3))
