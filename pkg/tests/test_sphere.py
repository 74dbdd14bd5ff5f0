import numpy as np
import pytest

from minklab.errors import ConfigurationError
from minklab.sphere import (
    ScalarField,
    build_grid,
    covariant_hessian,
    fejer_weights,
    frame_to_cartesian,
    tangential_gradient,
)

from conftest import ellipsoid_radii_oracle


def test_small_grid_weights_sum_to_sphere_area():
    g = build_grid(8, 16)
    assert g.size == 128
    assert abs(g.weights.sum() - 4 * np.pi) <= 1e-10


def test_first_node_sits_half_a_cell_from_the_pole():
    g = build_grid(64, 128)
    assert g.theta[0] == np.pi / 128
    assert g.phi[1] == 2 * np.pi / 128


def test_nodes_are_unit_vectors():
    g = build_grid(64, 128)
    assert np.max(np.abs(np.linalg.norm(g.nodes, axis=-1) - 1.0)) <= 1e-14


def test_x3_squared_integrates_to_a_third_of_the_area():
    g = build_grid(64, 128)
    assert abs(g.integrate(g.nodes[..., 2] ** 2) - 4 * np.pi / 3) <= 1e-6


@pytest.mark.parametrize("n", [8, 9, 16, 33])
def test_fejer_rule_is_exact_for_low_degree_polynomials(n):
    w = fejer_weights(n)
    z = np.cos((np.arange(n) + 0.5) * np.pi / n)
    for k in range(n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(w @ z**k - exact) <= 1e-13


@pytest.mark.parametrize("shape", [(7, 16), (8, 15), (8, 14), (8, 17)])
def test_bad_grid_sizes_are_rejected(shape):
    with pytest.raises(ConfigurationError):
        build_grid(*shape)


def test_field_shape_must_match_grid():
    g = build_grid(8, 16)
    with pytest.raises(ConfigurationError):
        ScalarField(g, np.ones((8, 15)))


def test_hessian_of_constant_is_exactly_zero(grid32):
    h = covariant_hessian(grid32.constant(2.5))
    for comp in (h.tt, h.tp, h.pp):
        assert np.all(comp == 0.0)


@pytest.mark.parametrize("v", [(0, 0, 1), (1, 0, 0), (0.3, -0.7, 0.2)])
def test_linear_functions_lie_in_the_kernel_of_the_radii_operator(v):
    errs = []
    for n in (32, 64):
        g = build_grid(n, 2 * n)
        u = g.sample(lambda x: x @ np.array(v, dtype=float))
        h = covariant_hessian(u)
        errs.append(max(np.max(np.abs(h.tt + u.values)), np.max(np.abs(h.tp)), np.max(np.abs(h.pp + u.values))))
    assert errs[1] < 1e-5
    # the pole rows limit the observed order to about 3
    assert errs[0] / errs[1] > 6


def test_hessian_of_ellipsoid_matches_homogeneous_extension_oracle():
    errs = []
    for n in (32, 64):
        g = build_grid(n, 2 * n)
        r, U = ellipsoid_radii_oracle(g, 2.0, 1.0, 0.5)
        h = covariant_hessian(ScalarField(g, U))
        exact = r - U[..., None, None] * np.eye(2)
        errs.append(np.max(np.abs(h.matrix() - exact)) / np.max(np.abs(r)))
    assert errs[1] < 3e-3
    assert errs[0] / errs[1] > 8


def test_hessian_is_symmetric_by_storage(grid32):
    u = grid32.sample(lambda x: 1 + 0.1 * x[..., 0] * x[..., 2])
    m = covariant_hessian(u).matrix()
    assert np.array_equal(m[..., 0, 1], m[..., 1, 0])


def test_gradient_of_x3_is_minus_sin_theta_e_theta(grid64):
    u = grid64.sample(lambda x: x[..., 2])
    gr = frame_to_cartesian(grid64, tangential_gradient(u))
    exact = grid64.nodes * 0 + np.array([0, 0, 1.0]) - grid64.nodes[..., 2:3] * grid64.nodes
    assert np.max(np.abs(gr - exact)) < 1e-6


def test_integration_reduction_order_is_fixed(grid32):
    rng = np.random.default_rng(0)
    v = rng.standard_normal(grid32.shape)
    assert grid32.integrate(v) == grid32.integrate(v.copy())
