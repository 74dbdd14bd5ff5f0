import numpy as np
import pytest

from minklab.sphere import build_grid


def ellipsoid_radii_oracle(grid, a, b, c):
    """Exact radii matrix of the ellipsoid in the (e_theta, e_phi) frame.

    The support function extends to the 1-homogeneous U(y) = |A y|; for such
    U the radii matrix is the Euclidean Hessian D^2 U restricted to the
    tangent plane, D^2 U = (A^2 - (A^2 x)(A^2 x)^T / U^2) / U.
    """
    A2 = np.diag([a * a, b * b, c * c])
    x = grid.nodes
    U = np.sqrt(np.einsum("...i,ij,...j->...", x, A2, x))
    w = x @ A2
    D2 = (A2 - np.einsum("...i,...j->...ij", w, w) / U[..., None, None] ** 2) / U[..., None, None]
    E = np.stack([grid.e_theta, grid.e_phi], axis=-2)
    return np.einsum("...ai,...ij,...bj->...ab", E, D2, E), U


@pytest.fixture(scope="session")
def grid32():
    return build_grid(32, 64)


@pytest.fixture(scope="session")
def grid64():
    return build_grid(64, 128)
