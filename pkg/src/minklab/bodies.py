"""Support functions of reference bodies and seeded perturbations of the sphere."""

from __future__ import annotations

import numpy as np

from .curvature import min_radius_ratio
from .sphere import ScalarField, SphereGrid


def ellipsoid_support(grid: SphereGrid, a: float, b: float, c: float) -> ScalarField:
    """u(x) = sqrt(a^2 x1^2 + b^2 x2^2 + c^2 x3^2)."""
    x = grid.nodes
    return ScalarField(grid, np.sqrt((a * x[..., 0]) ** 2 + (b * x[..., 1]) ** 2 + (c * x[..., 2]) ** 2))


def ellipsoid_gauss_curvature(x: np.ndarray, a: float, b: float, c: float) -> np.ndarray:
    """K at the boundary point with outer normal x: u^4 / (abc)^2."""
    u2 = (a * x[..., 0]) ** 2 + (b * x[..., 1]) ** 2 + (c * x[..., 2]) ** 2
    return u2**2 / (a * b * c) ** 2


def random_quadratic_harmonic(rng: np.random.Generator):
    """Random real function spanned by spherical harmonics of degree 1 and 2.

    Returned as (v, A) with ell(x) = <v, x> + x^T A x, A symmetric traceless,
    normalised so that max |ell| over S^2 is at most 1.
    """
    v = rng.standard_normal(3)
    A = rng.standard_normal((3, 3))
    A = 0.5 * (A + A.T)
    A -= np.trace(A) / 3.0 * np.eye(3)
    bound = np.linalg.norm(v) + np.max(np.abs(np.linalg.eigvalsh(A)))
    return v / bound, A / bound


def perturbed_sphere(
    grid: SphereGrid, eps: float, seed: int, degree: int = 2, min_ratio: float = 0.0
) -> ScalarField:
    """u0 = 1 + eps * (random combination of harmonics of degree <= ``degree``).

    The degree-0 part is fixed at 1.  If the result is not convex, or its
    radii ratio falls below ``min_ratio``, eps is halved until it is.
    """
    rng = np.random.default_rng(seed)
    v, A = random_quadratic_harmonic(rng)
    x = grid.nodes
    pert = x @ v
    if degree >= 2:
        pert = pert + np.einsum("...i,ij,...j->...", x, A, x)
    while True:
        u = ScalarField(grid, 1.0 + eps * pert)
        if min_radius_ratio(u) > min_ratio:
            return u
        eps *= 0.5
