"""Curvature of a convex body computed from its support function on S^2."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvex
from .sphere import (
    HessianField,
    ScalarField,
    SphereGrid,
    covariant_hessian,
    frame_to_cartesian,
    tangential_gradient,
)


@dataclass(frozen=True)
class CurvatureField:
    """Per-node radii matrix r and the curvatures derived from it.

    Principal curvatures are stored ordered, ``lam1 >= lam2``.
    """

    grid: SphereGrid
    r_tt: np.ndarray
    r_tp: np.ndarray
    r_pp: np.ndarray
    rho1: np.ndarray  # smaller radius of curvature
    rho2: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray

    @property
    def det_r(self) -> np.ndarray:
        return self.r_tt * self.r_pp - self.r_tp**2

    @property
    def H(self) -> np.ndarray:
        return self.lam1 + self.lam2

    @property
    def K(self) -> np.ndarray:
        return self.lam1 * self.lam2

    @property
    def pinching(self) -> np.ndarray:
        """kappa_2 / kappa_1 per node, in (0, 1]."""
        return self.lam2 / self.lam1

    def r_matrix(self) -> np.ndarray:
        return np.stack(
            [np.stack([self.r_tt, self.r_tp], -1), np.stack([self.r_tp, self.r_pp], -1)], -2
        )

    def h_matrix(self) -> np.ndarray:
        """Second fundamental form in the common frame, h = r^{-1}."""
        d = self.det_r
        return np.stack(
            [np.stack([self.r_pp / d, -self.r_tp / d], -1), np.stack([-self.r_tp / d, self.r_tt / d], -1)],
            -2,
        )


def radii_matrix(u: ScalarField, hess: HessianField | None = None):
    """Components (r_tt, r_tp, r_pp) of u_{;ij} + u delta_ij."""
    if hess is None:
        hess = covariant_hessian(u)
    return hess.tt + u.values, hess.tp, hess.pp + u.values


def sym_eigvals(a, b, c):
    """Eigenvalues (low, high) of [[a, b], [b, c]], stable near singularity."""
    m = 0.5 * (a + c)
    d = np.hypot(0.5 * (a - c), b)
    hi = m + d
    det = a * c - b * b
    # det/hi avoids cancellation in m - d when both eigenvalues are positive
    lo = np.where(hi > 0, det / np.where(hi > 0, hi, 1.0), m - d)
    return lo, hi


def curvatures_from_support(u: ScalarField, check: bool = True) -> CurvatureField:
    r_tt, r_tp, r_pp = radii_matrix(u)
    rho1, rho2 = sym_eigvals(r_tt, r_tp, r_pp)
    if check and not np.all(rho1 > 0):
        k = int(np.argmin(rho1))
        raise NonConvex(divmod(k, u.grid.n_phi), rho1.ravel()[k])
    with np.errstate(divide="ignore"):
        lam1 = 1.0 / rho1
        lam2 = 1.0 / rho2
    return CurvatureField(u.grid, r_tt, r_tp, r_pp, rho1, rho2, lam1, lam2)


def min_radius_ratio(u: ScalarField) -> float:
    """min over nodes of rho_min / rho_max (<= 0 means not convex)."""
    r_tt, r_tp, r_pp = radii_matrix(u)
    lo, hi = sym_eigvals(r_tt, r_tp, r_pp)
    return float(np.min(lo / np.abs(hi)))


def embed_surface(u: ScalarField) -> np.ndarray:
    """Boundary point with outer normal x: X(x) = u(x) x + grad u(x).  Shape (n_theta, n_phi, 3)."""
    curvatures_from_support(u)  # convexity guard
    return _embed(u)


def _embed(u: ScalarField) -> np.ndarray:
    g = u.grid
    return u.values[..., None] * g.nodes + frame_to_cartesian(g, tangential_gradient(u))


def _dt(grid: SphereGrid, f: np.ndarray) -> np.ndarray:
    """d/dtheta of a (possibly vector-valued) nodal array."""
    ops = grid.ops
    flat = f.reshape(grid.size, -1)
    return (ops.d_t @ flat).reshape(f.shape)


def _dp(grid: SphereGrid, f: np.ndarray) -> np.ndarray:
    ops = grid.ops
    flat = f.reshape(grid.size, -1)
    return (ops.d_p @ flat).reshape(f.shape)


@dataclass(frozen=True)
class SurfaceIdentityReport:
    gradient_defect: float  # max |grad_i u - h_il <grad_l X, X>|
    hessian_defect: float  # max |grad_j grad_i u - <grad h_ij, X> - h_ij + u h_il h_jl|
    gradient_defect_l2: float
    hessian_defect_l2: float


def verify_surface_identities(u: ScalarField) -> SurfaceIdentityReport:
    """Evaluate both sides of the surface identities

        grad_i u = h_il <grad_l X, X>
        grad_j grad_i u = <grad h_ij, X> + h_ij - u h_il h_jl

    on the embedded surface.  The left sides use derivatives of u alone; the
    right sides use the embedded points X and the second fundamental form, with
    surface derivatives obtained from the chain rule through the Gauss map
    (moving a unit step along e_l on the surface moves the normal by h_lk e_k).

    Tensors are stored in the frame (e_theta, e_phi) shared by S^2 and the
    surface (both have normal x).  Connection terms of the surface are never
    formed explicitly: tensors are pushed to ambient R^3 (contracted with the
    frame vectors), differentiated componentwise, then projected back.
    """
    g = u.grid
    c = curvatures_from_support(u)
    X = _embed(u)
    h = c.h_matrix()  # (.., 2, 2)
    E = np.stack([g.e_theta, g.e_phi], axis=-2)  # (.., 2, 3) frame rows
    s = g.sin_theta

    def sphere_deriv(f):
        """Frame derivatives on S^2 of a nodal array f (.., *) -> (.., 2, *)."""
        return np.stack([_dt(g, f), _dp(g, f) / s.reshape(s.shape + (1,) * (f.ndim - 2))], axis=2)

    # surface derivative along e_l is h_lk times the sphere derivative along e_k
    # ---- first identity -------------------------------------------------
    du = sphere_deriv(u.values)  # (.., 2)
    lhs1 = np.einsum("...lk,...k->...l", h, du)
    dX = np.einsum("...lk,...kz->...lz", h, sphere_deriv(X))  # (.., 2, 3): surface tangent vectors
    rhs1 = np.einsum("...il,...l->...i", h, np.einsum("...lz,...z->...l", dX, X))
    d1 = lhs1 - rhs1

    # ---- second identity ------------------------------------------------
    # surface gradient of u as an ambient tangent vector, then its ambient derivative
    grad_u_amb = np.einsum("...l,...lz->...z", lhs1, E)
    D_grad = np.einsum("...lk,...kz->...lz", h, sphere_deriv(grad_u_amb))  # (.., 2, 3)
    # covariant Hessian: tangential part of the ambient derivative
    hess_u = np.einsum("...jz,...iz->...ji", D_grad, E)
    # second fundamental form as ambient tensor h_amb = h_ij E_i (x) E_j
    h_amb = np.einsum("...ij,...iz,...jw->...zw", h, E, E)
    D_h = np.einsum("...lk,...kzw->...lzw", h, sphere_deriv(h_amb.reshape(h_amb.shape[:2] + (9,))).reshape(
        h_amb.shape[:2] + (2, 3, 3)))
    # project onto the tangent frame: (nabla_l h)_ij
    nab_h = np.einsum("...lzw,...iz,...jw->...lij", D_h, E, E)
    Xt = np.einsum("...lz,...z->...l", E, X)  # <e_l, X>
    rhs2 = np.einsum("...lij,...l->...ij", nab_h, Xt) + h - u.values[..., None, None] * np.einsum(
        "...il,...jl->...ij", h, h
    )
    d2 = hess_u - rhs2
    d1n = np.linalg.norm(d1, axis=-1)
    d2n = np.sqrt(np.sum(d2**2, axis=(-1, -2)))
    return SurfaceIdentityReport(
        gradient_defect=float(d1n.max()),
        hessian_defect=float(d2n.max()),
        gradient_defect_l2=float(np.sqrt(g.integrate(d1n**2) / (4 * np.pi))),
        hessian_defect_l2=float(np.sqrt(g.integrate(d2n**2) / (4 * np.pi))),
    )
