"""Latitude-longitude discretization of S^2 and covariant derivatives on it.

Nodes are cell-centred in colatitude, so no node sits on a pole.  Stencils
that reach past a pole use the antipodal ghost rule

    u(-theta, phi) := u(theta, phi + pi),

which is why ``n_phi`` must be even.  All derivative operators are assembled
once per grid as sparse matrices acting on the row-major flattened field
(index ``i * n_phi + j``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError

# 4th-order centred stencils, offsets -2..2
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFFSETS = np.arange(-2, 3)


def fejer_weights(n: int) -> np.ndarray:
    """Fejer's first rule on the colatitude midpoints theta_i = (i+1/2)pi/n.

    Returns weights w_i with sum_i w_i g(cos theta_i) ~ int_{-1}^{1} g(z) dz,
    exact for polynomials of degree < n.  Asymptotically w_i ~ sin(theta_i) dtheta.
    """
    theta = (np.arange(n) + 0.5) * np.pi / n
    k = np.arange(1, n // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, k)) / (4.0 * k**2 - 1.0)
    return (2.0 / n) * (1.0 - 2.0 * s.sum(axis=1))


@dataclass(frozen=True, eq=False)
class SphereGrid:
    n_theta: int
    n_phi: int
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)  # (n_theta, n_phi, 3)
    weights: np.ndarray = field(repr=False)  # (n_theta, n_phi)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_phi)

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi

    @property
    def dtheta(self) -> float:
        return np.pi / self.n_theta

    @property
    def dphi(self) -> float:
        return 2.0 * np.pi / self.n_phi

    @property
    def h_min(self) -> float:
        """Smallest geodesic node spacing (the longitude spacing next to a pole)."""
        return min(self.dtheta, np.sin(self.theta[0]) * self.dphi)

    @cached_property
    def sin_theta(self) -> np.ndarray:
        return np.broadcast_to(np.sin(self.theta)[:, None], self.shape)

    @cached_property
    def cot_theta(self) -> np.ndarray:
        return np.broadcast_to((np.cos(self.theta) / np.sin(self.theta))[:, None], self.shape)

    @cached_property
    def e_theta(self) -> np.ndarray:
        t, f = np.meshgrid(self.theta, self.phi, indexing="ij")
        return np.stack([np.cos(t) * np.cos(f), np.cos(t) * np.sin(f), -np.sin(t)], axis=-1)

    @cached_property
    def e_phi(self) -> np.ndarray:
        t, f = np.meshgrid(self.theta, self.phi, indexing="ij")
        return np.stack([-np.sin(f), np.cos(f), np.zeros_like(t)], axis=-1)

    @property
    def ops(self) -> "DerivativeOps":
        return _derivative_ops(self.n_theta, self.n_phi)

    def integrate(self, values: np.ndarray) -> float:
        # fixed reduction order: rows first, then the column of row sums
        return float(np.sum(np.sum(np.asarray(values) * self.weights, axis=1)))

    def nearest_node(self, direction) -> tuple[int, int]:
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        k = int(np.argmax(self.nodes.reshape(-1, 3) @ d))
        return divmod(k, self.n_phi)

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        """Evaluate ``func`` on the node directions, shape (..., 3) -> (...)."""
        return ScalarField(self, np.asarray(func(self.nodes), dtype=float))

    def constant(self, c: float) -> "ScalarField":
        return ScalarField(self, np.full(self.shape, float(c)))


def build_grid(n_theta: int, n_phi: int) -> SphereGrid:
    return _build_grid(int(n_theta), int(n_phi))


@lru_cache(maxsize=16)
def _build_grid(n_theta: int, n_phi: int) -> SphereGrid:
    if n_theta < 8 or n_phi < 16 or n_phi % 2:
        raise ConfigurationError(
            f"grid needs n_theta >= 8 and even n_phi >= 16, got {n_theta}x{n_phi}"
        )
    theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    t, f = np.meshgrid(theta, phi, indexing="ij")
    nodes = np.stack([np.sin(t) * np.cos(f), np.sin(t) * np.sin(f), np.cos(t)], axis=-1)
    nodes /= np.linalg.norm(nodes, axis=-1, keepdims=True)
    weights = np.outer(fejer_weights(n_theta), np.full(n_phi, 2.0 * np.pi / n_phi))
    for a in (theta, phi, nodes, weights):
        a.setflags(write=False)
    return SphereGrid(n_theta, n_phi, theta, phi, nodes, weights)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ConfigurationError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, np.asarray(values, dtype=float).reshape(self.grid.shape))

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other))

    __rmul__ = __mul__
    __radd__ = __add__

    def integrate(self) -> float:
        return self.grid.integrate(self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def _vals(x):
    return x.values if isinstance(x, ScalarField) else x


@dataclass(frozen=True)
class HessianField:
    """Covariant Hessian in the frame (e_theta, e_phi); symmetric, 3 components."""

    grid: SphereGrid
    tt: np.ndarray
    tp: np.ndarray
    pp: np.ndarray

    def matrix(self) -> np.ndarray:
        """Per-node 2x2 matrices, shape (n_theta, n_phi, 2, 2)."""
        return np.stack([np.stack([self.tt, self.tp], -1), np.stack([self.tp, self.pp], -1)], -2)


@dataclass(frozen=True, eq=False)
class DerivativeOps:
    """Sparse 4th-order operators on a grid (acting on flattened fields)."""

    d_t: sp.csr_matrix
    d_tt: sp.csr_matrix
    d_p: sp.csr_matrix
    d_pp: sp.csr_matrix
    hess_tt: sp.csr_matrix
    hess_tp: sp.csr_matrix
    hess_pp: sp.csr_matrix


def _theta_operator(n_theta: int, n_phi: int, stencil: np.ndarray, scale: float) -> sp.csr_matrix:
    i, j = np.meshgrid(np.arange(n_theta), np.arange(n_phi), indexing="ij")
    i, j = i.ravel(), j.ravel()
    rows, cols, vals = [], [], []
    for off, c in zip(_OFFSETS, stencil):
        if c == 0.0:
            continue
        ii = i + off
        jj = j.copy()
        north = ii < 0
        south = ii >= n_theta
        ii = np.where(north, -ii - 1, ii)
        ii = np.where(south, 2 * n_theta - 1 - ii, ii)
        jj = np.where(north | south, (jj + n_phi // 2) % n_phi, jj)
        rows.append(i * n_phi + j)
        cols.append(ii * n_phi + jj)
        vals.append(np.full(i.size, c * scale))
    n = n_theta * n_phi
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def _phi_operator(n_theta: int, n_phi: int, stencil: np.ndarray, scale: float) -> sp.csr_matrix:
    i, j = np.meshgrid(np.arange(n_theta), np.arange(n_phi), indexing="ij")
    i, j = i.ravel(), j.ravel()
    rows, cols, vals = [], [], []
    for off, c in zip(_OFFSETS, stencil):
        if c == 0.0:
            continue
        rows.append(i * n_phi + j)
        cols.append(i * n_phi + (j + off) % n_phi)
        vals.append(np.full(i.size, c * scale))
    n = n_theta * n_phi
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


@lru_cache(maxsize=8)
def _derivative_ops(n_theta: int, n_phi: int) -> DerivativeOps:
    g = build_grid(n_theta, n_phi)
    ht, hp = g.dtheta, g.dphi
    d_t = _theta_operator(n_theta, n_phi, _D1, 1.0 / ht)
    d_tt = _theta_operator(n_theta, n_phi, _D2, 1.0 / ht**2)
    d_p = _phi_operator(n_theta, n_phi, _D1, 1.0 / hp)
    d_pp = _phi_operator(n_theta, n_phi, _D2, 1.0 / hp**2)
    inv_s = sp.diags(1.0 / g.sin_theta.ravel())
    cot = sp.diags(g.cot_theta.ravel())
    # d_t @ d_p is valid across the pole: d_p u obeys the same (even) ghost rule as u
    hess_tp = (inv_s @ (d_t @ d_p - cot @ d_p)).tocsr()
    hess_pp = (inv_s @ inv_s @ d_pp + cot @ d_t).tocsr()
    return DerivativeOps(d_t, d_tt, d_p, d_pp, d_tt, hess_tp, hess_pp)


def _deviation(u: ScalarField) -> np.ndarray:
    # the operators kill constants, so differentiate u - u[0, 0]: stencil
    # roundoff then vanishes exactly on constant fields
    x = u.flat
    return x - x[0]


def covariant_hessian(u: ScalarField) -> HessianField:
    """u_{;ij} in the orthonormal frame (e_theta, e_phi / sin theta normalised)."""
    g = u.grid
    ops = g.ops
    x = _deviation(u)
    return HessianField(
        g,
        (ops.hess_tt @ x).reshape(g.shape),
        (ops.hess_tp @ x).reshape(g.shape),
        (ops.hess_pp @ x).reshape(g.shape),
    )


def tangential_gradient(u: ScalarField) -> np.ndarray:
    """Frame components (u_theta, u_phi / sin theta), shape (n_theta, n_phi, 2)."""
    g = u.grid
    ops = g.ops
    x = _deviation(u)
    gt = (ops.d_t @ x).reshape(g.shape)
    gp = (ops.d_p @ x).reshape(g.shape) / g.sin_theta
    return np.stack([gt, gp], axis=-1)


def frame_to_cartesian(grid: SphereGrid, comps: np.ndarray) -> np.ndarray:
    """Map frame components (..., 2) to ambient vectors (..., 3)."""
    return comps[..., 0:1] * grid.e_theta + comps[..., 1:2] * grid.e_phi
