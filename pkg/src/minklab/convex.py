"""Convex-geometry algebra: p-means, Wulff shapes, Firey L_p-combinations, volumes.

p-means work in any dimension (they are scalar functions applied pointwise).
Polytopes live in R^3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from .curvature import curvatures_from_support
from .errors import DomainError, UnboundedBody
from .sphere import ScalarField, SphereGrid

AXES = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)


def p_mean(a, b, lam, p):
    """M_p(a, b, lam): ((1-lam) a^p + lam b^p)^(1/p), geometric mean at p=0,
    min / max at p = -inf / +inf.  Broadcasts over array arguments."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise DomainError("p-means need strictly positive arguments")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0) or np.any(lam > 1):
        raise DomainError("lambda must lie in [0, 1]")
    if p == np.inf:
        out = np.maximum(a, b)
    elif p == -np.inf:
        out = np.minimum(a, b)
    elif p == 0:
        out = np.exp((1 - lam) * np.log(a) + lam * np.log(b))
    else:
        out = _finite_p_mean(a, b, lam, p)
    # exact on the trivial cases, where rounding of (1-lam)+lam would leak
    out = np.where(a == b, a, out)
    out = np.where(lam == 0, a, np.where(lam == 1, b, out))
    return out if out.ndim else float(out)


def _finite_p_mean(a, b, lam, p):
    la, lb = np.log(a), np.log(b)
    spread = np.abs(p) * np.abs(la - lb)
    lam_b = np.broadcast_to(lam, np.broadcast(a, b, lam).shape)
    # |p| spread tiny: second-order expansion about the geometric mean
    mean = (1 - lam_b) * la + lam_b * lb
    small = mean + 0.5 * p * lam_b * (1 - lam_b) * (la - lb) ** 2
    # moderate: expm1/log1p keeps the sum from rounding to 1
    m = np.maximum(la, lb) if p > 0 else np.minimum(la, lb)
    with np.errstate(divide="ignore", over="ignore"):
        s = (1 - lam_b) * np.expm1(p * (la - m)) + lam_b * np.expm1(p * (lb - m))
        mid = m + np.log1p(s) / p
        # large: the direct sum has no cancellation (the largest term is O(1))
        w = np.log((1 - lam_b) * np.exp(p * (la - m)) + lam_b * np.exp(p * (lb - m)))
        big = m + w / p
    logm = np.where(spread < 1e-8, small, np.where(spread < 1.0, mid, big))
    return np.exp(logm)


# --------------------------------------------------------------------------
# bodies given by directional bounds


@dataclass(frozen=True)
class DirectionalBound:
    """Unit directions x_k with positive bounds g_k; the body is the
    intersection of the half-spaces <x_k, y> <= g_k."""

    directions: np.ndarray  # (m, 3)
    bounds: np.ndarray  # (m,)

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float).reshape(-1, 3)
        g = np.asarray(self.bounds, dtype=float).reshape(-1)
        if d.shape[0] != g.shape[0]:
            raise DomainError("directions and bounds differ in length")
        if not np.all(g > 0):
            raise DomainError("directional bounds must be strictly positive")
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "bounds", g)

    @classmethod
    def from_field(cls, u: ScalarField, extra_directions=None, support=None) -> "DirectionalBound":
        """Bounds sampled on the grid nodes, optionally augmented with extra
        directions evaluated by ``support`` (a callable on (m, 3) arrays)."""
        dirs = u.grid.nodes.reshape(-1, 3)
        vals = u.flat
        if extra_directions is not None:
            extra = np.asarray(extra_directions, dtype=float).reshape(-1, 3)
            dirs = np.vstack([dirs, extra])
            vals = np.concatenate([vals, support(extra)])
        return cls(dirs, vals)

    @classmethod
    def from_function(cls, directions, func) -> "DirectionalBound":
        d = np.asarray(directions, dtype=float).reshape(-1, 3)
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        return cls(d, func(d))


def grid_directions(grid: SphereGrid, with_axes: bool = False) -> np.ndarray:
    d = grid.nodes.reshape(-1, 3)
    return np.vstack([d, AXES]) if with_axes else d


@dataclass(frozen=True)
class Polytope:
    """Vertices and faces of a convex polytope containing the origin.

    ``faces[k]`` lists vertex indices counter-clockwise seen from outside;
    its plane is <normals[k], y> = offsets[k].
    """

    vertices: np.ndarray
    faces: list
    normals: np.ndarray
    offsets: np.ndarray

    def check(self, tol: float = 1e-9) -> None:
        slack = self.vertices @ self.normals.T - self.offsets[None, :]
        if slack.max() > tol * max(1.0, float(np.abs(self.offsets).max())):
            raise AssertionError(f"vertex outside a face plane by {slack.max():.3e}")
        if not np.all(self.offsets > 0):
            raise AssertionError("origin not interior")


def wulff_shape(g: DirectionalBound) -> Polytope:
    """Intersection of half-spaces via the polar dual: hull of x_k / g_k,
    each hull facet <n, y> = c gives the vertex n / c."""
    pts = g.directions / g.bounds[:, None]
    if pts.shape[0] < 4:
        raise UnboundedBody("need at least 4 directions")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise UnboundedBody(f"directions do not span R^3: {exc}") from None
    # qhull: normal . y + offset <= 0 inside; origin interior <=> offset < 0
    off = -hull.equations[:, 3]
    scale = np.abs(pts).max()
    if np.any(off <= 1e-12 * scale):
        raise UnboundedBody("directions do not positively span R^3")
    raw = hull.equations[:, :3] / off[:, None]

    # merge duplicate vertices coming from coplanar dual facets
    tol = 1e-10 * max(1.0, np.abs(raw).max())
    keys = np.round(raw / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    vertices = raw[first]

    active = np.unique(hull.simplices)
    incident = [[] for _ in range(pts.shape[0])]
    for f, simplex in enumerate(hull.simplices):
        for k in simplex:
            incident[k].append(inverse[f])
    faces, normals, offsets = [], [], []
    for k in active:
        idx = np.unique(incident[k])
        if idx.size < 3:
            continue
        n = g.directions[k]
        c = vertices[idx].mean(axis=0)
        e1 = vertices[idx[0]] - c
        e1 -= n * (e1 @ n)
        if np.linalg.norm(e1) == 0:
            continue
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        rel = vertices[idx] - c
        ang = np.arctan2(rel @ e2, rel @ e1)
        faces.append([int(v) for v in idx[np.argsort(ang)]])
        normals.append(n)
        offsets.append(g.bounds[k])
    return Polytope(vertices, faces, np.array(normals), np.array(offsets))


def polytope_volume(P: Polytope) -> float:
    """Fan decomposition from the origin into tetrahedra over triangulated faces."""
    total = 0.0
    V = P.vertices
    for face, n in zip(P.faces, P.normals):
        v0 = V[face[0]]
        a = V[face[1:-1]]
        b = V[face[2:]]
        dets = np.einsum("j,ij->i", v0, np.cross(a, b))
        total += float(np.sum(np.abs(dets)))
    return total / 6.0


def write_off(P: Polytope, path) -> None:
    lines = ["OFF", f"{len(P.vertices)} {len(P.faces)} 0"]
    lines += [" ".join(f"{c:.17g}" for c in v) for v in P.vertices]
    lines += [" ".join(str(k) for k in [len(f), *f]) for f in P.faces]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_off(path):
    """Vertices and faces of an OFF file (no normals are reconstructed)."""
    with open(path) as fh:
        tokens = [ln.split() for ln in fh if ln.strip() and not ln.startswith("#")]
    if tokens[0] != ["OFF"]:
        raise ValueError("missing OFF header")
    nv, nf = int(tokens[1][0]), int(tokens[1][1])
    verts = np.array([[float(x) for x in t] for t in tokens[2 : 2 + nv]])
    faces = [[int(x) for x in t[1:]] for t in tokens[2 + nv : 2 + nv + nf]]
    return verts, faces


# --------------------------------------------------------------------------
# smooth bodies


def volume_from_support(u: ScalarField) -> float:
    """V = (1/3) int u det(r) dx."""
    c = curvatures_from_support(u)
    return u.grid.integrate(u.values * c.det_r) / 3.0


def mixed_volume_p(uK: ScalarField, uL: ScalarField, p: float) -> float:
    """L_p mixed volume (1/3) int u_L^p u_K^(1-p) det(r_K) dx."""
    c = curvatures_from_support(uK)
    if np.any(uL.values <= 0):
        raise DomainError("u_L must be positive")
    integrand = uL.values**p * uK.values ** (1.0 - p) * c.det_r
    return uK.grid.integrate(integrand) / 3.0


def _limit_quotient(gK: np.ndarray, gL: np.ndarray, dirs: np.ndarray, p: float, eps: float, v0: float) -> float:
    bound = (gK**p + eps * gL**p) ** (1.0 / p)
    v = polytope_volume(wulff_shape(DirectionalBound(dirs, bound)))
    return (p / 3.0) * (v - v0) / eps


def mixed_volume_p_limit_oracle(uK, uL, p: float, eps: float = 1e-4, richardson: bool = True) -> float:
    """(p/3) [V(K +_p eps o L) - V(K)] / eps with volumes of Wulff polytopes on
    the grid directions; optionally two-step Richardson (eps, eps/2).

    ``uK``, ``uL`` are ScalarFields or DirectionalBounds on a common direction set.
    """
    if p == 0:
        raise DomainError("the limit quotient needs p != 0")
    if isinstance(uK, ScalarField):
        uK, uL = DirectionalBound.from_field(uK), DirectionalBound.from_field(uL)
    dirs, gK, gL = uK.directions, uK.bounds, uL.bounds
    v0 = polytope_volume(wulff_shape(uK))
    d1 = _limit_quotient(gK, gL, dirs, p, eps, v0)
    if not richardson:
        return d1
    d2 = _limit_quotient(gK, gL, dirs, p, eps / 2, v0)
    return 2.0 * d2 - d1


def firey_combination(uK: DirectionalBound, uL: DirectionalBound, lam: float, p: float) -> Polytope:
    if uK.directions.shape != uL.directions.shape or not np.allclose(uK.directions, uL.directions):
        raise DomainError("Firey combination needs a common direction set")
    return wulff_shape(DirectionalBound(uK.directions, p_mean(uK.bounds, uL.bounds, lam, p)))


# --------------------------------------------------------------------------
# axis-aligned boxes


@dataclass(frozen=True)
class BoxBody:
    center: np.ndarray
    half_widths: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        w = np.asarray(self.half_widths, dtype=float).reshape(3)
        if not np.all(w > 0):
            raise DomainError("half-widths must be positive")
        if not np.all(w > np.abs(c)):
            raise DomainError("box must contain the origin in its interior")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", w)

    @classmethod
    def from_face_distances(cls, plus, minus) -> "BoxBody":
        """Box {-minus_k <= y_k <= plus_k}."""
        plus, minus = np.asarray(plus, dtype=float), np.asarray(minus, dtype=float)
        return cls(0.5 * (plus - minus), 0.5 * (plus + minus))

    @property
    def plus(self) -> np.ndarray:
        return self.half_widths + self.center

    @property
    def minus(self) -> np.ndarray:
        return self.half_widths - self.center

    def support(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.center + np.abs(x) @ self.half_widths

    @property
    def volume(self) -> float:
        return float(8.0 * np.prod(self.half_widths))

    def bound(self, directions) -> DirectionalBound:
        return DirectionalBound.from_function(directions, self.support)


def box_firey(K: BoxBody, L: BoxBody, lam: float, p: float) -> BoxBody:
    """Box with face distances M_p of the two boxes' face distances.

    For p <= 1 this is exactly the Wulff shape of M_p(u_K, u_L, lam): the
    p-mean is then concave and 1-homogeneous, hence superadditive, so the
    bound dominates the box's support function and agrees with it on the
    axis directions.  For p > 1 the true combination has support function
    M_p(u_K, u_L, lam) and is contained in this box.
    """
    return BoxBody.from_face_distances(p_mean(K.plus, L.plus, lam, p), p_mean(K.minus, L.minus, lam, p))


def example_boxes(a: float, eps: float) -> tuple[BoxBody, BoxBody]:
    """The cube |y_i| <= a and its translate by eps along e_1."""
    if not 0 < eps < a:
        raise DomainError("need 0 < eps < a")
    return BoxBody(np.zeros(3), np.full(3, a)), BoxBody(np.array([eps, 0.0, 0.0]), np.full(3, a))


def bmf_gap(K, L, lam: float, p: float, directions=None) -> float:
    """V((1-lam) o K +_p lam o L) - V(K)^(1-lam) V(L)^lam.

    Two boxes use the closed form of :func:`box_firey`; anything else (or
    passing ``directions`` explicitly) goes through Wulff polytopes.
    """
    if isinstance(K, BoxBody) and isinstance(L, BoxBody) and directions is None:
        return box_firey(K, L, lam, p).volume - K.volume ** (1 - lam) * L.volume**lam
    if isinstance(K, BoxBody):
        gK, gL = K.bound(directions), L.bound(directions)
    else:
        gK, gL = K, L
    vK = polytope_volume(wulff_shape(gK))
    vL = polytope_volume(wulff_shape(gL))
    return polytope_volume(firey_combination(gK, gL, lam, p)) - vK ** (1 - lam) * vL**lam


@dataclass(frozen=True)
class HConvexityReport:
    lam: np.ndarray
    h: np.ndarray
    second_diff: np.ndarray
    endpoints_exact: bool
    sign_ok: bool


def box_h_convexity(a: float, eps: float, p: float, n: int = 101) -> HConvexityReport:
    """h(lam) = M_p(a, a-eps, lam) + M_p(a, a+eps, lam) on an n-point lam-grid.

    Expected: h(0) = h(1) = 2a; second differences <= 0 for p >= 1 and > 0 for p < 1.
    """
    if not 0 < eps < a:
        raise DomainError("need 0 < eps < a")
    lam = np.linspace(0.0, 1.0, n)
    h = p_mean(a, a - eps, lam, p) + p_mean(a, a + eps, lam, p)
    d2 = h[2:] - 2 * h[1:-1] + h[:-2]
    endpoints = bool(h[0] == 2 * a and h[-1] == 2 * a)
    if p >= 1:
        # p = 1 is affine in lam: differences are pure roundoff
        sign_ok = bool(np.all(d2 <= 64 * np.finfo(float).eps * a))
    else:
        sign_ok = bool(np.all(d2 > 0))
    return HConvexityReport(lam, h, d2, endpoints, sign_ok)
