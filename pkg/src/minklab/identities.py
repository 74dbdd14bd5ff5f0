"""Algebraic ingredients of the maximum-principle uniqueness argument.

Everything here works on principal-curvature samples (lam1 > lam2 > 0), an
exponent alpha of the auxiliary function Q = (lam1 - lam2)^2 K^alpha, and
q = 1 - p.  Functions accept scalars or equally shaped arrays, so a whole
random suite is evaluated in one vectorized call.

Defects are relative: |a - b| / max(|a|, |b|, largest summand, 1e-12).  The
summand scale keeps samples where a side nearly cancels from reporting
roundoff as a failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .curvature import CurvatureField
from .errors import DegenerateT, DomainError
from .sphere import ScalarField

ABS_FLOOR = 1e-12


def rel_defect(a, b, *terms) -> np.ndarray:
    """Elementwise |a - b| relative to the largest magnitude involved."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(a), np.abs(b))
    for t in terms:
        scale = np.maximum(scale, np.abs(t))
    return np.abs(a - b) / np.maximum(scale, ABS_FLOOR)


def _max(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.max(x)) if x.size else 0.0


# --------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class IdentitySample:
    """Principal curvatures lam1 > lam2 > 0 with exponents alpha and q.

    Fields may be scalars or arrays of a common shape.  The optional gradient
    slots hold (grad_1 h_11, grad_2 h_22, grad_m h_12) where used.
    """

    lam1: np.ndarray
    lam2: np.ndarray
    alpha: np.ndarray
    q: np.ndarray
    grad_h11: np.ndarray | None = None
    grad_h22: np.ndarray | None = None
    grad_h12: np.ndarray | None = None

    def __post_init__(self):
        for name in ("lam1", "lam2", "alpha", "q"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (np.all(self.lam2 > 0) and np.all(self.lam1 > self.lam2)):
            raise DomainError("samples need lam1 > lam2 > 0")

    @property
    def H(self) -> np.ndarray:
        return self.lam1 + self.lam2

    @property
    def K(self) -> np.ndarray:
        return self.lam1 * self.lam2

    @property
    def size(self) -> int:
        return int(self.lam1.size)


def random_samples(n: int, seed: int, alpha_range=(-3.0, 3.0), q_range=(0.0, 2.0)) -> IdentitySample:
    """lam2 ~ logUniform[0.1, 10], lam1/lam2 ~ logUniform(1, 100], alpha and q uniform.

    q is drawn from (q_min, q_max] so that q = 0 never occurs.
    """
    rng = np.random.default_rng(seed)
    lam2 = np.exp(rng.uniform(np.log(0.1), np.log(10.0), n))
    # 1 - U lies in (0, 1], which puts the ratio in (1, 100]
    ratio = np.exp((1.0 - rng.uniform(0.0, 1.0, n)) * np.log(100.0))
    alpha = rng.uniform(*alpha_range, n)
    q = q_range[1] - rng.uniform(0.0, 1.0, n) * (q_range[1] - q_range[0])
    return IdentitySample(lam2 * ratio, lam2, alpha, q)


# --------------------------------------------------------------------------
# t-ratio and its identities


def _t_parts(s: IdentitySample):
    d = s.lam1 - s.lam2
    D1 = 2.0 * s.K - s.alpha * s.lam1 * d
    D2 = 2.0 * s.K + s.alpha * s.lam2 * d
    return d, D1, D2


@dataclass(frozen=True)
class TRatio:
    t: np.ndarray
    positive: np.ndarray  # t > 0
    case1_condition: np.ndarray  # (2 + alpha) K - alpha lam_i^2 > 0 for both i
    case3_condition: np.ndarray  # lam2 / lam1 > beta_t(q)


def t_ratio(s: IdentitySample) -> TRatio:
    """t = (2K - alpha lam1 (lam1 - lam2)) / (2K + alpha lam2 (lam1 - lam2)).

    Raises DegenerateT if either the numerator or the denominator vanishes,
    since the identities also divide by the numerator.
    """
    _, D1, D2 = _t_parts(s)
    if np.any(D2 == 0) or np.any(D1 == 0):
        raise DegenerateT("2K + alpha lam2 (lam1 - lam2) or 2K - alpha lam1 (lam1 - lam2) vanishes")
    t = D1 / D2
    a, K = s.alpha, s.K
    c1 = ((2 + a) * K - a * s.lam1**2 > 0) & ((2 + a) * K - a * s.lam2**2 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        bt = np.where((s.q > 0) & (s.q < 1), (1.0 - s.q) / (1.0 + s.q), np.nan)
    c3 = s.lam2 / s.lam1 > bt
    return TRatio(t, t > 0, c1, c3)


def t_identity_defects(s: IdentitySample) -> dict[str, np.ndarray]:
    """Per-sample relative defects of the six closed forms for powers of t."""
    t = t_ratio(s).t
    d, D1, D2 = _t_parts(s)
    a, H, K, l1, l2 = s.alpha, s.H, s.K, s.lam1, s.lam2
    it = 1.0 / t
    e = 4.0 * K - a * d**2
    out = {}
    out["inv_t_minus_inv_t2"] = rel_defect(it - it * it, -a * d * H * D2 / D1**2, it, it * it)
    out["lam2_plus_lam1_over_t_sq"] = rel_defect((l2 + l1 * it) ** 2, 4 * K**2 * H**2 / D1**2)
    out["one_plus_inv_t_sq"] = rel_defect((1.0 + it) ** 2, e**2 / D1**2)
    out["t_minus_t2"] = rel_defect(t - t * t, a * d * H * D1 / D2**2, t, t * t)
    out["lam2_t_plus_lam1_sq"] = rel_defect((l2 * t + l1) ** 2, 4 * K**2 * H**2 / D2**2)
    out["one_plus_t_sq"] = rel_defect((1.0 + t) ** 2, e**2 / D2**2)
    return out


def verify_t_identities(s: IdentitySample) -> float:
    """Max relative defect over all six t-identities and all samples."""
    return max(_max(v) for v in t_identity_defects(s).values())


# --------------------------------------------------------------------------
# B1, B2


def B1(lam1, lam2, alpha, q):
    """Compact form 16(1+a)^2 K^2 + H^2 [a(a - 2/q) H^2 + 4(1+a-1/q) lam1^2 - 4(1+2a)(1+a-1/q) K]."""
    H = lam1 + lam2
    K = lam1 * lam2
    c = 1.0 + alpha - 1.0 / q
    return 16.0 * (1.0 + alpha) ** 2 * K**2 + H**2 * (
        alpha * (alpha - 2.0 / q) * H**2 + 4.0 * c * lam1**2 - 4.0 * (1.0 + 2.0 * alpha) * c * K
    )


def B2(lam1, lam2, alpha, q):
    """Same as B1 with lam2^2 in place of lam1^2."""
    H = lam1 + lam2
    K = lam1 * lam2
    c = 1.0 + alpha - 1.0 / q
    return 16.0 * (1.0 + alpha) ** 2 * K**2 + H**2 * (
        alpha * (alpha - 2.0 / q) * H**2 + 4.0 * c * lam2**2 - 4.0 * (1.0 + 2.0 * alpha) * c * K
    )


def _B1_long_terms(lam1, lam2, alpha, q):
    """Summands of the unsimplified curly bracket defining B1."""
    H = lam1 + lam2
    K = lam1 * lam2
    a = alpha
    w = 1.0 - 1.0 / q
    return (
        2 * a * H**2 * (2 * lam1**2 - 2 * K + a * H**2 - 4 * a * K),
        4 * H**3 * w * lam1,
        -8 * w * K * H**2,
        -2 * (a / q + a * a) * H**2 * (H**2 - 4 * K),
        (4 * (1 + a) * K - a * H**2) ** 2,
    )


def _B1_compact_terms(lam1, lam2, alpha, q):
    H = lam1 + lam2
    K = lam1 * lam2
    c = 1.0 + alpha - 1.0 / q
    return (
        16.0 * (1.0 + alpha) ** 2 * K**2,
        H**2 * alpha * (alpha - 2.0 / q) * H**2,
        H**2 * 4.0 * c * lam1**2,
        H**2 * 4.0 * (1.0 + 2.0 * alpha) * c * K,
    )


def _L1_t_form(s: IdentitySample):
    """L1 written with t, before t is eliminated; returns (value, summands)."""
    t = t_ratio(s).t
    H, K, l1, l2, a, q = s.H, s.K, s.lam1, s.lam2, s.alpha, s.q
    w = 1.0 - 1.0 / q
    disc = H**2 - 4 * K
    it = 1.0 / t
    terms = (
        -4 * H / disc * (it - it * it),
        2 * H / disc * w * (l2 + l1 * it) ** 2 / K,
        (-4 * K / disc * w - a * a - a / q) * l2 * (l2 + l1 * it) ** 2 / K**2,
        2 * l2 * (1 + it) ** 2 / disc,
    )
    return sum(terms), terms


def _L2_t_form(s: IdentitySample):
    t = t_ratio(s).t
    H, K, l1, l2, a, q = s.H, s.K, s.lam1, s.lam2, s.alpha, s.q
    w = 1.0 - 1.0 / q
    disc = H**2 - 4 * K
    terms = (
        -4 * H / disc * (t - t * t),
        2 * H / disc * w * (t * l2 + l1) ** 2 / K,
        (-4 * K / disc * w - a * a - a / q) * l1 * (l2 * t + l1) ** 2 / K**2,
        2 * l1 * (t + 1) ** 2 / disc,
    )
    return sum(terms), terms


def B_expansion_defects(s: IdentitySample) -> dict[str, np.ndarray]:
    """Per-sample defects of the B1/B2 simplification chain.

    ``long_vs_compact``: the unsimplified bracket against the compact B1.
    ``L1_route`` / ``L2_route``: L_i evaluated through t against
    2 lam_2 B1 / ((H^2 - 4K) D1^2) and 2 lam_1 B2 / ((H^2 - 4K) D2^2).
    ``swap``: B1(lam1, lam2) - B2(lam2, lam1), exact by construction.
    """
    if np.any(s.q == 0):
        raise DomainError("q must be nonzero")
    l1, l2, a, q = s.lam1, s.lam2, s.alpha, s.q
    long_terms = _B1_long_terms(l1, l2, a, q)
    b1 = B1(l1, l2, a, q)
    b2 = B2(l1, l2, a, q)
    out = {"long_vs_compact": rel_defect(sum(long_terms), b1, *long_terms, *_B1_compact_terms(l1, l2, a, q))}
    _, D1, D2 = _t_parts(s)
    disc = s.H**2 - 4 * s.K
    L1, t1 = _L1_t_form(s)
    out["L1_route"] = rel_defect(L1, 2 * l2 * b1 / (disc * D1**2), *t1)
    L2, t2 = _L2_t_form(s)
    out["L2_route"] = rel_defect(L2, 2 * l1 * b2 / (disc * D2**2), *t2)
    out["swap"] = np.abs(b1 - B2(l2, l1, a, q))
    return out


def verify_B_expansion(s: IdentitySample) -> float:
    """Max relative defect between the long and compact forms of B1 (and the L routes)."""
    return max(_max(v) for v in B_expansion_defects(s).values())


# --------------------------------------------------------------------------
# derivatives of det on 2x2 symmetric matrices


def _sym(entries) -> np.ndarray:
    """(..., 3) entries (a11, a12, a22) -> (..., 2, 2) symmetric matrices."""
    e = np.asarray(entries, dtype=float)
    return np.stack([np.stack([e[..., 0], e[..., 1]], -1), np.stack([e[..., 1], e[..., 2]], -1)], -2)


def _det2(m):
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


@dataclass(frozen=True)
class DetDerivativeReport:
    second_defect: np.ndarray  # FD second variation vs 2 det(dh), summed over m
    first_defect: np.ndarray  # FD first variation vs lam2 dh11 + lam1 dh22
    closed_second: np.ndarray

    @property
    def max_defect(self) -> float:
        return max(_max(self.second_defect), _max(self.first_defect))


def verify_det_second_derivative(h, g) -> DetDerivativeReport:
    """Check F^{ij,rs} grad_m h_ij grad_m h_rs = 2 sum_m (grad_m h11 grad_m h22 - (grad_m h12)^2)
    and grad_m K = lam2 grad_m h11 + lam1 grad_m h22 for diagonal h.

    ``h`` has shape (..., 2, 2) and must be diagonal; ``g`` has shape
    (..., k, 3) holding (grad_m h11, grad_m h12, grad_m h22) for m = 1..k.
    The oracle is the central difference of eps -> det(h + eps dh).  det is
    quadratic in eps, so the differences are exact up to roundoff; eps is
    scaled so that eps |dh| ~ |h| to keep roundoff relative.
    """
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(h[..., 0, 1] != 0) or np.any(h[..., 1, 0] != 0):
        raise DomainError("h must be diagonal (principal frame)")
    lam1, lam2 = h[..., 0, 0], h[..., 1, 1]
    dh = _sym(g)  # (..., k, 2, 2)
    hk = h[..., None, :, :]
    nh = np.linalg.norm(h, axis=(-2, -1))[..., None]
    nd = np.linalg.norm(dh, axis=(-2, -1))
    eps = np.where(nd > 0, nh / np.where(nd > 0, nd, 1.0), 1.0)
    e = eps[..., None, None]
    dp, d0, dm = _det2(hk + e * dh), _det2(hk), _det2(hk - e * dh)
    fd2 = ((dp - d0) + (dm - d0)) / eps**2
    fd1 = (dp - dm) / (2.0 * eps)
    a11, a12, a22 = g[..., 0], g[..., 1], g[..., 2]
    closed2 = 2.0 * (a11 * a22 - a12 * a12)
    closed1 = lam2[..., None] * a11 + lam1[..., None] * a22
    term_scale = np.sum(np.abs(2 * a11 * a22) + 2 * a12 * a12, axis=-1)
    d2 = rel_defect(fd2.sum(-1), closed2.sum(-1), term_scale)
    d1 = rel_defect(fd1, closed1, lam2[..., None] * a11, lam1[..., None] * a22)
    return DetDerivativeReport(d2, d1, closed2.sum(-1))


def random_det_samples(n: int, seed: int, k: int = 2):
    """Diagonal h with the suite's curvature distribution and normal gradients."""
    s = random_samples(n, seed)
    rng = np.random.default_rng(seed + 1)
    h = np.zeros((n, 2, 2))
    h[:, 0, 0] = s.lam1
    h[:, 1, 1] = s.lam2
    return h, rng.standard_normal((n, k, 3))


# --------------------------------------------------------------------------
# the three cases


@dataclass(frozen=True)
class Case1Report:
    q: float
    alpha: float
    first_condition: float  # 2 - 2q - alpha q, should be 0
    second_condition: float  # 2q(1+alpha), should equal 2(2-q) > 0
    lam1_coefficient: float  # direct form, should be 0
    lam1_coefficient_factored: float
    lam2_coefficient: float  # should equal -2 alpha >= 0
    K_coefficient: float  # should equal -2 alpha (2 alpha + 3) >= 0
    defects: dict = field(default_factory=dict)
    min_B: float = float("nan")  # min over samples of min(B1, B2) / H^4
    boundary: bool = False  # q = 2: second condition degenerates

    @property
    def max_defect(self) -> float:
        return max(self.defects.values()) if self.defects else 0.0

    @property
    def signs_ok(self) -> bool:
        return self.lam2_coefficient >= 0 and self.K_coefficient >= 0 and self.min_B >= 0

    @property
    def passed(self) -> bool:
        return self.max_defect <= 1e-8 and self.signs_ok and (self.boundary or self.second_condition > 0)


def case1_coefficients(q: float, n_samples: int = 1000, seed: int = 0) -> Case1Report:
    """Coefficient identities for alpha = 2/q - 2, 1 <= q <= 2 (q = 2 flagged as boundary)."""
    if not 1.0 <= q <= 2.0:
        raise DomainError("case I needs 1 <= q < 2 (q = 2 is reported as the boundary)")
    a = 2.0 / q - 2.0
    c1 = 4 * (1 + a - 1 / q) + a * (a - 2 / q)
    c1f = -(a + 2) / q * (2 - 2 * q - a * q)
    c2 = a * (a - 2 / q)
    cK = 2 * (a * a - 2 * a / q) - 4 * (1 - 1 / q) - 8 * a * a - 12 * a + 8 * a / q
    first = 2 - 2 * q - a * q
    second = 2 * q * (1 + a)
    defects = {
        "first_condition": abs(first),
        "second_condition": float(rel_defect(second, 2 * (2 - q), 2 * q, 2 * q * a)),
        "lam1_coefficient": abs(c1) / max(4 * (1 + abs(a) + 1 / q), ABS_FLOOR),
        "lam1_coefficient_factored": abs(c1f),
        "lam2_coefficient": float(rel_defect(c2, -2 * a, a * a, 2 * a / q)),
        "K_coefficient": float(rel_defect(cK, -2 * a * (2 * a + 3), 8 * a * a, 12 * a, 8 * a / q, 4)),
    }
    s = random_samples(n_samples, seed)
    s = IdentitySample(s.lam1, s.lam2, np.full(s.size, a), np.full(s.size, q))
    # B1 with the vanishing lam1^2 coefficient dropped, against the full compact form
    H, K = s.H, s.K
    b_reduced = 16 * (1 + a) ** 2 * K**2 + H**2 * (c2 * s.lam2**2 + cK * K)
    b1 = B1(s.lam1, s.lam2, a, q)
    defects["B1_reduced"] = _max(rel_defect(b1, b_reduced, *_B1_compact_terms(s.lam1, s.lam2, a, q)))
    min_B = float(np.min(np.minimum(b1, B2(s.lam1, s.lam2, a, q)) / H**4))
    return Case1Report(q, a, first, second, c1, c1f, c2, cK, defects, min_B, boundary=(q == 2.0))


def pinching_h(beta, q):
    """h(beta) = 16 beta^2 - tau^2 (1 + beta)^4 with tau^2 = 1 - q^2."""
    beta = np.asarray(beta, dtype=float)
    return 16.0 * beta**2 - (1.0 - q * q) * (1.0 + beta) ** 4


def beta_closed_form(q):
    """beta(q) = 2 (1 - sqrt(1 - tau)) / tau - 1, evaluated without cancellation.

    With s = sqrt(1 - tau) this equals tau / (1 + s)^2.
    """
    q = np.asarray(q, dtype=float)
    tau = np.sqrt((1.0 - q) * (1.0 + q))
    s = np.sqrt(1.0 - tau)
    return tau / (1.0 + s) ** 2


def beta_bisection(q: float, xtol: float = 1e-15) -> float:
    """Independent oracle: the unique root of h on (0, 1) by bisection."""
    return float(optimize.bisect(pinching_h, 0.0, 1.0, args=(q,), xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))


def beta_threshold(q: float) -> float:
    """beta_t(q) = (1 - q) / (1 + q), below which t is not well defined in case III."""
    if not 0.0 < q < 1.0:
        raise DomainError("beta_t needs 0 < q < 1")
    return (1.0 - q) / (1.0 + q)


@dataclass(frozen=True)
class PinchingParams:
    p: float
    q: float
    tau: float
    beta: float
    beta_t: float
    alpha_flow: float  # exponent of the powered Gauss curvature flow, 1/q
    C: float  # beta / (1 + beta)
    h_at_beta: float


def pinching_beta(p: float) -> PinchingParams:
    """Pinching constant for 0 < p < 1 together with its derived quantities."""
    if not 0.0 < p < 1.0:
        raise DomainError("pinching constant needs 0 < p < 1")
    return _pinching_params(p, 1.0 - p)


def _pinching_params(p: float, q: float) -> PinchingParams:
    beta = float(beta_closed_form(q))
    hb = float(pinching_h(beta, q))
    if abs(hb) > 1e-12:
        raise DomainError(f"h(beta) = {hb:.3e} is not zero")
    return PinchingParams(
        p=p,
        q=q,
        tau=float(np.sqrt((1.0 - q) * (1.0 + q))),
        beta=beta,
        beta_t=beta_threshold(q),
        alpha_flow=1.0 / q,
        C=beta / (1.0 + beta),
        h_at_beta=hb,
    )


@dataclass(frozen=True)
class Case3Report:
    q: float
    alpha: float
    first_condition: float  # 2 - 2q - alpha q, should be 1 - q
    second_condition: float  # 2q(1 + alpha), should be 2
    beta: float
    beta_t: float
    defects: dict = field(default_factory=dict)
    sign_mismatches: int = 0  # beta-grid points where sign h(beta) != sign(beta - beta(q))
    t_positive_above_threshold: bool = True

    @property
    def max_defect(self) -> float:
        return max(self.defects.values()) if self.defects else 0.0

    @property
    def passed(self) -> bool:
        return (
            self.max_defect <= 1e-8
            and self.sign_mismatches == 0
            and self.t_positive_above_threshold
            and self.beta > self.beta_t
        )


def case3_reduction(q: float, n_samples: int = 1000, seed: int = 0, n_beta: int = 999) -> Case3Report:
    """Reduction of B1, B2 for alpha = 1/q - 1 and the sign of h on a beta grid."""
    if not 0.0 < q < 1.0:
        raise DomainError("case III needs 0 < q < 1")
    a = 1.0 / q - 1.0
    beta = float(beta_closed_form(q))
    bt = beta_threshold(q)
    first = 2 - 2 * q - a * q
    second = 2 * q * (1 + a)
    defects = {
        "first_condition": float(rel_defect(first, 1 - q, 2, 2 * q, a * q)),
        "second_condition": float(rel_defect(second, 2.0, 2 * q, 2 * q * a)),
    }
    s = random_samples(n_samples, seed)
    l1, l2 = s.lam1, s.lam2
    H, K = s.H, s.K
    red = 16 * K**2 / q**2 + (1 - 1 / q**2) * H**4
    red_terms = (16 * K**2 / q**2, H**4 / q**2, H**4)
    defects["B1_reduction"] = _max(rel_defect(B1(l1, l2, a, q), red, *red_terms, *_B1_compact_terms(l1, l2, a, q)))
    defects["B2_reduction"] = _max(rel_defect(B2(l1, l2, a, q), red, *red_terms, *_B1_compact_terms(l2, l1, a, q)))
    # pinched substitution lam2 = beta lam1: B = h(beta) lam1^4 / q^2
    bs = np.linspace(0.0, 1.0, n_beta + 2)[1:-1]
    lam1 = np.ones_like(bs)
    hb = pinching_h(bs, q)
    defects["h_substitution"] = _max(
        rel_defect(B1(lam1, bs * lam1, a, q) * q**2, hb, 16 * bs**2, (1 - q * q) * (1 + bs) ** 4)
    )
    # sign check away from the root, where roundoff could flip the sign
    away = np.abs(bs - beta) > 1e-9
    mism = int(np.sum(np.sign(hb[away]) != np.sign(bs[away] - beta)))
    above = bs > bt
    tr = t_ratio(IdentitySample(lam1[above], bs[above], np.full(above.sum(), a), np.full(above.sum(), q)))
    return Case3Report(q, a, first, second, beta, bt, defects, mism, bool(np.all(tr.t > 0)))


# --------------------------------------------------------------------------
# monitors on grid fields


def aux_Q(c: CurvatureField, alpha: float) -> ScalarField:
    """Q = (H^2 - 4K) K^alpha per node."""
    if np.any(c.K <= 0):
        raise DomainError("aux_Q needs K > 0 everywhere")
    return ScalarField(c.grid, (c.H**2 - 4.0 * c.K) * c.K**alpha)


def aux_Q_product_form(c: CurvatureField, alpha: float) -> ScalarField:
    """The same quantity written as (lam1 - lam2)^2 K^alpha."""
    return ScalarField(c.grid, (c.lam1 - c.lam2) ** 2 * c.K**alpha)


def max_node(field_: ScalarField) -> tuple[tuple[int, int], float]:
    k = int(np.argmax(field_.values))
    return divmod(k, field_.grid.n_phi), float(field_.values.ravel()[k])


def case2_G_monitor(u: ScalarField, c: CurvatureField | None = None):
    """G = H / u - 2 per node and its oscillation max G - min G."""
    from .curvature import curvatures_from_support

    if np.any(u.values <= 0):
        raise DomainError("G needs u > 0")
    if c is None:
        c = curvatures_from_support(u)
    G = u.with_values(c.H / u.values - 2.0)
    return G, float(G.values.max() - G.values.min())


@dataclass(frozen=True)
class StopoverReport:
    value: ScalarField  # (2 - 2q - alpha q) K H + 2q(1 + alpha) u^(q-1)
    B1: ScalarField
    B2: ScalarField

    @property
    def all_positive(self) -> bool:
        return bool(np.all(self.value.values > 0))

    @property
    def B_nonnegative(self) -> bool:
        return bool(np.all(self.B1.values >= 0) and np.all(self.B2.values >= 0))


def stopover_zeroth_order(c: CurvatureField, u: ScalarField, p: float, alpha: float) -> StopoverReport:
    """Gradient-free part of the stopover inequality and the signs of B1, B2 per node.

    A monitor only: the gradient terms are not reassembled on the grid.
    """
    q = 1.0 - p
    if q == 0:
        raise DomainError("q must be nonzero")
    if np.any(u.values <= 0):
        raise DomainError("u must be positive")
    val = (2 - 2 * q - alpha * q) * c.K * c.H + 2 * q * (1 + alpha) * u.values ** (q - 1)
    return StopoverReport(
        u.with_values(val),
        u.with_values(B1(c.lam1, c.lam2, alpha, q)),
        u.with_values(B2(c.lam1, c.lam2, alpha, q)),
    )


# --------------------------------------------------------------------------
# suites


def run_identity_suite(n_samples: int, seed: int) -> dict[str, float]:
    """Max defect per identity family over seeded random samples."""
    s = random_samples(n_samples, seed)
    out = {f"t:{k}": _max(v) for k, v in t_identity_defects(s).items()}
    out.update({f"B:{k}": _max(v) for k, v in B_expansion_defects(s).items()})
    h, g = random_det_samples(n_samples, seed)
    rep = verify_det_second_derivative(h, g)
    out["det:second_variation"] = _max(rep.second_defect)
    out["det:first_variation"] = _max(rep.first_defect)
    for q in np.linspace(1.0, 2.0, 11)[:-1]:
        out[f"case1:q={q:.2f}"] = case1_coefficients(float(q), n_samples // 10, seed).max_defect
    for q in np.linspace(0.1, 0.9, 9):
        out[f"case3:q={q:.2f}"] = case3_reduction(float(q), n_samples // 10, seed).max_defect
    return out


def pinching_table(q_min: float, q_max: float, steps: int) -> list[dict[str, float]]:
    """Rows (q, p, tau, beta, beta_t, C) on an evenly spaced q grid."""
    rows = []
    n = max(steps - 1, 1)
    for k in range(steps):
        # 15 significant digits drop the linspace roundoff, so 0.5 prints as 0.5
        q = float(f"{q_min + k * (q_max - q_min) / n:.15g}")
        if not 0.0 < q < 1.0:
            raise DomainError("pinching table needs 0 < q < 1")
        pp = _pinching_params(1.0 - q, q)
        rows.append({"q": pp.q, "p": pp.p, "tau": pp.tau, "beta": pp.beta, "beta_t": pp.beta_t, "C": pp.C})
    return rows
