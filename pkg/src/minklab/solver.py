"""Solvers for det(u_ij + u delta_ij) = f u^(p-1) on S^2.

Three modes share the same discrete operator (4th-order covariant Hessian on
the latitude-longitude grid):

``newton``
    exact discrete Newton with sparse LU and convexity-preserving backtracking.
``fixed_point``
    relaxation of u = (f / det r)^(1/q) preconditioned by the frozen
    linearization of that map (chord iteration).  ``precondition=False`` gives
    the bare relaxation, which only converges for the constant mode.
``flow``
    linearly implicit Euler steps of the volume-normalized powered Gauss
    curvature flow du/dt = -(K f)^(1/q) + c(t) (u - <s, x>), s the Steiner
    point, followed by the algebraic rescale that turns a homothetic
    solution into a solution of the equation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .curvature import curvatures_from_support, min_radius_ratio, radii_matrix
from .errors import ConfigurationError, LinearSolveFailure, NonConvex, StepFailure
from .sphere import ScalarField

MODES = ("fixed_point", "flow", "newton")
MAX_HALVINGS = 30
DEGENERATE_RATIO = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    p: float
    u0: ScalarField
    f: ScalarField | None = None
    mode: str = "newton"
    omega: float = 0.3
    dt: float = 0.1
    tol: float = 1e-9
    max_iter: int = 50_000
    precondition: bool = True
    refresh_every: int = 10  # Jacobian refresh period for flow / fixed_point
    polish: bool = True  # Newton polish after the flow if the rescale is not enough

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def grid(self):
        return self.u0.grid

    @property
    def f_field(self) -> ScalarField:
        return self.f if self.f is not None else self.grid.constant(1.0)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "fixed_point" and self.q == 0:
            raise ConfigurationError("fixed_point mode needs q = 1 - p != 0")
        if self.mode == "flow" and self.q <= 0:
            raise ConfigurationError("flow mode needs p < 1")
        if not 0 < self.omega <= 1:
            raise ConfigurationError("omega must lie in (0, 1]")
        if self.dt <= 0 or self.tol <= 0 or self.max_iter < 1:
            raise ConfigurationError("dt, tol and max_iter must be positive")
        if np.any(self.u0.values <= 0):
            raise ConfigurationError("initial support function must be positive")
        if min_radius_ratio(self.u0) < DEGENERATE_RATIO:
            raise ConfigurationError("initial field is not (uniformly) convex")
        if self.f is not None and np.any(self.f.values <= 0):
            raise ConfigurationError("f must be positive")


@dataclass
class SolveResult:
    u_final: ScalarField
    converged: bool
    iterations: int
    residual_trace: list = field(default_factory=list)
    q_trace: list = field(default_factory=list)
    g_trace: list = field(default_factory=list)
    pinching_trace: list = field(default_factory=list)
    wall_time: float = 0.0
    message: str = ""
    alpha: float = 0.0

    @property
    def final_residual(self) -> float:
        return self.residual_trace[-1] if self.residual_trace else float("nan")


# --------------------------------------------------------------------------
# residual and linearization


def residual(u: ScalarField, f: ScalarField | None, p: float) -> ScalarField:
    """det(r(u)) - f u^(p-1) per node."""
    c = curvatures_from_support(u)
    fv = 1.0 if f is None else f.values
    return u.with_values(c.det_r - fv * u.values ** (p - 1.0))


def curvature_defect(u: ScalarField, f: ScalarField | None, p: float) -> ScalarField:
    """K - u^q / f, the same equation written for the Gauss curvature."""
    c = curvatures_from_support(u)
    fv = 1.0 if f is None else f.values
    return u.with_values(c.K - u.values ** (1.0 - p) / fv)


def det_jacobian(u: ScalarField) -> sp.csr_matrix:
    """Derivative of u -> det(r(u)): v -> tr(cof(r) (v_;ij + v delta_ij))."""
    ops = u.grid.ops
    r_tt, r_tp, r_pp = (a.ravel() for a in radii_matrix(u))
    eye = sp.identity(u.grid.size, format="csr")
    return (
        sp.diags(r_pp) @ (ops.hess_tt + eye)
        + sp.diags(r_tt) @ (ops.hess_pp + eye)
        - 2.0 * sp.diags(r_tp) @ ops.hess_tp
    ).tocsr()


def residual_jacobian(u: ScalarField, f: ScalarField | None, p: float) -> sp.csr_matrix:
    fv = 1.0 if f is None else f.flat
    return (det_jacobian(u) - sp.diags((p - 1.0) * fv * u.flat ** (p - 2.0))).tocsc()


def _factor(A):
    try:
        return spla.splu(A.tocsc())
    except RuntimeError as exc:
        raise LinearSolveFailure(str(exc)) from None


def steiner_point(u: ScalarField) -> np.ndarray:
    """(3 / 4pi) int u(x) x dx."""
    g = u.grid
    return np.array([g.integrate(u.values * g.nodes[..., k]) for k in range(3)]) * 3.0 / (4.0 * np.pi)


def _translate(u: ScalarField, a: np.ndarray) -> ScalarField:
    return u.with_values(u.values + u.grid.nodes @ a)


def _is_convex(u: ScalarField) -> bool:
    return bool(np.all(u.values > 0)) and min_radius_ratio(u) > 0


def _linf(x) -> float:
    return float(np.max(np.abs(x)))


# --------------------------------------------------------------------------
# steps


def newton_step(u: ScalarField, config: SolverConfig) -> ScalarField:
    """One damped Newton step; backtracks until convex and the residual drops."""
    f, p = config.f, config.p
    R = residual(u, f, p)
    r0 = R.max_abs()
    if r0 == 0.0:
        return u
    J = residual_jacobian(u, f, p)
    if p == 1.0:
        v = _bordered_solve(u, J, -R.flat)
    else:
        lu = _factor(J)
        v = lu.solve(-R.flat)
    if not np.all(np.isfinite(v)):
        raise LinearSolveFailure("non-finite Newton update")
    s = 1.0
    for _ in range(MAX_HALVINGS):
        cand = u.with_values(u.flat + s * v)
        if _is_convex(cand) and residual(cand, f, p).max_abs() < r0:
            return cand
        s *= 0.5
    raise StepFailure("Newton backtracking exhausted")


def _bordered_solve(u: ScalarField, J, rhs):
    """Solve J v = rhs with v free of linear (translation) modes; used at p = 1."""
    X = sp.csc_matrix(u.grid.nodes.reshape(-1, 3) * u.grid.weights.reshape(-1, 1))
    A = sp.bmat([[J, sp.csc_matrix(u.grid.nodes.reshape(-1, 3))], [X.T, None]], format="csc")
    sol = _factor(A).solve(np.concatenate([rhs, np.zeros(3)]))
    return sol[: u.grid.size]


def fixed_point_map(u: ScalarField, config: SolverConfig) -> np.ndarray:
    c = curvatures_from_support(u)
    return (config.f_field.values / c.det_r) ** (1.0 / config.q)


def _fixed_point_preconditioner(u: ScalarField, config: SolverConfig):
    """Factor of I - DT(u) where T is the fixed-point map."""
    c = curvatures_from_support(u)
    T = fixed_point_map(u, config).ravel()
    scale = T / (config.q * c.det_r.ravel())
    M = sp.identity(u.grid.size, format="csr") + sp.diags(scale) @ det_jacobian(u)
    return _factor(M)


def fixed_point_step(u: ScalarField, config: SolverConfig, precond=None) -> ScalarField:
    """u + omega * P^{-1} (T(u) - u); with no preconditioner this is
    (1 - omega) u + omega (f / det r)^(1/q).  Halves omega on loss of convexity."""
    if config.q == 0:
        raise ConfigurationError("fixed_point mode needs q != 0")
    d = fixed_point_map(u, config) - u.values
    if precond is not None:
        d = precond.solve(d.ravel()).reshape(d.shape)
    omega = config.omega
    for _ in range(MAX_HALVINGS):
        cand = u.with_values(u.values + omega * d)
        if _is_convex(cand):
            return cand
        omega *= 0.5
    raise StepFailure("fixed-point relaxation could not keep the iterate convex")


def flow_velocity(u: ScalarField, config: SolverConfig):
    """-(K f)^(1/q) + c (u - <s, x>) with c fixing the enclosed volume; returns (F, c, s)."""
    c = curvatures_from_support(u)
    g = u.grid
    speed = (c.K * config.f_field.values) ** (1.0 / config.q)
    s = steiner_point(u)
    us = u.values - g.nodes @ s
    cc = g.integrate(speed * c.det_r) / g.integrate(us * c.det_r)
    return -speed + cc * us, cc, s


def _flow_operator(u: ScalarField, config: SolverConfig, dt: float):
    """Factor of I - dt * DF(u) with c and s frozen."""
    c = curvatures_from_support(u)
    speed = ((c.K * config.f_field.values) ** (1.0 / config.q)).ravel()
    _, cc, _ = flow_velocity(u, config)
    DF = sp.diags(speed / (config.q * c.det_r.ravel())) @ det_jacobian(u) + cc * sp.identity(u.grid.size)
    return _factor(sp.identity(u.grid.size, format="csc") - dt * DF)


def _volume(u: ScalarField) -> float:
    c = curvatures_from_support(u)
    return u.grid.integrate(u.values * c.det_r) / 3.0


def flow_step(u: ScalarField, config: SolverConfig, volume: float | None = None, op=None) -> ScalarField:
    """One linearly implicit Euler step of the normalized flow.

    ``op`` is a factor of I - dt DF (built here if missing).  After the step the
    body is translated so its Steiner point is the origin and scaled back to
    ``volume`` (default: the current volume).  dt is halved on loss of convexity.
    """
    if config.q <= 0:
        raise ConfigurationError("flow mode needs p < 1")
    V = _volume(u) if volume is None else volume
    F, _, _ = flow_velocity(u, config)
    dt = config.dt
    for _ in range(MAX_HALVINGS):
        A = op if (op is not None and dt == config.dt) else _flow_operator(u, config, dt)
        delta = A.solve(dt * F.ravel()).reshape(u.grid.shape)
        cand = u.with_values(u.values + delta)
        if _is_convex(cand):
            # recentre: the discrete operator is not exactly translation invariant,
            # so a drifting body would converge to a slightly non-round shape
            cand = _translate(cand, -steiner_point(cand))
            if _is_convex(cand):
                out = cand * (V / _volume(cand)) ** (1.0 / 3.0)
                if _is_convex(out):
                    return out
        dt *= 0.5
    raise StepFailure("flow step could not keep the iterate convex")


def homothetic_rescale(u: ScalarField, f: ScalarField | None, p: float) -> ScalarField:
    """Move the Steiner point to the origin and scale so the equation holds on average.

    If det r = C f u^(p-1) then sigma u solves the equation with sigma = C^(-1/(3-p)).
    """
    us = _translate(u, -steiner_point(u))
    c = curvatures_from_support(us)
    fv = 1.0 if f is None else f.values
    ratio = c.det_r / (fv * us.values ** (p - 1.0))
    C = us.grid.integrate(ratio) / (4.0 * np.pi)
    return us * C ** (-1.0 / (3.0 - p))


# --------------------------------------------------------------------------
# monitors


def case_alpha(p: float) -> float:
    """Exponent of the auxiliary function Q = (H^2 - 4K) K^alpha for this p."""
    q = 1.0 - p
    if -1.0 <= p <= 0.0:
        return 2.0 / q - 2.0
    if 0.0 < p < 1.0:
        return 1.0 / q - 1.0
    return 0.0


def _monitors(u: ScalarField, alpha: float):
    c = curvatures_from_support(u)
    H, K = c.H, c.K
    Q = (H * H - 4.0 * K) * K**alpha
    G = H / u.values - 2.0
    return float(Q.max()), float(G.max() - G.min()), float(c.pinching.min())


# --------------------------------------------------------------------------
# driver


def solve(config: SolverConfig) -> SolveResult:
    config.validate()
    t0 = time.perf_counter()
    alpha = case_alpha(config.p)
    res = SolveResult(config.u0, False, 0, alpha=alpha)
    f, p = config.f, config.p
    u = config.u0
    if p == 1.0:
        # solutions are unique up to translation: report the Steiner-centred one
        u = _translate(u, -steiner_point(u))

    def record(v_eq: ScalarField, v_shape: ScalarField):
        res.residual_trace.append(residual(v_eq, f, p).max_abs())
        qmax, gosc, pin = _monitors(v_shape, alpha)
        res.q_trace.append(qmax)
        res.g_trace.append(gosc)
        res.pinching_trace.append(pin)

    try:
        if config.mode == "newton":
            record(u, u)
            for k in range(config.max_iter):
                if res.residual_trace[-1] <= config.tol:
                    break
                u = newton_step(u, config)
                res.iterations = k + 1
                record(u, u)
            res.u_final = u
        elif config.mode == "fixed_point":
            record(u, u)
            precond = None
            for k in range(config.max_iter):
                if res.residual_trace[-1] <= config.tol:
                    break
                if config.precondition and (precond is None or k % config.refresh_every == 0):
                    precond = _fixed_point_preconditioner(u, config)
                u = fixed_point_step(u, config, precond)
                res.iterations = k + 1
                record(u, u)
            res.u_final = u
        else:
            u, res = _run_flow(config, res, record)
        res.converged = res.residual_trace[-1] <= config.tol
        res.message = "converged" if res.converged else "max_iter reached"
    except (StepFailure, LinearSolveFailure, NonConvex) as exc:
        res.u_final = u
        res.message = f"{type(exc).__name__}: {exc}"
        res.converged = False
    res.wall_time = time.perf_counter() - t0
    return res


def _run_flow(config: SolverConfig, res: SolveResult, record):
    f, p = config.f, config.p
    u = config.u0
    V0 = _volume(u)
    record(homothetic_rescale(u, f, p), u)
    op = None
    stalled = 0
    for k in range(config.max_iter):
        if res.residual_trace[-1] <= config.tol:
            break
        if op is None or k % config.refresh_every == 0:
            op = _flow_operator(u, config, config.dt)
        u = flow_step(u, config, V0, op)
        res.iterations = k + 1
        cand = homothetic_rescale(u, f, p)
        record(cand, u)
        F, _, _ = flow_velocity(u, config)
        # shape is stationary but the rescale does not solve the equation (non-constant f)
        if _linf(F) <= config.tol and res.residual_trace[-1] > config.tol:
            stalled += 1
            if stalled >= 3:
                break
    cand = homothetic_rescale(u, f, p)
    if config.polish and stalled >= 3:
        polish = replace(config, mode="newton", u0=cand)
        for _ in range(50):
            if residual(cand, f, p).max_abs() <= config.tol:
                break
            cand = newton_step(cand, polish)
            res.iterations += 1
            record(cand, cand)
    res.u_final = cand
    return u, res
