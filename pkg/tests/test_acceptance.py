"""Acceptance checks, one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -s`` to see the lines inline, or
``python3 tests/test_acceptance.py`` for the lines alone.
"""

import time

import numpy as np
import pytest

from minklab.bodies import ellipsoid_support, perturbed_sphere
from minklab.convex import (
    DirectionalBound,
    box_firey,
    box_h_convexity,
    example_boxes,
    grid_directions,
    mixed_volume_p,
    mixed_volume_p_limit_oracle,
    p_mean,
    polytope_volume,
    volume_from_support,
    wulff_shape,
)
from minklab.curvature import curvatures_from_support
from minklab.experiments import ellipsoid_residual_study, lemma_study
from minklab.identities import (
    beta_bisection,
    beta_closed_form,
    case1_coefficients,
    case2_G_monitor,
    case3_reduction,
    pinching_beta,
    random_det_samples,
    random_samples,
    verify_B_expansion,
    verify_det_second_derivative,
    verify_t_identities,
)
from minklab.solver import SolverConfig, residual, solve
from minklab.sphere import build_grid

SEEDS = range(10)


def report(label, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
    assert ok, detail


def _orders(hs, errs):
    return [float(np.log(e0 / e1) / np.log(h0 / h1)) for h0, h1, e0, e1 in zip(hs, hs[1:], errs, errs[1:])]


@pytest.fixture(scope="module")
def grid():
    return build_grid(64, 128)


def test_criterion_01_sphere_exactness(grid):
    t0 = time.perf_counter()
    worst = max(residual(grid.constant(1.0), None, p).max_abs() for p in (-3, -1, -0.5, 0, 0.5, 2))
    dt = time.perf_counter() - t0
    report("1 sphere exactness", worst <= 1e-12 and dt < 1.0, f"max residual {worst:.2e}, {dt:.2f} s")


def _uniqueness_runs(grid, p, mode, eps=0.1, min_ratio=0.0):
    out = []
    for seed in SEEDS:
        u0 = perturbed_sphere(grid, eps, seed, degree=2, min_ratio=min_ratio)
        res = solve(SolverConfig(p, u0, mode=mode, max_iter=50_000))
        out.append((u0, res, float(np.max(np.abs(res.u_final.values - 1.0)))))
    return out


def test_criterion_02_uniqueness_p0(grid):
    t0 = time.perf_counter()
    runs = _uniqueness_runs(grid, 0.0, "newton")
    dt = time.perf_counter() - t0
    dist = max(d for _, _, d in runs)
    ok = all(r.converged for _, r, _ in runs) and dist <= 1e-6 and dt < 600
    report("2 uniqueness p=0", ok, f"10 starts, max |u-1| {dist:.2e}, {dt:.1f} s")


@pytest.mark.parametrize("p", [-1.0, -0.5])
def test_criterion_03_uniqueness_negative_p(grid, p):
    t0 = time.perf_counter()
    runs = _uniqueness_runs(grid, p, "flow")
    dt = time.perf_counter() - t0
    dist = max(d for _, _, d in runs)
    conv = all(r.converged for _, r, _ in runs)
    rises = [float(np.max(np.diff(r.q_trace[100:]), initial=0.0)) for _, r, _ in runs]
    ok = conv and dist <= 1e-6 and max(rises) <= 1e-8 and dt < 600
    detail = f"10 starts, max |u-1| {dist:.2e}, max Q rise after 100 its {max(rises):.2e}, {dt:.1f} s"
    if p == -1.0:
        osc = max(case2_G_monitor(r.u_final)[1] for _, r, _ in runs)
        ok = ok and osc <= 1e-6
        detail += f", G oscillation {osc:.2e}"
    report(f"3 uniqueness p={p:g}", ok, detail)


def test_criterion_04_pinched_uniqueness(grid):
    beta = pinching_beta(0.5).beta
    # eps = 0.3 brings the starts close to the 0.47 floor
    runs = _uniqueness_runs(grid, 0.5, "newton", eps=0.3, min_ratio=0.47)
    start = min(float(curvatures_from_support(u0).pinching.min()) for u0, _, _ in runs)
    along = min(min(r.pinching_trace) for _, r, _ in runs)
    dist = max(d for _, _, d in runs)
    ok = all(r.converged for _, r, _ in runs) and dist <= 1e-6 and start >= 0.47 and along >= beta
    report("4 pinched uniqueness p=0.5", ok, f"start pinching {start:.4f}, min along {along:.4f} > {beta:.7f}, max |u-1| {dist:.2e}")


def test_criterion_05_critical_ellipsoid():
    hs, res, _ = ellipsoid_residual_study(1.3, 1.0, 1 / 1.3, -3.0, [(64, 128), (128, 256)])
    order = _orders(hs, res)[0]
    report("5 ellipsoid p=-3", order >= 1.8, f"residuals {res[0]:.2e}, {res[1]:.2e}; order {order:.2f}")


def test_criterion_06_pinching_constant():
    qs = np.linspace(0.01, 0.99, 99)
    gap = max(abs(float(beta_closed_form(q)) - beta_bisection(q)) for q in qs)
    b = float(beta_closed_form(0.5))
    c_lo = pinching_beta(1 - 1e-4).C  # q = 1e-4
    c_hi = pinching_beta(1e-4).C  # q = 1 - 1e-4
    ok = gap <= 1e-12 and abs(b - 0.4641016) <= 1e-6 and abs(c_lo - 0.5) < 1e-3 and c_hi < 1e-2
    report("6 pinching constant", ok, f"bisection gap {gap:.1e}, beta(0.5) {b:.10f}, C(q=1e-4) {c_lo:.6f}, C(q=1-1e-4) {c_hi:.6f}")


def test_criterion_07_identity_suites():
    n = 100_000
    t0 = time.perf_counter()
    s = random_samples(n, 0)
    worst = {"t": verify_t_identities(s), "B": verify_B_expansion(s)}
    worst["det"] = verify_det_second_derivative(*random_det_samples(n, 0)).max_defect
    c1 = [case1_coefficients(float(q), n, 0) for q in np.linspace(1.0, 2.0, 11)]
    c3 = [case3_reduction(float(q), n, 0) for q in np.linspace(0.1, 0.9, 9)]
    worst["case1"] = max(r.max_defect for r in c1)
    worst["case3"] = max(r.max_defect for r in c3)
    dt = time.perf_counter() - t0
    passed = all(r.passed for r in c1 + c3)
    ok = max(worst.values()) <= 1e-8 and passed and dt < 30
    report("7 identity suites", ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {dt:.1f} s")


def test_criterion_08a_box_gap_half():
    K, L = example_boxes(1.0, 0.5)
    gap = box_firey(K, L, 0.5, 0.5).volume - 8.0
    report("8a box gap p=0.5", abs(gap - (-0.1359136)) <= 1e-6, f"gap {gap:.7f}, expected -0.1359136")


def test_criterion_08b_box_gap_two():
    K, L = example_boxes(1.0, 0.5)
    gap = box_firey(K, L, 0.5, 2.0).volume - 8.0
    report("8b box gap p=2", abs(gap - 0.2612972) <= 1e-6, f"gap {gap:.7f}, expected +0.2612972")


def test_criterion_08c_wulff_volume(grid):
    K, L = example_boxes(1.0, 0.5)
    dirs = grid_directions(grid, with_axes=True)
    box = box_firey(K, L, 0.5, 0.5)
    bound = p_mean(K.support(dirs), L.support(dirs), 0.5, 0.5)
    v = polytope_volume(wulff_shape(DirectionalBound(dirs, bound)))
    report("8c Wulff volume", abs(v - box.volume) <= 1e-6, f"Wulff {v:.12f}, box {box.volume:.12f}")


def test_criterion_08d_h_convexity():
    results = {p: box_h_convexity(1.0, 0.5, p) for p in (0.25, 0.5, 0.9, 1.0, 1.5, 3.0)}
    ok = all(r.sign_ok and r.endpoints_exact for r in results.values())
    detail = ", ".join(f"p={p:g} d2 in [{r.second_diff.min():.1e}, {r.second_diff.max():.1e}]" for p, r in results.items())
    report("8d h convexity", ok, detail)


def test_criterion_09_p_mean_monotone():
    rng = np.random.default_rng(0)
    n = 100_000
    a = np.exp(rng.uniform(np.log(0.1), np.log(10), n))
    b = np.exp(rng.uniform(np.log(0.1), np.log(10), n))
    lam = rng.uniform(0.0, 1.0, n)
    keep = (a != b) & (lam > 0)
    a, b, lam = a[keep], b[keep], lam[keep]
    ladder = [-np.inf, -3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0, np.inf]
    vals = np.stack([p_mean(a, b, lam, p) for p in ladder])
    strict = bool(np.all(np.diff(vals, axis=0) > 0))
    eq = all(np.array_equal(p_mean(a, a, lam, p), a) for p in ladder)
    ends = all(np.array_equal(p_mean(a, b, 0.0, p), a) and np.array_equal(p_mean(a, b, 1.0, p), b) for p in ladder)
    report("9 p-mean monotone", strict and eq and ends, f"{a.size} samples, strict {strict}, equality cases exact {eq and ends}")


def test_criterion_10_mixed_volume(grid):
    pairs = [
        (ellipsoid_support(grid, 1.2, 1.0, 0.9), ellipsoid_support(grid, 0.8, 1.1, 1.0), 0.5),
        (perturbed_sphere(grid, 0.1, 3), ellipsoid_support(grid, 1.3, 1.0, 0.8), 2.0),
        (ellipsoid_support(grid, 1.3, 1.0, 0.8), grid.constant(1.0), 1.5),
    ]
    rel = []
    for uK, uL, p in pairs:
        a = mixed_volume_p(uK, uL, p)
        rel.append(abs(a - mixed_volume_p_limit_oracle(uK, uL, p)) / abs(a))
    self_gap = max(abs(mixed_volume_p(uK, uK, p) - volume_from_support(uK)) / volume_from_support(uK) for uK, _, p in pairs)
    ok = max(rel) <= 1e-3 and self_gap <= 1e-10
    report("10 mixed volume", ok, f"oracle gaps {', '.join(f'{r:.1e}' for r in rel)}; V_p(K,K) gap {self_gap:.1e}")


def test_criterion_11_surface_identities():
    hs, gd, hd = lemma_study(1.2, 1.0, 0.9, [(32, 64), (64, 128), (128, 256)])
    og, oh = _orders(hs, gd), _orders(hs, hd)
    ok = min(og + oh) >= 1.8
    report("11 surface identities", ok, f"gradient orders {og[0]:.2f}, {og[1]:.2f}; hessian orders {oh[0]:.2f}, {oh[1]:.2f}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s", "--no-header", "-p", "no:warnings"]))
