"""Acceptance criteria 1-11 at their stated tolerances.

Each test records a PASS/FAIL line in ``RESULTS`` (printed at the end of the
session by conftest) and then asserts. Run with ``pytest tests/test_acceptance.py -s``
to see the measurements as they are produced.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from auctionlab.agents import AgentConfig
from auctionlab.analytic import W_STAR, gfp_nash, nearly_diagonal, sp_limit
from auctionlab.dynamics import RunConfig, run
from auctionlab.equilibrium import cce_gain, diagonal_cce_check, enumerate_co_undominated
from auctionlab.grid import BidGrid, JointBidDistribution, Marginal, ks_distance
from auctionlab.metagame import PayoffSurface, SweepConfig, best_response, check_metagame_equilibrium, sweep
from auctionlab.rules import AuctionRule, resolve_indices

pytestmark = pytest.mark.slow

RESULTS: dict = {}
ETA = 4.0  # eta_scale used by every MW/Hedge acceptance run


def record(key: str, title: str, checks: dict, elapsed: float, budget: float, detail: str = "") -> None:
    checks = dict(checks)
    checks[f"runtime {elapsed:.1f}s <= {budget:g}s"] = elapsed <= budget
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"{'PASS' if ok else 'FAIL'} {key}: {title}"
    if detail:
        line += f" | {detail}"
    if failed:
        line += " | failed: " + "; ".join(failed)
    RESULTS[key] = line
    print("\n" + line)
    assert ok, line


def mw_pair(fmt, values, T, seed, algo="MWLinear", true_values=None, **kw):
    opts = dict(kw)
    if algo in ("MWLinear", "Hedge"):
        opts.setdefault("eta_scale", ETA)
    agents = [AgentConfig(algo, v, **opts) for v in values]
    return run(RunConfig(AuctionRule(fmt), agents, int(T), true_values=true_values, seed=seed))


_cache: dict = {}


def c1_runs():
    if "c1" not in _cache:
        gamma = 5e4 ** -0.25
        _cache["c1"] = [run(RunConfig(AuctionRule("SP"), [AgentConfig("MWLinear", 1.0, eta_scale=ETA),
                                                           AgentConfig("MWLinear", 0.5, eta_scale=ETA)],
                                      50000, seed=s, audit_gamma=gamma)) for s in range(10)]
    return _cache["c1"]


def test_c01_sp_price_below_second():
    t0 = time.perf_counter()
    runs = c1_runs()
    price = float(np.mean([r.mean_price(burn_in=False) for r in runs]))
    price_post = float(np.mean([r.mean_price(burn_in=True) for r in runs]))
    win = min(r.win_rate(0) for r in runs)
    el = time.perf_counter() - t0
    record("C1", "SP price below second price", {
        f"mean price {price:.4f} in [0.25, 0.29]": 0.25 <= price <= 0.29,
        f"min high win rate {win:.4f} >= 0.99": win >= 0.99,
    }, el, 60, f"price {price:.4f} (post burn-in {price_post:.4f}), min win {win:.4f}")


def test_c02_sp_limit_marginals():
    t0 = time.perf_counter()
    r = mw_pair("SP", (1.0, 0.5), 5e5, 0)
    law = sp_limit(1.0, 0.5, 0.01)
    d = r.joint_empirical
    gap = law.high_cdf_gap(d.marginal(0))
    low = d.marginal(1)
    p0 = float(low.probs[0])
    head = low.probs[:51]
    worst_step = float(np.diff(head).min())
    el = time.perf_counter() - t0
    record("C2", "SP limit marginals", {
        f"high CDF gap {gap:.4f} <= 0.05": gap <= 0.05,
        f"low Pr[0] {p0:.4f} > 0": p0 > 0,
        f"low monotone with slack 0.01 (worst step {worst_step:.5f})": law.low_ok(low, slack=0.01),
    }, el, 300, f"gap {gap:.4f}, Pr[0] {p0:.4f}, worst step {worst_step:.5f}")


def test_c03_algorithm_variants():
    t0 = time.perf_counter()
    bands = {"Hedge": (0.270, 0.02), "FTPL": (0.26, 0.12), "FTPLRecency": (0.256, 0.04)}
    prices = {}
    for algo in bands:
        prices[algo] = float(np.mean([mw_pair("SP", (1.0, 0.5), 5e4, s, algo=algo).mean_price() for s in range(10)]))
    el = time.perf_counter() - t0
    record("C3", "algorithm variants", {
        f"{a} price {prices[a]:.4f} in {c} +- {h}": abs(prices[a] - c) <= h for a, (c, h) in bands.items()
    }, el, 180, ", ".join(f"{a} {p:.4f}" for a, p in prices.items()))


def test_c04_fp_second_price_outcome():
    t0 = time.perf_counter()
    r = mw_pair("FP", (1.0, 0.5), 2e5, 0)
    price = r.mean_price(burn_in=True)
    win = r.win_rate(0)
    sym = mw_pair("FP", (1.0, 1.0), 2e6, 0)
    sym_price = sym.mean_price(burn_in=True)
    el = time.perf_counter() - t0
    record("C4", "FP second-price outcome", {
        f"post burn-in price {price:.4f} in 0.50 +- 0.02": abs(price - 0.5) <= 0.02,
        f"high win rate {win:.4f} >= 0.99": win >= 0.99,
        f"symmetric price {sym_price:.4f} >= 0.90": sym_price >= 0.90,
    }, el, 600, f"price {price:.4f}, win {win:.4f}, symmetric {sym_price:.4f}")


def test_c05_four_point_cce():
    t0 = time.perf_counter()
    g = BidGrid(0.01, 1.0)
    d = JointBidDistribution.uniform_over((g, g), [(0, 0), (46, 46), (64, 64), (73, 73)])
    rep = cce_gain(d, AuctionRule("FP"), (1.0, 1.0))
    el = time.perf_counter() - t0
    record("C5", "four-point FP CCE", {
        f"max gain {rep.max_gain:.3e} <= 1e-12": rep.max_gain <= 1e-12,
    }, el, 1, f"in-distribution {rep.in_distribution[0]:.5f}, best deviation {rep.deviation_utility[0]:.5f} at {rep.best_bid[0]:g}")


def test_c06_co_undominated_supports():
    t0 = time.perf_counter()
    fp = enumerate_co_undominated(AuctionRule("FP"), (0.5, 0.3), 0.1)
    sym = enumerate_co_undominated(AuctionRule("FP"), (0.5, 0.5), 0.1)
    sp = enumerate_co_undominated(AuctionRule("SP"), (0.5, 0.3), 0.1)
    hi_ok = all(sup.support_a <= {1, 2, 3, 4} for sup, _ in fp)
    sym_ok = all(sup.support_a <= {3, 4, 5} and sup.support_b <= {3, 4, 5} for sup, _ in sym)
    wins = []
    for _, d in sp:
        i, j = np.indices(d.probs.shape)
        wins.append(float(d.probs[i > j].sum()))
    sp_ok = all(abs(w - 1.0) <= 1e-9 for w in wins)
    el = time.perf_counter() - t0
    record("C6", "co-undominated supports on tiny grids", {
        f"FP (0.5,0.3): {len(fp)} supports, high support within [0.1, 0.4]": bool(fp) and hi_ok,
        f"FP (0.5,0.5): {len(sym)} supports within {{0.3,0.4,0.5}}^2": bool(sym) and sym_ok,
        f"SP (0.5,0.3): {len(sp)} witnesses, high wins w.p. 1": bool(sp) and sp_ok,
    }, el, 120, f"supports FP {len(fp)}, symmetric {len(sym)}, SP {len(sp)}")


def test_c07_gfp_symmetric_dynamics():
    t0 = time.perf_counter()
    runs = [mw_pair("GFP", (1.0, 1.0), 5e5, s) for s in range(10)]
    g = runs[0].grids[0]
    counts = sum(np.bincount(r.bids[r.config.burn_in:, 0], minlength=g.levels) for r in runs)
    ks = ks_distance(Marginal(g, counts / counts.sum()), nearly_diagonal(1.0, 1.0).F)
    diag = float(np.mean([np.mean(np.abs(r.bids[r.config.burn_in:, 0] - r.bids[r.config.burn_in:, 1]) <= 1)
                          for r in runs]))
    util = float(np.mean([r.agent_utils().mean() for r in runs]))
    el = time.perf_counter() - t0
    record("C7", "GFP symmetric dynamics", {
        f"pooled KS {ks:.4f} <= 0.05": ks <= 0.05,
        f"diagonal fraction {diag:.4f} >= 0.9": diag >= 0.9,
        f"utility {util:.4f} in 0.52 +- 0.02": abs(util - 0.52) <= 0.02,
    }, el, 300, f"KS {ks:.4f}, diagonal {diag:.4f}, utility {util:.4f}")


def test_c08_nearly_diagonal():
    t0 = time.perf_counter()
    runs = [mw_pair("GFP", (2.0, 1.0), 5e5, s, true_values=(1.0, 1.0)) for s in range(5)]
    nz = float(np.mean([r.nonzero_bid_rate(1) for r in runs]))
    u = np.mean([r.user_utils() for r in runs], axis=0)
    el = time.perf_counter() - t0
    record("C8", "nearly-diagonal prediction", {
        f"non-zero low fraction {nz:.4f} in 0.50 +- 0.05": abs(nz - 0.5) <= 0.05,
        f"user 1 {u[0]:.4f} in 0.607 +- 0.03": abs(u[0] - 0.607) <= 0.03,
        f"user 2 {u[1]:.4f} in 0.510 +- 0.03": abs(u[1] - 0.510) <= 0.03,
    }, el, 600, f"non-zero {nz:.4f}, users ({u[0]:.4f}, {u[1]:.4f})")


def test_c09_metagame_equilibrium():
    t0 = time.perf_counter()
    w_target = 0.5434
    gfp = AuctionRule("GFP")

    def slice_sweep(fixed_player, fixed, values):
        cfg = SweepConfig(gfp, SweepConfig.slice_grid(fixed_player, fixed, values), T=200000, seeds=5,
                          agent_options={"eta_scale": ETA})
        return sweep(cfg)

    w_grid = [round(0.30 + 0.02 * k, 2) for k in range(26)]
    s_v2 = slice_sweep(0, 2.0, w_grid)
    br = best_response(s_v2, 1, 2.0)
    v_grid = [1.0 + 0.25 * k for k in range(13)]
    s_w = slice_sweep(1, w_target, v_grid)
    along = s_w.slice(0, w_target)
    rho = float(spearmanr([c.v for c in along], [c.u1_mean for c in along]).statistic)
    u1_at4 = s_w.lookup(4.0, w_target).u1_mean
    s_v4 = slice_sweep(0, 4.0, [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0])
    merged = PayoffSurface(s_w.cells + s_v4.cells)
    eq = check_metagame_equilibrium(merged, (4.0, w_target), 0.1)
    el = time.perf_counter() - t0
    record("C9", "meta-game equilibrium", {
        f"best response at v=2 is {br.declaration:g}, within 0.05 of {w_target}": abs(br.declaration - w_target) <= 0.05,
        f"Spearman {rho:.3f} >= 0.9": rho >= 0.9,
        f"u1(4, {w_target}) = {u1_at4:.4f} >= 0.78": u1_at4 >= 0.78,
        "check_metagame_equilibrium((4, 0.5434), 0.1)": eq.verdict,
    }, el, 1800, f"BR {br.declaration:g} (reliable {br.reliable}), rho {rho:.3f}, u1(4) {u1_at4:.4f}, "
                 f"gains {[(round(d, 3), round(g, 4)) for d, g, _ in eq.gains]}")


def test_c10_analytic_self_consistency():
    t0 = time.perf_counter()
    checks = {}
    for v, w in ((1.0, 1.0), (2.0, 1.0)):
        m = gfp_nash(v, w)
        err = max(abs(m.u1 - m.u1_numeric), abs(m.u2 - m.u2_numeric))
        checks[f"gfp_nash({v:g},{w:g}) numeric vs closed form {err:.1e} <= 1e-6"] = err <= 1e-6
        foc = max(m.foc_residuals())
        checks[f"gfp_nash({v:g},{w:g}) FOC residual {foc:.1e} <= 1e-8"] = foc <= 1e-8
    dc = diagonal_cce_check(lambda x: x / (1 - x), 1.0, 1.0)
    e_l = abs(dc.lhs_1 - 0.75 * math.log(2))
    e_r = abs(dc.rhs_1 - 0.5)
    checks[f"diagonal check lhs err {e_l:.1e}, rhs err {e_r:.1e} <= 1e-6"] = max(e_l, e_r) <= 1e-6 and dc.verdict
    formula = 1 / (6 * (1 - math.log(2)))
    checks[f"w* {W_STAR:.10f} vs 1/(6(1-ln 2)) within 1e-9"] = abs(W_STAR - formula) <= 1e-9
    checks[f"stated w* 0.543349 vs 1/(6(1-ln 2)) = {formula:.7f} within 1e-9"] = abs(0.543349 - formula) <= 1e-9
    el = time.perf_counter() - t0
    record("C10", "analytic self-consistency", checks, el, 1)


def test_c11_property_suites():
    t0 = time.perf_counter()
    checks = {}
    # accounting on dyadic inputs, where float arithmetic is exact
    rng = np.random.default_rng(11)
    eps = 1 / 128
    bad = 0
    for k in range(10000):
        fmt = ("FP", "SP", "GFP", "GSP")[k % 4]
        n = int(rng.integers(2, 5))
        ctrs = (1.0,) if fmt in ("FP", "SP") else tuple(sorted(rng.integers(1, 17, n - 1) / 16, reverse=True))
        values = rng.integers(1, 129, n) / 64
        bids = np.minimum(rng.integers(0, 257, n), np.floor(values / eps).astype(int))
        o = resolve_indices(AuctionRule(fmt, ctrs), bids, values, eps, rng.random(n))
        welfare = float(np.sum(o.ctr * values))
        if o.utilities.sum() + o.revenue != welfare or np.any(o.prices > bids * eps):
            bad += 1
    checks[f"accounting exact on 1e4 resolutions ({bad} violations)"] = bad == 0
    # no-regret for every learner on every format
    worst = 0.0
    worst_at = None
    pairs = [(a, b) for a in (0.5, 1.0, 2.0) for b in (0.5, 1.0, 2.0)]
    for fmt in ("FP", "SP", "GFP", "GSP"):
        for algo in ("MWLinear", "Hedge", "FTPL", "FTPLRecency"):
            for vals in pairs:
                for s in range(2):
                    r = run(RunConfig(AuctionRule(fmt), [AgentConfig(algo, v) for v in vals], 50000, seed=s))
                    x = float(np.max(r.regret)) / r.T
                    if x > worst:
                        worst, worst_at = x, (fmt, algo, vals, s)
    checks[f"max regret/T {worst:.4f} <= 0.02 at {worst_at}"] = worst <= 0.02
    # mean-based audit on criterion-1 runs
    gamma = 5e4 ** -0.25
    mb = max(rep.max_violation for r in c1_runs() for rep in r.mean_based)
    checks[f"mean-based max violation {mb:.2e} <= gamma {gamma:.4f}"] = mb <= gamma
    # bit-identical reruns
    a = mw_pair("GFP", (2.0, 1.0), 20000, 3, true_values=(1.0, 1.0))
    b = mw_pair("GFP", (2.0, 1.0), 20000, 3, true_values=(1.0, 1.0))
    c = run(c1_runs()[0].config)
    same = a.log_digest() == b.log_digest() and c.log_digest() == c1_runs()[0].log_digest()
    same = same and np.array_equal(a.regret, b.regret)
    checks["bit-identical reruns"] = same
    el = time.perf_counter() - t0
    record("C11", "property suites", checks, el, 300)
