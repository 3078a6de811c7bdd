import numpy as np
import pytest

from auctionlab.agents import AgentConfig
from auctionlab.dynamics import (ConfigError, RunConfig, convergence_profile, regret_of, run,
                                 running_average)
from auctionlab.grid import JointBidDistribution, l1_distance
from auctionlab.rules import AuctionRule

from oracles import brute_regret

FOUR = ((0.0, 0.0), (0.46, 0.46), (0.64, 0.64), (0.73, 0.73))


def _run(fmt="SP", values=(1.0, 0.5), T=5000, algo="MWLinear", seed=0, **kw):
    agents = [AgentConfig(algo, v) for v in values]
    return run(RunConfig(AuctionRule(fmt), agents, T, seed=seed, **kw))


def test_rejects_single_bidder():
    with pytest.raises(ConfigError):
        run(RunConfig(AuctionRule("FP"), [AgentConfig("MWLinear", 1.0)], 10))
    with pytest.raises(ConfigError):
        run(RunConfig(AuctionRule("FP"), [AgentConfig("MWLinear", 1.0)] * 2, 10, true_values=(1.0,)))


@pytest.mark.parametrize("fmt", ["FP", "SP", "GFP", "GSP"])
@pytest.mark.parametrize("algo", ["MWLinear", "Hedge", "FTPL", "FTPLRecency"])
def test_regret_routes_agree(fmt, algo):
    r = _run(fmt, (0.3, 0.2), T=400, algo=algo, seed=3)
    for p in range(2):
        assert regret_of(r, p) == pytest.approx(r.regret[p], abs=1e-9)
        cap = r.config.agents[p].n_actions(r.config.grid) - 1
        ref = brute_regret(fmt, r.config.rule.ctrs, r.bids, 0.01, r.config.agents[p].declared_value, p, cap)
        assert r.regret[p] == pytest.approx(ref, abs=1e-9)


def test_three_bidder_gsp_regret_routes_agree():
    agents = [AgentConfig("Hedge", v) for v in (0.3, 0.25, 0.2)]
    r = run(RunConfig(AuctionRule("GSP", (1.0, 0.5)), agents, 300, seed=2))
    for p in range(3):
        assert regret_of(r, p) == pytest.approx(r.regret[p], abs=1e-9)


def test_no_overbid_and_accounting():
    r = _run("GFP", (1.0, 0.5), T=3000, true_values=(0.8, 0.9))
    caps = np.array([100, 50])
    assert np.all(r.bids <= caps)
    ctr = r.config.rule.ctr_vector(2)
    got = np.where(r.slots >= 0, ctr[np.maximum(r.slots, 0)], 0.0)
    rev = r.revenue_per_round()
    assert np.allclose(r.u_agent.sum(1) + rev, (got * np.array([1.0, 0.5])).sum(1), atol=1e-12)
    assert np.allclose(r.u_user.sum(1) + rev, (got * np.array([0.8, 0.9])).sum(1), atol=1e-12)


def test_user_view_equals_agent_view_when_truthful():
    r = _run("GSP", (1.0, 0.7), T=2000)
    assert np.array_equal(r.u_agent, r.u_user)


def test_determinism():
    a = _run("GFP", (1.0, 1.0), T=6000, seed=11, algo="FTPL")
    b = _run("GFP", (1.0, 1.0), T=6000, seed=11, algo="FTPL")
    c = _run("GFP", (1.0, 1.0), T=6000, seed=12, algo="FTPL")
    assert a.log_digest() == b.log_digest()
    assert a.config_digest == b.config_digest
    assert a.log_digest() != c.log_digest()


def test_joint_is_post_burn_in_counts():
    r = _run(T=4000)
    rows = r.bids[r.config.burn_in:]
    counts = np.zeros(r.joint_empirical.probs.shape)
    for i, j in rows:
        counts[i, j] += 1
    assert np.array_equal(r.joint_empirical.probs, counts / counts.sum())


def test_chunk_boundaries_do_not_matter():
    # same run with extra snapshot stops must give the same log
    a = _run("FP", (1.0, 0.5), T=9000, seed=4)
    b = _run("FP", (1.0, 0.5), T=9000, seed=4, snapshot_times=(1, 17, 4095, 4097, 8191, 9000))
    assert a.log_digest() == b.log_digest()


def test_mw_regret_bound():
    r = _run("SP", (1.0, 0.5), T=50000, seed=0)
    assert np.all(r.regret / r.T <= 0.02)
    K = 101
    assert np.all(r.regret / r.T <= 3 * 2 * np.sqrt(np.log(K) / r.T))


def test_scripted_four_point_schedule():
    agents = [AgentConfig("Scripted", 1.0, schedule=FOUR) for _ in range(2)]
    r = run(RunConfig(AuctionRule("FP"), agents, 100000, seed=0))
    target = JointBidDistribution.uniform_over(r.grids, [(0, 0), (46, 46), (64, 64), (73, 73)])
    assert l1_distance(r.joint_empirical, target) <= 0.05


def test_scripted_constant_bid_is_point_mass():
    agents = [AgentConfig("Scripted", 1.0, schedule=((0.3, 0.2),)) for _ in range(2)]
    r = run(RunConfig(AuctionRule("SP"), agents, 500, seed=0, burn_in_fraction=0.0))
    assert r.joint_empirical.probs[30, 20] == 1.0


def test_scripted_reverts_after_deviation():
    # the opponent is a learner, so it leaves the schedule at once; from then
    # on the scripted seat behaves like its MW fallback
    agents = [AgentConfig("Scripted", 1.0, schedule=((0.9, 0.9),)), AgentConfig("MWLinear", 0.5)]
    r = run(RunConfig(AuctionRule("SP"), agents, 20000, seed=1))
    ref = run(RunConfig(AuctionRule("SP"), [AgentConfig("MWLinear", 1.0), AgentConfig("MWLinear", 0.5)], 20000, seed=1))
    assert r.bids[0, 0] == 90
    assert len(np.unique(r.bids[1:, 0])) > 10
    a, b = r.joint_empirical.marginal(0), ref.joint_empirical.marginal(0)
    assert np.abs(a.cdf() - b.cdf()).max() < 0.1
    assert r.regret[0] / r.T < 0.02


def test_running_average():
    x = np.full(50, 0.3)
    assert np.allclose(running_average(x, 7), 0.3)
    y = np.arange(10.0)
    assert np.array_equal(running_average(y, 1)[:, 0], y)
    z = np.tile([0.0, 1.0], 20)
    assert np.allclose(running_average(z, 2), 0.5)
    with pytest.raises(ValueError):
        running_average(z, 41)


def test_convergence_profile_alternating():
    agents = [AgentConfig("Scripted", 1.0, schedule=((0.2, 0.2), (0.5, 0.5))) for _ in range(2)]
    r = run(RunConfig(AuctionRule("FP"), agents, 10000, seed=0, burn_in_fraction=0.0))
    prof = convergence_profile(r)
    assert prof[-1][1] == 0.0
    assert all(d <= 1.0 / t + 1e-12 for t, d in prof if t > 1)


def test_convergence_iid_shrinks():
    # iid bids: MW with a negligible rate is essentially uniform play
    finals = []
    for seed in range(4):
        agents = [AgentConfig("MWLinear", 0.1, eta=1e-12) for _ in range(2)]
        r = run(RunConfig(AuctionRule("FP"), agents, 20000, seed=seed, snapshot_times=(2000, 20000)))
        finals.append(dict(convergence_profile(r))[2000])
    assert np.mean(finals) < 0.5
