"""Repeated auctions among learning agents: run, record, and diagnose."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import _kernel
from .agents import ALGO_CODES, AgentConfig, MeanBasedReport, initial_log_weights
from .grid import BidGrid, JointBidDistribution, l1_distance
from .rules import AuctionRule, counterfactual_utilities_idx, utility_matrix

CHUNK = 4096


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    rule: AuctionRule
    agents: tuple
    T: int
    true_values: Optional[tuple] = None
    epsilon: float = 0.01
    burn_in_fraction: float = 0.05
    window: int = 100
    seed: int = 0
    snapshot_times: Optional[tuple] = None
    audit_gamma: Optional[float] = None
    record_trace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if self.true_values is not None:
            object.__setattr__(self, "true_values", tuple(float(v) for v in self.true_values))
        if self.snapshot_times is not None:
            object.__setattr__(self, "snapshot_times", tuple(int(t) for t in self.snapshot_times))

    def validate(self):
        if self.T < 1:
            raise ConfigError("T must be at least 1")
        if len(self.agents) < 2:
            raise ConfigError("a run needs at least two bidders")
        if self.true_values is not None and len(self.true_values) != len(self.agents):
            raise ConfigError("true_values and agents differ in length")
        if not 0 <= self.burn_in_fraction < 1:
            raise ConfigError("burn_in_fraction must lie in [0, 1)")
        if self.window < 1:
            raise ConfigError("window must be at least 1")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        for a in self.agents:
            if a.horizon is not None and a.horizon != self.T:
                raise ConfigError(f"agent horizon {a.horizon} differs from T={self.T}")
            if a.declared_value < self.epsilon:
                raise ConfigError("declared values must be at least one grid step")
            if a.algorithm == "Scripted":
                if any(len(row) != len(self.agents) for row in a.schedule):
                    raise ConfigError("schedule rows need one bid per bidder")
        if self.snapshot_times is not None and any(not 1 <= t <= self.T for t in self.snapshot_times):
            raise ConfigError("snapshot times must lie in [1, T]")

    @property
    def grid(self) -> BidGrid:
        top = max(a.declared_value for a in self.agents)
        return BidGrid(self.epsilon, math.floor(top / self.epsilon + 1e-9) * self.epsilon)

    @property
    def values_true(self) -> tuple:
        return self.true_values if self.true_values is not None else tuple(a.declared_value for a in self.agents)

    @property
    def burn_in(self) -> int:
        return int(self.burn_in_fraction * self.T)

    def resolved_agents(self) -> tuple:
        return tuple(a if a.horizon == self.T else _with_horizon(a, self.T) for a in self.agents)

    def player_grids(self) -> tuple:
        g = self.grid
        return tuple(g.truncated(a.n_actions(g) - 1) for a in self.agents)

    def default_snapshots(self) -> tuple:
        start = max(self.burn_in + 1, 1)
        ts = np.unique(np.geomspace(start, self.T, 50).round().astype(int))
        return tuple(int(t) for t in ts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rule"] = {"format": self.rule.format.value, "ctrs": list(self.rule.ctrs)}
        return d

    def digest(self) -> str:
        return config_digest(self.to_dict())


def _with_horizon(a: AgentConfig, T: int) -> AgentConfig:
    from dataclasses import replace
    return replace(a, horizon=T)


def config_digest(d) -> str:
    """Digest of a JSON-shaped config; independent of key order."""
    text = json.dumps(d, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(text.encode()).hexdigest()


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if hasattr(x, "value"):
        return x.value
    raise TypeError(f"not serializable: {type(x)}")


@dataclass(frozen=True, eq=False)
class RunRecord:
    config: RunConfig
    bids: np.ndarray  # (T, n) grid indices
    slots: np.ndarray  # (T, n) slot per bidder, -1 if none
    prices: np.ndarray  # (T, n) money per click
    u_agent: np.ndarray  # (T, n) realized utility at declared values
    u_user: np.ndarray  # (T, n) realized utility at true values
    regret: np.ndarray  # R_i^T, tie-expected, per agent
    regret_trajectory: np.ndarray  # (len(snapshot_times), n)
    snapshot_times: tuple
    mean_based: tuple  # MeanBasedReport per agent, or empty
    final_sigma: np.ndarray
    trace_sigma: Optional[np.ndarray] = None
    trace_prob: Optional[np.ndarray] = None

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def config_digest(self) -> str:
        return self.config.digest()

    @property
    def n(self) -> int:
        return self.bids.shape[1]

    @property
    def T(self) -> int:
        return self.bids.shape[0]

    @cached_property
    def grids(self) -> tuple:
        return self.config.player_grids()

    def bids_money(self) -> np.ndarray:
        return self.bids * self.config.epsilon

    def _rows(self, burn_in: bool) -> slice:
        return slice(self.config.burn_in if burn_in else 0, self.T)

    @cached_property
    def joint_empirical(self) -> JointBidDistribution:
        return JointBidDistribution.from_bids(self.grids, self.bids[self._rows(True)])

    def snapshot(self, t: int) -> JointBidDistribution:
        """Empirical joint distribution of post-burn-in rounds up to round ``t``."""
        start = self.config.burn_in
        if t <= start:
            start = 0
        return JointBidDistribution.from_bids(self.grids, self.bids[start:t])

    @property
    def snapshots(self) -> list:
        return [(t, self.snapshot(t)) for t in self.snapshot_times]

    def agent_utils(self, burn_in: bool = True) -> np.ndarray:
        return self.u_agent[self._rows(burn_in)].mean(axis=0)

    def user_utils(self, burn_in: bool = True) -> np.ndarray:
        return self.u_user[self._rows(burn_in)].mean(axis=0)

    def revenue_per_round(self) -> np.ndarray:
        ctr = self.config.rule.ctr_vector(self.n)
        got = np.where(self.slots >= 0, ctr[np.maximum(self.slots, 0)], 0.0)
        return (got * self.prices).sum(axis=1)

    def revenue_avg(self, burn_in: bool = True) -> float:
        return float(self.revenue_per_round()[self._rows(burn_in)].mean())

    def winners(self) -> np.ndarray:
        """Index of the top-slot bidder in each round."""
        return np.argmax(self.slots == 0, axis=1)

    def mean_price(self, burn_in: bool = False) -> float:
        """Average per-click price paid by the top-slot winner."""
        rows = self._rows(burn_in)
        p = self.prices[rows]
        return float(p[np.arange(len(p)), self.winners()[rows]].mean())

    def win_rate(self, player: int, burn_in: bool = True) -> float:
        return float(np.mean(self.winners()[self._rows(burn_in)] == player))

    def nonzero_bid_rate(self, player: int, burn_in: bool = True) -> float:
        return float(np.mean(self.bids[self._rows(burn_in), player] > 0))

    def summary(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "config_digest": self.config_digest,
            "seed": self.seed,
            "log_digest": self.log_digest(),
            "T": self.T,
            "burn_in": self.config.burn_in,
            "mean_price": self.mean_price(burn_in=False),
            "mean_price_post_burn_in": self.mean_price(burn_in=True),
            "win_rate": [self.win_rate(i) for i in range(self.n)],
            "agent_utils": self.agent_utils().tolist(),
            "user_utils": self.user_utils().tolist(),
            "revenue_avg": self.revenue_avg(),
            "regret": self.regret.tolist(),
            "regret_per_round": (self.regret / self.T).tolist(),
            "mean_based": [asdict(r) for r in self.mean_based],
        }

    def log_digest(self) -> str:
        h = hashlib.sha256()
        for a in (self.bids, self.slots, self.prices, self.u_agent, self.u_user):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def _agent_streams(config: RunConfig):
    children = np.random.SeedSequence(config.seed).spawn(len(config.agents) + 1)
    agent_rngs = []
    for a, child in zip(config.agents, children):
        agent_rngs.append(np.random.default_rng(a.seed if a.seed is not None else child))
    return agent_rngs, np.random.default_rng(children[-1])


def run(config: RunConfig) -> RunRecord:
    config.validate()
    agents = config.resolved_agents()
    n = len(agents)
    T = config.T
    grid = config.grid
    eps = config.epsilon
    n_act = np.array([a.n_actions(grid) for a in agents], dtype=np.int64)
    kmax = int(n_act.max())
    algo = np.array([ALGO_CODES[a.learner] for a in agents], dtype=np.int64)
    v_decl = np.array([a.declared_value for a in agents], dtype=float)
    v_true = np.array(config.values_true, dtype=float)
    u_scale = np.array([a.scale_u for a in agents], dtype=float)
    eta = np.array([a.eta_for(k) for a, k in zip(agents, n_act)])
    rho = np.array([a.recency_rho for a in agents])
    scale = np.array([a.scale_for(int(k)) for a, k in zip(agents, n_act)])
    scripted = np.array([a.algorithm == "Scripted" for a in agents])
    deviated = np.zeros(n, dtype=np.bool_)
    schedule = np.zeros((1, n), dtype=np.int64)
    for a in agents:
        if a.algorithm == "Scripted":
            schedule = np.array([grid.to_index(np.asarray(row, dtype=float)) for row in a.schedule], dtype=np.int64)
            break
    for i, a in enumerate(agents):
        if scripted[i]:
            own = np.array([grid.to_index(np.asarray(row, dtype=float)) for row in a.schedule], dtype=np.int64)
            if not np.array_equal(own, schedule):
                raise ConfigError("scripted agents must share one joint schedule")
            if np.any(schedule[:, i] >= n_act[i]):
                raise ConfigError("schedule bids exceed the declared value")

    logw = np.full((n, kmax), -np.inf)
    for i, a in enumerate(agents):
        logw[i, : n_act[i]] = initial_log_weights(a, int(n_act[i]))
    sigma = np.full((n, kmax), -np.inf)
    for i in range(n):
        sigma[i, : n_act[i]] = 0.0
    cum_cf = np.zeros((n, kmax))
    cum_real = np.zeros(n)

    gamma = config.audit_gamma
    audit_gamma = np.full(n, -1.0 if gamma is None else gamma)
    audit_gap = np.full(n, 0.0 if gamma is None else gamma * T)
    audit_max = np.zeros(n)
    audit_rounds = np.zeros(n, dtype=np.int64)

    bids = np.zeros((T, n), dtype=np.int64)
    slots = np.zeros((T, n), dtype=np.int64)
    prices = np.zeros((T, n))
    u_agent = np.zeros((T, n))
    u_user = np.zeros((T, n))
    if config.record_trace:
        trace_sigma = np.zeros((T, n, kmax))
        trace_prob = np.zeros((T, n, kmax))
    else:
        trace_sigma = trace_prob = np.zeros((0, n, kmax))

    snaps = config.snapshot_times if config.snapshot_times is not None else config.default_snapshots()
    stops = sorted(set(snaps) | set(range(CHUNK, T, CHUNK)) | {T})
    regret_traj = {}

    agent_rngs, tie_rng = _agent_streams(config)
    ftpl = [a.learner in ("FTPL", "FTPLRecency") for a in agents]
    ctr = config.rule.ctr_vector(n)
    dummy_z = np.zeros((1, n, 1))
    t0 = 0
    for t1 in stops:
        c = t1 - t0
        u_samp = np.empty((c, n))
        z = np.zeros((c, n, kmax)) if any(ftpl) else dummy_z
        for i, rng in enumerate(agent_rngs):
            u_samp[:, i] = rng.random(c)
            if ftpl[i]:
                z[:, i, : n_act[i]] = rng.standard_exponential((c, int(n_act[i])))
        u_tie = tie_rng.random((c, n))
        _kernel.run_chunk(t0, t1, config.rule.format.code, ctr, eps, algo, n_act, v_decl, v_true, u_scale, eta, rho,
                          scale, logw, sigma, cum_cf, cum_real, scripted, deviated, schedule,
                          u_samp, u_tie, z, audit_gamma, audit_gap, audit_max, audit_rounds,
                          bids, slots, prices, u_agent, u_user, trace_sigma, trace_prob)
        if t1 in snaps:
            regret_traj[t1] = [cum_cf[i, : n_act[i]].max() - cum_real[i] for i in range(n)]
        t0 = t1

    regret = np.array([cum_cf[i, : n_act[i]].max() - cum_real[i] for i in range(n)])
    reports = tuple(MeanBasedReport(gamma, float(audit_max[i]), int(audit_rounds[i])) for i in range(n)) \
        if gamma is not None else ()
    return RunRecord(
        config=config, bids=bids, slots=slots, prices=prices, u_agent=u_agent, u_user=u_user,
        regret=regret, regret_trajectory=np.array([regret_traj[t] for t in snaps]),
        snapshot_times=tuple(snaps), mean_based=reports, final_sigma=sigma,
        trace_sigma=trace_sigma if config.record_trace else None,
        trace_prob=trace_prob if config.record_trace else None,
    )


def cumulative_counterfactual(record: RunRecord, player: int, t: Optional[int] = None) -> np.ndarray:
    """Sum over rounds of the counterfactual utility of every fixed bid, from the bid log."""
    cfg = record.config
    grid = cfg.grid
    agent = cfg.agents[player]
    bids = record.bids[: t if t is not None else record.T]
    others = np.delete(bids, player, axis=1)
    cap = agent.n_actions(grid) - 1
    if record.n == 2:
        counts = np.bincount(others[:, 0], minlength=grid.levels)
        U = utility_matrix(cfg.rule, agent.declared_value, grid, grid.levels, cap=cap)
        return U @ counts
    rows, counts = np.unique(others, axis=0, return_counts=True)
    total = np.zeros(cap + 1)
    for row, c in zip(rows, counts):
        total += c * counterfactual_utilities_idx(cfg.rule, row, agent.declared_value, grid, cap=cap)
    return total


def realized_expected_utility(record: RunRecord, player: int) -> float:
    """Sum of tie-expected utilities of the bids actually played."""
    cfg = record.config
    grid = cfg.grid
    agent = cfg.agents[player]
    cap = agent.n_actions(grid) - 1
    own = record.bids[:, player]
    others = np.delete(record.bids, player, axis=1)
    if record.n == 2:
        U = utility_matrix(cfg.rule, agent.declared_value, grid, grid.levels, cap=cap)
        pairs = np.zeros((cap + 1, grid.levels))
        np.add.at(pairs, (own, others[:, 0]), 1.0)
        return float((U * pairs).sum())
    rows, inv = np.unique(np.column_stack([own, others]), axis=0, return_inverse=True)
    counts = np.bincount(inv.ravel())
    total = 0.0
    for row, c in zip(rows, counts):
        u = counterfactual_utilities_idx(cfg.rule, row[1:], agent.declared_value, grid, cap=cap)
        total += c * u[row[0]]
    return total


def regret_of(record: RunRecord, player: int) -> float:
    """Hindsight regret against the best fixed bid, recomputed exactly from the bid log."""
    return float(cumulative_counterfactual(record, player).max() - realized_expected_utility(record, player))


def convergence_profile(record: RunRecord) -> list:
    final = record.joint_empirical
    return [(t, l1_distance(record.snapshot(t), final)) for t in record.snapshot_times]


def running_average(bid_log: np.ndarray, window: int) -> np.ndarray:
    """Sliding-window mean of each column; row ``k`` averages rounds ``k..k+window-1``."""
    x = np.asarray(bid_log, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if window < 1:
        raise ValueError("window must be at least 1")
    if window > len(x):
        raise ValueError(f"window {window} exceeds the {len(x)} logged rounds")
    c = np.cumsum(np.vstack([np.zeros((1, x.shape[1])), x]), axis=0)
    return (c[window:] - c[:-window]) / window
