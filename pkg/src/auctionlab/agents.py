"""Regret-minimizing bidders over a no-overbid bid grid.

Utilities enter an agent divided by ``utility_scale``: a fixed money unit by
default (1.0, so every bidder learns at the same speed per unit of money), or
the agent's own declared value with ``utility_scale="declared"``. ``sigma`` is
the running (scaled) sum of per-action utilities; MWLinear and Hedge
additionally keep log-weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .grid import BidGrid, Marginal

ALGORITHMS = ("MWLinear", "Hedge", "FTPL", "FTPLRecency", "Scripted")
LEARNERS = ALGORITHMS[:4]
ALGO_CODES = {name: code for code, name in enumerate(LEARNERS)}


class HorizonExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class AgentConfig:
    algorithm: str
    declared_value: float
    horizon: Optional[int] = None
    eta: Optional[float] = None
    eta_scale: float = 1.0  # multiplies the default sqrt(ln K / T) when eta is unset
    perturb_scale: Optional[float] = None
    recency_rho: float = 0.9998
    seed: Optional[int] = None
    utility_scale: float | str = 1.0
    init: str = "uniform"
    init_weights: Optional[tuple] = None
    # Scripted agents: joint schedule of money bid tuples (repeats cyclically)
    # and the learner they fall back to after an observed deviation
    schedule: Optional[tuple] = None
    fallback: str = "MWLinear"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if not self.declared_value > 0:
            raise ValueError("declared_value must be positive")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not self.eta_scale > 0:
            raise ValueError("eta_scale must be positive")
        if not 0 < self.recency_rho < 1:
            raise ValueError("recency_rho must lie in (0, 1)")
        if self.algorithm == "Scripted":
            if not self.schedule:
                raise ValueError("Scripted agents need a nonempty schedule")
            if self.fallback not in LEARNERS:
                raise ValueError(f"fallback must be one of {LEARNERS}")
        if isinstance(self.utility_scale, str):
            if self.utility_scale != "declared":
                raise ValueError("utility_scale must be positive or 'declared'")
        elif not self.utility_scale > 0:
            raise ValueError("utility_scale must be positive or 'declared'")
        if self.init not in ("uniform", "custom"):
            raise ValueError("init must be 'uniform' or 'custom'")
        if self.init == "custom":
            w = np.asarray(self.init_weights, dtype=float)
            if w.ndim != 1 or np.any(w <= 0):
                raise ValueError("custom init_weights must be a positive vector")

    @property
    def learner(self) -> str:
        """The algorithm that actually learns (a Scripted agent's fallback)."""
        return self.fallback if self.algorithm == "Scripted" else self.algorithm

    def n_actions(self, grid: BidGrid) -> int:
        return grid.cap_index(self.declared_value) + 1

    @property
    def scale_u(self) -> float:
        """Money amount that maps to a normalized utility of 1."""
        return self.declared_value if self.utility_scale == "declared" else float(self.utility_scale)

    def eta_for(self, k: int) -> float:
        if self.eta is not None:
            return self.eta
        return self.eta_scale * math.sqrt(math.log(k) / self._horizon())

    def scale_for(self, k: int) -> float:
        """Exponential noise scale sqrt(H / ln K), H the horizon or the discounted memory."""
        if self.perturb_scale is not None:
            return self.perturb_scale
        h = self._horizon()
        if self.learner == "FTPLRecency":
            h = min(h, 1.0 / (1.0 - self.recency_rho))
        return math.sqrt(h / math.log(max(k, 2)))

    def _horizon(self) -> int:
        if self.horizon is None:
            raise ValueError("agent horizon is unset")
        return self.horizon


@dataclass(frozen=True, eq=False)
class AgentState:
    cumulative_utils: np.ndarray  # sigma, normalized (discounted for FTPLRecency)
    log_weights: np.ndarray
    round: int = 0
    grid: Optional[BidGrid] = None

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_weights.max())


@dataclass(frozen=True)
class MeanBasedReport:
    gamma: float
    max_violation: float
    violating_rounds: int


def initial_log_weights(config: AgentConfig, k: int) -> np.ndarray:
    if config.init == "custom":
        w = np.asarray(config.init_weights, dtype=float)
        if w.shape != (k,):
            raise ValueError(f"init_weights has {w.size} entries for {k} actions")
        return np.log(w / w.sum())
    return np.zeros(k)


def init_state(config: AgentConfig, grid: BidGrid) -> AgentState:
    k = config.n_actions(grid)
    return AgentState(np.zeros(k), initial_log_weights(config, k), 0, grid.truncated(k - 1))


def _ftpl_probabilities(sigma: np.ndarray, scale: float, n_points: int = 20001) -> np.ndarray:
    """Probability that each action wins argmax(sigma + scale * Exp(1) noise).

    Conditioning on the winner's noise ``z``:
    P(i) = int exp(-z) prod_{j != i} (1 - exp(-max(sigma_i - sigma_j + scale z, 0) / scale)) dz.
    """
    s = (sigma - sigma.max()) / scale
    k = s.size
    zmax = 50.0 + float(s.max() - s.min())
    z = np.linspace(0.0, zmax, n_points)
    out = np.empty(k)
    for i in range(k):
        gap = s[i] - np.delete(s, i)
        cdf = -np.expm1(-np.maximum(gap[:, None] + z[None, :], 0.0))
        integrand = np.exp(-z) * np.prod(cdf, axis=0)
        out[i] = np.trapezoid(integrand, z)
    return out / out.sum()


def action_distribution(state: AgentState, config: AgentConfig) -> Marginal:
    if state.round >= config._horizon():
        raise HorizonExceededError(f"round {state.round} is past horizon {config.horizon}")
    algo = config.learner
    if algo in ("MWLinear", "Hedge"):
        w = state.weights
        p = w / w.sum()
    else:
        p = _ftpl_probabilities(state.cumulative_utils, config.scale_for(state.cumulative_utils.size))
    grid = state.grid or BidGrid(1.0, len(p) - 1)
    return Marginal(grid, p)


def update(state: AgentState, config: AgentConfig, utilities: Sequence[float]) -> AgentState:
    """Feed one round of full-information (money) utilities, one per allowed bid."""
    u = np.asarray(utilities, dtype=float)
    if u.shape != state.cumulative_utils.shape:
        raise ValueError(f"expected {state.cumulative_utils.size} utilities, got {u.size}")
    if np.any(u < 0):
        raise ValueError("negative utility: bids above the declared value are not allowed")
    g = u / config.scale_u
    algo = config.learner
    k = u.size
    if algo == "FTPLRecency":
        sigma = config.recency_rho * state.cumulative_utils + g
    else:
        sigma = state.cumulative_utils + g
    logw = state.log_weights
    if algo == "MWLinear":
        logw = logw + np.log1p(config.eta_for(k) * g)
    elif algo == "Hedge":
        logw = logw + config.eta_for(k) * g
    return replace(state, cumulative_utils=sigma, log_weights=logw, round=state.round + 1)


def sample_action(state: AgentState, config: AgentConfig, u: float, z: np.ndarray | None = None) -> int:
    """Draw an action from the uniform ``u`` (weights) or exponential noise ``z`` (FTPL)."""
    if config.learner in ("FTPL", "FTPLRecency"):
        return int(np.argmax(state.cumulative_utils + config.scale_for(state.cumulative_utils.size) * np.asarray(z)))
    w = state.weights
    c = np.cumsum(w)
    return int(min(np.searchsorted(c, u * c[-1], side="right"), len(w) - 1))


def scripted_play(schedule: Sequence[Sequence[int]], t: int, player: int, fallback_state: AgentState,
                  fallback: AgentConfig, observed_deviation: bool, u: float,
                  z: np.ndarray | None = None) -> int:
    """Bid index for round ``t``: the schedule entry until a deviation was seen, then the fallback."""
    if not observed_deviation:
        return int(schedule[t % len(schedule)][player])
    return sample_action(fallback_state, fallback, u, z)


def deviation_seen(schedule: Sequence[Sequence[int]], t: int, player: int, bids: Sequence[int]) -> bool:
    row = schedule[t % len(schedule)]
    return any(int(b) != int(row[j]) for j, b in enumerate(bids) if j != player)


def mean_based_audit(bid_log: np.ndarray, sigma_log: np.ndarray, gamma: float,
                     prob_log: np.ndarray | None = None, horizon: int | None = None) -> MeanBasedReport:
    """Check the gamma-mean-based property on one agent's logs.

    ``sigma_log[t]`` holds the normalized cumulative utilities before round
    ``t``; ``prob_log[t]`` the probabilities used in round ``t``. Without
    ``prob_log`` the indicator of the played bid stands in for the probability.
    """
    sigma_log = np.asarray(sigma_log, dtype=float)
    T = len(sigma_log) if horizon is None else horizon
    if prob_log is None:
        prob_log = np.zeros_like(sigma_log)
        prob_log[np.arange(len(bid_log)), np.asarray(bid_log)] = 1.0
    trailing = sigma_log < sigma_log.max(axis=1, keepdims=True) - gamma * T
    masked = np.where(trailing, prob_log, 0.0)
    worst = masked.max(axis=1)
    return MeanBasedReport(gamma, float(worst.max(initial=0.0)), int(np.sum(worst > gamma)))
