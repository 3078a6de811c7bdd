"""Declared-value sweeps: users with fixed true values pick what to tell their agents."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .agents import AgentConfig
from .dynamics import ConfigError, RunConfig, run
from .rules import AuctionRule

SURFACE_COLUMNS = ("v_declared", "w_declared", "seed_count", "u1_mean", "u1_se", "u2_mean", "u2_se",
                   "revenue_mean", "high_win_rate", "nonzero_low_rate")


@dataclass(frozen=True)
class SweepConfig:
    rule: AuctionRule
    declared_grid: tuple  # (v, w) declaration pairs
    T: int
    algorithm: str = "MWLinear"
    true_values: tuple = (1.0, 1.0)
    seeds: int = 5
    base_seed: int = 0
    epsilon: float = 0.01
    burn_in_fraction: float = 0.05
    agent_options: dict = field(default_factory=dict)  # extra AgentConfig fields, e.g. eta_scale

    def __post_init__(self):
        object.__setattr__(self, "declared_grid", tuple((float(v), float(w)) for v, w in self.declared_grid))
        object.__setattr__(self, "true_values", tuple(float(x) for x in self.true_values))

    def validate(self):
        if not self.declared_grid:
            raise ConfigError("declared grid is empty")
        if any(v <= 0 or w <= 0 for v, w in self.declared_grid):
            raise ConfigError("declarations must be positive")
        if self.seeds < 3:
            raise ConfigError("need at least 3 seeds per cell for error bars")
        if len(self.true_values) != 2:
            raise ConfigError("sweeps are two-user")
        if self.T < 1:
            raise ConfigError("T must be at least 1")

    @staticmethod
    def slice_grid(fixed_player: int, fixed_value: float, values: Sequence[float]) -> tuple:
        """Pairs varying one user's declaration while the other stays at ``fixed_value``."""
        if fixed_player == 1:
            return tuple((float(v), float(fixed_value)) for v in values)
        return tuple((float(fixed_value), float(w)) for w in values)

    def run_config(self, cell: tuple, seed: int) -> RunConfig:
        agents = [AgentConfig(self.algorithm, d, **self.agent_options) for d in cell]
        return RunConfig(self.rule, agents, self.T, true_values=self.true_values, epsilon=self.epsilon,
                         burn_in_fraction=self.burn_in_fraction, seed=seed)


def cell_seed(base_seed: int, cell: tuple) -> int:
    """Stable per-cell seed: base_seed xor a hash of the cell coordinates."""
    key = ",".join(f"{x:.10g}" for x in cell).encode()
    h = int.from_bytes(hashlib.sha256(key).digest()[:8], "little")
    return (int(base_seed) ^ h) & 0x7FFF_FFFF_FFFF_FFFF


def run_seeds(base_seed: int, cell: tuple, n: int) -> list:
    s = cell_seed(base_seed, cell)
    return [int(x) for x in np.random.SeedSequence(s).generate_state(n, dtype=np.uint64) >> np.uint64(1)]


@dataclass(frozen=True)
class CellStats:
    v: float
    w: float
    seed_count: int
    u1_mean: float
    u1_se: float
    u2_mean: float
    u2_se: float
    revenue_mean: float
    high_win_rate: float
    nonzero_low_rate: float
    error: Optional[str] = None

    def u_mean(self, player: int) -> float:
        return self.u1_mean if player == 0 else self.u2_mean

    def u_se(self, player: int) -> float:
        return self.u1_se if player == 0 else self.u2_se


@dataclass(frozen=True)
class PayoffSurface:
    cells: tuple
    seeds: dict = field(default_factory=dict)  # cell -> run seeds used

    def lookup(self, v: float, w: float) -> Optional[CellStats]:
        for c in self.cells:
            if math.isclose(c.v, v, abs_tol=1e-9) and math.isclose(c.w, w, abs_tol=1e-9):
                return c
        return None

    def slice(self, player: int, opponent_declaration: float) -> list:
        """Cells where the other user declares ``opponent_declaration``, ordered by ``player``'s declaration."""
        if player == 0:
            out = [c for c in self.cells if math.isclose(c.w, opponent_declaration, abs_tol=1e-9)]
            return sorted(out, key=lambda c: c.v)
        out = [c for c in self.cells if math.isclose(c.v, opponent_declaration, abs_tol=1e-9)]
        return sorted(out, key=lambda c: c.w)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(SURFACE_COLUMNS)
        for c in self.cells:
            if c.error is not None:
                continue
            wr.writerow([f"{c.v:.6g}", f"{c.w:.6g}", c.seed_count] +
                        [f"{x:.9f}" for x in (c.u1_mean, c.u1_se, c.u2_mean, c.u2_se, c.revenue_mean,
                                              c.high_win_rate, c.nonzero_low_rate)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PayoffSurface":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != SURFACE_COLUMNS:
            raise ValueError("not a payoff surface CSV: header mismatch")
        cells = []
        for n, r in enumerate(rows[1:], start=2):
            if len(r) != len(SURFACE_COLUMNS):
                raise ValueError(f"row {n}: expected {len(SURFACE_COLUMNS)} fields, got {len(r)}")
            x = [float(a) for a in r]
            cells.append(CellStats(x[0], x[1], int(x[2]), *x[3:]))
        return cls(tuple(cells))


def _cell_stats(cell: tuple, records: list) -> CellStats:
    u = np.array([r.user_utils() for r in records])
    k = len(records)
    se = u.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.zeros(2)
    v, w = cell
    hi, lo = (0, 1) if v >= w else (1, 0)
    rev = np.mean([r.revenue_avg() for r in records])
    win = np.mean([r.win_rate(hi) for r in records])
    nz = np.mean([r.nonzero_bid_rate(lo) for r in records])
    return CellStats(v, w, k, float(u[:, 0].mean()), float(se[0]), float(u[:, 1].mean()), float(se[1]),
                     float(rev), float(win), float(nz))


def _run_cell(args):
    config, cell = args
    seeds = run_seeds(config.base_seed, cell, config.seeds)
    try:
        records = [run(config.run_config(cell, s)) for s in seeds]
        return _cell_stats(cell, records), seeds
    except Exception as exc:  # reported per cell; the sweep goes on
        nan = float("nan")
        return CellStats(cell[0], cell[1], 0, nan, nan, nan, nan, nan, nan, nan, error=repr(exc)), seeds


def sweep(config: SweepConfig, workers: int = 1) -> PayoffSurface:
    config.validate()
    jobs = [(config, cell) for cell in config.declared_grid]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    return PayoffSurface(tuple(r[0] for r in results), {c: r[1] for c, r in zip(config.declared_grid, results)})


@dataclass(frozen=True)
class BestResponse:
    declaration: float
    utility: float
    reliable: bool


def best_response(surface: PayoffSurface, player: int, opponent_declaration: float) -> BestResponse:
    """Argmax of ``player``'s mean utility along the slice; unreliable if a neighbor is within one SE."""
    cells = [c for c in surface.slice(player, opponent_declaration) if c.error is None]
    if not cells:
        raise KeyError(f"no cells with the opponent declaring {opponent_declaration}")
    means = np.array([c.u_mean(player) for c in cells])
    i = int(np.argmax(means))
    se = cells[i].u_se(player)
    decl = [c.v if player == 0 else c.w for c in cells]
    reliable = True
    for j in (i - 1, i + 1):
        if 0 <= j < len(cells) and means[i] - means[j] <= se:
            reliable = False
    return BestResponse(decl[i], float(means[i]), reliable)


@dataclass(frozen=True)
class EquilibriumVerdict:
    verdict: bool
    gains: tuple  # per player: (best deviation, utility gain, allowance)


def check_metagame_equilibrium(surface: PayoffSurface, candidate: tuple, tolerance: float) -> EquilibriumVerdict:
    """True iff no unilateral deviation on the grid gains more than tolerance + 2 standard errors."""
    v, w = candidate
    base = surface.lookup(v, w)
    if base is None or base.error is not None:
        raise KeyError(f"surface has no cell for the candidate {candidate}")
    gains = []
    ok = True
    for player, opp in ((0, w), (1, v)):
        devs = [c for c in surface.slice(player, opp) if c.error is None and c is not base]
        if not devs:
            raise KeyError(f"surface has no unilateral deviations for player {player + 1}")
        best = None
        for c in devs:
            gain = c.u_mean(player) - base.u_mean(player)
            allow = tolerance + 2 * math.hypot(c.u_se(player), base.u_se(player))
            if best is None or gain - allow > best[1] - best[2]:
                best = (c.v if player == 0 else c.w, gain, allow)
        ok = ok and best[1] <= best[2]
        gains.append(best)
    return EquilibriumVerdict(ok, tuple(gains))


def analytic_surface(grid: Sequence[tuple]) -> PayoffSurface:
    """Noise-free surface from the nearly-diagonal prediction (users' true values 1)."""
    from .analytic import nearly_diagonal
    cells = []
    for v, w in grid:
        m = nearly_diagonal(v, w)
        u1, u2 = (m.u1, m.u2) if v >= w else (m.u2, m.u1)
        cells.append(CellStats(float(v), float(w), 1, u1, 0.0, u2, 0.0, float("nan"), float("nan"),
                               m.diagonal_prob))
    return PayoffSurface(tuple(cells))
