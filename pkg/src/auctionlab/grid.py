"""Discrete bid grids and probability tables over bids.

Bids are integer indices into a grid; index ``k`` means ``k * epsilon`` money.
Conversion to money happens only at I/O boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

NORM_TOL = 1e-9
DEFAULT_SUPPORT_TOL = 1e-6


class GridMismatchError(ValueError):
    """Two distributions live on different bid grids."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BidGrid:
    epsilon: float
    max_bid: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        ratio = self.max_bid / self.epsilon
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"max_bid {self.max_bid} is not a multiple of epsilon {self.epsilon}")
        if round(ratio) < 1:
            raise ValueError("a grid needs at least two levels")

    @property
    def levels(self) -> int:
        return int(round(self.max_bid / self.epsilon)) + 1

    @property
    def money(self) -> np.ndarray:
        return np.arange(self.levels) * self.epsilon

    def to_money(self, index):
        return np.asarray(index) * self.epsilon

    def to_index(self, money, strict: bool = True):
        """Money -> grid index. With ``strict`` off-grid amounts raise."""
        x = np.asarray(money, dtype=float) / self.epsilon
        k = np.rint(x)
        if strict and np.any(np.abs(x - k) > 1e-6):
            raise ValueError(f"{money} is not on the epsilon={self.epsilon} grid")
        if np.any(k < 0) or np.any(k >= self.levels):
            raise ValueError(f"{money} outside grid [0, {self.max_bid}]")
        k = k.astype(np.int64)
        return int(k) if k.ndim == 0 else k

    def cap_index(self, value: float) -> int:
        """Largest index whose money amount does not exceed ``value``."""
        return min(self.levels - 1, int(math.floor(value / self.epsilon + 1e-9)))

    def truncated(self, max_index: int) -> "BidGrid":
        return BidGrid(self.epsilon, max_index * self.epsilon)


@dataclass(frozen=True, eq=False)
class Marginal:
    grid: BidGrid
    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.shape != (self.grid.levels,):
            raise ValueError(f"expected {self.grid.levels} probabilities, got shape {p.shape}")
        if np.any(p < -NORM_TOL) or abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError("marginal must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", p)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def mean(self) -> float:
        return float(self.probs @ self.grid.money)


@dataclass(frozen=True, eq=False)
class JointBidDistribution:
    """Dense probability table over bid index tuples, one axis per player."""

    grids: tuple
    probs: np.ndarray

    def __post_init__(self):
        grids = tuple(self.grids)
        p = _frozen(self.probs)
        if p.shape != tuple(g.levels for g in grids):
            raise ValueError(f"table shape {p.shape} does not match grids {[g.levels for g in grids]}")
        if np.any(p < -NORM_TOL) or abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError("joint distribution must be nonnegative and sum to 1")
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "probs", p)

    @property
    def n_players(self) -> int:
        return len(self.grids)

    def marginal(self, player: int) -> Marginal:
        axes = tuple(a for a in range(self.n_players) if a != player)
        return Marginal(self.grids[player], self.probs.sum(axis=axes))

    @classmethod
    def from_counts(cls, grids: Sequence[BidGrid], counts: np.ndarray) -> "JointBidDistribution":
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise ValueError("no observations")
        return cls(tuple(grids), counts / total)

    @classmethod
    def from_bids(cls, grids: Sequence[BidGrid], bids: np.ndarray) -> "JointBidDistribution":
        """Empirical distribution of integer bid tuples (rows of ``bids``)."""
        shape = tuple(g.levels for g in grids)
        flat = np.ravel_multi_index(tuple(np.asarray(bids).T), shape)
        counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
        return cls.from_counts(grids, counts)

    @classmethod
    def point_mass(cls, grids: Sequence[BidGrid], cell: Sequence[int]) -> "JointBidDistribution":
        p = np.zeros(tuple(g.levels for g in grids))
        p[tuple(cell)] = 1.0
        return cls(tuple(grids), p)

    @classmethod
    def uniform_over(cls, grids: Sequence[BidGrid], cells: Sequence[Sequence[int]]) -> "JointBidDistribution":
        p = np.zeros(tuple(g.levels for g in grids))
        for c in cells:
            p[tuple(c)] += 1.0
        return cls.from_counts(grids, p)


@dataclass(frozen=True)
class SupportPair:
    support_a: frozenset
    support_b: frozenset

    def __post_init__(self):
        if not self.support_a or not self.support_b:
            raise ValueError("supports must be nonempty")


def _check_same_grids(a: JointBidDistribution, b: JointBidDistribution):
    if a.grids != b.grids or a.probs.shape != b.probs.shape:
        raise GridMismatchError("distributions are defined on different grids")


def l1_distance(a: JointBidDistribution, b: JointBidDistribution) -> float:
    _check_same_grids(a, b)
    return float(np.abs(a.probs - b.probs).sum())


def support_of(d: JointBidDistribution, support_tol: float = DEFAULT_SUPPORT_TOL) -> SupportPair:
    if not 0 <= support_tol < 1:
        raise ValueError("support_tol must lie in [0, 1)")
    rows = d.probs.sum(axis=1)
    cols = d.probs.sum(axis=0)
    return SupportPair(
        frozenset(int(i) for i in np.flatnonzero(rows > support_tol)),
        frozenset(int(j) for j in np.flatnonzero(cols > support_tol)),
    )


def ks_distance(empirical: Marginal, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Largest gap between the empirical step CDF and a continuous CDF.

    Grid point ``k`` stands for the cell ``[(k - 1/2) eps, (k + 1/2) eps)``, so the
    empirical CDF at ``k`` is compared with ``cdf`` at the cell's upper edge.
    """
    g = empirical.grid
    edges = (np.arange(g.levels) + 0.5) * g.epsilon
    ref = np.clip(np.asarray(cdf(edges), dtype=float), 0.0, 1.0)
    return float(np.max(np.abs(empirical.cdf() - ref)))
