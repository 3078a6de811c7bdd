"""Allocation, payment and utility semantics for FP, SP, GFP and GSP auctions.

All functions here work on integer bid indices plus a grid step; money-valued
wrappers convert at the boundary. Ties are broken by a uniform random
permutation of the tied bidders. In second-price formats a bidder whose
immediate follower is tied with it pays the tied bid.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import BidGrid


class AuctionFormat(str, Enum):
    FirstPrice = "FirstPrice"
    SecondPrice = "SecondPrice"
    GeneralizedFirstPrice = "GeneralizedFirstPrice"
    GeneralizedSecondPrice = "GeneralizedSecondPrice"

    @property
    def code(self) -> int:
        return _CODES[self]

    @property
    def pays_own_bid(self) -> bool:
        return self in (AuctionFormat.FirstPrice, AuctionFormat.GeneralizedFirstPrice)


_CODES = {
    AuctionFormat.FirstPrice: 0,
    AuctionFormat.SecondPrice: 1,
    AuctionFormat.GeneralizedFirstPrice: 2,
    AuctionFormat.GeneralizedSecondPrice: 3,
}

_ALIASES = {"FP": "FirstPrice", "SP": "SecondPrice", "GFP": "GeneralizedFirstPrice", "GSP": "GeneralizedSecondPrice"}


class UnsupportedRuleError(ValueError):
    pass


@dataclass(frozen=True)
class AuctionRule:
    format: AuctionFormat
    ctrs: tuple | None = None  # defaults: (1,) single-item, (1, 0.5) position auctions

    def __post_init__(self):
        fmt = AuctionFormat(_ALIASES.get(self.format, self.format))
        if self.ctrs is None:
            ctrs = (1.0,) if fmt in (AuctionFormat.FirstPrice, AuctionFormat.SecondPrice) else (1.0, 0.5)
        else:
            ctrs = tuple(float(c) for c in self.ctrs)
        object.__setattr__(self, "format", fmt)
        object.__setattr__(self, "ctrs", ctrs)
        if fmt in (AuctionFormat.FirstPrice, AuctionFormat.SecondPrice):
            if ctrs != (1.0,):
                raise ValueError("single-item formats have exactly one slot with ctr 1")
        else:
            if not ctrs or any(not 0 < c <= 1 for c in ctrs):
                raise ValueError("click-through rates must lie in (0, 1]")
            if any(a < b for a, b in zip(ctrs, ctrs[1:])):
                raise ValueError("click-through rates must be nonincreasing")

    @property
    def num_slots(self) -> int:
        return len(self.ctrs)

    def ctr_vector(self, n_bidders: int) -> np.ndarray:
        """Slot ctrs padded with zero-ctr slots so every bidder has a position."""
        c = np.zeros(max(n_bidders, self.num_slots) + 1)
        c[: self.num_slots] = self.ctrs
        return c

    @classmethod
    def first_price(cls):
        return cls(AuctionFormat.FirstPrice)

    @classmethod
    def second_price(cls):
        return cls(AuctionFormat.SecondPrice)

    @classmethod
    def gfp(cls, ctrs=(1.0, 0.5)):
        return cls(AuctionFormat.GeneralizedFirstPrice, ctrs)

    @classmethod
    def gsp(cls, ctrs=(1.0, 0.5)):
        return cls(AuctionFormat.GeneralizedSecondPrice, ctrs)


@dataclass(frozen=True, eq=False)
class AuctionOutcome:
    assignment: np.ndarray  # slot per bidder, -1 when unassigned
    prices: np.ndarray  # money per click
    utilities: np.ndarray
    revenue: float
    ctr: np.ndarray  # realized ctr per bidder (0 when unassigned)


def rank_bidders(bids: np.ndarray, tie_keys: np.ndarray) -> np.ndarray:
    """Bidder indices from highest to lowest bid; ties ordered by ``tie_keys``."""
    return np.lexsort((tie_keys, -np.asarray(bids)))


def _resolve(rule: AuctionRule, rank_keys, bid_money, values, tie_keys) -> AuctionOutcome:
    bid_money = np.asarray(bid_money, dtype=float)
    values = np.asarray(values, dtype=float)
    n = len(bid_money)
    if len(values) != n or len(tie_keys) != n:
        raise ValueError(f"got {n} bids, {len(values)} values and {len(tie_keys)} tie keys")
    ctr = rule.ctr_vector(n)
    order = rank_bidders(rank_keys, np.asarray(tie_keys))
    assignment = np.full(n, -1)
    prices = np.zeros(n)
    got = np.zeros(n)
    for pos, who in enumerate(order):
        if ctr[pos] <= 0:
            break
        assignment[who] = pos
        got[who] = ctr[pos]
        if rule.format.pays_own_bid:
            prices[who] = bid_money[who]
        else:
            prices[who] = bid_money[order[pos + 1]] if pos + 1 < n else 0.0
    utilities = got * (values - prices)
    return AuctionOutcome(assignment, prices, utilities, float(got @ prices), got)


def resolve_indices(rule: AuctionRule, bids, values, eps: float, tie_keys) -> AuctionOutcome:
    bids = np.asarray(bids, dtype=np.int64)
    return _resolve(rule, bids, bids * eps, values, tie_keys)


def resolve(rule: AuctionRule, bids, values, tie_seed=None, grid: BidGrid | None = None) -> AuctionOutcome:
    """Run one auction on money-valued bids.

    ``tie_seed`` may be a numpy Generator, an int seed, or an explicit array of
    per-bidder tie keys (lower key wins a tie).
    """
    bids = np.asarray(bids, dtype=float)
    values = np.asarray(values, dtype=float)
    if bids.shape != values.shape:
        raise ValueError(f"{len(bids)} bids for {len(values)} bidders")
    if grid is not None:
        grid.to_index(bids)
    if isinstance(tie_seed, (np.ndarray, list, tuple)):
        keys = np.asarray(tie_seed, dtype=float)
    else:
        rng = tie_seed if isinstance(tie_seed, np.random.Generator) else np.random.default_rng(tie_seed)
        keys = rng.random(len(bids))
    # rounding makes equal money amounts compare as ties
    return _resolve(rule, np.round(bids, 9), bids, values, keys)


def expected_position_utility(fmt: AuctionFormat, ctr: np.ndarray, bid: int, others: np.ndarray,
                              value: float, eps: float) -> float:
    """Exact expected utility of ``bid`` against fixed ``others``, averaging over tie orders."""
    others = np.asarray(others)
    higher = int(np.sum(others > bid))
    tied = int(np.sum(others == bid))
    below = others[others < bid]
    next_below = below.max() if below.size else 0
    total = 0.0
    for k in range(higher, higher + tied + 1):
        if fmt.pays_own_bid:
            price = bid
        else:
            price = bid if k < higher + tied else next_below
        total += ctr[k] * (value - price * eps)
    return total / (tied + 1)


def counterfactual_utilities_idx(rule: AuctionRule, others, my_value: float, grid: BidGrid,
                                 cap: int | None = None) -> np.ndarray:
    """Expected utility of every allowed own bid index against fixed ``others`` indices."""
    others = np.atleast_1d(np.asarray(others, dtype=np.int64))
    ctr = rule.ctr_vector(len(others) + 1)
    top = grid.cap_index(my_value) if cap is None else cap
    return np.array([
        expected_position_utility(rule.format, ctr, b, others, my_value, grid.epsilon)
        for b in range(top + 1)
    ])


def counterfactual_utilities(rule: AuctionRule, my_index: int, others_bids, my_value: float,
                             grid: BidGrid) -> np.ndarray:
    """Money-valued wrapper; ``my_index`` is the bidder's seat and does not affect symmetric rules."""
    del my_index
    others = grid.to_index(np.atleast_1d(np.asarray(others_bids, dtype=float)))
    return counterfactual_utilities_idx(rule, others, my_value, grid)


def utility_matrix(rule: AuctionRule, value: float, grid: BidGrid, opp_levels: int,
                   cap: int | None = None) -> np.ndarray:
    """Two-player table ``U[own_bid, opp_bid]`` of tie-expected utilities."""
    top = grid.cap_index(value) if cap is None else cap
    own = np.arange(top + 1)[:, None]
    opp = np.arange(opp_levels)[None, :]
    eps = grid.epsilon
    c1, c2 = (rule.ctrs + (0.0,))[:2]
    if rule.format.pays_own_bid:
        win = c1 * (value - own * eps)
        lose = c2 * (value - own * eps) + 0 * opp
    else:
        win = c1 * (value - opp * eps)
        lose = np.full_like(win, c2 * value) if c2 else np.zeros_like(win)
        lose = lose + 0 * own
    # tie: either position with equal odds; price on the tie equals the tied bid
    # except in second-price formats, where the lower seat pays 0 (no follower)
    if rule.format.pays_own_bid:
        tie = 0.5 * (c1 + c2) * (value - own * eps)
    else:
        tie = 0.5 * (c1 * (value - own * eps) + c2 * value)
    win = np.broadcast_to(win, (top + 1, opp_levels))
    lose = np.broadcast_to(lose, (top + 1, opp_levels))
    tie = np.broadcast_to(tie, (top + 1, opp_levels))
    return np.where(own > opp, win, np.where(own < opp, lose, tie))


def expected_utility_on_tie(rule: AuctionRule, bid: float, value: float) -> float:
    """Two-player expected utility when both bidders submit ``bid``."""
    if rule.num_slots > 2:
        raise UnsupportedRuleError("tie formula is defined for at most two slots")
    c1, c2 = (rule.ctrs + (0.0,))[:2]
    if rule.format.pays_own_bid:
        return 0.5 * (c1 + c2) * (value - bid)
    return 0.5 * (c1 * (value - bid) + c2 * value)
