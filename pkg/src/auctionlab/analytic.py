"""Closed-form reference models for two-bidder auctions.

Values are money amounts; the GFP results assume two slots with ctrs (1, 1/2)
and a high bidder with value ``v >= w``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import BidGrid, Marginal

LN2 = math.log(2.0)
W_STAR = 1.0 / (6.0 * (1.0 - LN2))
M_THRESHOLD = 1.0 / (1.0 - LN2)
INTEGRATION_STEP = 1e-4


def _trap(fn: Callable, a: float, b: float, step: float = INTEGRATION_STEP) -> float:
    n = max(10000, int(math.ceil((b - a) / step)))
    x = np.linspace(a, b, n + 1)
    return float(np.trapezoid(fn(x), x))


def _canonical(v: float, w: float, swap: bool):
    if not (v > 0 and w > 0):
        raise ValueError("values must be positive")
    if v >= w:
        return v, w, False
    if not swap:
        raise ValueError(f"expects v >= w, got v={v}, w={w}")
    return w, v, True


def _cap(x, top, formula):
    """CDF on [0, top]: 0 below, 1 from ``top`` on."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x >= top, 1.0, np.clip(np.where(x < 0, 0.0, formula(x)), 0.0, 1.0))


@dataclass(frozen=True)
class GfpNash:
    """Mixed equilibrium of the two-slot GFP auction on the support [0, w/2].

    ``g_atom`` is the mass player 2 puts on a zero bid (0 for the smooth form).
    ``swapped`` is set when the caller passed v < w; player labels are then
    swapped back in ``u1``/``u2`` but the CDFs refer to the high/low bidder.
    """

    v: float
    w: float
    u1: float
    u2: float
    u1_numeric: float
    u2_numeric: float
    g_atom: float = 0.0
    swapped: bool = False

    @property
    def top(self) -> float:
        return self.w / 2

    def F(self, x):
        x = np.asarray(x, dtype=float)
        return _cap(x, self.w / 2, lambda t: t / (self.w - t))

    def f(self, x):
        x = np.asarray(x, dtype=float)
        return self.w / (self.w - x) ** 2

    def G(self, y):
        y = np.asarray(y, dtype=float)
        v, w = self.v, self.w
        if self.g_atom:
            return _cap(y, w / 2, lambda t: (v - w + t) / (v - t))
        return _cap(y, w / 2, lambda t: (2 * v / w - 1) * t / (v - t))

    def g(self, y):
        """Density of the continuous part of G."""
        y = np.asarray(y, dtype=float)
        v, w = self.v, self.w
        if self.g_atom:
            return (2 * v - w) / (v - y) ** 2
        return (2 * v / w - 1) * v / (v - y) ** 2

    def foc_residuals(self, step: float = 1e-3) -> tuple:
        """Largest |(v-x)g(x) - G(x) - 1| and |(w-y)f(y) - F(y) - 1| on a grid over (0, w/2)."""
        x = np.arange(step, self.top, step)
        r1 = (self.v - x) * self.g(x) - self.G(x) - 1.0
        r2 = (self.w - x) * self.f(x) - self.F(x) - 1.0
        return float(np.abs(r1).max()), float(np.abs(r2).max())

    def curves(self, n: int = 501) -> np.ndarray:
        x = np.linspace(0.0, self.top, n)
        return np.column_stack([x, self.F(x), self.G(x)])


def _nash_numeric(v: float, w: float, G, g, F, f, g_atom: float) -> tuple:
    top = w / 2
    u1 = _trap(lambda x: f(x) * 0.5 * (v - x) * (G(x) + 1.0), 0.0, top)
    u2 = _trap(lambda y: g(y) * 0.5 * (w - y) * (F(y) + 1.0), 0.0, top)
    # player 2's atom at 0: both halves of a tie are impossible since F has no atom
    u2 += g_atom * 0.5 * w * (F(np.array(0.0)) + 1.0)
    return float(u1), float(u2)


def gfp_nash(v: float, w: float, swap: bool = True) -> GfpNash:
    """Closed forms F(x) = x/(w-x), G(y) = (2v/w - 1) y/(v-y), u1 = v/2 + (v-w)(1-ln 2), u2 = w/2.

    The payoffs are also recomputed by trapezoid integration of
    E_x[(v-x)(G(x)+1)/2] and E_y[(w-y)(F(y)+1)/2] as a self-check.
    """
    hi, lo, swapped = _canonical(v, w, swap)
    proto = GfpNash(hi, lo, 0.0, 0.0, 0.0, 0.0)
    n1, n2 = _nash_numeric(hi, lo, proto.G, proto.g, proto.F, proto.f, 0.0)
    u1 = hi / 2 + (hi - lo) * (1 - LN2)
    u2 = lo / 2
    if swapped:
        u1, u2, n1, n2 = u2, u1, n2, n1
    return GfpNash(hi, lo, u1, u2, n1, n2, 0.0, swapped)


def gfp_nash_atom(v: float, w: float, swap: bool = True) -> GfpNash:
    """Equilibrium in which both first-order conditions hold exactly for v > w.

    F(x) = x/(w-x) as before; player 2 bids 0 with probability (v-w)/v and
    otherwise follows G(y) = (v-w+y)/(v-y). Payoffs u1 = v - w/2, u2 = w/2.
    """
    hi, lo, swapped = _canonical(v, w, swap)
    atom = (hi - lo) / hi
    proto = GfpNash(hi, lo, 0.0, 0.0, 0.0, 0.0, atom if atom > 0 else 0.0)
    n1, n2 = _nash_numeric(hi, lo, proto.G, proto.g, proto.F, proto.f, proto.g_atom)
    u1, u2 = hi - lo / 2, lo / 2
    if swapped:
        u1, u2, n1, n2 = u2, u1, n2, n1
    return GfpNash(hi, lo, u1, u2, n1, n2, proto.g_atom, swapped)


def curves_csv(model: GfpNash, n: int = 501) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["x", "F", "G"])
    for x, F, G in model.curves(n):
        wr.writerow([f"{x:.6f}", f"{F:.9f}", f"{G:.9f}"])
    return buf.getvalue()


@dataclass(frozen=True)
class SpLimitLaw:
    v: float
    w: float
    epsilon: float

    @property
    def grid(self) -> BidGrid:
        return BidGrid(self.epsilon, self.v)

    @property
    def high_support(self) -> np.ndarray:
        g = self.grid
        return np.arange(g.to_index(self.w) + 1, g.levels)

    def high_marginal(self) -> Marginal:
        """Uniform on {w+eps, ..., v}, each with mass eps/(v-w)."""
        g = self.grid
        p = np.zeros(g.levels)
        p[self.high_support] = 1.0 / len(self.high_support)
        return Marginal(g, p)

    def high_cdf_gap(self, empirical: Marginal) -> float:
        """L-infinity distance between an empirical high-player CDF and the uniform limit."""
        ref = self.high_marginal()
        k = min(empirical.grid.levels, ref.grid.levels)
        a = empirical.cdf()
        b = ref.cdf()
        gap = np.abs(a[:k] - b[:k]).max()
        if empirical.grid.levels > k:
            gap = max(gap, np.abs(a[k:] - 1.0).max())
        return float(gap)

    def low_ok(self, empirical: Marginal, slack: float = 0.0) -> bool:
        """0 < Pr[0] <= Pr[eps] <= ... <= Pr[w], each step allowed to drop by ``slack``."""
        p = empirical.probs
        top = self.grid.to_index(self.w)
        head = p[: top + 1]
        return bool(head[0] > 0 and np.all(np.diff(head) >= -slack))

    def price_below_second(self, mean_price: float) -> bool:
        return mean_price < self.w


def sp_limit(v: float, w: float, epsilon: float) -> SpLimitLaw:
    if not v > w:
        raise ValueError("the limit law needs v > w")
    if not w >= epsilon:
        raise ValueError("needs w >= eps")
    g = BidGrid(epsilon, v)
    g.to_index(w)
    return SpLimitLaw(v, w, epsilon)


@dataclass(frozen=True)
class NearlyDiagonalModel:
    """Prediction (not a theorem) for GFP dynamics with declarations v >= w.

    The high agent bids x ~ F(x) = x/(w-x) on [0, w/2]; the low agent bids the
    same x with probability p = w/v and 0 otherwise. Utilities are for users
    whose true values are 1.
    """

    v: float
    w: float

    @property
    def diagonal_prob(self) -> float:
        return self.w / self.v

    @property
    def mean_bid(self) -> float:
        return self.w * (1 - LN2)

    @property
    def u1(self) -> float:
        return (1 - self.w * (1 - LN2)) * (1 - self.w / (4 * self.v))

    @property
    def u2(self) -> float:
        p = self.diagonal_prob
        return 0.5 * (1 - p) + 0.75 * p * (1 - self.w * (1 - LN2))

    def F(self, x):
        x = np.asarray(x, dtype=float)
        return _cap(x, self.w / 2, lambda t: t / (self.w - t))

    def sample(self, n: int, rng: np.random.Generator, epsilon: float = 0.01) -> np.ndarray:
        """``n`` bid index pairs (high, low) drawn from the model and rounded to the grid."""
        u = rng.random(n)
        x = self.w * u / (1 + u)  # inverse of F
        k = np.rint(x / epsilon).astype(np.int64)
        diag = rng.random(n) < self.diagonal_prob
        return np.column_stack([k, np.where(diag, k, 0)])


def nearly_diagonal(v: float, w: float) -> NearlyDiagonalModel:
    hi, lo, _ = _canonical(v, w, True)
    return NearlyDiagonalModel(hi, lo)


@dataclass(frozen=True)
class MetagameEquilibrium:
    v_star: float
    w_star: float
    u_high: float
    u_low: float
    epsilon_bound: float

    @property
    def welfare(self) -> float:
        return 1.5  # both slots filled by users with value 1

    @property
    def user_share(self) -> float:
        return (self.u_high + self.u_low) / self.welfare


def metagame_equilibrium(M: float) -> MetagameEquilibrium:
    """Declarations (M, w*) with w* = 1/(6(1 - ln 2)) when declarations are capped at M."""
    if math.isinf(M):
        return MetagameEquilibrium(M, W_STAR, 5 / 6, 0.5, 0.0)
    if not M > M_THRESHOLD:
        raise ValueError(f"M must exceed 1/(1 - ln 2) = {M_THRESHOLD:.4f}")
    m = nearly_diagonal(M, W_STAR)
    eps = 1.0 / (24 * M * (1 - LN2))
    return MetagameEquilibrium(M, W_STAR, (5 / 6) * (1 - eps), m.u2, eps)


def nonzero_low_curve(vs, w: float = 1.0) -> np.ndarray:
    """Predicted frequency of non-zero low bids, w/v, for each high declaration v."""
    vs = np.asarray(vs, dtype=float)
    return np.minimum(1.0, w / vs)
