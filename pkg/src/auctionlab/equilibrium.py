"""CCE deviation gains, weak dominance in support, and small-grid support enumeration."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernel
from .grid import BidGrid, JointBidDistribution, SupportPair
from .rules import AuctionRule, utility_matrix
from .simplex import linprog

DELTA_MIN = 1e-6
MAX_LEVELS = 8
DOM_TOL = 1e-12


class GridValueMismatch(ValueError):
    pass


@dataclass(frozen=True)
class DeviationReport:
    best_bid: tuple  # money, per player
    deviation_utility: tuple
    in_distribution: tuple
    gain: tuple

    @property
    def max_gain(self) -> float:
        return max(self.gain)

    def is_cce(self, delta: float = 0.0) -> bool:
        return self.max_gain <= delta


@dataclass(frozen=True)
class DominanceWitness:
    player: int
    dominated_action: int
    dominating_action: int
    opponent_support: frozenset
    strict_at: int


@dataclass(frozen=True)
class CoUndominatedVerdict:
    verdict: bool
    is_cce: bool
    report: DeviationReport
    witnesses: tuple


def _check_grids(d: JointBidDistribution, values: Sequence[float]):
    if len(values) != d.n_players:
        raise GridValueMismatch(f"{len(values)} values for {d.n_players} players")
    eps = d.grids[0].epsilon
    for g, v in zip(d.grids, values):
        if not math.isclose(g.epsilon, eps):
            raise GridValueMismatch("players' grids use different steps")
        if g.max_bid > v + 1e-9:
            raise GridValueMismatch(f"grid reaches {g.max_bid} above value {v}")


def deviation_table(d: JointBidDistribution, rule: AuctionRule, values: Sequence[float], player: int) -> np.ndarray:
    """Expected utility of every fixed bid of ``player`` against the others' joint law, and
    the in-distribution utility, returned as ``(dev, realized)``."""
    eps = d.grids[0].epsilon
    ctr = rule.ctr_vector(d.n_players)
    k = d.grids[player].levels
    others = [a for a in range(d.n_players) if a != player]
    if d.n_players == 2:
        U = utility_matrix(rule, values[player], d.grids[player], d.grids[others[0]].levels, cap=k - 1)
        p = d.probs if player == 0 else d.probs.T
        dev = U @ p.sum(axis=0)
        realized = float(np.sum(p * U))
        return dev, realized
    cf = np.empty(k)
    dev = np.zeros(k)
    realized = 0.0
    for cell in np.argwhere(d.probs > 0):
        w = d.probs[tuple(cell)]
        _kernel.position_utilities(cf, rule.format.pays_own_bid, ctr,
                                   cell[others].astype(np.int64), k, values[player], eps)
        dev += w * cf
        realized += w * cf[cell[player]]
    return dev, realized


def cce_gain(d: JointBidDistribution, rule: AuctionRule, values: Sequence[float]) -> DeviationReport:
    """Best fixed-bid deviation per player against the joint law ``d`` (exact sums, ties in expectation)."""
    _check_grids(d, values)
    best, dev_u, real_u, gain = [], [], [], []
    for p in range(d.n_players):
        dev, realized = deviation_table(d, rule, values, p)
        b = int(np.argmax(dev))
        best.append(float(d.grids[p].to_money(b)))
        dev_u.append(float(dev[b]))
        real_u.append(realized)
        gain.append(float(dev[b] - realized))
    return DeviationReport(tuple(best), tuple(dev_u), tuple(real_u), tuple(gain))


def _utility_pair(rule: AuctionRule, values, grids):
    U1 = utility_matrix(rule, values[0], grids[0], grids[1].levels, cap=grids[0].levels - 1)
    U2 = utility_matrix(rule, values[1], grids[1], grids[0].levels, cap=grids[1].levels - 1)
    return U1, U2


def dominates(U: np.ndarray, a: int, b: int, opp_support, tol: float = DOM_TOL) -> bool:
    """Does own action ``a`` weakly dominate ``b`` on the columns ``opp_support``?"""
    cols = np.array(sorted(opp_support))
    diff = U[a, cols] - U[b, cols]
    return bool(np.all(diff >= -tol) and np.any(diff > tol))


def find_dominance(U: np.ndarray, action: int, opp_support, tol: float = DOM_TOL):
    """First action weakly dominating ``action`` on the columns ``opp_support``, as (action, strict_at)."""
    cols = np.array(sorted(opp_support))
    for a in range(U.shape[0]):
        if a != action and dominates(U, a, action, cols, tol):
            diff = U[a, cols] - U[action, cols]
            return a, int(cols[np.argmax(diff > tol)])
    return None


def dominated_actions(U: np.ndarray, opp_support, tol: float = DOM_TOL) -> np.ndarray:
    """Boolean mask of own actions weakly dominated on ``opp_support``."""
    cols = np.array(sorted(opp_support))
    S = U[:, cols]
    diff = S[None, :, :] - S[:, None, :]  # diff[a, b] = U[b] - U[a]
    weak = np.all(diff >= -tol, axis=2) & np.any(diff > tol, axis=2)
    return weak.any(axis=1)


def co_undominated_check(d: JointBidDistribution, rule: AuctionRule, values: Sequence[float],
                         support_tol: float = 1e-6, delta: float = 1e-9) -> CoUndominatedVerdict:
    """CCE test plus a search for weakly dominated supported actions (two players)."""
    if d.n_players != 2:
        raise ValueError("co-undominated checks are defined for two players")
    report = cce_gain(d, rule, values)
    from .grid import support_of
    sup = support_of(d, support_tol)
    U1, U2 = _utility_pair(rule, values, d.grids)
    witnesses = []
    for player, U, own, opp in ((0, U1, sup.support_a, sup.support_b), (1, U2, sup.support_b, sup.support_a)):
        for a in sorted(own):
            hit = find_dominance(U, a, opp)
            if hit is not None:
                witnesses.append(DominanceWitness(player, a, hit[0], opp, hit[1]))
    ok = report.is_cce(delta)
    return CoUndominatedVerdict(ok and not witnesses, ok, report, tuple(witnesses))


def _subsets(n: int):
    for mask in range(1, 1 << n):
        yield mask


def _members(mask: int) -> list:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def support_lp(U1: np.ndarray, U2: np.ndarray, A: Sequence[int], B: Sequence[int]):
    """Maximize the smallest marginal mass on A and B over CCEs supported in A x B.

    Returns ``(t, table)`` with ``table`` the |A| x |B| witness, or ``(None, None)``
    when no CCE lives on A x B.
    """
    A, B = list(A), list(B)
    nA, nB = len(A), len(B)
    nv = nA * nB + 1  # cells then t
    rows, rhs = [], []
    # CCE: sum_ij p_ij (U(dev, j) - U(i, j)) <= 0 for every fixed deviation
    for dev in range(U1.shape[0]):
        r = np.zeros(nv)
        r[:-1] = (U1[dev][B][None, :] - U1[np.ix_(A, B)]).ravel()
        rows.append(r)
        rhs.append(0.0)
    for dev in range(U2.shape[0]):
        r = np.zeros(nv)
        r[:-1] = (U2[dev][A][:, None] - U2[np.ix_(B, A)].T).ravel()
        rows.append(r)
        rhs.append(0.0)
    # t - row mass <= 0, t - column mass <= 0
    for i in range(nA):
        r = np.zeros(nv)
        r[i * nB:(i + 1) * nB] = -1.0
        r[-1] = 1.0
        rows.append(r)
        rhs.append(0.0)
    for j in range(nB):
        r = np.zeros(nv)
        r[j:nA * nB:nB] = -1.0
        r[-1] = 1.0
        rows.append(r)
        rhs.append(0.0)
    eq = np.zeros((1, nv))
    eq[0, :-1] = 1.0
    c = np.zeros(nv)
    c[-1] = -1.0
    res = linprog(c, np.array(rows), np.array(rhs), eq, [1.0])
    if not res.success:
        return None, None
    return float(res.x[-1]), res.x[:-1].reshape(nA, nB)


def enumerate_co_undominated(rule: AuctionRule, values: Sequence[float], epsilon: float,
                             delta_min: float = DELTA_MIN) -> list:
    """All support pairs (A, B) carrying a co-undominated CCE, with one witness each.

    Each player bids on ``{0, eps, ..., floor(value/eps) eps}``; at most
    ``MAX_LEVELS`` levels per player.
    """
    top = max(values)
    grid = BidGrid(epsilon, math.floor(top / epsilon + 1e-9) * epsilon)
    grids = tuple(grid.truncated(grid.cap_index(v)) for v in values)
    if any(g.levels > MAX_LEVELS for g in grids):
        raise ValueError(f"support enumeration is limited to {MAX_LEVELS} levels per player")
    U1, U2 = _utility_pair(rule, values, grids)
    n1, n2 = grids[0].levels, grids[1].levels
    undom1 = {}  # opponent support mask -> mask of own undominated actions
    for mB in _subsets(n2):
        bad = dominated_actions(U1, _members(mB))
        undom1[mB] = sum(1 << a for a in range(n1) if not bad[a])
    undom2 = {}
    for mA in _subsets(n1):
        bad = dominated_actions(U2, _members(mA))
        undom2[mA] = sum(1 << b for b in range(n2) if not bad[b])
    found = []
    for mB in _subsets(n2):
        allowed = undom1[mB]
        for mA in _subsets(n1):
            if mA & ~allowed or mB & ~undom2[mA]:
                continue
            A, B = _members(mA), _members(mB)
            t, table = support_lp(U1, U2, A, B)
            if t is None or t < delta_min:
                continue
            p = np.zeros((n1, n2))
            p[np.ix_(A, B)] = np.maximum(table, 0.0)
            p /= p.sum()
            found.append((SupportPair(frozenset(A), frozenset(B)), JointBidDistribution(grids, p)))
    return found


@dataclass(frozen=True)
class DiagonalCheck:
    verdict: bool
    lhs_1: float
    rhs_1: float
    lhs_2: float
    rhs_2: float


def diagonal_cce_check(F: Callable[[np.ndarray], np.ndarray], v: float, w: float,
                       ctrs: tuple = (1.0, 0.5), step: float = 1e-4) -> DiagonalCheck:
    """Is 'both bid x ~ F' a CCE of the two-slot GFP auction with values v >= w?

    lhs is the in-distribution utility (c1+c2)/2 * E[value - x]; rhs the best
    fixed deviation max_x0 (c1 F(x0) + c2 (1 - F(x0))) (value - x0).
    """
    if v < w:
        raise ValueError("expects v >= w")
    c1, c2 = ctrs
    top = w / 2
    n = int(round(top / step))
    x = np.linspace(0.0, top, n + 1)
    Fx = np.asarray(F(x), dtype=float)
    if np.any(np.diff(Fx) < -1e-12) or Fx[0] < -1e-12 or abs(Fx[-1] - 1.0) > 1e-9:
        raise ValueError("F must be a nondecreasing CDF reaching 1 at w/2")
    out = []
    for value in (v, w):
        # E[value - x] = (value - top) F(top) + int_0^top F(x) dx (integration by parts)
        mean_gap = (value - top) * Fx[-1] + np.trapezoid(Fx, x)
        lhs = 0.5 * (c1 + c2) * mean_gap
        rhs = float(np.max((c1 * Fx + c2 * (1.0 - Fx)) * (value - x)))
        out += [float(lhs), rhs]
    verdict = out[0] >= out[1] - 1e-9 and out[2] >= out[3] - 1e-9
    return DiagonalCheck(verdict, *out)
