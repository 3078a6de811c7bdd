"""Reference implementations written from the auction definitions only.

These share no code with the package and are deliberately slow: every tie
order is enumerated explicitly.
"""

import itertools
import math

import numpy as np


def outcome_for_order(fmt, ctrs, bids, values, order):
    """Utilities and revenue when bidders are ranked by ``order`` (already sorted by bid)."""
    n = len(bids)
    slots = list(ctrs) + [0.0] * n
    util = [0.0] * n
    revenue = 0.0
    for pos, who in enumerate(order):
        c = slots[pos]
        if c == 0:
            continue
        if fmt in ("FP", "GFP"):
            price = bids[who]
        else:
            price = bids[order[pos + 1]] if pos + 1 < n else 0.0
        util[who] = c * (values[who] - price)
        revenue += c * price
    return util, revenue


def tie_orders(bids):
    """All rankings consistent with the bids (ties in every order), equally likely."""
    n = len(bids)
    out = []
    for perm in itertools.permutations(range(n)):
        if all(bids[perm[k]] >= bids[perm[k + 1]] for k in range(n - 1)):
            out.append(perm)
    return out


def expected_utility(fmt, ctrs, bids, values, player):
    orders = tie_orders(bids)
    return sum(outcome_for_order(fmt, ctrs, bids, values, o)[0][player] for o in orders) / len(orders)


def two_player_cce_gain(fmt, ctrs, probs, eps, values):
    """Triple loop: for each player and fixed deviation, sum over joint cells."""
    n1, n2 = probs.shape
    gains = []
    for player in (0, 1):
        levels = n1 if player == 0 else n2
        realized = 0.0
        for i in range(n1):
            for j in range(n2):
                if probs[i, j]:
                    realized += probs[i, j] * expected_utility(fmt, ctrs, [i * eps, j * eps], values, player)
        best = -math.inf
        for b in range(levels):
            u = 0.0
            for i in range(n1):
                for j in range(n2):
                    if probs[i, j]:
                        cell = [b * eps, j * eps] if player == 0 else [i * eps, b * eps]
                        u += probs[i, j] * expected_utility(fmt, ctrs, cell, values, player)
            best = max(best, u)
        gains.append(best - realized)
    return gains


def brute_regret(fmt, ctrs, bids_idx, eps, value, player, cap):
    """Hindsight regret from a bid log, recomputed cell by cell."""
    bids_idx = np.asarray(bids_idx)
    pairs, counts = np.unique(bids_idx, axis=0, return_counts=True)
    cf = np.zeros(cap + 1)
    real = 0.0
    for row, c in zip(pairs, counts):
        money = list(row * eps)
        vals = [value if k == player else 0.0 for k in range(len(row))]
        real += c * expected_utility(fmt, ctrs, money, vals, player)
        for b in range(cap + 1):
            m = list(money)
            m[player] = b * eps
            cf[b] += c * expected_utility(fmt, ctrs, m, vals, player)
    return cf.max() - real
