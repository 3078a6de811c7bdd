"""Compiled inner loop for repeated auctions.

The loop consumes pre-drawn random numbers (one sampling uniform and one tie
key per bidder per round, plus exponential perturbations for FTPL agents), so
the run is a pure function of those draws and the starting state.
"""

import numpy as np
from numba import njit

MW_LINEAR, HEDGE, FTPL, FTPL_RECENCY = 0, 1, 2, 3


@njit(cache=True, nogil=True)
def position_utilities(out, pays_own_bid, ctr, bid_others, n_act, value, eps):
    """Tie-expected utility of each own bid in ``range(n_act)`` against ``bid_others``."""
    m = bid_others.shape[0]
    for a in range(n_act):
        higher = 0
        tied = 0
        below = 0
        for j in range(m):
            b = bid_others[j]
            if b > a:
                higher += 1
            elif b == a:
                tied += 1
            elif b > below:
                below = b
        tot = 0.0
        for k in range(higher, higher + tied + 1):
            if pays_own_bid:
                price = a
            elif k < higher + tied:
                price = a
            else:
                price = below
            tot += ctr[k] * (value - price * eps)
        out[a] = tot / (tied + 1)


@njit(cache=True, nogil=True)
def _pick(state_row, n_act, algo, scale, u, z_row):
    """Sample an action: inverse CDF for weight-based agents, perturbed argmax for FTPL."""
    if algo == FTPL or algo == FTPL_RECENCY:
        best = 0
        best_v = -np.inf
        for a in range(n_act):
            v = state_row[a] + scale * z_row[a]
            if v > best_v:
                best_v = v
                best = a
        return best
    m = -np.inf
    for a in range(n_act):
        if state_row[a] > m:
            m = state_row[a]
    tot = 0.0
    for a in range(n_act):
        tot += np.exp(state_row[a] - m)
    target = u * tot
    acc = 0.0
    for a in range(n_act):
        acc += np.exp(state_row[a] - m)
        if acc > target:
            return a
    return n_act - 1


@njit(cache=True, nogil=True)
def _prob_row(out, state_row, n_act):
    m = -np.inf
    for a in range(n_act):
        if state_row[a] > m:
            m = state_row[a]
    tot = 0.0
    for a in range(n_act):
        out[a] = np.exp(state_row[a] - m)
        tot += out[a]
    for a in range(n_act):
        out[a] /= tot


@njit(cache=True, nogil=True)
def run_chunk(t0, t1, fmt_code, ctr, eps, algo, n_act, v_decl, v_true, u_scale, eta, rho, scale,
              logw, sigma, cum_cf, cum_real, scripted, deviated, schedule,
              u_samp, u_tie, z, audit_gamma, audit_gap, audit_max, audit_rounds,
              bids, slot, prices, u_agent, u_user, trace_sigma, trace_prob):
    """Advance the run from round ``t0`` to ``t1`` (exclusive), mutating state and logs.

    ``logw`` holds the log-weights of MW/Hedge agents and ``sigma`` the
    normalized (for FTPLRecency, discounted) cumulative utilities that FTPL
    agents and the mean-based audit read.
    """
    n = algo.shape[0]
    kmax = logw.shape[1]
    pays_own = fmt_code == 0 or fmt_code == 2
    row_bids = np.empty(n, dtype=np.int64)
    others = np.empty(n - 1, dtype=np.int64)
    cf = np.empty(kmax)
    prob = np.empty(kmax)
    order = np.empty(n, dtype=np.int64)
    keys = np.empty(n)
    n_sched = schedule.shape[0]
    do_trace = trace_sigma.shape[0] > 0
    for t in range(t0, t1):
        r = t - t0
        for i in range(n):
            if scripted[i] and not deviated[i]:
                row_bids[i] = schedule[t % n_sched, i]
            elif algo[i] == FTPL or algo[i] == FTPL_RECENCY:
                row_bids[i] = _pick(sigma[i], n_act[i], algo[i], scale[i], 0.0, z[r, i])
            else:
                row_bids[i] = _pick(logw[i], n_act[i], algo[i], 0.0, u_samp[r, i], z[0, 0])
            if audit_gamma[i] >= 0.0 or do_trace:
                smax = -np.inf
                for a in range(n_act[i]):
                    if sigma[i, a] > smax:
                        smax = sigma[i, a]
                if algo[i] == FTPL or algo[i] == FTPL_RECENCY or (scripted[i] and not deviated[i]):
                    for a in range(n_act[i]):
                        prob[a] = 0.0
                    prob[row_bids[i]] = 1.0
                else:
                    _prob_row(prob, logw[i], n_act[i])
                if do_trace:
                    for a in range(n_act[i]):
                        trace_sigma[t, i, a] = sigma[i, a]
                        trace_prob[t, i, a] = prob[a]
                if audit_gamma[i] >= 0.0:
                    violated = False
                    for a in range(n_act[i]):
                        if sigma[i, a] < smax - audit_gap[i]:
                            if prob[a] > audit_max[i]:
                                audit_max[i] = prob[a]
                            if prob[a] > audit_gamma[i]:
                                violated = True
                    if violated:
                        audit_rounds[i] += 1
        # realized allocation with random tie order
        for i in range(n):
            bids[t, i] = row_bids[i]
            keys[i] = u_tie[r, i]
            order[i] = i
        for a in range(1, n):
            x = order[a]
            b = a - 1
            while b >= 0 and (row_bids[order[b]] < row_bids[x] or
                              (row_bids[order[b]] == row_bids[x] and keys[order[b]] > keys[x])):
                order[b + 1] = order[b]
                b -= 1
            order[b + 1] = x
        for i in range(n):
            slot[t, i] = -1
            prices[t, i] = 0.0
            u_agent[t, i] = 0.0
            u_user[t, i] = 0.0
        for pos in range(n):
            who = order[pos]
            c = ctr[pos]
            if c <= 0.0:
                break
            slot[t, who] = pos
            if pays_own:
                p = row_bids[who] * eps
            elif pos + 1 < n:
                p = row_bids[order[pos + 1]] * eps
            else:
                p = 0.0
            prices[t, who] = p
            u_agent[t, who] = c * (v_decl[who] - p)
            u_user[t, who] = c * (v_true[who] - p)
        # full-information feedback
        for i in range(n):
            m = 0
            for j in range(n):
                if j != i:
                    others[m] = row_bids[j]
                    m += 1
            position_utilities(cf, pays_own, ctr, others, n_act[i], v_decl[i], eps)
            cum_real[i] += cf[row_bids[i]]
            inv = 1.0 / u_scale[i]
            a_i = algo[i]
            for a in range(n_act[i]):
                cum_cf[i, a] += cf[a]
                g = cf[a] * inv
                if a_i == FTPL_RECENCY:
                    sigma[i, a] = rho[i] * sigma[i, a] + g
                else:
                    sigma[i, a] += g
                if a_i == MW_LINEAR:
                    logw[i, a] += np.log1p(eta[i] * g)
                elif a_i == HEDGE:
                    logw[i, a] += eta[i] * g
        # scripted agents watch every other seat against the schedule
        for i in range(n):
            if scripted[i] and not deviated[i]:
                for j in range(n):
                    if j != i and row_bids[j] != schedule[t % n_sched, j]:
                        deviated[i] = True
