"""Deterministic SVG figures (800 x 500 viewBox, no timestamps)."""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dynamics import RunRecord, running_average  # noqa: E402

WIDTH, HEIGHT = 800, 500
MAX_POINTS = 2000

matplotlib.rcParams.update({"svg.hashsalt": "auctionlab", "svg.fonttype": "path", "font.size": 13})


def _figure():
    return plt.figure(figsize=(WIDTH / 72, HEIGHT / 72), dpi=72)


def _save(fig, path=None) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def bid_dynamics(record: RunRecord, window: int | None = None, path=None) -> str:
    """Running-window averages of each agent's bid."""
    window = window or record.config.window
    avg = running_average(record.bids_money(), min(window, record.T))
    step = max(1, len(avg) // MAX_POINTS)
    t = np.arange(len(avg))[::step] + window
    fig = _figure()
    ax = fig.add_subplot()
    for i in range(record.n):
        ax.plot(t, avg[::step, i], lw=1, label=f"agent {i + 1} (v={record.config.agents[i].declared_value:g})")
    ax.set_xlabel("auction")
    ax.set_ylabel(f"bid, running mean over {window}")
    ax.legend(loc="best")
    return _save(fig, path)


def marginals(record: RunRecord, path=None) -> str:
    d = record.joint_empirical
    fig = _figure()
    ax = fig.add_subplot()
    for i in range(record.n):
        m = d.marginal(i)
        ax.step(m.grid.money, m.probs, where="mid", label=f"agent {i + 1}")
    ax.set_xlabel("bid")
    ax.set_ylabel("frequency")
    ax.legend(loc="best")
    return _save(fig, path)


def joint_heatmap(record: RunRecord, path=None) -> str:
    d = record.joint_empirical
    if d.n_players != 2:
        raise ValueError("heatmap needs two players")
    fig = _figure()
    ax = fig.add_subplot()
    g0, g1 = d.grids
    im = ax.imshow(d.probs.T, origin="lower", aspect="auto", cmap="viridis",
                   extent=(-g0.epsilon / 2, g0.max_bid + g0.epsilon / 2, -g1.epsilon / 2, g1.max_bid + g1.epsilon / 2))
    fig.colorbar(im, ax=ax, label="probability")
    ax.set_xlabel("bid of agent 1")
    ax.set_ylabel("bid of agent 2")
    return _save(fig, path)


def payoff_curves(xs, u1, u1_se, u2, u2_se, xlabel: str, analytic=None, path=None) -> str:
    """Empirical user payoffs with 2-SE bars; ``analytic`` is an optional (x, u1, u2) overlay."""
    fig = _figure()
    ax = fig.add_subplot()
    ax.errorbar(xs, u1, yerr=2 * np.asarray(u1_se), fmt="o", ms=4, label="user 1 (simulated)")
    ax.errorbar(xs, u2, yerr=2 * np.asarray(u2_se), fmt="s", ms=4, label="user 2 (simulated)")
    if analytic is not None:
        ax_x, a1, a2 = analytic
        ax.plot(ax_x, a1, "--", lw=1, label="user 1 (prediction)")
        ax.plot(ax_x, a2, ":", lw=1, label="user 2 (prediction)")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("average utility (true values)")
    ax.legend(loc="best")
    return _save(fig, path)
