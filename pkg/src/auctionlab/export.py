"""Flat-file persistence: joint tables, bid logs, summaries and run manifests."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import RunRecord, config_digest
from .grid import BidGrid, JointBidDistribution


def joint_to_csv(d: JointBidDistribution) -> tuple:
    """CSV text with header ``i,j,prob`` (nonzero cells only) and the sidecar grid JSON text."""
    if d.n_players != 2:
        raise ValueError("the i,j,prob format holds two-player tables")
    buf = io.StringIO()
    buf.write("i,j,prob\n")
    for i, j in np.argwhere(d.probs > 0):
        buf.write(f"{i},{j},{d.probs[i, j]:.17g}\n")
    meta = {"epsilon": d.grids[0].epsilon, "max_bid": [g.max_bid for g in d.grids]}
    return buf.getvalue(), json.dumps(meta, indent=2, sort_keys=True) + "\n"


def joint_from_csv(text: str, meta_text: str) -> JointBidDistribution:
    meta = json.loads(meta_text)
    eps = float(meta["epsilon"])
    tops = meta["max_bid"]
    if not isinstance(tops, list):
        tops = [tops, tops]
    grids = tuple(BidGrid(eps, float(t)) for t in tops)
    p = np.zeros(tuple(g.levels for g in grids))
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["i", "j", "prob"]:
        raise ValueError("row 1: expected header i,j,prob")
    for n, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        if len(r) != 3:
            raise ValueError(f"row {n}: expected 3 fields, got {len(r)}")
        try:
            i, j, q = int(r[0]), int(r[1]), float(r[2])
        except ValueError:
            raise ValueError(f"row {n}: cannot parse {','.join(r)!r}") from None
        if not (0 <= i < p.shape[0] and 0 <= j < p.shape[1]):
            raise ValueError(f"row {n}: cell ({i},{j}) outside the grid")
        if q < 0:
            raise ValueError(f"row {n}: negative probability")
        p[i, j] += q
    s = p.sum()
    if abs(s - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {s}, not 1")
    return JointBidDistribution(grids, p / s)


def write_joint(d: JointBidDistribution, path) -> list:
    path = Path(path)
    body, meta = joint_to_csv(d)
    side = path.with_suffix(".grid.json")
    path.write_text(body)
    side.write_text(meta)
    return [path, side]


def read_joint(path) -> JointBidDistribution:
    path = Path(path)
    side = path.with_suffix(".grid.json")
    if not side.is_file():
        raise FileNotFoundError(f"missing grid sidecar {side}")
    return joint_from_csv(path.read_text(), side.read_text())


def bid_log_header(n: int) -> list:
    cols = ["t"] + [f"bid_{i + 1}" for i in range(n)] + ["winner"]
    cols += [f"price_{i + 1}" for i in range(n)]
    cols += [f"u_agent_{i + 1}" for i in range(n)] + [f"u_user_{i + 1}" for i in range(n)]
    return cols


def write_bid_log(record: RunRecord, path) -> Path:
    """One row per round: money bids, 1-based top-slot winner, prices, both utility views."""
    n = record.n
    eps = record.config.epsilon
    t = np.arange(1, record.T + 1)
    cols = [t] + [np.round(record.bids[:, i] * eps, 10) for i in range(n)] + [record.winners() + 1]
    cols += [record.prices[:, i] for i in range(n)]
    cols += [record.u_agent[:, i] for i in range(n)] + [record.u_user[:, i] for i in range(n)]
    table = np.column_stack(cols)
    fmt = ["%d"] + ["%.10g"] * n + ["%d"] + ["%.10g"] * (3 * n)
    path = Path(path)
    with path.open("w") as fh:
        fh.write(",".join(bid_log_header(n)) + "\n")
        np.savetxt(fh, table, fmt=fmt, delimiter=",")
    return path


def read_bid_log(path) -> np.ndarray:
    with Path(path).open() as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[0] != "t" or data.shape[1] != len(header):
        raise ValueError("not a bid log")
    return data


def _clean(x):
    if hasattr(x, "__dataclass_fields__") and not isinstance(x, type):
        x = asdict(x)
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if hasattr(x, "value") and not isinstance(x, (int, str)):
        return x.value
    return x


def to_json(obj) -> str:
    if hasattr(obj, "__dataclass_fields__"):
        obj = asdict(obj)
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


@dataclass
class RunManifest:
    command: str
    config_digest: str
    seeds: list
    version: str = __version__
    outputs: list = field(default_factory=list)
    wall_clock: float = 0.0

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        path.write_text(to_json(self))
        return path


class Stopwatch:
    def __init__(self):
        self.t0 = time.perf_counter()

    def elapsed(self) -> float:
        return round(time.perf_counter() - self.t0, 3)


def text_digest(data: dict) -> str:
    """Digest of a parsed config; independent of key order in the source text."""
    return config_digest(data)
