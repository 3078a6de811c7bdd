"""TOML run and sweep configuration.

Sections: ``[auction]`` (format, ctrs, epsilon), ``[agents.N]`` (AgentConfig
fields, N = 1, 2, ...), ``[run]`` (RunConfig fields) and ``[sweep]``
(SweepConfig fields plus slice shorthands). Errors carry the line of the
offending key when it can be located.
"""

from __future__ import annotations

import dataclasses
import re
from pathlib import Path
from typing import Optional

import numpy as np
import tomli

from .agents import AgentConfig
from .dynamics import ConfigError, RunConfig
from .metagame import SweepConfig
from .rules import AuctionRule

AUCTION_KEYS = {"format", "ctrs", "epsilon"}
RUN_KEYS = {"T", "seed", "true_values", "burn_in_fraction", "window", "snapshot_times", "audit_gamma", "record_trace"}
SWEEP_KEYS = {"algorithm", "true_values", "T", "seeds", "base_seed", "burn_in_fraction", "agent_options",
              "declared_grid", "fixed_player", "fixed_value", "values", "v_values", "w_values"}
AGENT_KEYS = {f.name for f in dataclasses.fields(AgentConfig)} - {"horizon"}


def _locate(text: str, section: Optional[str], key: Optional[str]) -> Optional[int]:
    lines = text.splitlines()
    start = 0
    if section is not None:
        pat = re.compile(r"^\s*\[\s*" + re.escape(section).replace(r"\.", r"\s*\.\s*") + r"\s*\]")
        hits = [i for i, ln in enumerate(lines) if pat.match(ln)]
        if not hits:
            return None
        start = hits[0]
        if key is None:
            return start + 1
    if key is None:
        return None
    kpat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i in range(start, len(lines)):
        if i > start and section is not None and lines[i].lstrip().startswith("["):
            break
        if kpat.match(lines[i]):
            return i + 1
    return None


class _Ctx:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def error_from(self, exc: Exception, section: str, keys) -> ConfigError:
        """Anchor a validation message at the key it starts with, if any."""
        msg = str(exc)
        key = next((k for k in sorted(keys, key=len, reverse=True) if re.match(re.escape(k) + r"\b", msg)), None)
        return self.error(msg, section, key)

    def error(self, msg: str, section: Optional[str] = None, key: Optional[str] = None) -> ConfigError:
        line = _locate(self.text, section, key)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: {msg}")


def parse_toml(text: str, source: str = "<config>") -> dict:
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        where = f"{source}:{m.group(1)}" if m else source
        raise ConfigError(f"{where}: {exc}") from None


def read_config(path) -> tuple:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{path}: no such config file")
    text = p.read_text()
    return parse_toml(text, str(path)), _Ctx(text, str(path))


def _unknown(ctx: _Ctx, table: dict, allowed: set, section: str):
    for k in table:
        if k not in allowed:
            raise ctx.error(f"unknown key {k!r} in [{section}]", section, k)


def _auction(data: dict, ctx: _Ctx) -> tuple:
    a = data.get("auction")
    if a is None:
        raise ctx.error("missing [auction] section")
    _unknown(ctx, a, AUCTION_KEYS, "auction")
    if "format" not in a:
        raise ctx.error("[auction] needs a format", "auction")
    try:
        rule = AuctionRule(a["format"], tuple(a["ctrs"]) if "ctrs" in a else None)
    except ValueError as exc:
        raise ctx.error(str(exc), "auction", "ctrs" if "ctrs" in a else "format") from None
    eps = float(a.get("epsilon", 0.01))
    if not eps > 0:
        raise ctx.error("epsilon must be positive", "auction", "epsilon")
    return rule, eps


def _agents(data: dict, ctx: _Ctx) -> list:
    table = data.get("agents")
    if not table:
        raise ctx.error("missing [agents.N] sections")
    try:
        keys = sorted(table, key=int)
    except ValueError:
        raise ctx.error("agent sections must be numbered [agents.1], [agents.2], ...") from None
    out = []
    for k in keys:
        sec = f"agents.{k}"
        entry = dict(table[k])
        _unknown(ctx, entry, AGENT_KEYS, sec)
        for name in ("schedule", "init_weights"):
            if name in entry:
                entry[name] = tuple(tuple(r) if isinstance(r, list) else r for r in entry[name])
        try:
            out.append(AgentConfig(**entry))
        except (TypeError, ValueError) as exc:
            raise ctx.error_from(exc, sec, entry) from None
    return out


def run_config_from(data: dict, ctx: _Ctx, seed: Optional[int] = None) -> RunConfig:
    rule, eps = _auction(data, ctx)
    agents = _agents(data, ctx)
    r = dict(data.get("run", {}))
    _unknown(ctx, r, RUN_KEYS, "run")
    if "T" not in r:
        raise ctx.error("[run] needs T", "run")
    if seed is not None:
        r["seed"] = seed
    for name in ("true_values", "snapshot_times"):
        if name in r:
            r[name] = tuple(r[name])
    try:
        cfg = RunConfig(rule, agents, epsilon=eps, **{k: v for k, v in r.items()})
        cfg.validate()
    except (TypeError, ValueError) as exc:  # ConfigError included
        raise ctx.error_from(exc, "run", r) from None
    return cfg


def _values(spec, ctx: _Ctx, key: str) -> list:
    if isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except KeyError as exc:
            raise ctx.error(f"{key} range needs start, stop and step (missing {exc})", "sweep", key) from None
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    return [float(x) for x in spec]


def sweep_config_from(data: dict, ctx: _Ctx, seed: Optional[int] = None) -> SweepConfig:
    rule, eps = _auction(data, ctx)
    s = dict(data.get("sweep", {}))
    if not s:
        raise ctx.error("missing [sweep] section")
    _unknown(ctx, s, SWEEP_KEYS, "sweep")
    if "declared_grid" in s:
        grid = [tuple(p) for p in s["declared_grid"]]
    elif "fixed_player" in s:
        if "fixed_value" not in s or "values" not in s:
            raise ctx.error("a slice needs fixed_player, fixed_value and values", "sweep", "fixed_player")
        fp = int(s["fixed_player"])
        if fp not in (1, 2):
            raise ctx.error("fixed_player must be 1 or 2", "sweep", "fixed_player")
        grid = list(SweepConfig.slice_grid(fp - 1, float(s["fixed_value"]), _values(s["values"], ctx, "values")))
    elif "v_values" in s and "w_values" in s:
        grid = [(v, w) for v in _values(s["v_values"], ctx, "v_values") for w in _values(s["w_values"], ctx, "w_values")]
    else:
        raise ctx.error("[sweep] needs declared_grid, a slice (fixed_player/fixed_value/values) or v_values and w_values", "sweep")
    if "T" not in s:
        raise ctx.error("[sweep] needs T", "sweep")
    kwargs = {k: s[k] for k in ("algorithm", "T", "seeds", "base_seed", "burn_in_fraction", "agent_options") if k in s}
    if "true_values" in s:
        kwargs["true_values"] = tuple(s["true_values"])
    if seed is not None:
        kwargs["base_seed"] = seed
    try:
        cfg = SweepConfig(rule, tuple(grid), epsilon=eps, **kwargs)
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise ctx.error_from(exc, "sweep", s) from None
    return cfg
