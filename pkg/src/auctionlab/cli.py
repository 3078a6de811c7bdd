"""Command-line entry point: simulate, sweep, verify, analytic.

Exit codes: 0 success, 2 config error, 3 runtime error, 4 verification failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analytic, svg
from .agents import mean_based_audit
from .config import read_config, run_config_from, sweep_config_from
from .dynamics import ConfigError, run
from .equilibrium import co_undominated_check
from .export import (RunManifest, Stopwatch, read_joint, text_digest, to_json, write_bid_log,
                     write_joint)
from .metagame import sweep
from .rules import AuctionRule

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4
FORMATS = ("csv", "json", "svg")


def _threads(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get("AUCTIONLAB_THREADS")
    return max(1, int(env)) if env else 1


def _formats(arg) -> set:
    if not arg:
        return set(FORMATS)
    out = set()
    for item in arg:
        for f in item.split(","):
            if f not in FORMATS:
                raise ConfigError(f"unknown format {f!r}; choose from {', '.join(FORMATS)}")
            out.add(f)
    return out


def cmd_simulate(args) -> int:
    watch = Stopwatch()
    data, ctx = read_config(args.config)
    cfg = run_config_from(data, ctx, seed=args.seed)
    fmts = _formats(args.format)
    record = run(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if "csv" in fmts:
        files.append(write_bid_log(record, out / "bid_log.csv"))
        if record.n == 2:
            files += write_joint(record.joint_empirical, out / "joint.csv")
    if "json" in fmts:
        p = out / "summary.json"
        p.write_text(to_json(record.summary()))
        files.append(p)
    if "svg" in fmts:
        files.append(out / "bid_dynamics.svg")
        svg.bid_dynamics(record, path=files[-1])
        files.append(out / "marginals.svg")
        svg.marginals(record, path=files[-1])
        if record.n == 2:
            files.append(out / "joint.svg")
            svg.joint_heatmap(record, path=files[-1])
    manifest = RunManifest("simulate", text_digest(data), [cfg.seed], outputs=[f.name for f in files],
                           wall_clock=watch.elapsed())
    manifest.write(out)
    s = record.summary()
    print(f"T={record.T} seed={cfg.seed} mean_price={s['mean_price']:.4f} "
          f"win_rate={[round(x, 4) for x in s['win_rate']]} regret/T={[round(x, 5) for x in s['regret_per_round']]}")
    return EXIT_OK


def _slice_axis(cells):
    vs = {c.v for c in cells}
    ws = {c.w for c in cells}
    if len(ws) == 1 and len(vs) > 1:
        return "v", sorted(cells, key=lambda c: c.v)
    if len(vs) == 1 and len(ws) > 1:
        return "w", sorted(cells, key=lambda c: c.w)
    return None, cells


def cmd_sweep(args) -> int:
    watch = Stopwatch()
    data, ctx = read_config(args.config)
    cfg = sweep_config_from(data, ctx, seed=args.seed)
    fmts = _formats(args.format)
    surface = sweep(cfg, workers=_threads(args.threads))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if "csv" in fmts:
        p = out / "surface.csv"
        p.write_text(surface.to_csv())
        files.append(p)
    if "json" in fmts:
        p = out / "surface.json"
        p.write_text(to_json({"cells": surface.cells}))
        files.append(p)
    cells = [c for c in surface.cells if c.error is None]
    axis, ordered = _slice_axis(cells)
    if "svg" in fmts and axis is not None:
        xs = np.array([getattr(c, axis) for c in ordered])
        overlay = None
        if cfg.rule.format.value == "GeneralizedFirstPrice" and cfg.true_values == (1.0, 1.0):
            grid = np.linspace(xs.min(), xs.max(), 200)
            fixed = ordered[0].w if axis == "v" else ordered[0].v
            pairs = [(x, fixed) if axis == "v" else (fixed, x) for x in grid]
            from .metagame import analytic_surface
            a = analytic_surface(pairs)
            overlay = (grid, [c.u1_mean for c in a.cells], [c.u2_mean for c in a.cells])
        p = out / "payoffs.svg"
        svg.payoff_curves(xs, [c.u1_mean for c in ordered], [c.u1_se for c in ordered],
                          [c.u2_mean for c in ordered], [c.u2_se for c in ordered],
                          f"declared {axis}", overlay, path=p)
        files.append(p)
    failed = [c for c in surface.cells if c.error is not None]
    for c in failed:
        print(f"cell ({c.v:g}, {c.w:g}) failed: {c.error}", file=sys.stderr)
    seeds = [s for c in cfg.declared_grid for s in surface.seeds.get(c, [])]
    RunManifest("sweep", text_digest(data), seeds, outputs=[f.name for f in files],
                wall_clock=watch.elapsed()).write(out)
    print(f"{len(cells)} cells done, {len(failed)} failed")
    return EXIT_OK if not failed else EXIT_RUNTIME


def cmd_verify(args) -> int:
    audit = None
    if args.run:
        run_dir = Path(args.run)
        summary = json.loads((run_dir / "summary.json").read_text())
        d = read_joint(run_dir / "joint.csv")
        rc = summary["config"]
        rule = AuctionRule(rc["rule"]["format"], tuple(rc["rule"]["ctrs"]))
        values = tuple(a["declared_value"] for a in rc["agents"])
        audit = summary.get("mean_based") or None
        delta = args.delta if args.delta is not None else 0.01 * max(values)
        support_tol = args.support_tol if args.support_tol is not None else 1e-3
    else:
        if not args.dist or not args.rule or not args.values:
            raise ConfigError("verify needs --run DIR, or --dist FILE with --rule and --values")
        d = read_joint(args.dist)
        ctrs = tuple(float(x) for x in args.ctrs.split(",")) if args.ctrs else None
        rule = AuctionRule(args.rule, ctrs)
        values = tuple(float(x) for x in args.values.split(","))
        delta = args.delta if args.delta is not None else 1e-9
        support_tol = args.support_tol if args.support_tol is not None else 1e-6
    verdict = co_undominated_check(d, rule, values, support_tol=support_tol, delta=delta)
    r = verdict.report
    high = 0 if values[0] >= values[1] else 1
    p = d.probs if high == 0 else d.probs.T
    report = {
        "rule": rule.format.value,
        "values": list(values),
        "delta": delta,
        "support_tol": support_tol,
        "cce_gain": list(r.gain),
        "best_deviation": list(r.best_bid),
        "in_distribution_utility": list(r.in_distribution),
        "is_cce": verdict.is_cce,
        "co_undominated": verdict.verdict,
        "high_win_probability": float(np.tril(p, -1).sum() + 0.5 * np.trace(p)),
        "witnesses": [
            {"player": w.player + 1, "dominated_bid": d.grids[w.player].to_money(w.dominated_action).item(),
             "dominating_bid": d.grids[w.player].to_money(w.dominating_action).item(),
             "strict_at": d.grids[1 - w.player].to_money(w.strict_at).item()}
            for w in verdict.witnesses
        ],
    }
    if audit:
        report["mean_based"] = audit
    print(to_json(report), end="")
    return EXIT_OK if verdict.verdict else EXIT_VERIFY


def _kv(params) -> dict:
    out = {}
    for p in params:
        if "=" not in p:
            raise ConfigError(f"expected key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = float(v)
    return out


def cmd_analytic(args) -> int:
    kv = _kv(args.params)
    q = args.query
    try:
        if q == "gfp-nash":
            m = analytic.gfp_nash(kv["v"], kv["w"])
            foc = m.foc_residuals()
            report = {"v": m.v, "w": m.w, "u1": m.u1, "u2": m.u2, "u1_numeric": m.u1_numeric,
                      "u2_numeric": m.u2_numeric, "foc_residual": list(foc)}
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / "gfp_nash_curves.csv").write_text(analytic.curves_csv(m))
        elif q == "sp-limit":
            law = analytic.sp_limit(kv["v"], kv["w"], kv.get("eps", 0.01))
            m = law.high_marginal()
            sup = law.high_support
            report = {"v": law.v, "w": law.w, "epsilon": law.epsilon,
                      "high_support": [round(float(x), 10) for x in m.grid.to_money(sup)],
                      "high_mass": [float(x) for x in m.probs[sup]],
                      "low_law": "0 < Pr[0] <= Pr[eps] <= ... <= Pr[w]"}
        elif q == "nearly-diagonal":
            m = analytic.nearly_diagonal(kv["v"], kv["w"])
            report = {"v": m.v, "w": m.w, "diagonal_prob": m.diagonal_prob, "u1": m.u1, "u2": m.u2,
                      "note": "prediction for the dynamics, not a theorem"}
        elif q == "metagame":
            e = analytic.metagame_equilibrium(kv.get("M", math.inf))
            report = {"M": e.v_star, "w_star": e.w_star, "u_high": e.u_high, "u_low": e.u_low,
                      "epsilon_bound": e.epsilon_bound, "user_share": e.user_share}
        else:
            raise ConfigError(f"unknown query {q!r}")
    except KeyError as exc:
        raise ConfigError(f"{q} needs parameter {exc.args[0]}=...") from None
    print(to_json(report), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="auctionlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True)
        p.add_argument("--out", required=config)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--format", action="append", help="csv, json, svg (repeatable or comma-separated)")

    common(sub.add_parser("simulate", help="run one repeated auction"))
    common(sub.add_parser("sweep", help="sweep declared values"))
    v = sub.add_parser("verify", help="CCE and co-undominated checks")
    v.add_argument("--run", help="output directory of simulate")
    v.add_argument("--dist", help="joint CSV (with .grid.json sidecar)")
    v.add_argument("--rule")
    v.add_argument("--ctrs")
    v.add_argument("--values", help="comma-separated values")
    v.add_argument("--delta", type=float)
    v.add_argument("--support-tol", type=float)
    common(v, config=False)
    a = sub.add_parser("analytic", help="closed-form models")
    a.add_argument("query", choices=("gfp-nash", "sp-limit", "nearly-diagonal", "metagame"))
    a.add_argument("params", nargs="*", help="key=value")
    common(a, config=False)
    return ap


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "verify": cmd_verify, "analytic": cmd_analytic}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command in ("verify", "analytic") else EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - last resort
        print(f"runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
