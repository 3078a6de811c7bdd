"""Meta-game slices for GFP: player 2's best response to v and player 1's payoff along v.

    python scripts/metagame_slices.py --v 2 --out out/meta
"""

import argparse
from pathlib import Path

import numpy as np

from auctionlab import svg
from auctionlab.analytic import W_STAR
from auctionlab.metagame import SweepConfig, analytic_surface, best_response, sweep
from auctionlab.rules import AuctionRule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--v", type=float, default=2.0, help="player 1's fixed declaration")
    ap.add_argument("--ws", default="0.3:0.8:0.05", help="start:stop:step of player 2's declarations")
    ap.add_argument("--T", type=int, default=200_000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--eta-scale", type=float, default=4.0)
    ap.add_argument("--out", default="out/meta")
    a = ap.parse_args()
    start, stop, step = (float(x) for x in a.ws.split(":"))
    ws = [round(x, 10) for x in np.arange(start, stop + step / 2, step)]
    cfg = SweepConfig(AuctionRule("GFP"), SweepConfig.slice_grid(0, a.v, ws), T=a.T, seeds=a.seeds,
                      agent_options={"eta_scale": a.eta_scale})
    surface = sweep(cfg, workers=a.threads)
    cells = surface.slice(1, a.v)
    br = best_response(surface, 1, a.v)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "surface.csv").write_text(surface.to_csv())
    grid = np.linspace(min(ws), max(ws), 200)
    pred = analytic_surface([(a.v, w) for w in grid]).cells
    svg.payoff_curves([c.w for c in cells], [c.u1_mean for c in cells], [c.u1_se for c in cells],
                      [c.u2_mean for c in cells], [c.u2_se for c in cells], "declared w",
                      (grid, [c.u1_mean for c in pred], [c.u2_mean for c in pred]), path=out / "payoffs.svg")
    print(f"best response of player 2 to v={a.v:g}: w={br.declaration:g} "
          f"(u2={br.utility:.4f}, reliable={br.reliable}); limit prediction w*={W_STAR:.4f}")


if __name__ == "__main__":
    main()
