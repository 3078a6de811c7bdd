"""GFP with declarations (v, 1) and true values 1: simulated vs nearly-diagonal prediction.

    python scripts/nearly_diagonal_sweep.py --out out/nd
"""

import argparse
from pathlib import Path

import numpy as np

from auctionlab import svg
from auctionlab.agents import AgentConfig
from auctionlab.analytic import nearly_diagonal
from auctionlab.dynamics import RunConfig, run
from auctionlab.rules import AuctionRule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vs", default="1,1.25,1.5,2,2.5,3,4")
    ap.add_argument("--T", type=int, default=200_000)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--eta-scale", type=float, default=4.0)
    ap.add_argument("--out", default="out/nd")
    a = ap.parse_args()
    vs = [float(x) for x in a.vs.split(",")]
    lines = ["v,nonzero_low,nonzero_pred,u1,u1_se,u1_pred,u2,u2_se,u2_pred"]
    table = []
    for v in vs:
        agents = [AgentConfig("MWLinear", x, eta_scale=a.eta_scale) for x in (v, 1.0)]
        runs = [run(RunConfig(AuctionRule("GFP"), agents, a.T, true_values=(1.0, 1.0), seed=s))
                for s in range(a.seeds)]
        nz = np.mean([r.nonzero_bid_rate(1) for r in runs])
        u = np.array([r.user_utils() for r in runs])
        se = u.std(axis=0, ddof=1) / np.sqrt(len(runs))
        m = nearly_diagonal(v, 1.0)
        row = [v, nz, m.diagonal_prob, u[:, 0].mean(), se[0], m.u1, u[:, 1].mean(), se[1], m.u2]
        table.append(row)
        lines.append(",".join(f"{x:.6g}" for x in row))
        print(lines[-1], flush=True)
    t = np.array(table)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "nearly_diagonal.csv").write_text("\n".join(lines) + "\n")
    svg.payoff_curves(t[:, 0], t[:, 3], t[:, 4], t[:, 6], t[:, 7], "declared v (w = 1)",
                      (t[:, 0], t[:, 5], t[:, 8]), path=out / "payoffs.svg")


if __name__ == "__main__":
    main()
