"""Second-price revenue under the four learners, averaged over seeds.

    python scripts/algorithm_variants.py --seeds 10
"""

import argparse

import numpy as np

from auctionlab.agents import AgentConfig
from auctionlab.dynamics import RunConfig, run
from auctionlab.rules import AuctionRule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=50_000)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--eta-scale", type=float, default=4.0)
    a = ap.parse_args()
    print("algorithm,mean_price,se,high_win_rate,max_regret_per_round")
    for algo in ("MWLinear", "Hedge", "FTPL", "FTPLRecency"):
        opts = {"eta_scale": a.eta_scale} if algo in ("MWLinear", "Hedge") else {}
        runs = [run(RunConfig(AuctionRule("SP"), [AgentConfig(algo, 1.0, **opts), AgentConfig(algo, 0.5, **opts)],
                              a.T, seed=s)) for s in range(a.seeds)]
        p = np.array([r.mean_price() for r in runs])
        win = np.mean([r.win_rate(0) for r in runs])
        reg = max(float(r.regret.max()) / r.T for r in runs)
        print(f"{algo},{p.mean():.4f},{p.std(ddof=1) / np.sqrt(len(p)):.4f},{win:.4f},{reg:.5f}")


if __name__ == "__main__":
    main()
