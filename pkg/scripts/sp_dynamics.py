"""Second-price dynamics: price below the second price and the limit marginals.

    python scripts/sp_dynamics.py --T 500000 --out out/sp
"""

import argparse
from pathlib import Path

from auctionlab import svg
from auctionlab.agents import AgentConfig
from auctionlab.analytic import sp_limit
from auctionlab.dynamics import RunConfig, run
from auctionlab.export import to_json, write_joint
from auctionlab.rules import AuctionRule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--v", type=float, default=1.0)
    ap.add_argument("--w", type=float, default=0.5)
    ap.add_argument("--T", type=int, default=500_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eta-scale", type=float, default=4.0)
    ap.add_argument("--out", default="out/sp")
    a = ap.parse_args()
    agents = [AgentConfig("MWLinear", x, eta_scale=a.eta_scale) for x in (a.v, a.w)]
    r = run(RunConfig(AuctionRule("SP"), agents, a.T, seed=a.seed))
    law = sp_limit(a.v, a.w, r.config.epsilon)
    d = r.joint_empirical
    report = {
        "mean_price": r.mean_price(),
        "mean_price_post_burn_in": r.mean_price(burn_in=True),
        "high_win_rate": r.win_rate(0),
        "high_cdf_gap": law.high_cdf_gap(d.marginal(0)),
        "low_pr0": float(d.marginal(1).probs[0]),
        "low_monotone_slack_0.01": law.low_ok(d.marginal(1), slack=0.01),
        "regret_per_round": (r.regret / r.T).tolist(),
    }
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    write_joint(d, out / "joint.csv")
    svg.bid_dynamics(r, path=out / "bid_dynamics.svg")
    svg.marginals(r, path=out / "marginals.svg")
    (out / "report.json").write_text(to_json(report))
    print(to_json(report), end="")


if __name__ == "__main__":
    main()
