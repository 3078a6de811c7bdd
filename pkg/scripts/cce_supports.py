"""Enumerate co-undominated CCEs on tiny grids and print their supports.

    python scripts/cce_supports.py
"""

from auctionlab.equilibrium import enumerate_co_undominated
from auctionlab.rules import AuctionRule

CASES = [("FP", (0.5, 0.3)), ("FP", (0.5, 0.5)), ("SP", (0.5, 0.3))]


def main(eps: float = 0.1):
    for fmt, values in CASES:
        found = enumerate_co_undominated(AuctionRule(fmt), values, eps)
        print(f"{fmt} values={values}: {len(found)} support pairs")
        for sup, d in found:
            a = sorted(round(i * eps, 10) for i in sup.support_a)
            b = sorted(round(j * eps, 10) for j in sup.support_b)
            print(f"  high {a}  low {b}")


if __name__ == "__main__":
    main()
