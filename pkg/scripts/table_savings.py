"""Recompute the Save column of the reference result tables from their cost cells.

Reads tests/data/published_tables.csv and prints printed vs recomputed savings,
flagging rows that differ by more than 0.05 points.
"""

import argparse
import csv
from decimal import Decimal
from pathlib import Path

from ippg.tokenomics import savings_pct

DEFAULT = Path(__file__).resolve().parents[1] / "tests" / "data" / "published_tables.csv"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="?", default=DEFAULT)
    ap.add_argument("--tol", type=Decimal, default=Decimal("0.05"))
    args = ap.parse_args()

    with open(args.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    bad = 0
    print(f"{'table':5} {'model':11} {'slice':14} {'base':>9} {'ippg':>9} {'printed':>8} {'exact':>9} {'1dp':>6}")
    for r in rows:
        exact = savings_pct(r["base_cost"], r["ippg_cost"], places=None)
        rounded = savings_pct(r["base_cost"], r["ippg_cost"])
        printed = Decimal(r["save_pct"])
        off = abs(rounded - printed) > args.tol
        bad += off
        print(
            f"{r['table']:5} {r['model']:11} {r['slice']:14} {r['base_cost']:>9} {r['ippg_cost']:>9} "
            f"{printed:>8} {exact:>9.3f} {rounded:>6}{'  <-' if off else ''}"
        )
    print(f"{len(rows) - bad}/{len(rows)} rows within {args.tol} pp")


if __name__ == "__main__":
    main()
