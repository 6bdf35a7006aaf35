"""Write a seeded synthetic dataset (PNG images + samples.jsonl) for offline sweeps."""

import argparse

from ippg.harness.synthetic import make_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="output directory")
    ap.add_argument("-n", type=int, default=20, help="number of samples")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    path = make_dataset(args.out, n=args.n, seed=args.seed)
    print(path)


if __name__ == "__main__":
    main()
