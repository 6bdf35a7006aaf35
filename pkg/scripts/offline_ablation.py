"""Full 125-config rendering ablation against the mock client, then summaries.

Builds a synthetic dataset if none is given, runs (or resumes) the sweep for
each built-in profile and prints the best configs and the frontier size.

    python scripts/offline_ablation.py --out runs/ablation
"""

import argparse
import time
from pathlib import Path

from ippg.harness import emit_report, load_samples, slice_metrics
from ippg.harness.synthetic import make_dataset
from ippg.providers import BUILTIN_PROFILES, MockClient, Mode
from ippg.sweeps import (
    BestAccuracy,
    BestEfficiency,
    NoFeasibleConfigError,
    TrialStore,
    aggregate,
    ablation_grid,
    pareto_frontier,
    run_sweep,
    select_best,
    summarize,
    write_summary_csv,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/ablation")
    ap.add_argument("--dataset", help="samples.jsonl; default builds 20 synthetic samples")
    ap.add_argument("--profiles", nargs="+", default=sorted(BUILTIN_PROFILES))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--accuracy", type=float, default=0.6, help="mock answer accuracy")
    ap.add_argument("--max-in-flight", type=int, default=4)
    args = ap.parse_args()

    out = Path(args.out)
    dataset = Path(args.dataset) if args.dataset else make_dataset(out / "data", n=20, seed=args.seed)
    samples = load_samples(dataset)
    answers = {s.id: s.ground_truth for s in samples}
    grid = ablation_grid()

    for name in args.profiles:
        profile = BUILTIN_PROFILES[name]
        run_dir = out / name
        t0 = time.perf_counter()
        trials = run_sweep(
            samples, profile, grid, MockClient(profile, args.seed, answers, args.accuracy), "numeric",
            TrialStore(run_dir / "trials.jsonl"), max_in_flight=args.max_in_flight,
        )
        baseline = [t for t in trials if t.mode is Mode.BASELINE]
        summaries = summarize(trials, baseline, grid.configs)
        frontier = pareto_frontier(summaries)
        write_summary_csv(summaries, run_dir / "summary.csv")
        write_summary_csv(frontier, run_dir / "frontier.csv")

        base_acc = aggregate(baseline).accuracy
        best = select_best(summaries, BestAccuracy())
        print(f"{name}: {len(trials)} trials in {time.perf_counter() - t0:.1f}s, baseline acc {100 * base_acc:.1f}%")
        print(f"  best accuracy   {best.config_key:24s} acc {100 * best.accuracy:5.1f}%  saved {best.saved_pct}%")
        try:
            eff = select_best(summaries, BestEfficiency.from_baseline(base_acc))
            print(f"  best efficiency {eff.config_key:24s} acc {100 * eff.accuracy:5.1f}%  saved {eff.saved_pct}%")
        except NoFeasibleConfigError as exc:
            print(f"  best efficiency none: {exc}")
        print(f"  frontier {len(frontier)}/{len(summaries)}")

        arm = [t for t in trials if t.config_key == best.config_key]
        report = slice_metrics(baseline + arm, samples, ["language", "question_type"])
        emit_report(report, run_dir / "report.csv")


if __name__ == "__main__":
    main()
