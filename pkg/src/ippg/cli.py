"""Command-line entry point: ``ippg package|estimate|compare|sweep|report``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 sweep finished with
per-trial errors (count on stderr).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from .harness import (
    DataError,
    Judge,
    JudgeRule,
    emit_report,
    load_samples,
    render_report,
    slice_metrics,
)
from .packager import Color, EmptyPromptError, Font, RenderConfig, WidthTooSmallError, package, render_text_only
from .providers import (
    AnthropicClient,
    MockClient,
    Mode,
    OpenAIChatClient,
    ProfileError,
    ProviderError,
    TranscriptWriter,
    UnknownCounterError,
    build_request,
    compare,
    estimate_cost,
    load_profile,
    request_counts,
)
from .sweeps import (
    BASELINE_KEY,
    BestAccuracy,
    BestEfficiency,
    SweepManifest,
    TrialStore,
    aggregate,
    load_grid,
    pareto_frontier,
    run_sweep,
    select_best,
    summarize,
    summary_rows,
    write_summary_csv,
)
from .tokenomics import format_usd

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRIAL_ERRORS = 0, 1, 2, 3

DATA_ERRORS = (
    DataError,
    ProfileError,
    UnknownCounterError,
    EmptyPromptError,
    WidthTooSmallError,
    FileNotFoundError,
    ValueError,
    OSError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _render_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("rendering")
    g.add_argument("--font", choices=[f.value for f in Font], default=Font.ARIAL.value)
    g.add_argument("--color", choices=[c.value for c in Color], default=Color.BLACK.value)
    g.add_argument("--size", type=float, default=20, help="point size (default 20)")
    g.add_argument("--dpi", type=int, default=72)
    g.add_argument("--margin", type=int, default=10, help="banner margin in px")
    g.add_argument("--width", default="auto", help="canvas width for text-only renders: px or 'auto'")


def _config(args: argparse.Namespace) -> RenderConfig:
    return RenderConfig(args.font, args.color, args.size, args.dpi, args.margin)


def _width(args: argparse.Namespace) -> int | str:
    if args.width == "auto":
        return "auto"
    try:
        return int(args.width)
    except ValueError:
        raise UsageError(f"--width must be an integer or 'auto', got {args.width!r}") from None


def _text(args: argparse.Namespace) -> str:
    if args.text is not None:
        return args.text
    if args.text_file is not None:
        return Path(args.text_file).read_text(encoding="utf-8")
    raise UsageError("give --text or --text-file")


def _text_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--text", help="prompt text")
    g.add_argument("--text-file", help="read the prompt from a file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ippg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("package", help="render one prompt into a PNG (plus JSON layout sidecar)")
    _text_flags(p)
    p.add_argument("--image", help="base image; the prompt goes in a banner above it")
    p.add_argument("--out", required=True, help="output PNG path")
    _render_flags(p)

    p = sub.add_parser("estimate", help="estimate the cost of one request")
    _text_flags(p)
    p.add_argument("--profile", default="gpt-4.1", help="built-in profile name or profile file")
    p.add_argument("--system", default="", help="system prompt (billed as text in both modes)")
    p.add_argument("--image", action="append", default=[], help="base image (repeatable)")
    p.add_argument("--mode", choices=["baseline", "ippg", "both"], default="both")
    p.add_argument("--output-tokens", type=int, default=0)
    _render_flags(p)

    p = sub.add_parser("compare", help="baseline vs packaged cost for dataset samples")
    p.add_argument("--profile", default="gpt-4.1")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sample-id", action="append", help="restrict to these ids (repeatable)")
    p.add_argument("--output-tokens", type=int, default=0)
    p.add_argument("--format", choices=["csv", "md"], default="md")
    _render_flags(p)

    p = sub.add_parser("sweep", help="run (or resume) a rendering ablation")
    p.add_argument("--manifest", help="JSON manifest; explicit flags override it")
    p.add_argument("--profile")
    p.add_argument("--dataset")
    p.add_argument("--grid", help="'default' or a JSON file with fonts/colors/sizes_pt")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-in-flight", type=int)
    p.add_argument("--judge", choices=[r.value for r in JudgeRule])
    p.add_argument("--out")
    p.add_argument("--mode", choices=["baseline", "ippg", "both"], default="both",
                   help="run only one arm (summaries need both)")
    p.add_argument("--client", choices=["mock", "openai", "anthropic"])
    p.add_argument("--model", help="provider model id for live clients")
    p.add_argument("--mock-accuracy", type=float)

    p = sub.add_parser("report", help="summaries, Pareto frontier and sliced report from a trial store")
    p.add_argument("--out", required=True, help="sweep output directory (contains trials.jsonl)")
    p.add_argument("--dataset", help="dataset for metadata slices")
    p.add_argument("--slice", action="append", default=[], help="metadata key, or keys joined with '+'")
    p.add_argument("--config", help="config key for the packaged arm of the sliced report (default: best accuracy)")
    p.add_argument("--format", choices=["csv", "md"], default="csv")
    p.add_argument("--floor-pp", type=float, default=5.0,
                   help="best-efficiency accuracy floor, in points below baseline")
    return parser


def cmd_package(args: argparse.Namespace) -> int:
    text = _text(args)
    config = _config(args)
    if args.image:
        from PIL import Image

        with Image.open(args.image) as img:
            packed = package(text, config, img.convert("RGB"))
    else:
        packed = render_text_only(text, config, _width(args))
    png, meta = packed.save(args.out)
    print(f"{png} {packed.width}x{packed.height} banner={packed.banner_height_px}px lines={len(packed.layout.lines)}")
    return EXIT_OK


def _open_images(paths: Sequence[str]):
    from PIL import Image

    out = []
    for p in paths:
        with Image.open(p) as img:
            out.append(img.convert("RGB"))
    return out


def cmd_estimate(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    text = _text(args)
    images = _open_images(args.image)
    modes = [Mode.BASELINE, Mode.IPPG] if args.mode == "both" else [Mode(args.mode)]
    requests = {
        m: build_request(profile, args.system, text, images, m, _config(args), text_width=_width(args))
        for m in modes
    }
    print(f"profile {profile.name}")
    for mode, req in requests.items():
        counts = request_counts(profile, req, args.output_tokens)
        cost = estimate_cost(profile, req, args.output_tokens)
        n_img = counts.image_baseline if mode is Mode.BASELINE else counts.image_ippg
        print(
            f"{mode.value:8s} text={counts.input_text + counts.shared_text} image={n_img} "
            f"output={counts.output_text} total=${format_usd(cost.total)}"
        )
    if len(requests) == 2:
        cmp = compare(profile, requests[Mode.BASELINE], requests[Mode.IPPG], args.output_tokens)
        tag = " (general form)" if cmp.verdict.general_form else ""
        print(
            f"delta_image_tokens={cmp.verdict.delta_image_tokens} displaced_text={cmp.counts.input_text} "
            f"cheaper={'yes' if cmp.verdict.cheaper else 'no'}{tag} savings=${format_usd(cmp.savings)}"
        )
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    samples = load_samples(args.dataset, judged=False)
    if args.sample_id:
        wanted = set(args.sample_id)
        unknown = wanted - {s.id for s in samples}
        if unknown:
            raise DataError(f"unknown sample id(s): {', '.join(sorted(unknown))}")
        samples = [s for s in samples if s.id in wanted]
    header = ["sample", "n_text", "img_base", "img_ippg", "delta_img", "base_usd", "ippg_usd", "cheaper", "savings_usd"]
    rows = []
    for s in samples:
        images = s.load_images()
        base = build_request(profile, s.system_text, s.user_text, images, Mode.BASELINE)
        packed = build_request(profile, s.system_text, s.user_text, images, Mode.IPPG, _config(args),
                               text_width=_width(args))
        c = compare(profile, base, packed, args.output_tokens)
        rows.append([
            s.id, str(c.counts.input_text), str(c.counts.image_baseline), str(c.counts.image_ippg),
            str(c.verdict.delta_image_tokens), format_usd(c.baseline.total), format_usd(c.ippg.total),
            "yes" if c.verdict.cheaper else "no", format_usd(c.savings),
        ])
    _print_table(header, rows, args.format)
    return EXIT_OK


def _print_table(header: list[str], rows: list[list[str]], fmt: str) -> None:
    if fmt == "csv":
        import csv

        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    print("| " + " | ".join(header) + " |")
    print("|" + "|".join("---" for _ in header) + "|")
    for r in rows:
        print("| " + " | ".join(r) + " |")


def _sweep_settings(args: argparse.Namespace) -> SweepManifest:
    if args.manifest:
        m = SweepManifest.load(args.manifest)
    else:
        if not args.dataset:
            raise UsageError("sweep needs --manifest or --dataset")
        m = SweepManifest(dataset=Path(args.dataset))
    overrides = {
        "profile": args.profile,
        "dataset": Path(args.dataset) if args.dataset else None,
        "grid": args.grid,
        "seed": args.seed,
        "max_in_flight": args.max_in_flight,
        "judge": args.judge,
        "out": Path(args.out) if args.out else None,
        "client": args.client,
        "mock_accuracy": args.mock_accuracy,
    }
    from dataclasses import replace

    return replace(m, **{k: v for k, v in overrides.items() if v is not None})


def cmd_sweep(args: argparse.Namespace) -> int:
    m = _sweep_settings(args)
    profile = load_profile(m.profile)
    samples = load_samples(m.dataset, judged=m.judge != JudgeRule.DELEGATE.value)
    grid = load_grid(m.grid)
    if m.client == "mock":
        answers = {s.id: s.ground_truth for s in samples if s.ground_truth is not None}
        client = MockClient(profile, m.seed, answers, m.mock_accuracy)
    else:
        if not args.model:
            raise UsageError("live clients need --model")
        cls = OpenAIChatClient if m.client == "openai" else AnthropicClient
        client = cls(args.model)
    if m.judge == JudgeRule.DELEGATE.value:
        raise UsageError("the delegate judge needs an external judge callable; use the Python API")
    out = Path(m.out)
    out.mkdir(parents=True, exist_ok=True)
    store = TrialStore(out / "trials.jsonl")
    trials = run_sweep(
        samples, profile, grid, client, Judge(JudgeRule(m.judge)), store,
        max_in_flight=m.max_in_flight, transcript=TranscriptWriter(out / "transcript.jsonl"),
        modes=[Mode.BASELINE, Mode.IPPG] if args.mode == "both" else [Mode(args.mode)],
    )
    baseline = [t for t in trials if t.mode is Mode.BASELINE]
    if args.mode != "baseline":
        summaries = summarize([t for t in trials if t.mode is Mode.IPPG], baseline, grid.configs)
        write_summary_csv(summaries, out / "summary.csv")
        write_summary_csv(pareto_frontier(summaries), out / "frontier.csv")
    errored = sum(t.error is not None for t in trials)
    print(f"{len(trials)} trials ({len(baseline)} baseline) -> {store.path}")
    if errored:
        print(f"{errored} trial(s) errored", file=sys.stderr)
        return EXIT_TRIAL_ERRORS
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    store_path = out / "trials.jsonl"
    if not store_path.is_file():
        raise DataError(f"no trial store at {store_path}")
    trials = TrialStore(store_path).load()
    baseline = [t for t in trials if t.mode is Mode.BASELINE]
    packed = [t for t in trials if t.mode is Mode.IPPG]
    if not baseline or not packed:
        raise DataError("trial store needs both baseline and packaged trials")
    summaries = summarize(packed, baseline)
    frontier = pareto_frontier(summaries)
    ext = "csv" if args.format == "csv" else "md"
    _write_summary(summaries, out / f"summary.{ext}", args.format)
    _write_summary(frontier, out / f"frontier.{ext}", args.format)

    base_acc = aggregate(baseline).accuracy
    best_acc = select_best(summaries, BestAccuracy())
    print(f"best accuracy:   {best_acc.config_key} acc={100 * best_acc.accuracy:.1f}% saved={best_acc.saved_pct}%")
    try:
        best_eff = select_best(summaries, BestEfficiency.from_baseline(base_acc, args.floor_pp))
        print(f"best efficiency: {best_eff.config_key} acc={100 * best_eff.accuracy:.1f}% saved={best_eff.saved_pct}%")
    except LookupError as exc:
        print(f"best efficiency: none ({exc})")
    print(f"frontier: {len(frontier)} of {len(summaries)} configs")

    if args.dataset:
        samples = load_samples(args.dataset, judged=False)
        key = args.config or best_acc.config_key
        arm = [t for t in packed if t.config_key == key]
        if not arm:
            raise DataError(f"no packaged trials for config {key!r}")
        slices = [tuple(s.split("+")) if "+" in s else s for s in args.slice]
        report = slice_metrics(baseline + arm, samples, slices)
        path = emit_report(report, out / f"report.{ext}", args.format)
        print(f"report ({key} vs {BASELINE_KEY}) -> {path}")
        sys.stdout.write(render_report(report, args.format))
    return EXIT_OK


def _write_summary(summaries, path: Path, fmt: str) -> None:
    if fmt == "csv":
        write_summary_csv(summaries, path)
        return
    from .sweeps import SUMMARY_COLUMNS

    lines = ["| " + " | ".join(SUMMARY_COLUMNS) + " |", "|" + "|".join("---" for _ in SUMMARY_COLUMNS) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in summary_rows(summaries)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


COMMANDS = {
    "package": cmd_package,
    "estimate": cmd_estimate,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ippg {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProviderError as exc:
        print(f"ippg {args.command}: provider error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DATA_ERRORS as exc:
        print(f"ippg {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
