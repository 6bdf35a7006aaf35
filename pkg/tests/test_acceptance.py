"""Acceptance criteria 1-11, each with its runtime budget.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import itertools
import random
import time
from contextlib import contextmanager
from decimal import Decimal
from pathlib import Path

import numpy as np
import pytest

from ippg.harness import emit_report, load_samples, parse_report, rows_from_mapping, render_report, slice_metrics
from ippg.harness.synthetic import make_dataset
from ippg.packager import Color, Font, PillowBackend, RenderConfig, measure, normalize_whitespace, package
from ippg.providers import BUILTIN_PROFILES, MockClient, Mode, build_request, compare
from ippg.sweeps import (
    ConfigSummary,
    TrialStore,
    ablation_grid,
    pareto_frontier,
    run_sweep,
    summarize,
    write_summary_csv,
)
from ippg.tokenomics import (
    BUILTIN_PRICING,
    PixelLinear,
    PricingModel,
    TileBased,
    TokenCounts,
    cost_baseline,
    cost_ippg,
    delta_image_tokens,
    image_tokens,
    ippg_strictly_cheaper,
    savings,
    savings_pct,
)

DATA = Path(__file__).parent / "data"


@contextmanager
def within(seconds: float):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f}s, budget {seconds}s"


def test_ac01_pricing_fixtures():
    """AC1 pricing fixtures match the published price table; output ratios 4, 4, 5 (<1 s)"""
    with within(1):
        expected = {
            "gpt-4o": ("0.0000025", "0.00001", "0.0000025"),
            "gpt-4.1": ("0.000002", "0.000008", "0.000002"),
            "claude-3.5-sonnet": ("0.000003", "0.000015", "0.000003"),
        }
        for name, (p_i, p_o, p_img) in expected.items():
            assert BUILTIN_PRICING[name] == PricingModel(Decimal(p_i), Decimal(p_o), Decimal(p_img))
            assert BUILTIN_PROFILES[name].pricing == BUILTIN_PRICING[name]
        ratios = [BUILTIN_PRICING[n].output_ratio for n in ("gpt-4o", "gpt-4.1", "claude-3.5-sonnet")]
        assert ratios == [4, 4, 5]
        assert isinstance(BUILTIN_PROFILES["claude-3.5-sonnet"].scheme, PixelLinear)


def test_ac02_savings_column(published_tables):
    """AC2 savings_pct on all 30 printed cost pairs reproduces the Save column within 0.05 pp (<1 s)"""
    with within(1):
        assert len(published_tables) == 30
        assert sum(r["table"] == "2" for r in published_tables) == 18
        misses = []
        for r in published_tables:
            got = savings_pct(r["base_cost"], r["ippg_cost"])
            want = Decimal(r["save_pct"])
            if abs(got - want) > Decimal("0.05"):
                misses.append(f"table {r['table']} {r['model']}/{r['slice']}: printed {want}, computed {got}")
        assert not misses, f"{len(misses)} of 30 rows off by more than 0.05 pp:\n" + "\n".join(misses)


def _tiles_oracle(w: int, h: int) -> int:
    cols = -(-w // 512)
    rows = -(-h // 512)
    return 85 + 170 * cols * rows


def test_ac03_tile_formula_oracle():
    """AC3 tile formula matches an independent ceiling oracle on 10,000 random sizes; monotone, block-constant (<5 s)"""
    with within(5):
        rng = random.Random(3)
        scheme = TileBased()
        for _ in range(10_000):
            w, h = rng.randint(1, 8192), rng.randint(1, 8192)
            t = image_tokens(scheme, w, h)
            assert t == _tiles_oracle(w, h)
            assert image_tokens(scheme, min(w + rng.randint(0, 700), 8192), h) >= t
            assert image_tokens(scheme, w, min(h + rng.randint(0, 700), 8192)) >= t
            bw, bh = (w - 1) // 512, (h - 1) // 512
            assert image_tokens(scheme, bw * 512 + rng.randint(1, 512), bh * 512 + rng.randint(1, 512)) == t


def _random_case(rng: random.Random) -> tuple[PricingModel, TokenCounts]:
    p_i = Decimal(rng.randint(1, 10**5)).scaleb(-10)
    pricing = PricingModel(p_i, Decimal(rng.randint(1, 10**5)).scaleb(-10), p_i)
    counts = TokenCounts(
        input_text=rng.randint(0, 50_000),
        output_text=rng.randint(0, 5_000),
        image_baseline=rng.randint(0, 20_000),
        image_ippg=rng.randint(0, 70_000),
        shared_text=rng.randint(0, 2_000),
    )
    return pricing, counts


def test_ac04_break_even():
    """AC4 break-even equivalence and exact savings on 10,000 random cases (<5 s)"""
    with within(5):
        rng = random.Random(4)
        seen = set()
        for _ in range(10_000):
            pricing, counts = _random_case(rng)
            base, packed = cost_baseline(pricing, counts).total, cost_ippg(pricing, counts).total
            claim = ippg_strictly_cheaper(pricing, counts)
            assert claim == (packed < base) == (delta_image_tokens(counts) < counts.input_text)
            assert savings(pricing, counts) == base - packed
            seen.add(claim)
        assert seen == {True, False}


def test_ac05_output_cancellation():
    """AC5 varying output tokens leaves the cost difference unchanged on 1,000 cases (<1 s)"""
    with within(1):
        rng = random.Random(5)
        for _ in range(1_000):
            pricing, c = _random_case(rng)
            other = TokenCounts(c.input_text, rng.randint(0, 10**6), c.image_baseline, c.image_ippg, c.shared_text)
            d1 = cost_baseline(pricing, c).total - cost_ippg(pricing, c).total
            d2 = cost_baseline(pricing, other).total - cost_ippg(pricing, other).total
            assert d1 == d2


_WORDS = (
    "the total revenue for Q3 was reported in thousands of USD; answer with one number only "
    "Übersicht naïve café 12,345.67 (A) (B) {json: [1, 2]} supercalifragilisticexpialidocious "
    "WWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWWW i l . , ; :"
).split()


def _random_text(rng: random.Random) -> str:
    parts = []
    for _ in range(rng.randint(1, 60)):
        parts.append(rng.choice(_WORDS))
        parts.append(rng.choice([" ", " ", " ", "  ", "\t", "\n", " \n\n "]))
    return "".join(parts)


def test_ac06_packager_invariants():
    """AC6 round-trip, width bound, minimality, base preservation, determinism on 1,000 texts (<30 s)"""
    with within(30):
        rng = random.Random(6)
        backend = PillowBackend()
        for i in range(1_000):
            text = _random_text(rng)
            config = RenderConfig(rng.choice(list(Font)), rng.choice(list(Color)), rng.choice([16, 20, 24, 28, 32]))
            width = rng.randint(80, 1200)
            base = np.random.default_rng(i).integers(0, 256, size=(rng.randint(1, 64), width, 3), dtype=np.uint8)
            out = package(text, config, base, backend=backend)
            layout = out.layout
            metrics = backend.metrics(config)

            assert layout.text == normalize_whitespace(text)
            inner = layout.banner_width_px - 2 * layout.margin_px
            assert all(measure(line, metrics) <= inner for line in layout.lines)
            assert layout.lines[-1].strip()
            assert layout.banner_height_px == len(layout.lines) * layout.line_height_px + 2 * layout.margin_px
            assert out.height == out.banner_height_px + base.shape[0] and out.width == width
            assert np.array_equal(out.pixels[out.banner_height_px:], base)
            if i % 10 == 0:
                again = package(text, config, base, backend=PillowBackend())
                assert again.to_png() == out.to_png()
            else:
                assert package(text, config, base, backend=backend).image.tobytes() == out.image.tobytes()


def test_ac07_zero_delta_realization():
    """AC7 a banner that stays inside the base image's tile row adds no image tokens (<1 s)"""
    with within(1):
        profile = BUILTIN_PROFILES["gpt-4o"]
        base = np.full((300, 512, 3), 200, dtype=np.uint8)
        prompt = "What is the total amount due on this invoice? Answer with the number only."
        b = build_request(profile, "", prompt, [base], Mode.BASELINE)
        p = build_request(profile, "", prompt, [base], Mode.IPPG, RenderConfig())
        assert p.image_sizes[0][0] == 512 and p.image_sizes[0][1] <= 512
        assert image_tokens(TileBased(), *p.image_sizes[0]) == image_tokens(TileBased(), 512, 300) == 255
        cmp = compare(profile, b, p)
        assert delta_image_tokens(cmp.counts) == 0 and cmp.counts.input_text > 0
        assert cmp.savings == profile.pricing.input_price * cmp.counts.input_text
        assert cmp.verdict.cheaper


def test_ac08_ablation_grid():
    """AC8 ablation grid has exactly 125 distinct configs in deterministic order (<1 s)"""
    with within(1):
        configs = ablation_grid().configs
        assert len(configs) == 125 == len(set(configs))
        expected = [
            RenderConfig(f, c, s)
            for f, c, s in itertools.product(
                ["Arial", "Courier", "Helvetica", "Times", "Default"],
                ["Black", "DarkBlue", "DarkGreen", "DarkRed", "Gray"],
                [16, 20, 24, 28, 32],
            )
        ]
        assert list(configs) == expected
        assert ablation_grid().configs == configs


def test_ac09_pareto_oracle():
    """AC9 frontier equals O(n^2) brute-force dominance on 1,000 random sets of up to 200 points (<10 s)"""
    with within(10):
        rng = random.Random(9)
        for _ in range(1_000):
            n = rng.randint(0, 200)
            pts = [(rng.randint(0, 20) / 20, Decimal(rng.randint(1, 40))) for _ in range(n)]
            summaries = [ConfigSummary(str(i), None, 1, 0, 0, a, c, 0.0, None) for i, (a, c) in enumerate(pts)]
            brute = [
                i for i, (a, c) in enumerate(pts)
                if not any(a2 >= a and c2 <= c and (a2 > a or c2 < c) for a2, c2 in pts)
            ]
            assert [int(s.config_key) for s in pareto_frontier(summaries)] == brute


class _Killed(MockClient):
    def __init__(self, *args, kill_after: int, **kwargs):
        super().__init__(*args, **kwargs)
        self.kill_after = kill_after
        self.calls = 0

    def complete(self, request):
        if self.calls == self.kill_after:
            raise KeyboardInterrupt
        self.calls += 1
        return super().complete(request)


def _sweep_and_report(samples, directory: Path, client, max_in_flight=4):
    profile = BUILTIN_PROFILES["gpt-4.1"]
    grid = ablation_grid()
    store = TrialStore(directory / "trials.jsonl")
    trials = run_sweep(samples, profile, grid, client, "numeric", store, max_in_flight=max_in_flight)
    baseline = [t for t in trials if t.mode is Mode.BASELINE]
    summaries = summarize(trials, baseline, grid.configs)
    write_summary_csv(summaries, directory / "summary.csv")
    write_summary_csv(pareto_frontier(summaries), directory / "frontier.csv")
    arm = [t for t in trials if t.config_key == grid.configs[0].key]
    emit_report(slice_metrics(baseline + arm, samples, ["language", "question_type"]), directory / "report.csv")
    return trials


def test_ac10_end_to_end_sweep(tmp_path):
    """AC10 offline sweep of 20 samples x 125 configs: completes, resumes after a kill, reruns byte-identical (<2 min)"""
    with within(120):
        samples = load_samples(make_dataset(tmp_path / "data", n=20, seed=10))
        answers = {s.id: s.ground_truth for s in samples}
        profile = BUILTIN_PROFILES["gpt-4.1"]
        runs = [tmp_path / name for name in ("a", "b", "c")]

        first = _sweep_and_report(samples, runs[0], MockClient(profile, 42, answers))
        assert len(first) == 20 + 20 * 125
        assert sum(t.mode is Mode.BASELINE for t in first) == 20
        _sweep_and_report(samples, runs[1], MockClient(profile, 42, answers))

        killed = _Killed(profile, 42, answers, kill_after=1_234)
        with pytest.raises(KeyboardInterrupt):
            _sweep_and_report(samples, runs[2], killed, max_in_flight=1)
        assert len(TrialStore(runs[2] / "trials.jsonl").load()) == 1_234
        resumed = _Killed(profile, 42, answers, kill_after=-1)
        _sweep_and_report(samples, runs[2], resumed)
        assert resumed.calls == 2_520 - 1_234

        for name in ("trials.jsonl", "summary.csv", "frontier.csv", "report.csv"):
            blobs = {(run / name).read_bytes() for run in runs}
            assert len(blobs) == 1, f"{name} differs between runs"


def test_ac11_report_integrity(synthetic_dataset, published_tables, tmp_path):
    """AC11 saved_pct recomputes from cost cells, slices partition Overall, table fixture matches golden CSV (<5 s)"""
    with within(5):
        samples = load_samples(synthetic_dataset)
        profile = BUILTIN_PROFILES["claude-3.5-sonnet"]
        grid = ablation_grid(fonts=["Times"], colors=["DarkRed"], sizes_pt=[24])
        trials = run_sweep(samples, profile, grid, MockClient(profile, 1, {s.id: s.ground_truth for s in samples}),
                           "numeric")
        report = slice_metrics(trials, samples, ["language", "question_type"])
        rows = parse_report(render_report(report))
        for rec in rows:
            assert Decimal(rec["saved_pct"]) == savings_pct(rec["base_cost_usd"], rec["ippg_cost_usd"])
        overall = int(rows[0]["n"])
        for key in ("language", "question_type"):
            values = {s.metadata[key] for s in samples}
            assert sum(int(r["n"]) for r in rows if r["slice"] in values) == overall

        fixture = rows_from_mapping(
            {
                "slice": f"{r['model']}/{r['slice']}",
                "baseline_acc": Decimal(r["base_acc_pct"]) / 100,
                "ippg_acc": Decimal(r["ippg_acc_pct"]) / 100,
                "baseline_cost": r["base_cost"],
                "ippg_cost": r["ippg_cost"],
            }
            for r in published_tables
            if r["table"] == "2"
        )
        emitted = emit_report(fixture, tmp_path / "table2.csv").read_bytes()
        assert emitted == (DATA / "table2_report_golden.csv").read_bytes()
        printed = [Decimal(r["save_pct"]) for r in published_tables if r["table"] == "2"]
        assert [Decimal(r["saved_pct"]) for r in parse_report(emitted.decode())] == printed
