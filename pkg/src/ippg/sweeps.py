"""Rendering-ablation sweeps.

A sweep evaluates every sample once in baseline mode and once per rendering
config in packaged mode. Trials are appended to a JSON-lines store as they
finish, keyed by ``(sample_id, config_key, mode)``, so an interrupted sweep
resumes where it stopped and an uninterrupted rerun writes identical bytes.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Sequence, TypeVar

from .harness.data import Sample
from .harness.judge import Judge, JudgeRule, Verdict
from .packager import Color, Font, RenderBackend, RenderConfig
from .packager.backends import PillowBackend
from .providers import (
    Client,
    ClientError,
    CompletionResult,
    Mode,
    PromptRequest,
    ProviderProfile,
    RetryBudget,
    RetryPolicy,
    TranscriptWriter,
    build_request,
    execute,
    paired_counts,
    request_counts,
)
from .tokenomics import TokenCounts, cost_baseline, cost_ippg, format_usd, savings_pct

log = logging.getLogger(__name__)

BASELINE_KEY = "baseline"
DEFAULT_FONTS = tuple(Font)
DEFAULT_COLORS = tuple(Color)
DEFAULT_SIZES_PT = (16, 20, 24, 28, 32)


class MissingConfigError(LookupError):
    """A config expected in a summary has no trials."""


class NoFeasibleConfigError(LookupError):
    """No config meets the accuracy floor."""


# --------------------------------------------------------------------------- grid


@dataclass(frozen=True)
class AblationGrid:
    fonts: tuple[Font, ...] = DEFAULT_FONTS
    colors: tuple[Color, ...] = DEFAULT_COLORS
    sizes_pt: tuple[float, ...] = DEFAULT_SIZES_PT
    base: RenderConfig = field(default_factory=RenderConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fonts", tuple(Font(f) for f in self.fonts))
        object.__setattr__(self, "colors", tuple(Color(c) for c in self.colors))
        object.__setattr__(self, "sizes_pt", tuple(self.sizes_pt))
        for name in ("fonts", "colors", "sizes_pt"):
            axis = getattr(self, name)
            if not axis or len(set(axis)) != len(axis):
                raise ValueError(f"grid axis {name} must be non-empty without duplicates")

    @property
    def configs(self) -> tuple[RenderConfig, ...]:
        b = self.base
        return tuple(
            RenderConfig(font, color, size, b.dpi, b.margin_px, b.background)
            for font, color, size in itertools.product(self.fonts, self.colors, self.sizes_pt)
        )

    def __len__(self) -> int:
        return len(self.fonts) * len(self.colors) * len(self.sizes_pt)


def ablation_grid(
    fonts: Sequence[Font | str] = DEFAULT_FONTS,
    colors: Sequence[Color | str] = DEFAULT_COLORS,
    sizes_pt: Sequence[float] = DEFAULT_SIZES_PT,
    base: RenderConfig | None = None,
) -> AblationGrid:
    """Cross product of the three axes, ordered font, then color, then size."""
    return AblationGrid(tuple(fonts), tuple(colors), tuple(sizes_pt), base or RenderConfig())


def load_grid(source: str | Path | dict | None) -> AblationGrid:
    """``None``/``"default"`` for the full grid, a dict, or a JSON file with axis overrides."""
    if source is None or source == "default":
        return ablation_grid()
    data = source if isinstance(source, dict) else json.loads(Path(source).read_text(encoding="utf-8"))
    base = RenderConfig.from_dict(data["base"]) if "base" in data else None
    return ablation_grid(
        data.get("fonts", DEFAULT_FONTS),
        data.get("colors", DEFAULT_COLORS),
        data.get("sizes_pt", DEFAULT_SIZES_PT),
        base,
    )


# --------------------------------------------------------------------------- trials


@dataclass(frozen=True)
class TrialResult:
    sample_id: str
    config: RenderConfig | None
    mode: Mode
    verdict: Verdict
    cost_usd: Decimal
    token_counts: TokenCounts
    judge_rule: JudgeRule = JudgeRule.EXACT
    response: str | None = None
    latency_ms: int | None = None
    error: str | None = None

    def __post_init__(self) -> None:
        if self.cost_usd < 0:
            raise ValueError("cost_usd must be non-negative")
        if self.error is not None and self.verdict is not Verdict.ERRORED:
            raise ValueError("errored trials must carry the errored verdict")

    @property
    def correct(self) -> bool:
        return self.verdict is Verdict.CORRECT

    @property
    def config_key(self) -> str:
        return BASELINE_KEY if self.config is None else self.config.key

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.sample_id, self.config_key, self.mode.value)

    def to_record(self) -> dict[str, Any]:
        c = self.token_counts
        return {
            "sample_id": self.sample_id,
            "config": None if self.config is None else self.config.to_dict(),
            "config_key": self.config_key,
            "mode": self.mode.value,
            "verdict": self.verdict.value,
            "correct": self.correct,
            "cost_usd": str(self.cost_usd),
            "tokens": {
                "input_text": c.input_text,
                "output_text": c.output_text,
                "image_baseline": c.image_baseline,
                "image_ippg": c.image_ippg,
                "shared_text": c.shared_text,
            },
            "judge_rule": self.judge_rule.value,
            "response": self.response,
            "latency_ms": self.latency_ms,
            "error": self.error,
        }

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "TrialResult":
        return cls(
            sample_id=rec["sample_id"],
            config=None if rec["config"] is None else RenderConfig.from_dict(rec["config"]),
            mode=Mode(rec["mode"]),
            verdict=Verdict(rec["verdict"]),
            cost_usd=Decimal(rec["cost_usd"]),
            token_counts=TokenCounts(**rec["tokens"]),
            judge_rule=JudgeRule(rec.get("judge_rule", "exact")),
            response=rec.get("response"),
            latency_ms=rec.get("latency_ms"),
            error=rec.get("error"),
        )


class TrialStore:
    """Append-only JSON-lines trial file with one writer.

    A torn final line (a crash mid-write) is discarded on open.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._repair()

    def _repair(self) -> None:
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        if data and not data.endswith(b"\n"):
            cut = data.rfind(b"\n") + 1
            log.warning("dropping torn trailing record in %s", self.path)
            with self.path.open("r+b") as fh:
                fh.truncate(cut)

    def __iter__(self) -> Iterator[TrialResult]:
        if not self.path.exists():
            return
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield TrialResult.from_record(json.loads(line))

    def load(self) -> list[TrialResult]:
        return list(self)

    def keys(self) -> set[tuple[str, str, str]]:
        return {t.key for t in self}

    def append(self, trial: TrialResult) -> None:
        line = json.dumps(trial.to_record(), sort_keys=True, ensure_ascii=False)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()


# --------------------------------------------------------------------------- running


@dataclass
class _Pending:
    sample: Sample
    config: RenderConfig | None
    request: PromptRequest
    counts: TokenCounts


def _output_tokens(profile: ProviderProfile, result: CompletionResult) -> int:
    if result.reported_usage is not None:
        return result.reported_usage.output_text
    return profile.count_text(result.text)


def _finish(
    pending: _Pending,
    outcome: CompletionResult | ClientError,
    profile: ProviderProfile,
    judge: Judge,
) -> TrialResult:
    c = pending.counts
    mode = pending.request.mode
    if isinstance(outcome, ClientError):
        return TrialResult(
            pending.sample.id, pending.config, mode, Verdict.ERRORED, Decimal(0), c,
            judge.rule, None, None, f"{type(outcome).__name__}: {outcome}",
        )
    counts = TokenCounts(c.input_text, _output_tokens(profile, outcome), c.image_baseline, c.image_ippg, c.shared_text)
    bill = cost_baseline if mode is Mode.BASELINE else cost_ippg
    truth = pending.sample.ground_truth
    verdict = Verdict.INCORRECT if truth is None else judge(outcome.text, truth)
    return TrialResult(
        pending.sample.id, pending.config, mode, verdict, bill(profile.pricing, counts).total, counts,
        judge.rule, outcome.text, outcome.latency_ms, None,
    )


def _plan(
    sample: Sample,
    profile: ProviderProfile,
    grid: AblationGrid,
    done: set[tuple[str, str, str]],
    backend: RenderBackend,
    modes: frozenset[Mode],
) -> Iterator[_Pending]:
    todo_configs = []
    if Mode.IPPG in modes:
        todo_configs = [c for c in grid.configs if (sample.id, c.key, Mode.IPPG.value) not in done]
    need_base = Mode.BASELINE in modes and (sample.id, BASELINE_KEY, Mode.BASELINE.value) not in done
    if not (need_base or todo_configs):
        return
    images = sample.load_images()
    meta = {"sample_id": sample.id}
    base_req = build_request(profile, sample.system_text, sample.user_text, images, Mode.BASELINE, metadata=meta)
    if need_base:
        yield _Pending(sample, None, base_req, request_counts(profile, base_req))
    for config in todo_configs:
        req = build_request(
            profile, sample.system_text, sample.user_text, images, Mode.IPPG, config, backend=backend, metadata=meta
        )
        yield _Pending(sample, config, req, paired_counts(profile, base_req, req))


T = TypeVar("T")


def _batches(items: Iterable[T], size: int) -> Iterator[list[T]]:
    it = iter(items)
    while batch := list(itertools.islice(it, size)):
        yield batch


def run_sweep(
    samples: Sequence[Sample],
    profile: ProviderProfile,
    grid: AblationGrid,
    client: Client,
    judge_rule: Judge | JudgeRule | str = JudgeRule.EXACT,
    store: TrialStore | str | Path | None = None,
    *,
    max_in_flight: int | None = None,
    retry: RetryPolicy | None = None,
    retry_budget: int = 100,
    backend: RenderBackend | None = None,
    transcript: TranscriptWriter | None = None,
    sleep: Callable[[float], None] | None = None,
    modes: Iterable[Mode | str] = (Mode.BASELINE, Mode.IPPG),
) -> list[TrialResult]:
    """Run (or resume) a sweep and return every trial in canonical order.

    Canonical order is per sample: the baseline trial, then one packaged trial
    per grid config in grid order. ``modes`` restricts the run to one arm.
    Client errors are recorded on the trial;
    anything else (including KeyboardInterrupt) propagates and leaves the store
    resumable.
    """
    if not samples:
        raise ValueError("sweep needs at least one sample")
    ids = [s.id for s in samples]
    if len(set(ids)) != len(ids):
        raise ValueError("sample ids must be unique")
    arms = frozenset(Mode(m) for m in modes)
    if not arms:
        raise ValueError("sweep needs at least one mode")
    judge = judge_rule if isinstance(judge_rule, Judge) else Judge(JudgeRule(judge_rule))
    if store is not None and not isinstance(store, TrialStore):
        store = TrialStore(store)
    backend = backend or PillowBackend()
    budget = RetryBudget(retry_budget)
    limits = [n for n in (max_in_flight, getattr(client, "max_in_flight", None)) if n]
    width = max(1, min(limits)) if limits else 1

    existing = {t.key: t for t in store} if store is not None else {}
    done = set(existing)

    def call(p: _Pending) -> CompletionResult | ClientError:
        kwargs = {} if sleep is None else {"sleep": sleep}
        try:
            result = execute(client, p.request, retry, budget, **kwargs)
        except ClientError as exc:
            if transcript is not None:
                transcript.record(p.request, error=exc)
            return exc
        if transcript is not None:
            transcript.record(p.request, result)
        return result

    pool = ThreadPoolExecutor(max_workers=width) if width > 1 else None
    try:
        for sample in samples:
            for batch in _batches(_plan(sample, profile, grid, done, backend, arms), width):
                outcomes = list(pool.map(call, batch)) if pool else [call(p) for p in batch]
                for pending, outcome in zip(batch, outcomes):
                    trial = _finish(pending, outcome, profile, judge)
                    if store is not None:
                        store.append(trial)
                    existing[trial.key] = trial
                    done.add(trial.key)
    finally:
        if pool is not None:
            pool.shutdown(wait=True, cancel_futures=True)

    ordered: list[TrialResult] = []
    for sample in samples:
        keys = []
        if Mode.BASELINE in arms:
            keys.append((sample.id, BASELINE_KEY, Mode.BASELINE.value))
        if Mode.IPPG in arms:
            keys += [(sample.id, c.key, Mode.IPPG.value) for c in grid.configs]
        ordered.extend(existing[k] for k in keys if k in existing)
    return ordered


# --------------------------------------------------------------------------- summaries


@dataclass(frozen=True)
class ConfigSummary:
    config_key: str
    config: RenderConfig | None
    n_trials: int
    n_correct: int
    n_errored: int
    accuracy: float
    mean_cost: Decimal
    delta_acc_vs_baseline: float
    saved_pct: Decimal | None

    @property
    def flagged(self) -> bool:
        """Every trial for this config errored."""
        return self.n_errored == self.n_trials


@dataclass(frozen=True)
class Aggregate:
    n_trials: int
    n_correct: int
    n_errored: int
    total_cost: Decimal

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_trials if self.n_trials else 0.0

    @property
    def mean_cost(self) -> Decimal:
        return self.total_cost / self.n_trials if self.n_trials else Decimal(0)


def aggregate(results: Iterable[TrialResult]) -> Aggregate:
    results = list(results)
    return Aggregate(
        len(results),
        sum(t.correct for t in results),
        sum(t.verdict is Verdict.ERRORED for t in results),
        sum((t.cost_usd for t in results), Decimal(0)),
    )


def summarize(
    results: Iterable[TrialResult],
    baseline_results: Iterable[TrialResult],
    configs: Sequence[RenderConfig] | None = None,
) -> list[ConfigSummary]:
    """Per-config accuracy and mean cost against the pooled baseline.

    Errored trials stay in the denominator as incorrect. With ``configs``, the
    output follows that order and a config with no trials is an error;
    otherwise configs are ordered by key.
    """
    groups: dict[str, list[TrialResult]] = defaultdict(list)
    by_key: dict[str, RenderConfig | None] = {}
    for t in results:
        if t.mode is not Mode.IPPG:
            continue
        groups[t.config_key].append(t)
        by_key[t.config_key] = t.config
    base = aggregate(t for t in baseline_results if t.mode is Mode.BASELINE)
    base_mean = base.mean_cost

    if configs is not None:
        keys = [c.key for c in configs]
        missing = [k for k in keys if k not in groups]
        if missing:
            raise MissingConfigError(f"no trials for {len(missing)} config(s), e.g. {missing[0]}")
        for c in configs:
            by_key[c.key] = c
    else:
        keys = sorted(groups)

    out = []
    for key in keys:
        agg = aggregate(groups[key])
        out.append(
            ConfigSummary(
                config_key=key,
                config=by_key.get(key),
                n_trials=agg.n_trials,
                n_correct=agg.n_correct,
                n_errored=agg.n_errored,
                accuracy=agg.accuracy,
                mean_cost=agg.mean_cost,
                delta_acc_vs_baseline=100 * (agg.accuracy - base.accuracy),
                saved_pct=savings_pct(base_mean, agg.mean_cost) if base_mean > 0 else None,
            )
        )
    return out


S = TypeVar("S")


def dominates(a: Any, b: Any) -> bool:
    """``a`` is at least as accurate and as cheap as ``b``, and strictly better in one."""
    return (
        a.accuracy >= b.accuracy
        and a.mean_cost <= b.mean_cost
        and (a.accuracy > b.accuracy or a.mean_cost < b.mean_cost)
    )


def pareto_frontier(summaries: Sequence[S]) -> list[S]:
    """Non-dominated points under (higher accuracy, lower mean cost), in input order.

    Points with identical accuracy and cost are all kept.
    """
    order = sorted(range(len(summaries)), key=lambda i: (summaries[i].mean_cost, -summaries[i].accuracy))
    keep: set[int] = set()
    best_cheaper = None  # max accuracy among strictly cheaper points
    for _, group in itertools.groupby(order, key=lambda i: summaries[i].mean_cost):
        group = list(group)
        top = summaries[group[0]].accuracy
        if best_cheaper is None or top > best_cheaper:
            keep.update(i for i in group if summaries[i].accuracy == top)
        best_cheaper = top if best_cheaper is None else max(best_cheaper, top)
    return [s for i, s in enumerate(summaries) if i in keep]


@dataclass(frozen=True)
class BestAccuracy:
    pass


@dataclass(frozen=True)
class BestEfficiency:
    """Largest saving among configs whose accuracy is at least ``min_accuracy``."""

    min_accuracy: float

    @classmethod
    def from_baseline(cls, baseline_accuracy: float, margin_pp: float = 5.0) -> "BestEfficiency":
        return cls(baseline_accuracy - margin_pp / 100)


def _rank(s: ConfigSummary) -> tuple:
    saved = s.saved_pct if s.saved_pct is not None else Decimal("-Infinity")
    return (-s.accuracy, -saved, s.config_key)


def select_best(summaries: Sequence[ConfigSummary], criterion: BestAccuracy | BestEfficiency) -> ConfigSummary:
    """Pick one config; ties go to higher saving, then the smaller config key."""
    if not summaries:
        raise ValueError("no summaries to choose from")
    if isinstance(criterion, BestAccuracy):
        return min(summaries, key=_rank)
    feasible = [s for s in summaries if s.accuracy >= criterion.min_accuracy]
    if not feasible:
        raise NoFeasibleConfigError(f"no config reaches accuracy {criterion.min_accuracy:.3f}")

    def by_saving(s: ConfigSummary) -> tuple:
        saved = s.saved_pct if s.saved_pct is not None else Decimal("-Infinity")
        return (-saved, -s.accuracy, s.config_key)

    return min(feasible, key=by_saving)


SUMMARY_COLUMNS = (
    "config", "font", "color", "size_pt", "n", "correct", "errored",
    "accuracy_pct", "mean_cost_usd", "delta_acc_pp", "saved_pct", "flagged",
)


def _pct(x: float) -> str:
    return f"{Decimal(repr(100 * x)).quantize(Decimal('0.1'), rounding=ROUND_HALF_UP):f}"


def _pp(x: float) -> str:
    return f"{Decimal(repr(x)).quantize(Decimal('0.1'), rounding=ROUND_HALF_UP):f}"


def summary_rows(summaries: Iterable[ConfigSummary]) -> list[list[str]]:
    rows = []
    for s in summaries:
        c = s.config
        rows.append([
            s.config_key,
            "" if c is None else c.font.value,
            "" if c is None else c.color.value,
            "" if c is None else f"{c.size_pt:g}",
            str(s.n_trials),
            str(s.n_correct),
            str(s.n_errored),
            _pct(s.accuracy),
            format_usd(s.mean_cost),
            _pp(s.delta_acc_vs_baseline),
            "" if s.saved_pct is None else f"{s.saved_pct:f}",
            "yes" if s.flagged else "no",
        ])
    return rows


def write_summary_csv(summaries: Iterable[ConfigSummary], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(summary_rows(summaries))
    return path


# --------------------------------------------------------------------------- manifest


@dataclass(frozen=True)
class SweepManifest:
    """Declarative sweep settings, read from a JSON file.

    Relative ``dataset``/``grid``/``out`` paths resolve against the manifest's directory.
    """

    dataset: Path
    profile: str = "gpt-4.1"
    grid: str | dict = "default"
    seed: int = 0
    max_in_flight: int = 1
    judge: str = "exact"
    out: Path = Path("runs/sweep")
    client: str = "mock"
    mock_accuracy: float = 0.6

    @classmethod
    def load(cls, path: str | Path) -> "SweepManifest":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        root = path.parent

        def rel(p: str) -> Path:
            q = Path(p)
            return q if q.is_absolute() else root / q

        grid = data.get("grid", "default")
        if isinstance(grid, str) and grid != "default":
            grid = str(rel(grid))
        profile = data.get("profile", "gpt-4.1")
        if (root / profile).is_file():
            profile = str(root / profile)
        return cls(
            dataset=rel(data["dataset"]),
            profile=profile,
            grid=grid,
            seed=int(data.get("seed", 0)),
            max_in_flight=int(data.get("max_in_flight", 1)),
            judge=data.get("judge", "exact"),
            out=rel(data.get("out", "runs/sweep")),
            client=data.get("client", "mock"),
            mock_accuracy=float(data.get("mock_accuracy", 0.6)),
        )
