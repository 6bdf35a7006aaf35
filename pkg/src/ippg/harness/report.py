"""Baseline-versus-packaged reports sliced by sample metadata.

Rows keep costs at six decimal places (USD) and derive ``saved_pct`` from those
stored values, so every emitted percentage can be recomputed from the two cost
cells printed next to it.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from ..tokenomics import format_usd, savings_pct, to_decimal
from .data import DataError, Sample

if TYPE_CHECKING:
    from ..sweeps import TrialResult

OVERALL = "Overall"
MISSING_VALUE = "<none>"
USD_PLACES = 6

COLUMNS = (
    "slice",
    "n",
    "base_acc_pct",
    "ippg_acc_pct",
    "delta_acc_pp",
    "base_cost_usd",
    "ippg_cost_usd",
    "saved_pct",
    "base_cost_per_correct",
    "ippg_cost_per_correct",
)


class UnknownSliceKeyError(KeyError):
    pass


def _usd(value: Decimal | float | str) -> Decimal:
    return to_decimal(value).quantize(Decimal(1).scaleb(-USD_PLACES), rounding=ROUND_HALF_UP)


def _one_decimal(value: Decimal) -> str:
    q = value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    if q.is_zero():
        q = q.copy_abs()
    return f"{q:f}"


@dataclass(frozen=True)
class ReportRow:
    """One slice. Accuracies are fractions in [0, 1]; costs are mean USD per query."""

    slice: str
    baseline_acc: Decimal
    ippg_acc: Decimal
    baseline_cost: Decimal
    ippg_cost: Decimal
    n: int | None = None
    baseline_cost_per_correct: Decimal | None = None
    ippg_cost_per_correct: Decimal | None = None

    def __post_init__(self) -> None:
        for name in ("baseline_acc", "ippg_acc"):
            value = to_decimal(getattr(self, name))
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must be a fraction in [0, 1], got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "baseline_cost", _usd(self.baseline_cost))
        object.__setattr__(self, "ippg_cost", _usd(self.ippg_cost))

    @property
    def delta_acc(self) -> Decimal:
        """Accuracy change in percentage points."""
        return 100 * (self.ippg_acc - self.baseline_acc)

    @property
    def saved_pct(self) -> Decimal:
        return savings_pct(self.baseline_cost, self.ippg_cost)

    def cells(self) -> list[str]:
        def cpc(v: Decimal | None) -> str:
            return "" if v is None else format_usd(v, USD_PLACES)

        return [
            self.slice,
            "" if self.n is None else str(self.n),
            _one_decimal(100 * self.baseline_acc),
            _one_decimal(100 * self.ippg_acc),
            _one_decimal(self.delta_acc),
            format_usd(self.baseline_cost, USD_PLACES),
            format_usd(self.ippg_cost, USD_PLACES),
            _one_decimal(self.saved_pct),
            cpc(self.baseline_cost_per_correct),
            cpc(self.ippg_cost_per_correct),
        ]


@dataclass(frozen=True)
class Report:
    rows: tuple[ReportRow, ...]

    @property
    def cost_per_correct(self) -> dict[str, Decimal | None]:
        """Whole-run cost per correct answer for each arm (taken from the Overall row)."""
        for row in self.rows:
            if row.slice == OVERALL:
                return {"baseline": row.baseline_cost_per_correct, "ippg": row.ippg_cost_per_correct}
        return {"baseline": None, "ippg": None}


def cost_per_correct(results: Iterable["TrialResult"]) -> Decimal:
    """Total spend (all trials, including failures) over the number of correct trials.

    Returns ``Decimal('Infinity')`` when nothing is correct.
    """
    results = list(results)
    total = sum((t.cost_usd for t in results), Decimal(0))
    correct = sum(1 for t in results if t.correct)
    if correct == 0:
        return Decimal("Infinity")
    return total / correct


def _arm_stats(trials: list["TrialResult"]) -> tuple[Decimal, Decimal, Decimal]:
    n = len(trials)
    total = sum((t.cost_usd for t in trials), Decimal(0))
    correct = sum(1 for t in trials if t.correct)
    return Decimal(correct) / n, total / n, cost_per_correct(trials)


def _row(label: str, trials: list["TrialResult"]) -> ReportRow | None:
    base = [t for t in trials if t.mode.value == "baseline"]
    packed = [t for t in trials if t.mode.value == "ippg"]
    if not base or not packed:
        warnings.warn(f"slice {label!r} has no trials in one arm; row omitted", stacklevel=3)
        return None
    b_acc, b_cost, b_cpc = _arm_stats(base)
    p_acc, p_cost, p_cpc = _arm_stats(packed)
    n = len({t.sample_id for t in trials})
    return ReportRow(label, b_acc, p_acc, b_cost, p_cost, n, b_cpc, p_cpc)


def slice_metrics(
    results: Iterable["TrialResult"],
    samples: Sequence[Sample],
    slice_keys: Sequence[str | Sequence[str]] = (),
) -> Report:
    """An Overall row, then one row per value combination of each slice group.

    Each entry of ``slice_keys`` is a metadata key or a tuple of keys sliced
    jointly (``("language", "question_type")`` gives rows like ``English+MCQ``).
    Samples lacking a key fall in the ``<none>`` value for it.
    """
    results = list(results)
    by_id = {s.id: s for s in samples}
    for t in results:
        if t.sample_id not in by_id:
            raise DataError(f"trial references unknown sample {t.sample_id!r}")
    available = sorted({k for s in samples for k in s.metadata})
    groups = [(g,) if isinstance(g, str) else tuple(g) for g in slice_keys]
    for group in groups:
        for key in group:
            if key not in available:
                raise UnknownSliceKeyError(f"unknown slice key {key!r}; available: {', '.join(available) or '(none)'}")

    rows: list[ReportRow] = []
    overall = _row(OVERALL, results)
    if overall is not None:
        rows.append(overall)
    for group in groups:
        buckets: dict[tuple[str, ...], list] = {}
        for t in results:
            meta = by_id[t.sample_id].metadata
            value = tuple(meta.get(k, MISSING_VALUE) for k in group)
            buckets.setdefault(value, []).append(t)
        for value in sorted(buckets):
            row = _row("+".join(value), buckets[value])
            if row is not None:
                rows.append(row)
    return Report(tuple(rows))


def report_table(report: Report) -> list[list[str]]:
    return [list(COLUMNS)] + [row.cells() for row in report.rows]


def render_report(report: Report, fmt: str = "csv") -> str:
    if not report.rows:
        raise ValueError("report has no rows")
    table = report_table(report)
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(table)
        return buf.getvalue()
    if fmt in ("md", "markdown"):
        header, *body = table
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(cells) + " |" for cells in body]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r} (csv or md)")


def emit_report(report: Report, path: str | Path, fmt: str = "csv") -> Path:
    path = Path(path)
    text = render_report(report, fmt)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def parse_report(text: str, fmt: str = "csv") -> list[dict[str, str]]:
    """Read an emitted report back into column-keyed rows."""
    if fmt == "csv":
        return list(csv.DictReader(io.StringIO(text)))
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    split = [[c.strip() for c in ln.strip("|").split("|")] for ln in lines]
    header, body = split[0], split[2:]
    return [dict(zip(header, cells)) for cells in body]


def rows_from_mapping(records: Iterable[Mapping[str, object]]) -> Report:
    """Build a report from plain records (``slice``, accuracies as fractions, mean costs)."""
    rows = []
    for rec in records:
        rows.append(
            ReportRow(
                slice=str(rec["slice"]),
                baseline_acc=to_decimal(rec["baseline_acc"]),
                ippg_acc=to_decimal(rec["ippg_acc"]),
                baseline_cost=to_decimal(rec["baseline_cost"]),
                ippg_cost=to_decimal(rec["ippg_cost"]),
                n=None if rec.get("n") in (None, "") else int(rec["n"]),
            )
        )
    return Report(tuple(rows))
