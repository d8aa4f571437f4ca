"""Benchmark result tables: success rates, cumulative fix-budget rates,
dimension score means, and token/cost accounting."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .corpus import DIFFICULTIES, SUBJECTS
from .gateway import UsageLedger, format_cost, ledger_cost


class EmptyLedger(ValueError):
    pass


class MissingTraces(ValueError):
    pass


class EmptyReports(ValueError):
    pass


@dataclass(frozen=True)
class RunEntry:
    """One theorem run joined with its corpus metadata."""

    theorem_id: str
    difficulty: str
    subject: str
    success: bool
    model_id: str
    scene_attempts: tuple[int | None, ...]  # succeeded_attempt per scene, None = failed

    @classmethod
    def from_record(cls, record: dict) -> "RunEntry":
        return cls(
            theorem_id=record["theorem_id"],
            difficulty=record.get("difficulty") or "Easy",
            subject=record.get("subject") or "Mathematics",
            success=bool(record["success"]),
            model_id=record.get("model_id", "unknown"),
            scene_attempts=tuple(s.get("succeeded_attempt") for s in record.get("scenes", [])),
        )


def load_run_entries(paths: list[str | Path]) -> list[RunEntry]:
    entries = []
    for path in paths:
        path = Path(path)
        files = [path] if path.is_file() else sorted(path.rglob("run_record.json"))
        for f in files:
            entries.append(RunEntry.from_record(json.loads(f.read_text(encoding="utf-8"))))
    return entries


def format_percent(successes: int, attempted: int) -> str:
    """One-decimal percent, round-half-up, computed on the exact fraction."""
    value = (Decimal(successes) * 100 / Decimal(attempted)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP
    )
    return f"{value}%"


@dataclass(frozen=True)
class Table:
    title: str
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    notes: tuple[str, ...] = ()

    def to_text(self) -> str:
        widths = [
            max(len(self.header[c]), *(len(r[c]) for r in self.rows)) if self.rows else len(self.header[c])
            for c in range(len(self.header))
        ]
        lines = [self.title]
        lines.append("  ".join(h.ljust(w) for h, w in zip(self.header, widths)))
        lines.append("  ".join("-" * w for w in widths))
        for row in self.rows:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(self.header)
        writer.writerows(self.rows)
        return buf.getvalue()


def success_table(entries: list[RunEntry]) -> Table:
    """Success rate per difficulty, per subject, and overall."""
    if not entries:
        raise EmptyLedger("no run entries")

    def cell(selector) -> str:
        pool = [e for e in entries if selector(e)]
        if not pool:
            return "-"
        return format_percent(sum(e.success for e in pool), len(pool))

    header = ["model", *DIFFICULTIES, *SUBJECTS, "Overall"]
    rows = []
    for model in sorted({e.model_id for e in entries}):
        row = [model]
        for difficulty in DIFFICULTIES:
            row.append(cell(lambda e, d=difficulty, m=model: e.model_id == m and e.difficulty == d))
        for subject in SUBJECTS:
            row.append(cell(lambda e, s=subject, m=model: e.model_id == m and e.subject == s))
        row.append(cell(lambda e, m=model: e.model_id == m))
        rows.append(tuple(row))
    return Table("Success rate by difficulty and subject", tuple(header), tuple(rows))


def theorem_success_at_budget(entry: RunEntry, budget: int) -> bool:
    """All scenes rendered with a successful attempt index <= budget."""
    if not entry.scene_attempts:
        raise MissingTraces(f"run {entry.theorem_id} carries no per-scene attempt trace")
    return all(a is not None and a <= budget for a in entry.scene_attempts)


def cumulative_success(entries: list[RunEntry], budgets: list[int]) -> dict[str, dict[int, float]]:
    """Fraction of theorems fully rendered within each fix budget, keyed by
    difficulty; monotone non-decreasing in the budget."""
    if not entries:
        raise EmptyLedger("no run entries")
    out: dict[str, dict[int, float]] = {}
    for difficulty in DIFFICULTIES:
        pool = [e for e in entries if e.difficulty == difficulty]
        if not pool:
            continue
        out[difficulty] = {
            n: sum(theorem_success_at_budget(e, n) for e in pool) / len(pool) for n in budgets
        }
    return out


def cumulative_table(entries: list[RunEntry], budgets: list[int]) -> Table:
    if not entries:
        raise EmptyLedger("no run entries")
    header = ["difficulty", *(f"N={n}" for n in budgets)]
    rows = []
    for difficulty in DIFFICULTIES:
        pool = [e for e in entries if e.difficulty == difficulty]
        if not pool:
            continue
        rows.append(
            (
                difficulty,
                *(
                    format_percent(sum(theorem_success_at_budget(e, n) for e in pool), len(pool))
                    for n in budgets
                ),
            )
        )
    return Table("Cumulative theorem success rate by fix budget", tuple(header), tuple(rows))


DIMENSION_COLUMNS = (
    "accuracy_depth",
    "visual_relevance",
    "logical_flow",
    "element_layout",
    "visual_consistency",
)


def score_table(reports_by_model: dict[str, list[dict[str, float]]]) -> Table:
    """Mean value per dimension across a model's videos; the overall column
    is the geometric mean of those five means."""
    if not reports_by_model or not any(reports_by_model.values()):
        raise EmptyReports("no evaluation reports")
    header = ["model", *DIMENSION_COLUMNS, "overall"]
    rows = []
    for model, reports in sorted(reports_by_model.items()):
        if not reports:
            raise EmptyReports(f"no reports for {model}")
        means = [
            sum(r[dim] for r in reports) / len(reports) for dim in DIMENSION_COLUMNS
        ]
        overall = math.prod(means) ** (1 / 5)
        rows.append((model, *(f"{m:.2f}" for m in means), f"{overall:.2f}"))
    return Table("Dimension scores on successfully generated videos", tuple(header), tuple(rows))


def cost_table(ledgers_by_model: dict[str, list[UsageLedger]]) -> Table:
    """Average per-video tokens, cost, and inference time per model."""
    if not ledgers_by_model or not any(ledgers_by_model.values()):
        raise EmptyReports("no usage ledgers")
    header = ["model", "input_tokens", "output_tokens", "cost_usd", "time_s"]
    rows = []
    for model, ledgers in sorted(ledgers_by_model.items()):
        if not ledgers:
            raise EmptyReports(f"no ledgers for {model}")
        n = len(ledgers)
        tokens_in = sum(lg.total_tokens()[0] for lg in ledgers) / n
        tokens_out = sum(lg.total_tokens()[1] for lg in ledgers) / n
        cost = sum(ledger_cost(lg) for lg in ledgers) / n
        seconds = sum(sum(r.latency_ms for r in lg.records) for lg in ledgers) / n / 1000.0
        rows.append((model, f"{tokens_in:.0f}", f"{tokens_out:.0f}", format_cost(cost), f"{seconds:.0f}"))
    return Table(
        "Average per-video tokens, cost, and inference time",
        tuple(header),
        tuple(rows),
        notes=("costs are rounded to 2 decimal places at display time",),
    )
