"""Analysis artifacts: per-type AC deltas ordered by training frequency,
variant comparison tables, and plot-ready CSV emission."""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .corpus import SplitStats
from .scoring import METRICS, ScoreReport

__all__ = [
    "ReportError",
    "DeltaRow",
    "DeltaTable",
    "ComparisonTable",
    "frequency_delta",
    "comparison_table",
    "emit_plot_data",
]


class ReportError(ValueError):
    pass


def _pct(v: float) -> float:
    return v * 100.0


@dataclass(frozen=True)
class DeltaRow:
    event_type: str
    train_frequency: int
    ac_a: float  # percent
    ac_b: float  # percent
    delta: float  # percent, b - a


@dataclass(frozen=True)
class DeltaTable:
    rows: tuple[DeltaRow, ...]
    micro: DeltaRow
    macro: DeltaRow

    def to_csv_rows(self) -> tuple[list[str], list[list[str]]]:
        header = ["event_type", "train_frequency", "ac_a", "ac_b", "delta"]
        body = [
            [r.event_type, str(r.train_frequency), f"{r.ac_a:.2f}", f"{r.ac_b:.2f}", f"{r.delta:.2f}"]
            for r in (*self.rows, self.micro, self.macro)
        ]
        return header, body


def frequency_delta(
    report_a: ScoreReport, report_b: ScoreReport, train_stats: SplitStats
) -> DeltaTable:
    """Per-type AC comparison, rows ordered by descending training frequency
    (ties by type name); micro and macro average rows appended."""
    if set(report_a.per_type) != set(report_b.per_type):
        raise ReportError("reports cover different ontologies")
    freq = {ts.event_type: ts.mentions for ts in train_stats.by_type}
    ordered = [ts.event_type for ts in train_stats.by_type if ts.event_type in report_a.per_type]
    leftover = sorted(t for t in report_a.per_type if t not in freq)
    rows = []
    for t in ordered + leftover:
        a = _pct(report_a.per_type[t]["AC"].f1)
        b = _pct(report_b.per_type[t]["AC"].f1)
        rows.append(
            DeltaRow(
                event_type=t,
                train_frequency=freq.get(t, 0),
                ac_a=a,
                ac_b=b,
                delta=b - a,
            )
        )
    micro_a = _pct(report_a.overall["AC"].f1)
    micro_b = _pct(report_b.overall["AC"].f1)
    micro = DeltaRow("micro_average", train_stats.event_mentions, micro_a, micro_b, micro_b - micro_a)
    if rows:
        macro_a = sum(r.ac_a for r in rows) / len(rows)
        macro_b = sum(r.ac_b for r in rows) / len(rows)
    else:
        macro_a = macro_b = 0.0
    macro = DeltaRow("macro_average", train_stats.event_mentions, macro_a, macro_b, macro_b - macro_a)
    return DeltaTable(rows=tuple(rows), micro=micro, macro=macro)


@dataclass(frozen=True)
class ComparisonTable:
    variants: tuple[str, ...]
    cells: dict[str, dict[str, float]]  # variant -> metric -> percent
    best: dict[str, tuple[str, ...]]  # metric -> variants with the top value
    second: dict[str, tuple[str, ...]]

    def tsv(self) -> str:
        lines = ["variant\t" + "\t".join(METRICS)]
        for v in self.variants:
            lines.append(v + "\t" + "\t".join(f"{self.cells[v][m]:.2f}" for m in METRICS))
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        """Aligned table; best value per column marked '*', second-best '+'."""
        width = max([len("variant")] + [len(v) for v in self.variants])
        header = "variant".ljust(width) + "".join(f"{m:>10}" for m in METRICS)
        lines = [header]
        for v in self.variants:
            cells = []
            for m in METRICS:
                mark = ""
                if v in self.best[m]:
                    mark = "*"
                elif v in self.second[m]:
                    mark = "+"
                cells.append(f"{self.cells[v][m]:.2f}{mark}".rjust(10))
            lines.append(v.ljust(width) + "".join(cells))
        lines.append("(* best, + second best)")
        return "\n".join(lines) + "\n"

    def to_csv_rows(self) -> tuple[list[str], list[list[str]]]:
        header = ["variant", *METRICS]
        body = [
            [v, *(f"{self.cells[v][m]:.2f}" for m in METRICS)] for v in self.variants
        ]
        return header, body


def comparison_table(reports: dict[str, ScoreReport]) -> ComparisonTable:
    """TI/TC/AI/AC percentages per variant with best/second-best flags."""
    if not reports:
        raise ReportError("no reports given")
    variants = tuple(reports)
    cells = {
        v: {m: round(_pct(reports[v].overall[m].f1), 2) for m in METRICS} for v in variants
    }
    best: dict[str, tuple[str, ...]] = {}
    second: dict[str, tuple[str, ...]] = {}
    for m in METRICS:
        values = sorted({cells[v][m] for v in variants}, reverse=True)
        top = values[0]
        best[m] = tuple(v for v in variants if cells[v][m] == top)
        if len(values) > 1:
            runner = values[1]
            second[m] = tuple(v for v in variants if cells[v][m] == runner)
        else:
            second[m] = ()
    return ComparisonTable(variants=variants, cells=cells, best=best, second=second)


def emit_plot_data(table: DeltaTable | ComparisonTable, path: str) -> str:
    """Write any table with to_csv_rows() as a documented-header CSV."""
    header, body = table.to_csv_rows()
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(body)
    return path
