"""TI/TC/AI/AC micro-F1 scoring and the automatic error taxonomy.

Matching is by exact surface string (whitespace-normalized, case-sensitive)
with multiset semantics: each gold item is consumed at most once, and
repeated strings never earn double credit.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from .corpus import CorpusSplit, GoldEvent
from .ontology import Ontology
from .parsing import PredictedEvent, PredictionRecord

__all__ = [
    "ScoreError",
    "METRICS",
    "MetricCounts",
    "ErrorBreakdown",
    "ScoreReport",
    "score",
    "categorize_errors",
    "load_manual_labels",
]

METRICS = ("TI", "TC", "AI", "AC")

ERROR_CATEGORIES = ("PE", "TTE", "AE", "MAE", "unclassified")


class ScoreError(ValueError):
    pass


def _norm(s: str) -> str:
    return " ".join(s.split())


@dataclass(frozen=True)
class MetricCounts:
    predicted: int = 0
    gold: int = 0
    matched: int = 0

    def __add__(self, other: "MetricCounts") -> "MetricCounts":
        return MetricCounts(
            self.predicted + other.predicted,
            self.gold + other.gold,
            self.matched + other.matched,
        )

    @property
    def precision(self) -> float:
        if self.predicted == 0:
            return 1.0 if self.gold == 0 else 0.0
        return self.matched / self.predicted

    @property
    def recall(self) -> float:
        if self.gold == 0:
            return 1.0 if self.predicted == 0 else 0.0
        return self.matched / self.gold

    @property
    def f1(self) -> float:
        if self.predicted == 0 and self.gold == 0:
            return 1.0
        p, r = self.precision, self.recall
        if p + r == 0:
            return 0.0
        return 2 * p * r / (p + r)


def _pred_tuples(events: list[PredictedEvent]) -> dict[str, Counter]:
    ti: Counter = Counter()
    tc: Counter = Counter()
    ai: Counter = Counter()
    ac: Counter = Counter()
    for ev in events:
        m = _norm(ev.mention)
        ti[m] += 1
        tc[(ev.event_type, m)] += 1
        for role, spans in ev.arguments.items():
            for span in spans:
                s = _norm(span)
                ai[(ev.event_type, s)] += 1
                ac[(ev.event_type, role, s)] += 1
    return {"TI": ti, "TC": tc, "AI": ai, "AC": ac}


def _gold_tuples(events: tuple[GoldEvent, ...]) -> dict[str, Counter]:
    ti: Counter = Counter()
    tc: Counter = Counter()
    ai: Counter = Counter()
    ac: Counter = Counter()
    for ev in events:
        m = _norm(ev.trigger_text)
        ti[m] += 1
        tc[(ev.event_type, m)] += 1
        for arg in ev.arguments:
            s = _norm(arg.text)
            ai[(ev.event_type, s)] += 1
            ac[(ev.event_type, arg.role, s)] += 1
    return {"TI": ti, "TC": tc, "AI": ai, "AC": ac}


def _counts(pred: Counter, gold: Counter) -> MetricCounts:
    matched = sum((pred & gold).values())
    return MetricCounts(
        predicted=sum(pred.values()), gold=sum(gold.values()), matched=matched
    )


@dataclass(frozen=True)
class ErrorBreakdown:
    counts: dict[str, int]
    labels: dict[str, tuple[str, ...]]  # instance_id -> flagged categories
    manual_counts: dict[str, int] = field(default_factory=dict)
    manual_labels: dict[str, str] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "labels": {k: list(v) for k, v in sorted(self.labels.items())},
            "manual_counts": dict(self.manual_counts),
            "manual_labels": dict(sorted(self.manual_labels.items())),
        }


@dataclass(frozen=True)
class ScoreReport:
    overall: dict[str, MetricCounts]
    per_type: dict[str, dict[str, MetricCounts]]
    errors: ErrorBreakdown | None = None

    def f1(self, metric: str) -> float:
        return self.overall[metric].f1

    def to_json_dict(self) -> dict:
        def mc(c: MetricCounts) -> dict:
            return {
                "predicted": c.predicted,
                "gold": c.gold,
                "matched": c.matched,
                "precision": c.precision,
                "recall": c.recall,
                "f1": c.f1,
            }

        doc: dict = {
            "overall": {m: mc(self.overall[m]) for m in METRICS},
            "per_type": {
                t: {m: mc(row[m]) for m in METRICS}
                for t, row in sorted(self.per_type.items())
            },
        }
        if self.errors is not None:
            doc["errors"] = self.errors.to_json_dict()
        return doc

    def f1_tsv(self) -> str:
        header = "\t".join(METRICS)
        values = "\t".join(f"{self.overall[m].f1:.6f}" for m in METRICS)
        return f"{header}\n{values}\n"

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ScoreReport":
        def mc(d: dict) -> MetricCounts:
            return MetricCounts(d["predicted"], d["gold"], d["matched"])

        overall = {m: mc(doc["overall"][m]) for m in METRICS}
        per_type = {
            t: {m: mc(row[m]) for m in METRICS}
            for t, row in doc.get("per_type", {}).items()
        }
        errors = None
        if "errors" in doc:
            e = doc["errors"]
            errors = ErrorBreakdown(
                counts=dict(e["counts"]),
                labels={k: tuple(v) for k, v in e["labels"].items()},
                manual_counts=dict(e.get("manual_counts", {})),
                manual_labels=dict(e.get("manual_labels", {})),
            )
        return cls(overall=overall, per_type=per_type, errors=errors)


def score(
    pred: dict[str, list[PredictedEvent]],
    gold: CorpusSplit,
    ont: Ontology,
    records: list[PredictionRecord] | None = None,
) -> ScoreReport:
    """Greedy multiset matching per instance, micro-aggregated over the
    corpus; optionally attaches the error taxonomy when the raw prediction
    records are supplied."""
    gold_ids = {inst.instance_id for inst in gold.instances}
    unknown = set(pred) - gold_ids
    if unknown:
        raise ScoreError(f"predictions reference unknown instance_ids: {sorted(unknown)[:5]}")
    overall = {m: MetricCounts() for m in METRICS}
    per_type: dict[str, dict[str, MetricCounts]] = {
        t: {m: MetricCounts() for m in METRICS} for t in ont.type_names()
    }
    for inst in gold.instances:
        p = _pred_tuples(pred.get(inst.instance_id, []))
        g = _gold_tuples(inst.events)
        for m in METRICS:
            overall[m] = overall[m] + _counts(p[m], g[m])
        for t in {ev.event_type for ev in inst.events} | {
            ev.event_type for ev in pred.get(inst.instance_id, [])
        }:
            if t not in per_type:
                continue
            pt = _pred_tuples([ev for ev in pred.get(inst.instance_id, []) if ev.event_type == t])
            gt = _gold_tuples(tuple(ev for ev in inst.events if ev.event_type == t))
            for m in METRICS:
                per_type[t][m] = per_type[t][m] + _counts(pt[m], gt[m])
    errors = None
    if records is not None:
        errors = categorize_errors(pred, gold, records)
    return ScoreReport(overall=overall, per_type=per_type, errors=errors)


def load_manual_labels(path: str) -> dict[str, str]:
    """Manual CA/LN annotations: JSON map instance_id -> label."""
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    out = {}
    for k, v in raw.items():
        if v not in ("CA", "LN"):
            raise ScoreError(f"manual label for {k!r} must be CA or LN, got {v!r}")
        out[str(k)] = v
    return out


def categorize_errors(
    pred: dict[str, list[PredictedEvent]],
    gold: CorpusSplit,
    records: list[PredictionRecord],
    manual: dict[str, str] | None = None,
) -> ErrorBreakdown:
    """Machine-decidable error categories per instance.

    PE: a non-ok record touches the instance. TTE: a predicted trigger
    unmatched at TC level. AE: an unmatched predicted argument under a
    type that has a TC match. MAE: a gold trigger or gold argument left
    unmatched. Manually annotated CA/LN instances are reported separately
    and excluded from the automatic counts.
    """
    manual = manual or {}
    bad_status: set[str] = {
        rec.instance_id for rec in records if rec.parse_status != "ok"
    }
    counts = {c: 0 for c in ERROR_CATEGORIES}
    labels: dict[str, tuple[str, ...]] = {}
    manual_counts: dict[str, int] = {}
    for inst in gold.instances:
        iid = inst.instance_id
        p = _pred_tuples(pred.get(iid, []))
        g = _gold_tuples(inst.events)
        pred_tc_left = p["TC"] - g["TC"]
        gold_tc_left = g["TC"] - p["TC"]
        pred_ac_left = p["AC"] - g["AC"]
        gold_ac_left = g["AC"] - p["AC"]
        matched_types = {t for (t, _m) in (p["TC"] & g["TC"])}
        flags: list[str] = []
        if iid in bad_status:
            flags.append("PE")
        if pred_tc_left:
            flags.append("TTE")
        if any(t in matched_types for (t, _r, _s) in pred_ac_left):
            flags.append("AE")
        if gold_tc_left or gold_ac_left:
            flags.append("MAE")
        mismatch = bool(
            flags
            or pred_ac_left
            or (p["TI"] - g["TI"])
            or (g["TI"] - p["TI"])
            or (p["AI"] - g["AI"])
            or (g["AI"] - p["AI"])
        )
        if mismatch and not flags:
            flags.append("unclassified")
        if not flags:
            continue
        if iid in manual:
            manual_counts[manual[iid]] = manual_counts.get(manual[iid], 0) + 1
            continue
        labels[iid] = tuple(flags)
        for f in flags:
            counts[f] += 1
    manual_labels = {k: v for k, v in manual.items()}
    return ErrorBreakdown(
        counts=counts,
        labels=labels,
        manual_counts=manual_counts,
        manual_labels=manual_labels,
    )
