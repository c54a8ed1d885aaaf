"""Sentence corpus: ingest, validation, splits, and low-data subsets."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field

from .ontology import Ontology

__all__ = [
    "CorpusError",
    "ArgumentMention",
    "GoldEvent",
    "SentenceInstance",
    "CorpusSplit",
    "ingest",
    "save_split",
    "select_dev",
    "subset_uniform",
    "subset_covered",
    "stats",
]

log = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Raised on malformed corpus files or violated preconditions."""


@dataclass(frozen=True)
class ArgumentMention:
    role: str
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class GoldEvent:
    event_type: str
    trigger_text: str
    trigger_start: int
    trigger_end: int
    arguments: tuple[ArgumentMention, ...]


@dataclass(frozen=True)
class SentenceInstance:
    doc_id: str
    wnd_id: str
    instance_id: str
    text: str
    events: tuple[GoldEvent, ...]

    def event_types(self) -> set[str]:
        return {ev.event_type for ev in self.events}

    def filled_roles(self, event_type: str) -> set[str]:
        """Distinct roles filled by this instance's events of ``event_type``."""
        return {
            arg.role
            for ev in self.events
            if ev.event_type == event_type
            for arg in ev.arguments
        }

    def coverage(self) -> int:
        """Distinct (event type, role) pairs filled across all events."""
        return len(
            {(ev.event_type, arg.role) for ev in self.events for arg in ev.arguments}
        )


@dataclass(frozen=True)
class CorpusSplit:
    name: str
    instances: tuple[SentenceInstance, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise CorpusError("split name must be non-empty")

    def __len__(self) -> int:
        return len(self.instances)

    def instance_ids(self) -> list[str]:
        return [inst.instance_id for inst in self.instances]


def _span_error(kind: str, text: str, span_text: str, start: int, end: int) -> str | None:
    if not (0 <= start < end <= len(text)):
        return f"{kind} offsets [{start}:{end}] out of range for text of length {len(text)}"
    if text[start:end] != span_text:
        return f"{kind} text {span_text!r} != text[{start}:{end}] == {text[start:end]!r}"
    return None


def _validate_instance(inst: SentenceInstance, ont: Ontology) -> list[str]:
    problems: list[str] = []
    for ev in inst.events:
        if ev.event_type not in ont:
            problems.append(f"unknown event type {ev.event_type!r}")
            continue
        err = _span_error("trigger", inst.text, ev.trigger_text, ev.trigger_start, ev.trigger_end)
        if err:
            problems.append(err)
        legal = set(ont.get(ev.event_type).role_names)
        for arg in ev.arguments:
            if arg.role not in legal:
                problems.append(
                    f"role {arg.role!r} is not defined for event type {ev.event_type!r}"
                )
            err = _span_error(f"argument {arg.role!r}", inst.text, arg.text, arg.start, arg.end)
            if err:
                problems.append(err)
    return problems


def _parse_record(raw: dict, line_no: int) -> SentenceInstance:
    try:
        doc_id = str(raw["doc_id"])
        wnd_id = str(raw["wnd_id"])
        text = raw["text"]
        if not isinstance(text, str):
            raise CorpusError("'text' must be a string")
        instance_id = str(raw.get("instance_id", line_no))
        events = []
        for em in raw.get("event_mentions", []):
            trig = em["trigger"]
            args = tuple(
                ArgumentMention(
                    role=str(a["role"]),
                    text=str(a["text"]),
                    start=int(a["start"]),
                    end=int(a["end"]),
                )
                for a in em.get("arguments", [])
            )
            events.append(
                GoldEvent(
                    event_type=str(em["event_type"]),
                    trigger_text=str(trig["text"]),
                    trigger_start=int(trig["start"]),
                    trigger_end=int(trig["end"]),
                    arguments=args,
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"line {line_no}: malformed record: {exc}") from exc
    return SentenceInstance(
        doc_id=doc_id, wnd_id=wnd_id, instance_id=instance_id, text=text, events=tuple(events)
    )


def ingest(path: str, ont: Ontology, *, strict: bool = True, name: str | None = None) -> CorpusSplit:
    """Read a JSON-lines sentence file and validate every gold event.

    Strict mode aborts on the first invalid record; lenient mode skips
    invalid records and logs how many were dropped.
    """
    instances: list[SentenceInstance] = []
    seen_ids: set[str] = set()
    skipped = 0
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                if strict:
                    raise CorpusError(f"{path}:{line_no}: not valid JSON: {exc}") from exc
                skipped += 1
                continue
            try:
                inst = _parse_record(raw, line_no)
            except CorpusError as exc:
                if strict:
                    raise CorpusError(f"{path}: {exc}") from exc
                skipped += 1
                continue
            problems = _validate_instance(inst, ont)
            if inst.instance_id in seen_ids:
                problems.append(f"duplicate instance_id {inst.instance_id!r}")
            if problems:
                msg = f"instance {inst.instance_id!r}: " + "; ".join(problems)
                if strict:
                    raise CorpusError(f"{path}: {msg}")
                skipped += 1
                log.warning("skipping %s", msg)
                continue
            seen_ids.add(inst.instance_id)
            instances.append(inst)
    if skipped:
        log.warning("%s: skipped %d invalid record(s)", path, skipped)
    if not instances:
        raise CorpusError(f"{path}: no valid instances")
    return CorpusSplit(name=name or path, instances=tuple(instances))


def save_split(split: CorpusSplit, path: str) -> int:
    """Write the canonical JSONL form; ``ingest`` of the result round-trips."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for inst in split.instances:
            record = {
                "doc_id": inst.doc_id,
                "wnd_id": inst.wnd_id,
                "instance_id": inst.instance_id,
                "text": inst.text,
                "event_mentions": [
                    {
                        "event_type": ev.event_type,
                        "trigger": {
                            "text": ev.trigger_text,
                            "start": ev.trigger_start,
                            "end": ev.trigger_end,
                        },
                        "arguments": [
                            {"role": a.role, "text": a.text, "start": a.start, "end": a.end}
                            for a in ev.arguments
                        ],
                    }
                    for ev in inst.events
                ],
            }
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    return len(split.instances)


def _in_split_order(split: CorpusSplit, chosen: set[str]) -> tuple[SentenceInstance, ...]:
    return tuple(inst for inst in split.instances if inst.instance_id in chosen)


def select_dev(split: CorpusSplit, ont: Ontology, n: int, seed: int) -> CorpusSplit:
    """Small dev split: two argument-rich instances per event type, padded
    with seeded-random no-event instances up to ``n``."""
    present = [t for t in ont.type_names() if any(t in i.event_types() for i in split.instances)]
    if n < 2 * len(present):
        raise CorpusError(
            f"n={n} is too small: {len(present)} event types present need {2 * len(present)} slots"
        )
    chosen: set[str] = set()
    for t in present:
        have = sum(1 for inst in split.instances if inst.instance_id in chosen and t in inst.event_types())
        if have >= 2:
            continue
        candidates = [inst for inst in split.instances if t in inst.event_types() and inst.instance_id not in chosen]
        candidates.sort(key=lambda i: (-len(i.filled_roles(t)), i.instance_id))
        for inst in candidates[: 2 - have]:
            chosen.add(inst.instance_id)
    fillers = [inst for inst in split.instances if not inst.events and inst.instance_id not in chosen]
    want = min(n - len(chosen), len(fillers))
    if want > 0:
        rng = random.Random(seed)
        for inst in rng.sample(fillers, want):
            chosen.add(inst.instance_id)
    return CorpusSplit(name=f"{split.name}-dev", instances=_in_split_order(split, chosen))


def subset_uniform(split: CorpusSplit, n: int, seed: int) -> CorpusSplit:
    """Seeded uniform sample without replacement, original order preserved."""
    if n > len(split.instances):
        raise CorpusError(f"n={n} exceeds split size {len(split.instances)}")
    rng = random.Random(seed)
    idx = sorted(rng.sample(range(len(split.instances)), n))
    return CorpusSplit(
        name=f"{split.name}-uniform{n}",
        instances=tuple(split.instances[i] for i in idx),
    )


def subset_covered(split: CorpusSplit, ont: Ontology, n: int, seed: int) -> CorpusSplit:
    """Subset of size ``n`` covering every event type at least once, then
    prioritizing instances whose events fill more distinct roles."""
    if len(ont) > n:
        raise CorpusError(f"n={n} cannot cover {len(ont)} event types")
    present = [t for t in ont.type_names() if any(t in i.event_types() for i in split.instances)]
    chosen: set[str] = set()
    for t in present:
        if any(t in inst.event_types() for inst in split.instances if inst.instance_id in chosen):
            continue
        candidates = [inst for inst in split.instances if t in inst.event_types()]
        candidates.sort(key=lambda i: (-len(i.filled_roles(t)), i.instance_id))
        chosen.add(candidates[0].instance_id)
    rest = [inst for inst in split.instances if inst.instance_id not in chosen]
    rng = random.Random(seed)
    rng.shuffle(rest)
    rest.sort(key=lambda i: -i.coverage())
    for inst in rest[: max(0, min(n, len(split.instances)) - len(chosen))]:
        chosen.add(inst.instance_id)
    return CorpusSplit(
        name=f"{split.name}-covered{n}-s{seed}",
        instances=_in_split_order(split, chosen),
    )


@dataclass(frozen=True)
class TypeStats:
    event_type: str
    mentions: int
    role_fills: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class SplitStats:
    split: str
    instances: int
    event_mentions: int
    by_type: tuple[TypeStats, ...]

    def frequency_order(self) -> list[str]:
        return [ts.event_type for ts in self.by_type]


def stats(split: CorpusSplit) -> SplitStats:
    """Counts per split: instances, mentions per type (descending frequency,
    ties by type name), and filled-role counts per type."""
    if not split.instances:
        raise CorpusError(f"split {split.name!r} is empty")
    mention_counts: dict[str, int] = {}
    role_fills: dict[str, dict[str, int]] = {}
    total = 0
    for inst in split.instances:
        for ev in inst.events:
            total += 1
            mention_counts[ev.event_type] = mention_counts.get(ev.event_type, 0) + 1
            fills = role_fills.setdefault(ev.event_type, {})
            for arg in ev.arguments:
                fills[arg.role] = fills.get(arg.role, 0) + 1
    by_type = tuple(
        TypeStats(event_type=t, mentions=c, role_fills=dict(sorted(role_fills.get(t, {}).items())))
        for t, c in sorted(mention_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    )
    return SplitStats(
        split=split.name,
        instances=len(split.instances),
        event_mentions=total,
        by_type=by_type,
    )
