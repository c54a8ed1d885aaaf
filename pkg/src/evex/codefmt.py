"""Code-format rendering: event schemas as dataclass blocks, gold outputs as
constructor-call lists, and full prompt records plus their JSONL form."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from typing import Mapping

from .corpus import GoldEvent, SentenceInstance
from .guidelines import (
    MENTION_DESCRIPTION,
    SAMPLED_VARIANTS,
    GuidelineSet,
    normalize_variant,
)
from .ontology import EventTypeDef, Ontology

__all__ = [
    "CodeFormatError",
    "INSTRUCTION",
    "TASK_TYPE",
    "IS_AUTH",
    "SchemaRendering",
    "PromptRecord",
    "render_schema",
    "validate_schema_text",
    "render_output",
    "build_prompt",
    "export_jsonl",
    "read_jsonl",
]


class CodeFormatError(ValueError):
    """Raised on unrenderable inputs (never on parse of model output)."""


INSTRUCTION = (
    "# This is an event extraction task where the goal is to extract structured "
    "events from the text. A structured event contains an event trigger word, an "
    "event type, the arguments participating in the event, and their roles in the "
    "event. For each different event type, please output the extracted information "
    "from the text into python-style dictionaries where the first key will be "
    "'mention' with the value of the event trigger. Next, please output the "
    "arguments and their roles following the same format. The event type "
    "definitions and their argument roles are defined next."
)

TASK_TYPE = "E2E"
IS_AUTH = "0"

_INPUT_TEMPLATE = (
    "# The following lines describe the task definition\n"
    "\n"
    "{schema}\n"
    "\n"
    "# This is the text to analyze\n"
    "text = {text}\n"
    "\n"
    "# The list called result should contain the instances for the following "
    "events according to the guidelines above:\n"
    "result = \n"
)

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"


def _dq(s: str) -> str:
    """Canonical double-quoted string literal."""
    out = (
        s.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )
    return f'"{out}"'


def _docstring(text: str) -> str:
    body = text.replace("\\", "\\\\").replace('"""', '\\"\\"\\"')
    if body.endswith('"'):
        body = body[:-1] + '\\"'
    return f'"""{body}"""'


def _comment(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


@dataclass(frozen=True)
class SchemaRendering:
    event_type: str
    variant: str
    guideline_index: int | None
    text: str


def render_schema(
    e: EventTypeDef,
    variant: str,
    guidelines: GuidelineSet | None = None,
    guideline_index: int | None = None,
) -> SchemaRendering:
    """Render one event type as its dataclass block.

    Guideline variants add the event definition as the class docstring and
    each role definition as a trailing comment on its field line.
    """
    variant = normalize_variant(variant)
    lines = ["@dataclass", f"class {e.name}({e.parent}):"]
    if variant == "noguide":
        idx: int | None = None
        lines.append("    mention: str")
        lines.extend(f"    {role}: List" for role in e.role_names)
    else:
        if guidelines is None:
            raise CodeFormatError(f"variant {variant!r} requires guidelines")
        if variant in SAMPLED_VARIANTS:
            if guideline_index is None:
                raise CodeFormatError(f"variant {variant!r} requires a guideline index")
            if not 0 <= guideline_index <= 4:
                raise CodeFormatError(f"guideline index {guideline_index} not in 0..4")
            idx = guideline_index
        else:
            idx = 0
        lines.append(f"    {_docstring(guidelines.event_definition(idx))}")
        lines.append(f"    mention: str  # {_comment(MENTION_DESCRIPTION)}")
        for role in e.role_names:
            lines.append(f"    {role}: List  # {_comment(guidelines.role_definition(role, idx))}")
    text = "\n".join(lines)
    validate_schema_text(text, e)
    return SchemaRendering(
        event_type=e.name,
        variant=variant,
        guideline_index=idx if variant in SAMPLED_VARIANTS else None,
        text=text,
    )


def _consume_docstring(lines: list[str], i: int) -> int:
    s = lines[i].strip()
    if not s.startswith('"""'):
        return i
    if len(s) >= 6 and s.endswith('"""') and not s.endswith('\\"""') and s != '"""':
        return i + 1
    i += 1
    while i < len(lines):
        t = lines[i].rstrip()
        if t.endswith('"""') and not t.endswith('\\"""'):
            return i + 1
        i += 1
    raise CodeFormatError("unterminated docstring in schema block")


def validate_schema_text(text: str, e: EventTypeDef) -> None:
    """Structural check: decorator, header, optional docstring, mention field,
    then exactly the event's roles in order."""
    lines = text.split("\n")
    if not lines or lines[0] != "@dataclass":
        raise CodeFormatError("schema block must start with '@dataclass'")
    if len(lines) < 3 or lines[1] != f"class {e.name}({e.parent}):":
        raise CodeFormatError(f"bad class header for {e.name}: {lines[1] if len(lines) > 1 else ''!r}")
    i = _consume_docstring(lines, 2)
    if i >= len(lines) or not re.match(r"^    mention: str(  # .+)?$", lines[i]):
        raise CodeFormatError("schema block must declare 'mention: str' first")
    i += 1
    for role in e.role_names:
        if i >= len(lines) or not re.match(rf"^    {re.escape(role)}: List(  # .+)?$", lines[i]):
            raise CodeFormatError(f"schema block missing field for role {role!r}")
        i += 1
    if i != len(lines):
        raise CodeFormatError(f"unexpected trailing content in schema block: {lines[i]!r}")


def render_output(events: list[GoldEvent], ont: Ontology) -> str:
    """Canonical gold output: mention first, then every role of the type in
    ontology order; unfilled roles render as empty lists."""
    if not events:
        return "[]"
    types = {ev.event_type for ev in events}
    if len(types) > 1:
        raise CodeFormatError(f"events span multiple types: {sorted(types)}")
    e = ont.get(events[0].event_type)
    legal = set(e.role_names)
    calls = []
    for ev in events:
        by_role: dict[str, list[str]] = {}
        for arg in ev.arguments:
            if arg.role not in legal:
                raise CodeFormatError(
                    f"role {arg.role!r} is not defined for event type {e.name!r}"
                )
            by_role.setdefault(arg.role, []).append(arg.text)
        parts = [f"mention={_dq(ev.trigger_text)}"]
        for role in e.role_names:
            spans = ", ".join(_dq(s) for s in by_role.get(role, []))
            parts.append(f"{role}=[{spans}]")
        calls.append(f"{e.name}({', '.join(parts)})")
    return "[" + ", ".join(calls) + "]"


@dataclass(frozen=True)
class PromptRecord:
    doc_id: str
    wnd_id: str
    instance_id: str
    dataset_name: str
    task_type: str
    is_auth: str
    instruction: str
    input: str
    output: str | None
    event_type: str
    guideline_index: int | None = None


def build_prompt(
    inst: SentenceInstance,
    e: str,
    ont: Ontology,
    variant: str = "noguide",
    guidelines: GuidelineSet | Mapping[str, GuidelineSet] | None = None,
    rng: random.Random | None = None,
    *,
    guideline_index: int | None = None,
    include_output: bool = True,
) -> PromptRecord:
    """One prompt record: fixed instruction, schema + text + result stub as
    input, and (for training) the canonical gold output for type ``e``."""
    variant = normalize_variant(variant)
    gs: GuidelineSet | None
    if isinstance(guidelines, Mapping):
        gs = guidelines.get(e)
        if gs is None and variant != "noguide":
            raise CodeFormatError(f"no {variant!r} guidelines for event type {e!r}")
    else:
        gs = guidelines
    if variant in SAMPLED_VARIANTS and guideline_index is None:
        if rng is None:
            raise CodeFormatError(
                f"variant {variant!r} needs a guideline index or an rng to draw one"
            )
        guideline_index = rng.randrange(5)
    schema = render_schema(ont.get(e), variant, gs, guideline_index)
    input_text = _INPUT_TEMPLATE.format(schema=schema.text, text=_dq(inst.text))
    output = None
    if include_output:
        output = render_output([ev for ev in inst.events if ev.event_type == e], ont)
    return PromptRecord(
        doc_id=inst.doc_id,
        wnd_id=inst.wnd_id,
        instance_id=inst.instance_id,
        dataset_name=ont.name,
        task_type=TASK_TYPE,
        is_auth=IS_AUTH,
        instruction=INSTRUCTION,
        input=input_text,
        output=output,
        event_type=e,
        guideline_index=schema.guideline_index,
    )


def export_jsonl(records: list[PromptRecord], path: str) -> int:
    """Write records with exactly the canonical field set; inference records
    (output is None) omit the output key."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            doc = {
                "doc_id": rec.doc_id,
                "wnd_id": rec.wnd_id,
                "instance_id": rec.instance_id,
                "dataset_name": rec.dataset_name,
                "task_type": rec.task_type,
                "is_auth": rec.is_auth,
                "instruction": rec.instruction,
                "input": rec.input,
            }
            if rec.output is not None:
                doc["output"] = rec.output
            f.write(json.dumps(doc, ensure_ascii=False) + "\n")
    return len(records)


_CLASS_RE = re.compile(rf"^class ({_IDENT})\({_IDENT}\):$", re.MULTILINE)


def read_jsonl(path: str) -> list[PromptRecord]:
    """Re-read an exported file; the prompted event type is recovered from
    the class header inside the input."""
    records = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f):
            if not line.strip():
                continue
            doc = json.loads(line)
            m = _CLASS_RE.search(doc["input"])
            if not m:
                raise CodeFormatError(f"{path}:{line_no}: no class header in input")
            records.append(
                PromptRecord(
                    doc_id=doc["doc_id"],
                    wnd_id=doc["wnd_id"],
                    instance_id=doc["instance_id"],
                    dataset_name=doc["dataset_name"],
                    task_type=doc["task_type"],
                    is_auth=doc["is_auth"],
                    instruction=doc["instruction"],
                    input=doc["input"],
                    output=doc.get("output"),
                    event_type=m.group(1),
                )
            )
    return records
