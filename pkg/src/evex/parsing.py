"""Parsing and validation of model generations.

The output grammar is a deliberately small subset of Python expression
syntax: a bracketed list of constructor calls with keyword arguments whose
values are strings or lists of strings. The parser never raises on model
text; every failure is a status on the returned record.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .ontology import Ontology

__all__ = [
    "PredictedEvent",
    "PredictionRecord",
    "parse_output",
    "aggregate",
    "write_records",
    "read_records",
]

_FENCE_RE = re.compile(r"^```[A-Za-z0-9_-]*[ \t]*\n?")
_RESULT_RE = re.compile(r"^result\s*=\s*")

_SIMPLE_ESCAPES = {
    "\\": "\\",
    "'": "'",
    '"': '"',
    "n": "\n",
    "r": "\r",
    "t": "\t",
    "0": "\0",
    "a": "\a",
    "b": "\b",
    "f": "\f",
    "v": "\v",
}

_NAME_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_NAME_CONT = _NAME_START | set("0123456789")
_HEX = set("0123456789abcdefABCDEF")


class _ParseFail(Exception):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at offset {pos}")
        self.pos = pos


@dataclass(frozen=True)
class _Tok:
    kind: str  # NAME STRING [ ] ( ) , = EOF
    value: str
    pos: int


def _tokenize(s: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c in "[](),=":
            toks.append(_Tok(c, c, i))
            i += 1
            continue
        if c in _NAME_START:
            j = i + 1
            while j < n and s[j] in _NAME_CONT:
                j += 1
            toks.append(_Tok("NAME", s[i:j], i))
            i = j
            continue
        if c in "'\"":
            quote = c
            j = i + 1
            out: list[str] = []
            while True:
                if j >= n:
                    raise _ParseFail("unterminated string", i)
                ch = s[j]
                if ch == quote:
                    j += 1
                    break
                if ch == "\n":
                    raise _ParseFail("newline inside string", j)
                if ch == "\\":
                    if j + 1 >= n:
                        raise _ParseFail("dangling escape", j)
                    esc = s[j + 1]
                    if esc in _SIMPLE_ESCAPES:
                        out.append(_SIMPLE_ESCAPES[esc])
                        j += 2
                        continue
                    if esc == "x":
                        hexpart = s[j + 2 : j + 4]
                        if len(hexpart) != 2 or any(h not in _HEX for h in hexpart):
                            raise _ParseFail("malformed \\x escape", j)
                        out.append(chr(int(hexpart, 16)))
                        j += 4
                        continue
                    if esc == "u":
                        hexpart = s[j + 2 : j + 6]
                        if len(hexpart) != 4 or any(h not in _HEX for h in hexpart):
                            raise _ParseFail("malformed \\u escape", j)
                        out.append(chr(int(hexpart, 16)))
                        j += 6
                        continue
                    raise _ParseFail(f"unsupported escape \\{esc}", j)
                out.append(ch)
                j += 1
            toks.append(_Tok("STRING", "".join(out), i))
            i = j
            continue
        raise _ParseFail(f"unexpected character {c!r}", i)
    toks.append(_Tok("EOF", "", n))
    return toks


@dataclass
class _Cursor:
    toks: list[_Tok]
    i: int = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str) -> _Tok:
        tok = self.toks[self.i]
        if tok.kind != kind:
            raise _ParseFail(f"expected {kind}, found {tok.kind}", tok.pos)
        self.i += 1
        return tok


# A parsed call before validation: (class name, [(keyword, value), ...]);
# value is a string or a list of strings.
_RawCall = tuple[str, list[tuple[str, object]]]


def _parse_list_of_strings(cur: _Cursor) -> list[str]:
    cur.take("[")
    items: list[str] = []
    if cur.peek().kind == "]":
        cur.take("]")
        return items
    while True:
        items.append(cur.take("STRING").value)
        if cur.peek().kind == ",":
            cur.take(",")
            if cur.peek().kind == "]":  # trailing comma
                break
            continue
        break
    cur.take("]")
    return items


def _parse_call(cur: _Cursor) -> _RawCall:
    name = cur.take("NAME").value
    cur.take("(")
    kwargs: list[tuple[str, object]] = []
    seen: set[str] = set()
    while True:
        kw_tok = cur.take("NAME")
        cur.take("=")
        if kw_tok.value in seen:
            raise _ParseFail(f"keyword argument repeated: {kw_tok.value}", kw_tok.pos)
        seen.add(kw_tok.value)
        value: object
        if cur.peek().kind == "STRING":
            value = cur.take("STRING").value
        elif cur.peek().kind == "[":
            value = _parse_list_of_strings(cur)
        else:
            raise _ParseFail("expected string or list value", cur.peek().pos)
        kwargs.append((kw_tok.value, value))
        if cur.peek().kind == ",":
            cur.take(",")
            continue
        break
    cur.take(")")
    return name, kwargs


def _parse_result(cur: _Cursor) -> list[_RawCall]:
    cur.take("[")
    calls: list[_RawCall] = []
    if cur.peek().kind == "]":
        cur.take("]")
    else:
        while True:
            calls.append(_parse_call(cur))
            if cur.peek().kind == ",":
                cur.take(",")
                if cur.peek().kind == "]":  # trailing comma
                    break
                continue
            break
        cur.take("]")
    cur.take("EOF")
    return calls


def _strip_wrappers(raw: str) -> str:
    text = raw.strip()
    m = _FENCE_RE.match(text)
    if m:
        text = text[m.end() :]
        if text.rstrip().endswith("```"):
            text = text.rstrip()[:-3]
        text = text.strip()
    m = _RESULT_RE.match(text)
    if m:
        text = text[m.end() :].strip()
    return text


@dataclass(frozen=True)
class PredictedEvent:
    event_type: str
    mention: str
    arguments: dict[str, tuple[str, ...]]
    source: tuple[str, str] = ("", "")

    def key(self) -> tuple:
        return (
            self.event_type,
            self.mention,
            tuple(sorted((r, v) for r, v in self.arguments.items())),
        )


@dataclass(frozen=True)
class PredictionRecord:
    instance_id: str
    prompted_type: str
    raw_text: str
    parse_status: str  # ok | parse_error | validation_error
    events: tuple[PredictedEvent, ...] = ()
    diagnostics: tuple[str, ...] = ()


def parse_output(
    raw: str,
    ont: Ontology,
    *,
    instance_id: str = "",
    prompted_type: str = "",
) -> PredictionRecord:
    """Parse one model generation. Never raises: grammar failures yield
    parse_error, semantic failures yield validation_error, recoverable
    oddities yield diagnostics on an ok record."""
    if not isinstance(raw, str):
        raw = str(raw)
    text = _strip_wrappers(raw)
    try:
        calls = _parse_result(_Cursor(_tokenize(text)))
    except _ParseFail as exc:
        return PredictionRecord(
            instance_id=instance_id,
            prompted_type=prompted_type,
            raw_text=raw,
            parse_status="parse_error",
            diagnostics=(str(exc),),
        )
    except RecursionError:
        return PredictionRecord(
            instance_id=instance_id,
            prompted_type=prompted_type,
            raw_text=raw,
            parse_status="parse_error",
            diagnostics=("nesting too deep",),
        )

    events: list[PredictedEvent] = []
    diagnostics: list[str] = []
    status = "ok"
    for name, kwargs in calls:
        if name not in ont:
            diagnostics.append(f"unknown class: {name}")
            status = "validation_error"
            continue
        e = ont.get(name)
        legal = set(e.role_names)
        mention: str | None = None
        mention_seen = False
        mention_bad = False
        args: dict[str, tuple[str, ...]] = {r: () for r in e.role_names}
        filled: set[str] = set()
        for kw, value in kwargs:
            if kw == "mention":
                mention_seen = True
                if isinstance(value, str):
                    mention = value
                elif isinstance(value, list) and len(value) == 1:
                    mention = value[0]
                    diagnostics.append(f"{name}: list-valued mention coerced to string")
                else:
                    mention_bad = True
                    diagnostics.append(f"{name}: non-string mention")
            elif kw not in legal:
                diagnostics.append(f"{name}: hallucinated argument: {kw}")
            else:
                if isinstance(value, str):
                    args[kw] = (value,)
                    diagnostics.append(f"{name}: string value for {kw} coerced to list")
                else:
                    args[kw] = tuple(value)  # type: ignore[arg-type]
                filled.add(kw)
        if mention_bad or not mention_seen or mention is None:
            if not mention_seen:
                diagnostics.append(f"{name}: missing mention")
            status = "validation_error"
            continue
        for role in e.role_names:
            if role not in filled:
                diagnostics.append(f"{name}: missing argument: {role}")
        events.append(
            PredictedEvent(
                event_type=name,
                mention=mention,
                arguments=args,
                source=(instance_id, prompted_type),
            )
        )
    return PredictionRecord(
        instance_id=instance_id,
        prompted_type=prompted_type,
        raw_text=raw,
        parse_status=status,
        events=tuple(events),
        diagnostics=tuple(diagnostics),
    )


def write_records(records: list[PredictionRecord], path: str) -> int:
    """Serialize parsed records as JSONL for the scoring stage."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            doc = {
                "instance_id": rec.instance_id,
                "prompted_type": rec.prompted_type,
                "parse_status": rec.parse_status,
                "diagnostics": list(rec.diagnostics),
                "events": [
                    {
                        "event_type": ev.event_type,
                        "mention": ev.mention,
                        "arguments": {r: list(v) for r, v in ev.arguments.items()},
                    }
                    for ev in rec.events
                ],
                "raw_text": rec.raw_text,
            }
            f.write(json.dumps(doc, ensure_ascii=False) + "\n")
    return len(records)


def read_records(path: str) -> list[PredictionRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            doc = json.loads(line)
            events = tuple(
                PredictedEvent(
                    event_type=ev["event_type"],
                    mention=ev["mention"],
                    arguments={r: tuple(v) for r, v in ev["arguments"].items()},
                    source=(doc["instance_id"], doc["prompted_type"]),
                )
                for ev in doc.get("events", [])
            )
            records.append(
                PredictionRecord(
                    instance_id=doc["instance_id"],
                    prompted_type=doc["prompted_type"],
                    raw_text=doc.get("raw_text", ""),
                    parse_status=doc["parse_status"],
                    events=events,
                    diagnostics=tuple(doc.get("diagnostics", [])),
                )
            )
    return records


def aggregate(records: list[PredictionRecord]) -> dict[str, list[PredictedEvent]]:
    """Merge predictions across all prompted types per instance; identical
    events produced by different prompts collapse to one."""
    out: dict[str, list[PredictedEvent]] = {}
    seen: dict[str, set] = {}
    for rec in records:
        bucket = out.setdefault(rec.instance_id, [])
        keys = seen.setdefault(rec.instance_id, set())
        for ev in rec.events:
            k = ev.key()
            if k in keys:
                continue
            keys.add(k)
            bucket.append(ev)
    return out
