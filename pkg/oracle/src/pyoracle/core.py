"""Interpreter-backed oracle.

Runs a rendered event-schema block through the real Python interpreter,
evaluates a model output expression against the defined class, and emits
the instantiated events in a normalized JSON form. Used as a stdin/stdout
filter; every failure becomes an error record, never an exception.
"""

from __future__ import annotations

import dataclasses
import json
import re
import signal
import sys

__all__ = ["oracle_eval", "run_filter", "main"]

_CLASS_RE = re.compile(r"^class ([A-Za-z_][A-Za-z0-9_]*)\(([A-Za-z_][A-Za-z0-9_]*)\):", re.MULTILINE)
_FENCE_RE = re.compile(r"^```[A-Za-z0-9_-]*[ \t]*\n?")
_RESULT_RE = re.compile(r"^result\s*=\s*")

DEFAULT_TIMEOUT = 5.0


class _Timeout(Exception):
    pass


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


def _build_class(schema_text: str):
    m = _CLASS_RE.search(schema_text)
    if not m:
        raise ValueError("no class definition found in schema")
    name, parent = m.group(1), m.group(2)
    parent_stub = type(parent, (), {})
    namespace = {
        "dataclass": dataclasses.dataclass,
        "List": list,
        "str": str,
        parent: parent_stub,
    }
    exec(compile(schema_text, "<schema>", "exec"), namespace)
    cls = namespace.get(name)
    if not isinstance(cls, type) or not dataclasses.is_dataclass(cls):
        raise ValueError(f"schema did not define dataclass {name!r}")
    return cls


def _normalize(obj, cls) -> dict:
    if not isinstance(obj, cls):
        raise TypeError(f"result item is not an instance of {cls.__name__}")
    fields = [f.name for f in dataclasses.fields(cls)]
    if "mention" not in fields:
        raise TypeError("schema class lacks a mention field")
    mention = getattr(obj, "mention")
    if not isinstance(mention, str):
        raise TypeError("mention must be a string")
    arguments = {}
    for name in fields:
        if name == "mention":
            continue
        value = getattr(obj, name)
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise TypeError(f"argument {name!r} must be a list of strings")
        arguments[name] = list(value)
    return {"event_type": cls.__name__, "mention": mention, "arguments": arguments}


def _eval_with_timeout(expression: str, env: dict, timeout: float):
    if timeout and hasattr(signal, "SIGALRM"):
        def _alarm(signum, frame):
            raise _Timeout("evaluation timed out")

        previous = signal.signal(signal.SIGALRM, _alarm)
        signal.setitimer(signal.ITIMER_REAL, timeout)
        try:
            return eval(compile(expression, "<output>", "eval"), env)
        finally:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, previous)
    return eval(compile(expression, "<output>", "eval"), env)


def oracle_eval(schema_text: str, output_text: str, timeout: float = DEFAULT_TIMEOUT) -> dict:
    """Execute schema and output with the real interpreter; normalize.

    Returns {"status": "ok", "events": [...]} or
    {"status": "error", "error": "<ExceptionName>: <message>"}.
    """
    try:
        if timeout and hasattr(signal, "SIGALRM"):
            def _alarm(signum, frame):
                raise _Timeout("schema execution timed out")

            previous = signal.signal(signal.SIGALRM, _alarm)
            signal.setitimer(signal.ITIMER_REAL, timeout)
            try:
                cls = _build_class(schema_text)
            finally:
                signal.setitimer(signal.ITIMER_REAL, 0)
                signal.signal(signal.SIGALRM, previous)
        else:
            cls = _build_class(schema_text)
        expression = _strip_wrappers(output_text)
        env = {"__builtins__": {}, cls.__name__: cls}
        result = _eval_with_timeout(expression, env, timeout)
        if not isinstance(result, list):
            raise TypeError("output did not evaluate to a list")
        events = [_normalize(obj, cls) for obj in result]
    except _Timeout as exc:
        return {"status": "error", "error": f"TimeoutError: {exc}"}
    except BaseException as exc:  # never propagate: report and continue
        return {"status": "error", "error": f"{type(exc).__name__}: {exc}"}
    return {"status": "ok", "events": events}


def run_filter(stdin=None, stdout=None, timeout: float = DEFAULT_TIMEOUT) -> int:
    """JSONL filter: {id, schema, output} in, {id, status, events|error} out."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        rid = None
        try:
            record = json.loads(line)
            rid = record.get("id")
            verdict = oracle_eval(
                record["schema"], record["output"], timeout=timeout
            )
        except Exception as exc:
            verdict = {"status": "error", "error": f"{type(exc).__name__}: {exc}"}
        out = {"id": rid, "status": verdict["status"]}
        if verdict["status"] == "ok":
            out["events"] = verdict["events"]
        else:
            out["error"] = verdict["error"]
        stdout.write(json.dumps(out, ensure_ascii=False) + "\n")
        stdout.flush()
    return 0


def main() -> None:
    sys.exit(run_filter())


if __name__ == "__main__":
    main()
