"""Annotation-guideline variants: exemplar selection, generation prompts,
LLM-backed generation/consolidation, and the on-disk guideline store."""

from __future__ import annotations

import hashlib
import json
import logging
import random
import time
from dataclasses import dataclass, field

from .corpus import CorpusSplit, SentenceInstance
from .llmclient import LLMClient
from .ontology import EventTypeDef, Ontology, siblings

__all__ = [
    "GuidelineError",
    "GenerationError",
    "VARIANTS",
    "SAMPLED_VARIANTS",
    "SINGLE_VARIANTS",
    "normalize_variant",
    "definition_count",
    "GuidelineSet",
    "ExemplarBundle",
    "select_exemplars",
    "build_generation_prompt",
    "build_consolidation_prompt",
    "generate",
    "consolidate",
    "load_store",
    "save_store",
    "load_human",
]

log = logging.getLogger(__name__)

# Canonical variant tokens. "noguide" is the absence of guidelines and never
# appears in a stored set.
VARIANTS = ("noguide", "h", "p", "pn", "ps", "pn-int", "ps-int")
SAMPLED_VARIANTS = ("p", "pn", "ps")
SINGLE_VARIANTS = ("h", "pn-int", "ps-int")

MENTION_DESCRIPTION = "The text span that triggers the event."

_ALIASES = {"noguideline": "noguide", "none": "noguide", "no-guideline": "noguide"}


class GuidelineError(ValueError):
    """Raised on invalid guideline sets, stores, or exemplar requests."""


class GenerationError(GuidelineError):
    """Raised when the endpoint never returns a valid guideline JSON."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


def normalize_variant(token: str) -> str:
    t = token.strip().lower().replace("_", "-")
    t = _ALIASES.get(t, t)
    if t not in VARIANTS:
        raise GuidelineError(f"unknown guideline variant: {token!r}")
    return t


def definition_count(variant: str) -> int:
    return 5 if normalize_variant(variant) in SAMPLED_VARIANTS else 1


@dataclass(frozen=True)
class GuidelineSet:
    event_type: str
    variant: str
    event_definitions: tuple[str, ...]
    role_definitions: dict[str, tuple[str, ...]]
    provenance: dict = field(default_factory=dict, compare=False)

    def event_definition(self, index: int = 0) -> str:
        return self.event_definitions[index]

    def role_definition(self, role: str, index: int = 0) -> str:
        try:
            return self.role_definitions[role][index]
        except KeyError:
            raise GuidelineError(
                f"{self.variant} guidelines for {self.event_type!r} lack role {role!r}"
            ) from None


def validate_set(gs: GuidelineSet, e: EventTypeDef) -> None:
    want = definition_count(gs.variant)
    if len(gs.event_definitions) != want:
        raise GuidelineError(
            f"{gs.event_type}: 'Event Definition' has {len(gs.event_definitions)} "
            f"definitions, expected {want}"
        )
    for role in e.role_names:
        if role not in gs.role_definitions:
            raise GuidelineError(f"{gs.event_type}: missing definitions for role {role!r}")
        got = len(gs.role_definitions[role])
        if got != want:
            raise GuidelineError(
                f"{gs.event_type}: role {role!r} has {got} definitions, expected {want}"
            )
    for defs in (gs.event_definitions, *gs.role_definitions.values()):
        for d in defs:
            if not isinstance(d, str) or not d.strip():
                raise GuidelineError(f"{gs.event_type}: empty or non-string definition")


@dataclass(frozen=True)
class ExemplarBundle:
    target_type: str
    positives: tuple[SentenceInstance, ...]
    negatives: tuple[SentenceInstance, ...]
    negative_mode: str  # none | random | sibling


def select_exemplars(
    split: CorpusSplit, ont: Ontology, e: str, mode: str, seed: int
) -> ExemplarBundle:
    """10 argument-rich positives of type ``e`` plus, for modes random and
    sibling, 15 negatives drawn from event-bearing instances of other types."""
    if mode not in ("none", "random", "sibling"):
        raise GuidelineError(f"unknown negative mode: {mode!r}")
    ont.get(e)
    rng = random.Random(seed)
    positives_pool = [inst for inst in split.instances if e in inst.event_types()]
    if not positives_pool:
        raise GuidelineError(f"no positive instances for event type {e!r}")
    rng.shuffle(positives_pool)
    positives_pool.sort(key=lambda i: -len(i.filled_roles(e)))
    positives = tuple(positives_pool[:10])
    if len(positives) < 10:
        log.warning("only %d positive exemplars available for %s", len(positives), e)

    negatives: tuple[SentenceInstance, ...] = ()
    if mode != "none":
        random_pool = [
            inst for inst in split.instances if inst.events and e not in inst.event_types()
        ]
        if mode == "sibling":
            sib_names = {s.name for s in siblings(ont, e)}
            pool = [i for i in random_pool if i.event_types() & sib_names]
            if len(pool) < 15:
                log.warning(
                    "sibling pool for %s has %d instances; falling back to random", e, len(pool)
                )
                extra = [i for i in random_pool if i not in pool]
                fill = rng.sample(extra, min(15 - len(pool), len(extra)))
                negatives = tuple(pool + fill)
            else:
                negatives = tuple(rng.sample(pool, 15))
        else:
            if len(random_pool) < 15:
                log.warning(
                    "negative pool for %s has only %d instances", e, len(random_pool)
                )
                negatives = tuple(random_pool)
            else:
                negatives = tuple(rng.sample(random_pool, 15))
    return ExemplarBundle(
        target_type=e, positives=positives, negatives=negatives, negative_mode=mode
    )


_GENERATION_HEADER = """You are an expert in annotating NLP datasets for event extraction. Your task is to generate "detailed" annotation guidelines for the event type {name} which is a child event type of super class {parent}.

Input Format will be as following
```
Event Schema:
Event Name and its parent class
Arguments:
Arguments separated by new lines. If there are no arguments None will be given.

Examples
```
Instructions:
1) Identify and list all unique arguments related to the event type.
2) Define the event type and each argument. You can take help of examples below to understand the events and their arguments.\x20
3) Please remember that the examples may not cover all the arguments in the list. In some cases, you may not have arguments at all, in such cases, you can have an empty list for arguments.\x20
4) For each definition, provide 5 illustrative definitions in JSON format. For events you can add example triggers and the explanation of the events such as edge cases and other critical details starting with "The event can be triggered by ... ". Similarly for arguments also you can add examples, and detailed information for them including any edge case or domain knowledge starting with "Examples are ... ".
5) Remember to not generate any additional information such as examples, etc. and strictly follow the output format shown below.
6) Remember also to add detailed information for the events and arguments so that the annotators who are not familiar with machine learning and NLP can still solve the task. Remember to add required domain knowledge and please cover the edge cases when possible.
7) Remember that while generating examples for the event or attributes you should generate diverse set of triggers or argument values rather than picking them from the examples I have provided for each of the 5 generated guidelines.

Output Format:
{{
  "Event Definition": [
    "Definition 1",
    "Definition 2",
    "Definition 3",
    "Definition 4",
    "Definition 5"
  ],
  "Arguments Definitions": {{
    "Argument1": [
      "Definition 1",
      "Definition 2",
      "Definition 3",
      "Definition 4",
      "Definition 5"
    ],
    "Argument2": [
      "Definition 1",
      "Definition 2",
      "Definition 3",
      "Definition 4",
      "Definition 5"
    ]
    // Add additional arguments as necessary
  }}
}}

Event Schema:
{name} which is a child event type of super class {parent}
Arguments:
{arguments}"""


def _span_list(spans: list[str]) -> str:
    quoted = []
    for s in spans:
        quoted.append("'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'")
    return "[" + ", ".join(quoted) + "]"


def _positive_block(number: int, inst: SentenceInstance, e: str) -> str:
    ev = next(ev for ev in inst.events if ev.event_type == e)
    lines = [
        f"Example {number}",
        "### Input Text ###",
        inst.text,
        "### Event Trigger ###",
        ev.trigger_text,
        "### Event Arguments ###",
    ]
    by_role: dict[str, list[str]] = {}
    for arg in ev.arguments:
        by_role.setdefault(arg.role, []).append(arg.text)
    if by_role:
        for role, spans in by_role.items():
            lines.append(f'For argument "{role}" extracted spans {_span_list(spans)}')
    else:
        lines.append("None")
    return "\n".join(lines)


def _negative_block(number: int, inst: SentenceInstance, e: str) -> str:
    return "\n".join(
        [
            f"Example {number}",
            "### Input Text ###",
            inst.text,
            "### Event Trigger ###",
            f"None (this text does not express {e})",
            "### Event Arguments ###",
            "None",
        ]
    )


def build_generation_prompt(e: EventTypeDef, bundle: ExemplarBundle) -> str:
    if e.role_names:
        arguments = "\n".join(
            f"Argument {i + 1} -> {role}" for i, role in enumerate(e.role_names)
        )
    else:
        arguments = "None"
    header = _GENERATION_HEADER.format(name=e.name, parent=e.parent, arguments=arguments)
    blocks = []
    number = 0
    for inst in bundle.positives:
        number += 1
        blocks.append(_positive_block(number, inst, e.name))
    for inst in bundle.negatives:
        number += 1
        blocks.append(_negative_block(number, inst, e.name))
    return header + "\n\n" + "\n\n".join(blocks) + "\n" if blocks else header + "\n"


_CONSOLIDATION_HEADER = """You are an expert in summarizing NLP event extraction guidelines. Your goal is to consolidate multiple detailed descriptions into a single concise, comprehensive "Intergrated" guideline.

### Input Format ###
Event Type: Event Type Name
```json
{{
  "Event Definition": [
    "Definition 1",
    "Definition 2",
    "Definition 3",
    "Definition 4",
    "Definition 5"
  ],
  "Arguments Definitions": {{
    "mention": [
      "Definition 1",
      "Definition 2",
      "Definition 3",
      "Definition 4",
      "Definition 5"
    ],
    "Argument1": [
      "Definition 1",
      "Definition 2",
      "Definition 3",
      "Definition 4",
      "Definition 5"
    ],
    // Add additional arguments as necessary
  }}
}}
```

### Task ###
1. Integrated the 5 definitions under "Event Definition" into a single definition:
   - Highlight all critical points and examples from the five definitions.
   - Ensure the description is concise, comprehensive, and clear, using formal language that non-experts can understand.

2. Do the same for each argument under "Arguments Definitions," producing a single intergrated definition for each.\x20

### Output Format ###
```json
{{
  "Event Definition": "Consolidated intergrated guideline for the event type.",
  "Arguments Definitions": {{
    "mention": "Consolidated intergrated guideline for the mention argument.",
    "Argument1": "Consolidated intergrated guideline for Argument1.",
    "Argument2": "Consolidated intergrated guideline for Argument2."
    // Add additional arguments as necessary
  }}
}}
```

### Guidelines to Summarize ###
Event Type: prompt_{name}({parent})
```json
{payload}
```"""


def build_consolidation_prompt(e: EventTypeDef, set5: GuidelineSet) -> str:
    attributes: dict = {"mention": MENTION_DESCRIPTION}
    for role in e.role_names:
        attributes[role] = list(set5.role_definitions[role])
    payload = json.dumps(
        {
            f"{e.name}({e.parent})": {"description": list(set5.event_definitions)},
            "attributes": attributes,
        },
        indent=4,
        ensure_ascii=False,
    )
    return _CONSOLIDATION_HEADER.format(name=e.name, parent=e.parent, payload=payload) + "\n"


def _extract_json(text: str) -> dict:
    """First fenced JSON block if present, else the widest braced span."""
    fence_start = None
    for marker in ("```json", "```"):
        idx = text.find(marker)
        if idx != -1:
            fence_start = idx + len(marker)
            break
    if fence_start is not None:
        fence_end = text.find("```", fence_start)
        if fence_end != -1:
            candidate = text[fence_start:fence_end].strip()
            try:
                return json.loads(candidate)
            except json.JSONDecodeError:
                pass
    start, end = text.find("{"), text.rfind("}")
    if start == -1 or end <= start:
        raise GuidelineError("no JSON object found in response")
    try:
        return json.loads(text[start : end + 1])
    except json.JSONDecodeError as exc:
        raise GuidelineError(f"response JSON does not parse: {exc}") from exc


def _defs_from_payload(obj: dict, e: EventTypeDef, variant: str) -> GuidelineSet:
    if not isinstance(obj, dict):
        raise GuidelineError("guideline payload is not a JSON object")
    want = definition_count(variant)

    def as_list(value, label: str) -> tuple[str, ...]:
        if isinstance(value, str):
            value = [value]
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise GuidelineError(f"{label} must be a list of strings")
        if len(value) != want:
            raise GuidelineError(f"{label} has {len(value)} definitions, expected {want}")
        return tuple(value)

    if "Event Definition" not in obj:
        raise GuidelineError("missing 'Event Definition'")
    event_defs = as_list(obj["Event Definition"], "'Event Definition'")
    raw_roles = obj.get("Arguments Definitions", {})
    if not isinstance(raw_roles, dict):
        raise GuidelineError("'Arguments Definitions' must be an object")
    lowered = {str(k).lower(): v for k, v in raw_roles.items()}
    role_defs: dict[str, tuple[str, ...]] = {}
    for role in e.role_names:
        if role in raw_roles:
            value = raw_roles[role]
        elif role.lower() in lowered:
            value = lowered[role.lower()]
        else:
            raise GuidelineError(f"missing definitions for role {role!r}")
        role_defs[role] = as_list(value, f"role {role!r}")
    gs = GuidelineSet(
        event_type=e.name,
        variant=variant,
        event_definitions=event_defs,
        role_definitions=role_defs,
    )
    validate_set(gs, e)
    return gs


_RETRY_NOTE = (
    "Your previous response was invalid: {error}\n"
    "Respond again and strictly follow the requested JSON output format."
)


def _generate_with_retries(
    prompt: str,
    e: EventTypeDef,
    variant: str,
    client: LLMClient,
    *,
    temperature: float | None,
    retries: int = 3,
) -> GuidelineSet:
    messages = [{"role": "user", "content": prompt}]
    raw = ""
    last_error = ""
    for attempt in range(retries):
        raw = client.complete(messages, temperature=temperature)
        try:
            obj = _extract_json(raw)
            gs = _defs_from_payload(obj, e, variant)
        except GuidelineError as exc:
            last_error = str(exc)
            log.warning("guideline attempt %d for %s invalid: %s", attempt + 1, e.name, exc)
            messages = messages + [
                {"role": "assistant", "content": raw},
                {"role": "user", "content": _RETRY_NOTE.format(error=last_error)},
            ]
            continue
        provenance = {
            "model": client.cfg.model_name,
            "prompt_sha256": hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
            "attempts": attempt + 1,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        return GuidelineSet(
            event_type=gs.event_type,
            variant=gs.variant,
            event_definitions=gs.event_definitions,
            role_definitions=gs.role_definitions,
            provenance=provenance,
        )
    raise GenerationError(
        f"guideline generation for {e.name!r} failed after {retries} attempts: {last_error}",
        raw=raw,
    )


def generate(
    e: EventTypeDef,
    bundle: ExemplarBundle,
    client: LLMClient,
    *,
    temperature: float | None = None,
) -> GuidelineSet:
    """Generate the five sampled definitions for one event type."""
    variant = {"none": "p", "random": "pn", "sibling": "ps"}[bundle.negative_mode]
    prompt = build_generation_prompt(e, bundle)
    return _generate_with_retries(prompt, e, variant, client, temperature=temperature)


def consolidate(
    set5: GuidelineSet, e: EventTypeDef, client: LLMClient
) -> GuidelineSet:
    """Consolidate a 5-definition set into its single -Int definition."""
    variant = normalize_variant(set5.variant)
    if variant not in ("pn", "ps"):
        raise GuidelineError(f"only PN/PS sets consolidate, got {set5.variant!r}")
    prompt = build_consolidation_prompt(e, set5)
    return _generate_with_retries(
        prompt, e, f"{variant}-int", client, temperature=0.0
    )


def save_store(sets: dict[str, GuidelineSet], path: str) -> None:
    """Write the per-variant guideline store; provenance goes to a sidecar."""
    doc = {
        name: {
            "Event Definition": list(gs.event_definitions),
            "Arguments Definitions": {r: list(d) for r, d in gs.role_definitions.items()},
        }
        for name, gs in sorted(sets.items())
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False, indent=2)
        f.write("\n")
    provenance = {name: gs.provenance for name, gs in sorted(sets.items()) if gs.provenance}
    if provenance:
        with open(f"{path}.provenance.json", "w", encoding="utf-8") as f:
            json.dump(provenance, f, ensure_ascii=False, indent=2)
            f.write("\n")


def load_store(path: str, variant: str, ont: Ontology) -> dict[str, GuidelineSet]:
    variant = normalize_variant(variant)
    if variant == "noguide":
        raise GuidelineError("variant 'noguide' has no guideline store")
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise GuidelineError(f"{path}: store must be a JSON object")
    sets: dict[str, GuidelineSet] = {}
    for name, entry in raw.items():
        if name not in ont:
            raise GuidelineError(f"{path}: unknown event type {name!r}")
        e = ont.get(name)
        try:
            gs = _defs_from_payload(entry, e, variant)
        except GuidelineError as exc:
            raise GuidelineError(f"{path}: {name}: {exc}") from exc
        sets[name] = gs
    return sets


def load_human(path: str, ont: Ontology) -> dict[str, GuidelineSet]:
    """Curated human guidelines (variant H): one definition per item."""
    return load_store(path, "h", ont)
