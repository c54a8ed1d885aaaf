"""Event schema set: event types, their super-types, and argument roles.

The ontology is loaded once from an explicit JSON file and is immutable
afterwards, so role order (which schema rendering depends on) and the
sibling structure are reproducible across runs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

__all__ = [
    "OntologyError",
    "RoleDef",
    "EventTypeDef",
    "Ontology",
    "load_ontology",
    "save_ontology",
]

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class OntologyError(ValueError):
    """Raised when an ontology file or lookup is invalid."""


@dataclass(frozen=True)
class RoleDef:
    """An argument role. Every role is list-valued in the code format."""

    name: str


@dataclass(frozen=True)
class EventTypeDef:
    name: str
    parent: str
    roles: tuple[RoleDef, ...]

    @property
    def role_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.roles)


@dataclass(frozen=True)
class Ontology:
    """The full schema set for one dataset.

    ``event_types`` preserves file order; lookups are by exact name.
    """

    name: str
    event_types: tuple[EventTypeDef, ...]
    _by_name: dict[str, EventTypeDef] = field(
        init=False, repr=False, compare=False, hash=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        by_name: dict[str, EventTypeDef] = {}
        for et in self.event_types:
            by_name[et.name] = et
        object.__setattr__(self, "_by_name", by_name)

    def __contains__(self, event_name: str) -> bool:
        return event_name in self._by_name

    def __len__(self) -> int:
        return len(self.event_types)

    def get(self, event_name: str) -> EventTypeDef:
        try:
            return self._by_name[event_name]
        except KeyError:
            raise OntologyError(f"unknown event type: {event_name!r}") from None

    def type_names(self) -> tuple[str, ...]:
        return tuple(et.name for et in self.event_types)

    def role_names(self) -> set[str]:
        return {r.name for et in self.event_types for r in et.roles}


def siblings(ont: Ontology, event_name: str) -> list[EventTypeDef]:
    """All event types sharing ``event_name``'s parent, excluding itself.

    Order follows the ontology file, so the result is deterministic.
    """
    target = ont.get(event_name)
    return [
        et
        for et in ont.event_types
        if et.parent == target.parent and et.name != target.name
    ]


def _validate(name: str, event_types: list[EventTypeDef]) -> None:
    if not event_types:
        raise OntologyError("ontology defines no event types")
    seen: set[str] = set()
    for et in event_types:
        if not _IDENT.match(et.name):
            raise OntologyError(f"event type name is not an identifier: {et.name!r}")
        if et.name in seen:
            raise OntologyError(f"duplicate event type name: {et.name!r}")
        seen.add(et.name)
        if not et.parent or not _IDENT.match(et.parent):
            raise OntologyError(f"event type {et.name!r} has invalid parent: {et.parent!r}")
        role_seen: set[str] = set()
        for role in et.roles:
            if not _IDENT.match(role.name):
                raise OntologyError(
                    f"event type {et.name!r} has invalid role name: {role.name!r}"
                )
            if role.name in role_seen:
                raise OntologyError(
                    f"event type {et.name!r} repeats role {role.name!r}"
                )
            role_seen.add(role.name)
    # One-level hierarchy only: a parent must not itself be an event type.
    for et in event_types:
        if et.parent in seen:
            raise OntologyError(
                f"parent {et.parent!r} of {et.name!r} is itself an event type; "
                "only type -> super-type hierarchies are supported"
            )


def build_ontology(name: str, event_types: list[EventTypeDef]) -> Ontology:
    _validate(name, event_types)
    return Ontology(name=name, event_types=tuple(event_types))


def load_ontology(path: str) -> Ontology:
    """Load and validate an ontology JSON file.

    Expected shape: ``{"name": str, "event_types": [{"name", "parent",
    "roles": [str, ...]}, ...]}``. Role order is preserved exactly.
    """
    with open(path, encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise OntologyError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or "event_types" not in raw:
        raise OntologyError(f"{path}: missing 'event_types'")
    event_types = []
    for entry in raw["event_types"]:
        roles = tuple(RoleDef(r) for r in entry.get("roles", []))
        event_types.append(
            EventTypeDef(name=entry["name"], parent=entry["parent"], roles=roles)
        )
    try:
        return build_ontology(str(raw.get("name", "")), event_types)
    except OntologyError as exc:
        raise OntologyError(f"{path}: {exc}") from exc


def save_ontology(ont: Ontology, path: str) -> None:
    """Write the canonical JSON form (stable key order, UTF-8)."""
    doc = {
        "name": ont.name,
        "event_types": [
            {"name": et.name, "parent": et.parent, "roles": list(et.role_names)}
            for et in ont.event_types
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False, indent=2)
        f.write("\n")
