"""Shared fixtures: the packaged ontology, a small synthetic one, and a
reference corpus split built over it."""

import os
import sys
from importlib import resources

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from _builders import make_instance, make_store, start_endpoint  # noqa: E402

from evex.corpus import CorpusSplit  # noqa: E402
from evex.ontology import EventTypeDef, Ontology, RoleDef, build_ontology, load_ontology  # noqa: E402


@pytest.fixture(scope="session")
def ace_path() -> str:
    return str(resources.files("evex").joinpath("data/ontologies/ace05.json"))


@pytest.fixture(scope="session")
def ace(ace_path) -> Ontology:
    return load_ontology(ace_path)


def _etype(name: str, parent: str, roles: list[str]) -> EventTypeDef:
    return EventTypeDef(
        name=name, parent=parent, roles=tuple(RoleDef(name=r) for r in roles)
    )


@pytest.fixture(scope="session")
def tiny() -> Ontology:
    return build_ontology(
        "tiny",
        [
            _etype("Attack", "ConflictEvent", ["attacker", "place", "target"]),
            _etype("Demonstrate", "ConflictEvent", ["entity", "place"]),
            _etype("Meet", "ContactEvent", ["entity", "place"]),
            _etype("Transport", "MovementEvent", ["artifact", "destination", "origin"]),
        ],
    )


@pytest.fixture()
def tiny_split() -> CorpusSplit:
    instances = (
        make_instance(
            "1",
            "Rebels attacked the convoy near Mosul.",
            [("Attack", "attacked", [("attacker", "Rebels"), ("target", "convoy"), ("place", "Mosul")])],
        ),
        make_instance(
            "2",
            "Troops attacked a depot.",
            [("Attack", "attacked", [("attacker", "Troops"), ("target", "depot")])],
        ),
        make_instance(
            "3",
            "Protesters rallied downtown.",
            [("Demonstrate", "rallied", [("entity", "Protesters"), ("place", "downtown")])],
        ),
        make_instance(
            "4",
            "Ministers met in Paris.",
            [("Meet", "met", [("entity", "Ministers"), ("place", "Paris")])],
        ),
        make_instance(
            "5",
            "The convoy moved supplies from Kirkuk to Erbil.",
            [
                (
                    "Transport",
                    "moved",
                    [("artifact", "supplies"), ("origin", "Kirkuk"), ("destination", "Erbil")],
                )
            ],
        ),
        make_instance("6", "Nothing notable happened today."),
        make_instance(
            "7",
            "They met after the attack; they met again later.",
            [
                ("Meet", "met", [("entity", "They")]),
                ("Attack", "attack", []),
            ],
        ),
        make_instance(
            "8",
            "Crowds demonstrated and police attacked them.",
            [
                ("Demonstrate", "demonstrated", [("entity", "Crowds")]),
                ("Attack", "attacked", [("attacker", "police"), ("target", "them")]),
            ],
        ),
    )
    return CorpusSplit(name="unit", instances=instances)


@pytest.fixture()
def endpoint():
    ep = start_endpoint(latency=0.05)
    yield ep
    ep.close()


@pytest.fixture()
def tiny_store_p(tiny):
    return make_store(tiny, "p")


@pytest.fixture()
def tiny_store_h(tiny):
    return make_store(tiny, "h")
