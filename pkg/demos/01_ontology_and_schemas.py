"""
Ontology basics and code-format schema rendering
================================================

Loads the bundled ACE05 ontology, inspects a few event types, and renders
the dataclass-style schema blocks that prompts are built from, with and
without guideline docstrings.
"""

import os
from importlib import resources

from evex.codefmt import render_output, render_schema
from evex.guidelines import load_human
from evex.ontology import load_ontology, siblings

HERE = os.path.dirname(os.path.abspath(__file__))

# the ontology ships with the package
ont = load_ontology(str(resources.files("evex").joinpath("data/ontologies/ace05.json")))
print(f"ontology {ont.name!r}: {len(ont.event_types)} event types")

extradite = ont.get("Extradite")
print(f"\nExtradite <{extradite.parent}> roles: {', '.join(extradite.role_names)}")
print("siblings:", ", ".join(e.name for e in siblings(ont, "Extradite")))

# bare schema: field names only
print("\n--- schema, no guidelines ---")
print(render_schema(extradite, "noguide").text)

# guided schema: the class docstring carries the event definition and each
# field carries its role definition as a trailing comment
human = load_human(os.path.join(HERE, "data", "human-guidelines.json"), ont)
print("--- schema, human guidelines ---")
print(render_schema(extradite, "h", human["Extradite"]).text)

# gold events render to a bracketed list of constructor calls, one keyword
# per role, in ontology role order
from evex.corpus import ingest

split = ingest(os.path.join(HERE, "data", "sentences.jsonl"), ont, name="demo")
inst = next(i for i in split.instances if "extradited" in i.text)
events = [ev for ev in inst.events if ev.event_type == "Extradite"]
print("--- canonical output for one instance ---")
print(render_output(events, ont))
