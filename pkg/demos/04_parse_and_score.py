"""
Parsing model generations and scoring them
==========================================

Feeds a handful of raw generations through the parser, shows how graceful
failure looks, then scores the parsed predictions against gold and prints
the four micro-F1 metrics plus the automatic error categories.
"""

import os
from importlib import resources

from evex.corpus import ingest
from evex.ontology import load_ontology
from evex.parsing import aggregate, parse_output
from evex.scoring import METRICS, score

HERE = os.path.dirname(os.path.abspath(__file__))

ont = load_ontology(str(resources.files("evex").joinpath("data/ontologies/ace05.json")))
split = ingest(os.path.join(HERE, "data", "sentences.jsonl"), ont, name="demo")

# simulated model generations: a perfect one, a fenced one, an empty one,
# one with a hallucinated role, and one that is not parseable at all
generations = [
    ("0", "Attack",
     '[Attack(mention="shelled", attacker=["Rebel fighters"], instrument=[], '
     'place=[], target=["village"], victim=["soldiers"])]'),
    ("1", "Meet",
     '```python\nresult = [Meet(mention="met", entity=["presidents"], place=["Geneva"])]\n```'),
    ("6", "Attack", "[]"),
    ("4", "Extradite",
     '[Extradite(mention="extradited", agent=["Authorities"], judge=["nobody"], '
     'person=["suspect"])]'),
    ("2", "Demonstrate", "The crowd marched through the capital."),
]

records = []
for instance_id, prompted, raw in generations:
    rec = parse_output(raw, ont, instance_id=instance_id, prompted_type=prompted)
    records.append(rec)
    line = f"{instance_id}/{prompted}: {rec.parse_status}"
    if rec.diagnostics:
        line += f" (diagnostics: {'; '.join(rec.diagnostics)})"
    print(line)

# aggregate folds per-type records into per-instance predictions
pred = aggregate(records)
print("\ninstances with predictions:", ", ".join(sorted(pred)))

report = score(pred, split, ont, records=records)
print("\nmetric  precision  recall  f1")
for m in METRICS:
    c = report.overall[m]
    print(f"{m:<6} {c.precision:>9.3f} {c.recall:>7.3f} {c.f1:>5.3f}")

print("\nautomatic error categories:")
for category, count in report.errors.counts.items():
    print(f"  {category:<12} {count}")
for instance_id, labels in sorted(report.errors.labels.items()):
    print(f"  instance {instance_id}: {', '.join(labels)}")
