"""
From a sentence corpus to training records
==========================================
"""

import os
import tempfile
from importlib import resources

from evex.codefmt import export_jsonl
from evex.corpus import ingest, stats, subset_uniform
from evex.ontology import load_ontology
from evex.sampling import TrainPlan, build_inference, build_training

HERE = os.path.dirname(os.path.abspath(__file__))

ont = load_ontology(str(resources.files("evex").joinpath("data/ontologies/ace05.json")))
split = ingest(os.path.join(HERE, "data", "sentences.jsonl"), ont, name="demo")

st = stats(split)
print(f"{st.split}: {st.instances} instances, {st.event_mentions} event mentions")
for ts in st.by_type:
    print(f"  {ts.event_type:<12} {ts.mentions} mention(s), filled roles {ts.role_fills}")

# a seeded uniform subset, reproducible across runs
half = subset_uniform(split, n=6, seed=7)
print("\nseeded subset:", ", ".join(half.instance_ids()))

# training records: one per (instance, gold type), plus negative samples
# whose correct output is the empty list
plan = TrainPlan(variant="noguide", with_ns=True, ns_count=3, seed=7)
records = build_training(split, ont, None, plan)
positives = [r for r in records if r.output != "[]"]
print(f"\n{len(records)} training records ({len(positives)} with a non-empty output)")

print("\n--- one record ---")
rec = positives[0]
print("instance:", rec.instance_id, "| prompted type:", rec.event_type)
print(rec.input)
print("output:", rec.output)

# inference enumerates every (instance, type) pair and omits outputs
inference = build_inference(split, ont, None, "noguide", seed=7)
print(f"\ninference enumeration: {len(inference)} records "
      f"({len(split.instances)} instances x {len(ont.event_types)} types)")

with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "train.jsonl")
    n = export_jsonl(records, path)
    print(f"exported {n} records to JSONL "
          f"({os.path.getsize(path) // 1024} KiB)")
