"""Training-set construction (with negative-sample augmentation) and the
full inference enumeration.

Determinism contract: every instance gets its own rng stream derived from
(seed, instance_id), so emitted records do not depend on worker scheduling
or split order.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Mapping

from .codefmt import PromptRecord, build_prompt
from .corpus import CorpusSplit
from .guidelines import GuidelineSet, normalize_variant
from .ontology import Ontology

__all__ = ["SamplingError", "TrainPlan", "build_training", "build_inference", "instance_rng"]


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class TrainPlan:
    variant: str = "noguide"
    with_ns: bool = True
    ns_count: int = 15
    seed: int = 0

    def __post_init__(self) -> None:
        if self.ns_count < 0:
            raise SamplingError("ns_count must be >= 0")
        object.__setattr__(self, "variant", normalize_variant(self.variant))


def instance_rng(seed: int, instance_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{instance_id}".encode("utf-8")).hexdigest()
    return random.Random(int(digest, 16))


def _check_guidelines(variant: str, guidelines: Mapping[str, GuidelineSet] | None) -> None:
    if variant != "noguide" and not guidelines:
        raise SamplingError(f"variant {variant!r} requires a guideline store")


def build_training(
    split: CorpusSplit,
    ont: Ontology,
    guidelines: Mapping[str, GuidelineSet] | None,
    plan: TrainPlan,
) -> list[PromptRecord]:
    """One record per (instance, gold event type); no-event instances get a
    single record with a random type and empty output; with_ns adds
    ns_count empty-output records with distinct non-gold types per
    positive record."""
    _check_guidelines(plan.variant, guidelines)
    type_names = ont.type_names()
    records: list[PromptRecord] = []
    for inst in split.instances:
        rng = instance_rng(plan.seed, inst.instance_id)
        gold_types = [t for t in type_names if t in inst.event_types()]
        if not gold_types:
            e = type_names[rng.randrange(len(type_names))]
            records.append(
                build_prompt(inst, e, ont, plan.variant, guidelines, rng)
            )
            continue
        candidates = [t for t in type_names if t not in inst.event_types()]
        if plan.with_ns and plan.ns_count > len(candidates):
            raise SamplingError(
                f"instance {inst.instance_id!r}: ns_count {plan.ns_count} exceeds the "
                f"{len(candidates)} non-gold event types available"
            )
        for t in gold_types:
            records.append(build_prompt(inst, t, ont, plan.variant, guidelines, rng))
            if plan.with_ns and plan.ns_count:
                for e_neg in rng.sample(candidates, plan.ns_count):
                    records.append(
                        build_prompt(inst, e_neg, ont, plan.variant, guidelines, rng)
                    )
    return records


def build_inference(
    split: CorpusSplit,
    ont: Ontology,
    guidelines: Mapping[str, GuidelineSet] | None,
    variant: str,
    seed: int,
) -> list[PromptRecord]:
    """Every instance paired with every event type; outputs omitted."""
    variant = normalize_variant(variant)
    _check_guidelines(variant, guidelines)
    records: list[PromptRecord] = []
    for inst in split.instances:
        rng = instance_rng(seed, inst.instance_id)
        for e in ont.type_names():
            records.append(
                build_prompt(
                    inst, e, ont, variant, guidelines, rng, include_output=False
                )
            )
    return records
