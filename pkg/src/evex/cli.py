"""Subcommand front-end for the corpus-to-evaluation pipeline."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .codefmt import export_jsonl
from .corpus import ingest, save_split, select_dev, stats, subset_covered, subset_uniform
from .guidelines import (
    SAMPLED_VARIANTS,
    GuidelineError,
    consolidate,
    generate,
    load_human,
    load_store,
    normalize_variant,
    save_store,
    select_exemplars,
)
from .llmclient import EndpointConfig, LLMClient
from .ontology import load_ontology
from .parsing import aggregate, parse_output, read_records, write_records
from .report import comparison_table, emit_plot_data, frequency_delta
from .sampling import TrainPlan, build_inference, build_training
from .scoring import ScoreReport, categorize_errors, load_manual_labels, score

log = logging.getLogger("evex")


class ConfigError(ValueError):
    pass


_ENDPOINT_KEYS = {
    "base_url": str,
    "model_name": str,
    "api_key_env": str,
    "max_in_flight": int,
    "max_attempts": int,
    "backoff_base": (int, float),
    "timeout": (int, float),
    "temperature": (int, float),
    "max_tokens": int,
}

_CONFIG_KEYS = {
    "workspace": str,
    "ontology": str,
    "splits": dict,
    "seeds": dict,
    "endpoint": dict,
    "cache_dir": str,
    "guidelines": dict,
    "manual_labels": str,
}


def load_config(path: str) -> dict:
    """Load and validate the JSON config; every offending key is reported."""
    with open(path, encoding="utf-8") as f:
        try:
            cfg = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    problems = []
    for key, value in cfg.items():
        if key not in _CONFIG_KEYS:
            problems.append(f"unknown key {key!r}")
        elif not isinstance(value, _CONFIG_KEYS[key]):
            problems.append(f"key {key!r} must be {_CONFIG_KEYS[key]}")
    for key, value in cfg.get("endpoint", {}).items():
        if key not in _ENDPOINT_KEYS:
            problems.append(f"unknown endpoint key {key!r}")
        elif value is not None and not isinstance(value, _ENDPOINT_KEYS[key]):
            problems.append(f"endpoint key {key!r} has wrong type")
    for key, value in cfg.get("seeds", {}).items():
        if not isinstance(value, int):
            problems.append(f"seed {key!r} must be an integer")
    if problems:
        raise ConfigError(f"{path}: " + "; ".join(problems))
    cfg["_dir"] = os.path.dirname(os.path.abspath(path))
    return cfg


def _workspace(cfg: dict) -> str:
    return os.path.normpath(os.path.join(cfg.get("_dir", os.getcwd()), cfg.get("workspace", ".")))


def _resolve(cfg: dict, path: str | None) -> str | None:
    if path is None:
        return None
    if os.path.isabs(path):
        return path
    return os.path.join(_workspace(cfg), path)


def _ontology_path(args, cfg: dict) -> str:
    path = getattr(args, "ontology", None) or _resolve(cfg, cfg.get("ontology"))
    if not path:
        raise ConfigError("no ontology given: pass --ontology or set 'ontology' in the config")
    return path


def _seed(args, cfg: dict, stage: str, default: int = 0) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return cfg.get("seeds", {}).get(stage, default)


def _endpoint(args, cfg: dict) -> EndpointConfig:
    e = dict(cfg.get("endpoint", {}))
    if getattr(args, "endpoint", None):
        e["base_url"] = args.endpoint
    if getattr(args, "model", None):
        e["model_name"] = args.model
    if "base_url" not in e or "model_name" not in e:
        raise ConfigError(
            "endpoint requires base_url and model_name (config 'endpoint' or --endpoint/--model)"
        )
    return EndpointConfig(**e)


def _cache_dir(args, cfg: dict) -> str:
    return getattr(args, "cache_dir", None) or _resolve(cfg, cfg.get("cache_dir")) or "cache"


def _log_run(args, cfg: dict, **extras) -> None:
    resolved = {k: v for k, v in vars(args).items() if k not in ("func", "config") and v is not None}
    resolved.update(extras)
    log.info("run: %s", json.dumps(resolved, default=str, sort_keys=True))
    cache = _cache_dir(args, cfg)
    if os.path.isdir(cache):
        log.info("cache: %s (%d transcripts)", cache, len(os.listdir(cache)))
    else:
        log.info("cache: %s (absent)", cache)


def _load_guideline_store(args, cfg: dict, variant: str, ont):
    if variant == "noguide":
        return None
    path = getattr(args, "guidelines", None) or _resolve(
        cfg, cfg.get("guidelines", {}).get(variant)
    )
    if not path:
        raise ConfigError(
            f"variant {variant!r} requires a guideline store: pass --guidelines "
            f"or set guidelines.{variant} in the config"
        )
    return load_store(path, variant, ont)


def _cmd_ingest(args, cfg: dict) -> int:
    ont = load_ontology(_ontology_path(args, cfg))
    _log_run(args, cfg)
    split = ingest(args.input, ont, strict=not args.lenient, name=args.name or args.input)
    st = stats(split)
    if args.out:
        save_split(split, args.out)
    print(
        f"{split.name}: {st.instances} instances, {st.event_mentions} event mentions, "
        f"{len(st.by_type)} event types"
    )
    return 0


def _cmd_subset(args, cfg: dict) -> int:
    ont = load_ontology(_ontology_path(args, cfg))
    _log_run(args, cfg)
    split = ingest(args.input, ont, strict=not args.lenient)
    if args.kind == "dev":
        seed = _seed(args, cfg, "dev")
        out = select_dev(split, ont, args.n or 100, seed)
    elif args.kind == "2k":
        seed = _seed(args, cfg, "uniform")
        out = subset_uniform(split, args.n or 2000, seed)
    else:
        seed = _seed(args, cfg, "covered", 1)
        out = subset_covered(split, ont, args.n or 100, seed)
    save_split(out, args.out)
    print(f"{out.name}: wrote {len(out)} instances to {args.out}")
    return 0


def _cmd_guidelines(args, cfg: dict) -> int:
    ont = load_ontology(_ontology_path(args, cfg))
    _log_run(args, cfg)
    if args.action == "import-human":
        sets = load_human(args.input, ont)
        save_store(sets, args.out)
        print(f"imported human guidelines for {len(sets)} event types to {args.out}")
        return 0
    client = LLMClient(_endpoint(args, cfg), _cache_dir(args, cfg))
    if args.action == "gen":
        variant = normalize_variant(args.variant)
        if variant not in SAMPLED_VARIANTS:
            raise GuidelineError(f"'guidelines gen' requires --variant p|pn|ps, got {variant!r}")
        mode = {"p": "none", "pn": "random", "ps": "sibling"}[variant]
        split = ingest(args.input, ont, strict=not args.lenient)
        seed = _seed(args, cfg, "exemplars")
        sets = {}
        for e in ont.event_types:
            bundle = select_exemplars(split, ont, e.name, mode, seed)
            sets[e.name] = generate(e, bundle, client)
            log.info("generated %s guidelines for %s", variant, e.name)
        save_store(sets, args.out)
        print(f"generated {variant} guidelines for {len(sets)} event types to {args.out}")
        return 0
    # consolidate
    variant = normalize_variant(args.variant)
    if variant not in ("pn", "ps"):
        raise GuidelineError(
            f"'guidelines consolidate' requires --variant pn|ps, got {variant!r}"
        )
    sets5 = load_store(args.input, variant, ont)
    sets = {}
    for name, gs in sets5.items():
        sets[name] = consolidate(gs, ont.get(name), client)
        log.info("consolidated %s guidelines for %s", variant, name)
    save_store(sets, args.out)
    print(f"consolidated {variant} guidelines for {len(sets)} event types to {args.out}")
    return 0


def _cmd_build(args, cfg: dict) -> int:
    ont = load_ontology(_ontology_path(args, cfg))
    _log_run(args, cfg)
    variant = normalize_variant(args.variant)
    split = ingest(args.input, ont, strict=not args.lenient)
    store = _load_guideline_store(args, cfg, variant, ont)
    if args.action == "train":
        plan = TrainPlan(
            variant=variant,
            with_ns=args.with_ns,
            ns_count=args.ns_count,
            seed=_seed(args, cfg, "train"),
        )
        records = build_training(split, ont, store, plan)
    else:
        records = build_inference(split, ont, store, variant, _seed(args, cfg, "infer"))
    n = export_jsonl(records, args.out)
    print(f"wrote {n} records to {args.out}")
    return 0


def _cmd_parse(args, cfg: dict) -> int:
    ont = load_ontology(_ontology_path(args, cfg))
    _log_run(args, cfg)
    records = []
    with open(args.input, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            doc = json.loads(line)
            records.append(
                parse_output(
                    doc["raw_text"],
                    ont,
                    instance_id=str(doc["instance_id"]),
                    prompted_type=doc.get("prompted_type", ""),
                )
            )
    write_records(records, args.out)
    by_status: dict[str, int] = {}
    for rec in records:
        by_status[rec.parse_status] = by_status.get(rec.parse_status, 0) + 1
    print(
        f"parsed {len(records)} records to {args.out} "
        f"({', '.join(f'{k}={v}' for k, v in sorted(by_status.items()))})"
    )
    return 0


def _cmd_score(args, cfg: dict) -> int:
    ont = load_ontology(_ontology_path(args, cfg))
    _log_run(args, cfg)
    gold = ingest(args.gold, ont, strict=not args.lenient)
    records = read_records(args.pred)
    report = score(aggregate(records), gold, ont, records=records)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        json.dump(report.to_json_dict(), f, ensure_ascii=False, indent=2)
        f.write("\n")
    tsv_path = os.path.splitext(args.out)[0] + ".tsv"
    with open(tsv_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(report.f1_tsv())
    print(
        "  ".join(f"{m}={report.overall[m].f1:.4f}" for m in ("TI", "TC", "AI", "AC"))
    )
    return 0


def _cmd_errors(args, cfg: dict) -> int:
    ont = load_ontology(_ontology_path(args, cfg))
    _log_run(args, cfg)
    gold = ingest(args.gold, ont, strict=not args.lenient)
    records = read_records(args.pred)
    manual_path = args.manual or _resolve(cfg, cfg.get("manual_labels"))
    manual = load_manual_labels(manual_path) if manual_path else None
    breakdown = categorize_errors(aggregate(records), gold, records, manual)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        json.dump(breakdown.to_json_dict(), f, ensure_ascii=False, indent=2)
        f.write("\n")
    summary = ", ".join(f"{k}={v}" for k, v in breakdown.counts.items())
    if breakdown.manual_counts:
        summary += "; manual: " + ", ".join(
            f"{k}={v}" for k, v in sorted(breakdown.manual_counts.items())
        )
    print(summary)
    return 0


def _load_report(path: str) -> ScoreReport:
    with open(path, encoding="utf-8") as f:
        return ScoreReport.from_json_dict(json.load(f))


def _cmd_report(args, cfg: dict) -> int:
    _log_run(args, cfg)
    if args.action == "delta":
        missing = [f for f in ("a", "b", "train") if not getattr(args, f)]
        if missing:
            raise ConfigError(f"report delta requires --{', --'.join(missing)}")
        ont = load_ontology(_ontology_path(args, cfg))
        train = ingest(args.train, ont, strict=not args.lenient)
        table = frequency_delta(_load_report(args.a), _load_report(args.b), stats(train))
        emit_plot_data(table, args.out)
        print(f"wrote per-type AC delta table to {args.out}")
        return 0
    if not args.report:
        raise ConfigError("report table requires at least one --report VARIANT=PATH")
    reports = {}
    for item in args.report:
        if "=" not in item:
            raise ConfigError(f"--report expects VARIANT=PATH, got {item!r}")
        variant, path = item.split("=", 1)
        reports[variant] = _load_report(path)
    table = comparison_table(reports)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write(table.tsv())
    if args.csv:
        emit_plot_data(table, args.csv)
    print(table.text(), end="")
    return 0


def _add_common(p: argparse.ArgumentParser, *, seed: bool = True) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--ontology", help="ontology JSON (overrides config)")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="stage seed (overrides config)")
    strict = p.add_mutually_exclusive_group()
    strict.add_argument(
        "--strict", dest="lenient", action="store_false", help="abort on invalid records (default)"
    )
    strict.add_argument(
        "--lenient", dest="lenient", action="store_true", help="skip invalid records with a logged count"
    )
    p.set_defaults(lenient=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evex",
        description="Corpus-to-evaluation toolkit for code-format event extraction",
    )
    parser.add_argument("--version", action="version", version=f"evex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a JSONL corpus file")
    _add_common(p, seed=False)
    p.add_argument("input", help="JSONL sentence file")
    p.add_argument("--name", help="split name")
    p.add_argument("--out", help="write the canonical split here")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("subset", help="materialize dev/2k/100 subsets")
    p.add_argument("kind", choices=["dev", "2k", "100"])
    _add_common(p)
    p.add_argument("input", help="source split JSONL")
    p.add_argument("--n", type=int, default=None, help="subset size override")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_subset)

    p = sub.add_parser("guidelines", help="generate, consolidate, or import guidelines")
    p.add_argument("action", choices=["gen", "consolidate", "import-human"])
    _add_common(p)
    p.add_argument("--variant", default=None, help="p|pn|ps (gen), pn|ps (consolidate)")
    p.add_argument("--in", dest="input", required=True, help="train split (gen), store (consolidate), human JSON (import-human)")
    p.add_argument("--out", required=True)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--endpoint", default=None, help="endpoint base URL override")
    p.add_argument("--model", default=None, help="model name override")
    p.set_defaults(func=_cmd_guidelines)

    p = sub.add_parser("build", help="build training or inference JSONL")
    p.add_argument("action", choices=["train", "infer"])
    _add_common(p)
    p.add_argument("--in", dest="input", required=True, help="split JSONL")
    p.add_argument(
        "--variant",
        default="noguide",
        choices=["noguide", "h", "p", "pn", "ps", "pn-int", "ps-int"],
    )
    p.add_argument("--guidelines", default=None, help="guideline store JSON")
    ns = p.add_mutually_exclusive_group()
    ns.add_argument("--with-ns", dest="with_ns", action="store_true")
    ns.add_argument("--no-ns", dest="with_ns", action="store_false")
    p.set_defaults(with_ns=True)
    p.add_argument("--ns-count", type=int, default=15)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("parse", help="parse model generations")
    _add_common(p, seed=False)
    p.add_argument("--in", dest="input", required=True, help="JSONL of {instance_id, prompted_type, raw_text}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("score", help="score parsed predictions against gold")
    _add_common(p, seed=False)
    p.add_argument("--pred", required=True, help="parsed records JSONL")
    p.add_argument("--gold", required=True, help="gold split JSONL")
    p.add_argument("--out", required=True, help="report JSON path (TSV written alongside)")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("errors", help="error-category breakdown")
    _add_common(p, seed=False)
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--manual", default=None, help="manual CA/LN labels JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_errors)

    p = sub.add_parser("report", help="delta and comparison tables")
    p.add_argument("action", choices=["delta", "table"])
    _add_common(p, seed=False)
    p.add_argument("--a", help="baseline report JSON (delta)")
    p.add_argument("--b", help="comparison report JSON (delta)")
    p.add_argument("--train", help="training split for frequencies (delta)")
    p.add_argument("--report", action="append", default=[], help="VARIANT=PATH (table, repeatable)")
    p.add_argument("--csv", default=None, help="also emit plot CSV here (table)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def run(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config) if args.config else {}
        return args.func(args, cfg)
    except Exception as exc:  # categorized, non-zero exit
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


def main() -> None:
    sys.exit(run())
