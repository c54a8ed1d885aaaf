import json
import os

import pytest

from evex.cli import ConfigError, load_config, run
from evex.corpus import save_split
from evex.guidelines import save_store
from evex.ontology import save_ontology

from _builders import make_store


@pytest.fixture()
def ws(tiny, tiny_split, tmp_path):
    """Workspace on disk: ontology, gold split, guideline store, config."""
    ont_path = str(tmp_path / "tiny.json")
    save_ontology(tiny, ont_path)
    gold_path = str(tmp_path / "gold.jsonl")
    save_split(tiny_split, gold_path)
    store_path = str(tmp_path / "store-p.json")
    save_store(make_store(tiny, "p"), store_path)
    cfg_path = str(tmp_path / "config.json")
    with open(cfg_path, "w") as f:
        json.dump(
            {
                "workspace": ".",
                "ontology": "tiny.json",
                "seeds": {"train": 3, "dev": 5},
                "guidelines": {"p": "store-p.json"},
            },
            f,
        )
    return {
        "dir": tmp_path,
        "ontology": ont_path,
        "gold": gold_path,
        "store": store_path,
        "config": cfg_path,
    }


class TestParserBasics:
    def test_version(self, capsys):
        assert run(["--version"]) == 0
        assert "evex" in capsys.readouterr().out

    def test_no_command_is_usage_error(self):
        assert run([]) == 2

    def test_unknown_command_is_usage_error(self):
        assert run(["frobnicate"]) == 2

    def test_missing_ontology_fails(self, ws, caplog):
        assert run(["ingest", str(ws["gold"])]) == 1
        assert "no ontology given" in caplog.text


class TestConfig:
    def test_all_problems_reported_at_once(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(
            json.dumps(
                {
                    "bogus": 1,
                    "ontology": 7,
                    "endpoint": {"nope": True, "max_in_flight": "four"},
                    "seeds": {"train": "three"},
                }
            )
        )
        with pytest.raises(ConfigError) as info:
            load_config(str(path))
        msg = str(info.value)
        for needle in (
            "unknown key 'bogus'",
            "key 'ontology' must be",
            "unknown endpoint key 'nope'",
            "endpoint key 'max_in_flight' has wrong type",
            "seed 'train' must be an integer",
        ):
            assert needle in msg

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(str(path))

    def test_paths_resolve_against_config_dir(self, ws, monkeypatch, tmp_path, capsys):
        elsewhere = tmp_path / "elsewhere"
        elsewhere.mkdir()
        monkeypatch.chdir(elsewhere)
        assert run(["ingest", "--config", ws["config"], str(ws["gold"])]) == 0
        assert "8 instances" in capsys.readouterr().out

    def test_bad_config_exits_nonzero(self, ws, tmp_path, caplog):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"bogus": 1}))
        assert run(["ingest", "--config", str(path), str(ws["gold"])]) == 1
        assert "ConfigError" in caplog.text


class TestIngest:
    def test_summary_and_out(self, ws, capsys):
        out = str(ws["dir"] / "canonical.jsonl")
        code = run(
            ["ingest", "--ontology", ws["ontology"], str(ws["gold"]), "--name", "unit", "--out", out]
        )
        assert code == 0
        printed = capsys.readouterr().out
        assert "unit: 8 instances, 9 event mentions, 4 event types" in printed
        assert open(out).read() == open(ws["gold"]).read()

    def test_strict_failure(self, ws, caplog):
        bad = ws["dir"] / "bad.jsonl"
        bad.write_text(
            json.dumps(
                {
                    "doc_id": "d",
                    "wnd_id": "w",
                    "instance_id": "1",
                    "text": "abc",
                    "event_mentions": [
                        {"event_type": "Attack", "trigger": {"text": "zzz", "start": 0, "end": 3}}
                    ],
                }
            )
            + "\n"
        )
        assert run(["ingest", "--ontology", ws["ontology"], str(bad)]) == 1
        assert "CorpusError" in caplog.text

    def test_lenient_skips(self, ws, capsys):
        mixed = ws["dir"] / "mixed.jsonl"
        good = open(ws["gold"]).readline()
        mixed.write_text(good + "not json\n")
        code = run(["ingest", "--ontology", ws["ontology"], "--lenient", str(mixed)])
        assert code == 0
        assert "1 instances" in capsys.readouterr().out


class TestSubset:
    def test_dev(self, ws, capsys):
        out = str(ws["dir"] / "dev.jsonl")
        code = run(
            ["subset", "dev", "--ontology", ws["ontology"], str(ws["gold"]), "--n", "8", "--out", out]
        )
        assert code == 0
        assert "wrote 8 instances" in capsys.readouterr().out

    def test_uniform(self, ws, capsys):
        out = str(ws["dir"] / "u.jsonl")
        code = run(
            ["subset", "2k", "--ontology", ws["ontology"], str(ws["gold"]), "--n", "4", "--out", out]
        )
        assert code == 0
        assert len(open(out).read().splitlines()) == 4

    def test_covered(self, ws, capsys):
        out = str(ws["dir"] / "c.jsonl")
        code = run(
            [
                "subset", "100", "--ontology", ws["ontology"], str(ws["gold"]),
                "--n", "5", "--seed", "2", "--out", out,
            ]
        )
        assert code == 0
        assert "covered5-s2" in capsys.readouterr().out

    def test_oversize_fails(self, ws, caplog):
        out = str(ws["dir"] / "u.jsonl")
        code = run(
            ["subset", "2k", "--ontology", ws["ontology"], str(ws["gold"]), "--n", "99", "--out", out]
        )
        assert code == 1
        assert "CorpusError" in caplog.text


class TestBuild:
    def test_train_noguide(self, ws, capsys):
        out = str(ws["dir"] / "train.jsonl")
        code = run(
            [
                "build", "train", "--ontology", ws["ontology"], "--in", str(ws["gold"]),
                "--ns-count", "2", "--out", out,
            ]
        )
        assert code == 0
        rows = [json.loads(l) for l in open(out)]
        # 9 positives + 2 negatives each + 1 no-event record
        assert len(rows) == 9 * 3 + 1
        assert "wrote 28 records" in capsys.readouterr().out
        assert all(row["task_type"] == "E2E" for row in rows)

    def test_train_without_ns(self, ws):
        out = str(ws["dir"] / "train.jsonl")
        code = run(
            [
                "build", "train", "--ontology", ws["ontology"], "--in", str(ws["gold"]),
                "--no-ns", "--out", out,
            ]
        )
        assert code == 0
        assert len(open(out).read().splitlines()) == 10

    def test_train_seed_from_config(self, ws):
        out1 = str(ws["dir"] / "t1.jsonl")
        out2 = str(ws["dir"] / "t2.jsonl")
        base = ["build", "train", "--config", ws["config"], "--in", str(ws["gold"]),
                "--ns-count", "2"]
        assert run(base + ["--out", out1]) == 0
        assert run(base + ["--seed", "3", "--out", out2]) == 0
        assert open(out1).read() == open(out2).read()

    def test_infer_enumerates_all_pairs(self, ws):
        out = str(ws["dir"] / "infer.jsonl")
        code = run(
            ["build", "infer", "--ontology", ws["ontology"], "--in", str(ws["gold"]), "--out", out]
        )
        assert code == 0
        rows = [json.loads(l) for l in open(out)]
        assert len(rows) == 8 * 4
        assert all("output" not in row for row in rows)

    def test_guided_build_uses_store(self, ws):
        out = str(ws["dir"] / "train-p.jsonl")
        code = run(
            [
                "build", "train", "--config", ws["config"], "--in", str(ws["gold"]),
                "--variant", "p", "--no-ns", "--out", out,
            ]
        )
        assert code == 0
        rows = [json.loads(l) for l in open(out)]
        assert all("Definition" in row["input"] for row in rows)

    def test_guided_build_without_store_fails(self, ws, caplog):
        out = str(ws["dir"] / "x.jsonl")
        code = run(
            [
                "build", "train", "--ontology", ws["ontology"], "--in", str(ws["gold"]),
                "--variant", "h", "--out", out,
            ]
        )
        assert code == 1
        assert "requires a guideline store" in caplog.text

    def test_unknown_variant_rejected(self, ws):
        code = run(
            [
                "build", "train", "--ontology", ws["ontology"], "--in", str(ws["gold"]),
                "--variant", "bogus", "--out", "x",
            ]
        )
        assert code == 2


def _identity_generations(tiny, tiny_split, path):
    """Raw generations reproducing gold exactly, across all 32 pairs."""
    from evex.codefmt import render_output

    with open(path, "w") as f:
        for inst in tiny_split.instances:
            for t in tiny.type_names():
                events = [ev for ev in inst.events if ev.event_type == t]
                row = {
                    "instance_id": inst.instance_id,
                    "prompted_type": t,
                    "raw_text": render_output(events, tiny),
                }
                f.write(json.dumps(row) + "\n")
    return str(path)


class TestParseScoreErrorsReport:
    def test_full_pipeline(self, ws, tiny, tiny_split, capsys):
        gen = _identity_generations(tiny, tiny_split, ws["dir"] / "gen.jsonl")
        parsed = str(ws["dir"] / "parsed.jsonl")
        code = run(["parse", "--ontology", ws["ontology"], "--in", gen, "--out", parsed])
        assert code == 0
        assert "ok=32" in capsys.readouterr().out

        report = str(ws["dir"] / "report.json")
        code = run(
            ["score", "--ontology", ws["ontology"], "--pred", parsed, "--gold", str(ws["gold"]), "--out", report]
        )
        assert code == 0
        printed = capsys.readouterr().out
        assert "TI=1.0000" in printed and "AC=1.0000" in printed
        doc = json.load(open(report))
        assert doc["overall"]["AC"]["f1"] == 1.0
        tsv = open(str(ws["dir"] / "report.tsv")).read().splitlines()
        assert tsv[0] == "TI\tTC\tAI\tAC"
        assert tsv[1] == "\t".join(["1.000000"] * 4)

        errors = str(ws["dir"] / "errors.json")
        code = run(
            ["errors", "--ontology", ws["ontology"], "--pred", parsed, "--gold", str(ws["gold"]), "--out", errors]
        )
        assert code == 0
        breakdown = json.load(open(errors))
        assert all(v == 0 for v in breakdown["counts"].values())

    def test_imperfect_predictions_and_manual_labels(self, ws, tiny, tiny_split, capsys):
        gen_path = ws["dir"] / "gen.jsonl"
        rows = [
            {"instance_id": "1", "prompted_type": "Attack", "raw_text": "not parseable"},
            {"instance_id": "2", "prompted_type": "Attack",
             "raw_text": '[Attack(mention="attacked", attacker=["Troops"], place=[], target=["depot"])]'},
            {"instance_id": "3", "prompted_type": "Demonstrate", "raw_text": "[]"},
        ]
        gen_path.write_text("".join(json.dumps(r) + "\n" for r in rows))
        parsed = str(ws["dir"] / "parsed.jsonl")
        code = run(["parse", "--ontology", ws["ontology"], "--in", str(gen_path), "--out", parsed])
        assert code == 0
        assert "ok=2, parse_error=1" in capsys.readouterr().out

        manual = ws["dir"] / "manual.json"
        manual.write_text(json.dumps({"3": "LN"}))
        errors = str(ws["dir"] / "errors.json")
        code = run(
            [
                "errors", "--ontology", ws["ontology"], "--pred", parsed, "--gold", str(ws["gold"]),
                "--manual", str(manual), "--out", errors,
            ]
        )
        assert code == 0
        printed = capsys.readouterr().out
        assert "manual: LN=1" in printed
        breakdown = json.load(open(errors))
        assert breakdown["manual_counts"] == {"LN": 1}
        assert "1" in breakdown["labels"]

    def test_report_table_and_delta(self, ws, tiny, tiny_split, capsys):
        gen = _identity_generations(tiny, tiny_split, ws["dir"] / "gen.jsonl")
        parsed = str(ws["dir"] / "parsed.jsonl")
        run(["parse", "--ontology", ws["ontology"], "--in", gen, "--out", parsed])
        report = str(ws["dir"] / "report.json")
        run(["score", "--ontology", ws["ontology"], "--pred", parsed, "--gold", str(ws["gold"]), "--out", report])
        capsys.readouterr()

        table_out = str(ws["dir"] / "table.tsv")
        table_csv = str(ws["dir"] / "table.csv")
        code = run(
            [
                "report", "table", "--report", f"noguide={report}", "--report", f"p={report}",
                "--csv", table_csv, "--out", table_out,
            ]
        )
        assert code == 0
        printed = capsys.readouterr().out
        assert "(* best, + second best)" in printed
        assert open(table_out).read().startswith("variant\tTI\tTC\tAI\tAC")
        assert os.path.exists(table_csv)

        delta_out = str(ws["dir"] / "delta.csv")
        code = run(
            [
                "report", "delta", "--ontology", ws["ontology"], "--a", report, "--b", report,
                "--train", str(ws["gold"]), "--out", delta_out,
            ]
        )
        assert code == 0
        lines = open(delta_out).read().splitlines()
        assert lines[0] == "event_type,train_frequency,ac_a,ac_b,delta"
        assert len(lines) == 1 + 4 + 2

    def test_report_delta_missing_flags(self, ws, caplog):
        code = run(["report", "delta", "--ontology", ws["ontology"], "--out", "x.csv"])
        assert code == 1
        assert "--a" in caplog.text and "--b" in caplog.text and "--train" in caplog.text

    def test_report_table_requires_reports(self, ws, caplog):
        code = run(["report", "table", "--out", "x.tsv"])
        assert code == 1
        assert "at least one --report" in caplog.text

    def test_report_table_bad_spec(self, ws, caplog):
        code = run(["report", "table", "--report", "nopath", "--out", "x.tsv"])
        assert code == 1
        assert "VARIANT=PATH" in caplog.text


class TestGuidelinesCommand:
    def test_import_human(self, ws, tiny, capsys):
        human = str(ws["dir"] / "human.json")
        save_store(make_store(tiny, "h"), human)
        out = str(ws["dir"] / "imported.json")
        code = run(
            [
                "guidelines", "import-human", "--ontology", ws["ontology"],
                "--in", human, "--out", out,
            ]
        )
        assert code == 0
        assert "imported human guidelines for 4 event types" in capsys.readouterr().out
        assert set(json.load(open(out))) == set(tiny.type_names())

    def test_gen_requires_sampled_variant(self, ws, caplog):
        code = run(
            [
                "guidelines", "gen", "--ontology", ws["ontology"], "--variant", "h",
                "--in", str(ws["gold"]), "--out", "x.json",
                "--endpoint", "http://127.0.0.1:9", "--model", "m",
            ]
        )
        assert code == 1
        assert "requires --variant p|pn|ps" in caplog.text

    def test_gen_requires_endpoint(self, ws, caplog):
        code = run(
            [
                "guidelines", "gen", "--ontology", ws["ontology"], "--variant", "p",
                "--in", str(ws["gold"]), "--out", "x.json",
            ]
        )
        assert code == 1
        assert "endpoint requires base_url and model_name" in caplog.text

    def test_gen_and_consolidate_against_stub(self, ws, tiny, endpoint, capsys):
        from _builders import guideline_responder

        endpoint.responder = guideline_responder(tiny)
        cache = str(ws["dir"] / "cache")
        store = str(ws["dir"] / "gen-pn.json")
        code = run(
            [
                "guidelines", "gen", "--ontology", ws["ontology"], "--variant", "pn",
                "--in", str(ws["gold"]), "--out", store, "--cache-dir", cache,
                "--endpoint", endpoint.base_url, "--model", "stub",
            ]
        )
        assert code == 0
        assert "generated pn guidelines for 4 event types" in capsys.readouterr().out
        doc = json.load(open(store))
        assert len(doc["Attack"]["Event Definition"]) == 5
        assert os.path.exists(store + ".provenance.json")
        n_cached = len(os.listdir(cache))
        assert n_cached == 4

        merged = str(ws["dir"] / "gen-pn-int.json")
        code = run(
            [
                "guidelines", "consolidate", "--ontology", ws["ontology"], "--variant", "pn",
                "--in", store, "--out", merged, "--cache-dir", cache,
                "--endpoint", endpoint.base_url, "--model", "stub",
            ]
        )
        assert code == 0
        assert "consolidated pn guidelines for 4 event types" in capsys.readouterr().out
        doc = json.load(open(merged))
        assert doc["Meet"]["Event Definition"] == ["Stub merged definition for Meet."]
        assert len(os.listdir(cache)) == n_cached + 4

        # replays come from the cache: no new requests, identical store
        seen = len(endpoint.requests)
        store2 = str(ws["dir"] / "gen-pn-2.json")
        code = run(
            [
                "guidelines", "gen", "--ontology", ws["ontology"], "--variant", "pn",
                "--in", str(ws["gold"]), "--out", store2, "--cache-dir", cache,
                "--endpoint", endpoint.base_url, "--model", "stub",
            ]
        )
        assert code == 0
        assert len(endpoint.requests) == seen
        assert json.load(open(store2)) == json.load(open(store))
