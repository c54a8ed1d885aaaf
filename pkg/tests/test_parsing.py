import pytest

from evex.parsing import (
    PredictedEvent,
    PredictionRecord,
    aggregate,
    parse_output,
    read_records,
    write_records,
)

PAPER_OUTPUT = (
    '[Extradite(\n    mention="extradited",\n    person=["him"], \n'
    '    destination=["Hague"], \n    agent=["government"],\n    origin=[]\n)]'
)


class TestGrammar:
    def test_empty_result(self, tiny):
        rec = parse_output("[]", tiny)
        assert rec.parse_status == "ok"
        assert rec.events == ()
        assert rec.diagnostics == ()

    def test_reference_output(self, ace):
        rec = parse_output(PAPER_OUTPUT, ace)
        assert rec.parse_status == "ok"
        assert rec.diagnostics == ()
        (ev,) = rec.events
        assert ev.event_type == "Extradite"
        assert ev.mention == "extradited"
        assert ev.arguments == {
            "agent": ("government",),
            "destination": ("Hague",),
            "origin": (),
            "person": ("him",),
        }

    def test_trailing_comma_in_result_ok(self, tiny):
        rec = parse_output('[Meet(mention="met", entity=[], place=[]),]', tiny)
        assert rec.parse_status == "ok"

    def test_trailing_comma_in_list_ok(self, tiny):
        rec = parse_output('[Meet(mention="met", entity=["a",], place=[])]', tiny)
        assert rec.parse_status == "ok"
        assert rec.events[0].arguments["entity"] == ("a",)

    def test_trailing_comma_in_call_fails(self, tiny):
        rec = parse_output('[Meet(mention="met", entity=[], place=[],)]', tiny)
        assert rec.parse_status == "parse_error"
        assert rec.events == ()

    def test_positional_argument_fails(self, tiny):
        rec = parse_output('[Meet("met")]', tiny)
        assert rec.parse_status == "parse_error"

    def test_empty_call_fails(self, tiny):
        rec = parse_output("[Meet()]", tiny)
        assert rec.parse_status == "parse_error"

    def test_repeated_keyword_fails(self, tiny):
        rec = parse_output('[Meet(mention="met", entity=[], entity=[])]', tiny)
        assert rec.parse_status == "parse_error"
        assert "repeated" in rec.diagnostics[0]

    def test_unterminated_string_fails(self, tiny):
        rec = parse_output('[Meet(mention="met)]', tiny)
        assert rec.parse_status == "parse_error"

    def test_newline_inside_string_fails(self, tiny):
        rec = parse_output('[Meet(mention="m\net", entity=[], place=[])]', tiny)
        assert rec.parse_status == "parse_error"

    def test_prose_fails(self, tiny):
        rec = parse_output("No events found in this text.", tiny)
        assert rec.parse_status == "parse_error"

    def test_garbage_after_result_fails(self, tiny):
        rec = parse_output("[] and more", tiny)
        assert rec.parse_status == "parse_error"

    def test_nested_list_fails(self, tiny):
        rec = parse_output('[Meet(mention="met", entity=[["a"]], place=[])]', tiny)
        assert rec.parse_status == "parse_error"

    def test_never_raises_on_fuzz_smoke(self, tiny):
        for raw in ("", "[", "]", "(", "'", '"\\', "[Meet(", "\x00", "=,[]()"):
            rec = parse_output(raw, tiny)
            assert rec.parse_status in ("ok", "parse_error")


class TestEscapes:
    def test_supported_escapes(self, tiny):
        raw = '[Meet(mention="a\\n\\t\\"b\\\\", entity=["\\x41\\u00e9"], place=[])]'
        rec = parse_output(raw, tiny)
        assert rec.parse_status == "ok"
        assert rec.events[0].mention == 'a\n\t"b\\'
        assert rec.events[0].arguments["entity"] == ("Aé",)

    def test_single_quoted_strings(self, tiny):
        rec = parse_output("[Meet(mention='met', entity=['it\\'s'], place=[])]", tiny)
        assert rec.parse_status == "ok"
        assert rec.events[0].arguments["entity"] == ("it's",)

    def test_unknown_escape_fails(self, tiny):
        rec = parse_output('[Meet(mention="\\q", entity=[], place=[])]', tiny)
        assert rec.parse_status == "parse_error"
        assert "unsupported escape" in rec.diagnostics[0]

    def test_malformed_hex_escape_fails(self, tiny):
        rec = parse_output('[Meet(mention="\\xZZ", entity=[], place=[])]', tiny)
        assert rec.parse_status == "parse_error"


class TestWrappers:
    def test_result_prefix(self, tiny):
        rec = parse_output('result = [Meet(mention="met", entity=[], place=[])]', tiny)
        assert rec.parse_status == "ok"

    def test_fenced_block(self, tiny):
        raw = '```python\nresult = [Meet(mention="met", entity=[], place=[])]\n```'
        rec = parse_output(raw, tiny)
        assert rec.parse_status == "ok"

    def test_bare_fence(self, tiny):
        rec = parse_output("```\n[]\n```", tiny)
        assert rec.parse_status == "ok"


class TestValidation:
    def test_unknown_class_dropped_others_kept(self, tiny):
        raw = '[Bogus(mention="x"), Meet(mention="met", entity=[], place=[])]'
        rec = parse_output(raw, tiny)
        assert rec.parse_status == "validation_error"
        assert [ev.event_type for ev in rec.events] == ["Meet"]
        assert any("unknown class: Bogus" in d for d in rec.diagnostics)

    def test_missing_mention_drops_event(self, tiny):
        rec = parse_output("[Meet(entity=[], place=[])]", tiny)
        assert rec.parse_status == "validation_error"
        assert rec.events == ()
        assert any("missing mention" in d for d in rec.diagnostics)

    def test_list_mention_coerced(self, tiny):
        rec = parse_output('[Meet(mention=["met"], entity=[], place=[])]', tiny)
        assert rec.parse_status == "ok"
        assert rec.events[0].mention == "met"
        assert any("coerced" in d for d in rec.diagnostics)

    def test_multi_item_mention_rejected(self, tiny):
        rec = parse_output('[Meet(mention=["a", "b"], entity=[], place=[])]', tiny)
        assert rec.parse_status == "validation_error"
        assert rec.events == ()

    def test_hallucinated_keyword_kept(self, tiny):
        raw = '[Meet(mention="met", entity=[], place=[], judge=["x"])]'
        rec = parse_output(raw, tiny)
        assert rec.parse_status == "ok"
        assert any("hallucinated argument: judge" in d for d in rec.diagnostics)
        assert "judge" not in rec.events[0].arguments

    def test_string_role_value_coerced(self, tiny):
        rec = parse_output('[Meet(mention="met", entity="them", place=[])]', tiny)
        assert rec.parse_status == "ok"
        assert rec.events[0].arguments["entity"] == ("them",)
        assert any("coerced to list" in d for d in rec.diagnostics)

    def test_missing_role_is_diagnostic_not_error(self, tiny):
        rec = parse_output('[Meet(mention="met", entity=[])]', tiny)
        assert rec.parse_status == "ok"
        assert rec.events[0].arguments["place"] == ()
        assert any("missing argument: place" in d for d in rec.diagnostics)

    def test_all_roles_present_in_arguments(self, tiny):
        rec = parse_output('[Attack(mention="hit", target=["x"])]', tiny)
        assert set(rec.events[0].arguments) == {"attacker", "place", "target"}


class TestRecordIO:
    def test_round_trip(self, tiny, tmp_path):
        records = [
            parse_output('[Meet(mention="met", entity=["a"], place=[])]', tiny,
                         instance_id="1", prompted_type="Meet"),
            parse_output("oops", tiny, instance_id="1", prompted_type="Attack"),
            parse_output("[]", tiny, instance_id="2", prompted_type="Meet"),
        ]
        path = str(tmp_path / "parsed.jsonl")
        assert write_records(records, path) == 3
        again = read_records(path)
        assert [r.parse_status for r in again] == ["ok", "parse_error", "ok"]
        assert again[0].events == records[0].events
        assert again[0].diagnostics == records[0].diagnostics
        assert again[1].raw_text == "oops"


class TestAggregate:
    def test_merges_per_instance_and_dedups(self, tiny):
        a = parse_output('[Meet(mention="met", entity=["x"], place=[])]', tiny,
                         instance_id="1", prompted_type="Meet")
        b = parse_output('[Meet(mention="met", entity=["x"], place=[])]', tiny,
                         instance_id="1", prompted_type="Attack")
        c = parse_output('[Attack(mention="hit", attacker=[], place=[], target=[])]',
                         tiny, instance_id="1", prompted_type="Attack")
        merged = aggregate([a, b, c])
        assert set(merged) == {"1"}
        assert len(merged["1"]) == 2
        assert [ev.event_type for ev in merged["1"]] == ["Meet", "Attack"]

    def test_distinct_arguments_not_merged(self, tiny):
        a = parse_output('[Meet(mention="met", entity=["x"], place=[])]', tiny,
                         instance_id="1", prompted_type="Meet")
        b = parse_output('[Meet(mention="met", entity=["y"], place=[])]', tiny,
                         instance_id="1", prompted_type="Meet")
        merged = aggregate([a, b])
        assert len(merged["1"]) == 2
