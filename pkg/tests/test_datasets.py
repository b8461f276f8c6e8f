"""Dataset loading and gold-answer parsing tests."""

import json
from fractions import Fraction

import pytest

from prove.answers import equivalent, normalize
from prove.datasets import (
    DatasetSpec,
    ProblemRecord,
    load_dataset,
    load_dataset_map,
    parse_gold_boxed,
    parse_gold_hash_marker,
    spec_for,
)
from prove.errors import (
    BoxedMissing,
    MalformedRecord,
    MarkerMissing,
    UnbalancedBraces,
    UnknownSubsetId,
)


def write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


ROWS = [
    {"id": "p1", "question": "What is 1+1?", "answer": "adding gives #### 2"},
    {"id": "p2", "question": "What is 2+2?", "answer": "so #### 4"},
    {"id": "p3", "question": "Cookies?", "answer": "#### 1,250"},
]


def lines_spec(path, **kw):
    return DatasetSpec(name="t", path=path, format="lines-of-json",
                       gold_rule="hash-marker", **kw)


def test_load_three_lines_in_order(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, ROWS)
    records = load_dataset(lines_spec(f))
    assert [r.id for r in records] == ["p1", "p2", "p3"]
    assert records[0].question == "What is 1+1?"
    assert records[0].gold.rational == 2
    assert records[2].gold.rational == 1250


def test_subset_filter_keeps_single_record(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, ROWS)
    records = load_dataset(lines_spec(f, subset_ids=("p2",)))
    assert len(records) == 1 and records[0].id == "p2"


def test_subset_preserves_file_order(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, ROWS)
    records = load_dataset(lines_spec(f, subset_ids=("p3", "p1")))
    assert [r.id for r in records] == ["p1", "p3"]


def test_missing_question_names_line_one(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, [{"answer": "#### 2"}] + ROWS)
    with pytest.raises(MalformedRecord) as err:
        load_dataset(lines_spec(f))
    assert err.value.line == 1
    assert "question" in str(err.value)


def test_invalid_json_names_its_line(tmp_path):
    f = tmp_path / "d.jsonl"
    f.write_text(json.dumps(ROWS[0]) + "\n{broken\n", encoding="utf-8")
    with pytest.raises(MalformedRecord) as err:
        load_dataset(lines_spec(f))
    assert err.value.line == 2


def test_unparseable_gold_rejected_not_dropped(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, ROWS + [{"id": "bad", "question": "Q", "answer": "no marker"}])
    with pytest.raises(MalformedRecord) as err:
        load_dataset(lines_spec(f))
    assert err.value.line == 4


def test_duplicate_id_rejected(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, [ROWS[0], ROWS[0]])
    with pytest.raises(MalformedRecord):
        load_dataset(lines_spec(f))


def test_unknown_subset_id(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, ROWS)
    with pytest.raises(UnknownSubsetId) as err:
        load_dataset(lines_spec(f, subset_ids=("p2", "ghost")))
    assert "ghost" in str(err.value)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(OSError):
        load_dataset(lines_spec(tmp_path / "absent.jsonl"))


def test_array_format_and_id_defaulting(tmp_path):
    f = tmp_path / "d.json"
    f.write_text(json.dumps([
        {"question": "Q0", "answer": "15"},
        {"question": "Q1", "answer": "0.5"},
    ]), encoding="utf-8")
    spec = DatasetSpec(name="t", path=f, format="single-json-array",
                       gold_rule="verbatim-field")
    records = load_dataset(spec)
    assert [r.id for r in records] == ["0", "1"]
    assert records[0].gold.rational == 15
    assert records[1].gold.decimal_value == Fraction(1, 2)


def test_boxed_gold_rule(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, [{"id": "m1", "question": "Q",
                     "answer": "minimize to get $\\boxed{10}$"}])
    spec = DatasetSpec(name="t", path=f, format="lines-of-json", gold_rule="boxed")
    assert load_dataset(spec)[0].gold.rational == 10


def test_round_trip_reload_identical(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, ROWS)
    first = load_dataset(lines_spec(f))
    g = tmp_path / "copy.jsonl"
    write_jsonl(g, [
        {"id": r.id, "question": r.question, "answer": r.gold_raw} for r in first
    ])
    second = load_dataset(lines_spec(g))
    assert [(r.id, r.question, r.gold_raw) for r in first] == [
        (r.id, r.question, r.gold_raw) for r in second
    ]
    assert first == [
        ProblemRecord(r.id, r.dataset, r.question, r.gold_raw, r.gold) for r in second
    ]


def test_two_loads_identical(tmp_path):
    f = tmp_path / "d.jsonl"
    write_jsonl(f, ROWS)
    assert load_dataset(lines_spec(f)) == load_dataset(lines_spec(f))


# ---------------------------------------------------------------------------
# gold parsers


def test_hash_marker_simple():
    assert parse_gold_hash_marker("some steps ... #### 15").rational == 15


def test_hash_marker_thousands_matches_normalize():
    got = parse_gold_hash_marker("so the total is #### 1,250")
    assert got == normalize("1,250")
    assert got.rational == 1250


def test_hash_marker_last_occurrence_wins():
    assert parse_gold_hash_marker("#### 3 revised: #### 7").rational == 7


def test_hash_marker_missing():
    with pytest.raises(MarkerMissing):
        parse_gold_hash_marker("no marker here")


def test_boxed_gold_paper_phrase():
    raw = "the minimum value of the function is $\\boxed{10}$"
    assert parse_gold_boxed(raw).rational == 10


def test_boxed_gold_fraction_equivalent_to_decimal():
    assert equivalent(parse_gold_boxed("\\boxed{\\frac{1}{2}}"), normalize("0.5"))


def test_boxed_gold_nested_outer_group():
    got = parse_gold_boxed("\\boxed{a+\\boxed{b}}")
    assert got.text == "a+\\boxed{b}"


def test_boxed_gold_missing_and_unbalanced():
    with pytest.raises(BoxedMissing):
        parse_gold_boxed("nothing here")
    with pytest.raises(UnbalancedBraces):
        parse_gold_boxed("\\boxed{1 + (")


# ---------------------------------------------------------------------------
# bundled dataset map


def test_bundled_map_covers_known_benchmarks():
    table = load_dataset_map()
    for name in ["gsm8k", "math500", "svamp", "asdiv", "multiarith",
                 "singleeq", "singleop", "addsub"]:
        assert name in table
        assert table[name]["format"] in ("lines-of-json", "single-json-array")
        assert table[name]["gold_rule"] in ("hash-marker", "boxed", "verbatim-field")


def test_spec_for_resolves_against_root(tmp_path):
    spec = spec_for("gsm8k", tmp_path)
    assert spec.gold_rule == "hash-marker"
    assert str(spec.path).startswith(str(tmp_path))
    with pytest.raises(ValueError):
        spec_for("nope", tmp_path)
