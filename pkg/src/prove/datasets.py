"""Benchmark loading: files of problems into records with canonical golds."""

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from prove.answers import AnswerValue, boxed_groups, normalize
from prove.errors import (
    BoxedMissing,
    EmptyInput,
    MalformedRecord,
    MarkerMissing,
    UnbalancedBraces,
    UnknownSubsetId,
    ValueUnparseable,
)

LINES_OF_JSON = "lines-of-json"
SINGLE_JSON_ARRAY = "single-json-array"
FORMATS = (LINES_OF_JSON, SINGLE_JSON_ARRAY)

HASH_MARKER = "hash-marker"
BOXED = "boxed"
VERBATIM_FIELD = "verbatim-field"
GOLD_RULES = (HASH_MARKER, BOXED, VERBATIM_FIELD)

GOLD_MARKER = "#### "


@dataclass(frozen=True)
class ProblemRecord:
    id: str
    dataset: str
    question: str
    gold_raw: str
    gold: AnswerValue


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: Path
    format: str
    gold_rule: str
    subset_ids: Optional[tuple] = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}")
        if self.gold_rule not in GOLD_RULES:
            raise ValueError(f"unknown gold rule {self.gold_rule!r}")


def parse_gold_hash_marker(raw: str) -> AnswerValue:
    """Value after the last '#### ' marker, normalized."""
    at = raw.rfind(GOLD_MARKER)
    if at < 0:
        raise MarkerMissing(f"no {GOLD_MARKER.strip()!r} marker in gold text")
    tail = raw[at + len(GOLD_MARKER):].strip()
    try:
        return normalize(tail)
    except EmptyInput:
        raise ValueUnparseable("empty value after gold marker") from None


def parse_gold_boxed(raw: str) -> AnswerValue:
    r"""Content of the last balanced \boxed{} group, normalized."""
    if "\\boxed" not in raw and "\\fbox" not in raw:
        raise BoxedMissing("no \\boxed group in gold text")
    groups = boxed_groups(raw)
    if not groups:
        raise UnbalancedBraces("\\boxed group never closes")
    try:
        return normalize(groups[-1])
    except EmptyInput:
        raise ValueUnparseable("\\boxed group is empty") from None


def _parse_gold(raw: str, rule: str) -> AnswerValue:
    if rule == HASH_MARKER:
        return parse_gold_hash_marker(raw)
    if rule == BOXED:
        return parse_gold_boxed(raw)
    try:
        return normalize(raw)
    except EmptyInput:
        raise ValueUnparseable("empty gold value") from None


def _record_from_object(obj, position: int, spec: DatasetSpec, default_id: str) -> ProblemRecord:
    if not isinstance(obj, dict):
        raise MalformedRecord(position, "record is not a JSON object")
    if "question" not in obj:
        raise MalformedRecord(position, "missing the question field")
    if "answer" not in obj:
        raise MalformedRecord(position, "missing the answer field")
    question, answer = obj["question"], obj["answer"]
    if not isinstance(question, str) or not isinstance(answer, str):
        raise MalformedRecord(position, "question and answer must be strings")
    record_id = obj.get("id", default_id)
    if not isinstance(record_id, str):
        raise MalformedRecord(position, "id must be a string")
    try:
        gold = _parse_gold(answer, spec.gold_rule)
    except (MarkerMissing, BoxedMissing, UnbalancedBraces, ValueUnparseable) as exc:
        raise MalformedRecord(position, f"gold answer unusable: {exc}") from exc
    return ProblemRecord(
        id=record_id,
        dataset=spec.name,
        question=question,
        gold_raw=answer,
        gold=gold,
    )


def _iter_objects(spec: DatasetSpec):
    text = Path(spec.path).read_text(encoding="utf-8")
    if spec.format == LINES_OF_JSON:
        index = 0
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
            yield line_no, index, obj
            index += 1
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(1, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(data, list):
            raise MalformedRecord(1, "top level is not a JSON array")
        for index, obj in enumerate(data):
            yield index + 1, index, obj


def load_dataset(spec: DatasetSpec) -> list:
    """Read every record in file order, then apply the optional id subset."""
    records = []
    seen = set()
    for position, index, obj in _iter_objects(spec):
        record = _record_from_object(obj, position, spec, default_id=str(index))
        if record.id in seen:
            raise MalformedRecord(position, f"duplicate id {record.id!r}")
        seen.add(record.id)
        records.append(record)
    if spec.subset_ids is not None:
        wanted = set(spec.subset_ids)
        missing = wanted - seen
        if missing:
            raise UnknownSubsetId(
                "subset ids not in dataset: " + ", ".join(sorted(missing))
            )
        records = [r for r in records if r.id in wanted]
    return records


def load_dataset_map(path: Optional[Path] = None) -> dict:
    """Bundled (or user-supplied) map of dataset name -> format/gold_rule/path."""
    if path is None:
        text = resources.files("prove").joinpath("data/datasets.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return json.loads(text)


def spec_for(name: str, data_root: Path, subset_ids=None,
             dataset_map: Optional[dict] = None) -> DatasetSpec:
    table = dataset_map if dataset_map is not None else load_dataset_map()
    if name not in table:
        raise ValueError(f"unknown dataset {name!r}; known: {', '.join(sorted(table))}")
    entry = table[name]
    return DatasetSpec(
        name=name,
        path=Path(data_root) / entry["path"],
        format=entry["format"],
        gold_rule=entry["gold_rule"],
        subset_ids=tuple(subset_ids) if subset_ids is not None else None,
    )
