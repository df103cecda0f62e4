"""Dataset model and IO for HotpotQA-format files.

A dataset file is a JSON list of records with fields `_id`, `question`,
`answer`, `type` ("bridge" | "comparison"), `level`, `supporting_facts`
(list of [title, sentence_index]) and `context` (list of
[title, [sentence, ...]]). A predictions file is a JSON object mapping
`_id` to an answer string.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)

QUESTION_TYPES = ("bridge", "comparison")


class DatasetError(ValueError):
    """Raised for malformed dataset or predictions files."""


@dataclass(frozen=True)
class Paragraph:
    title: str
    sentences: tuple[str, ...]

    @property
    def text(self) -> str:
        """Full paragraph text: the sentences concatenated in order."""
        return "".join(self.sentences)


@dataclass(frozen=True)
class QAExample:
    id: str
    question: str
    answer: str
    qtype: str
    level: str
    supporting_facts: tuple[tuple[str, int], ...]
    context: tuple[Paragraph, ...]
    flags: tuple[str, ...] = ()

    @property
    def gold_titles(self) -> tuple[str, ...]:
        """Distinct supporting-fact titles, in first-occurrence order."""
        seen: list[str] = []
        for title, _ in self.supporting_facts:
            if title not in seen:
                seen.append(title)
        return tuple(seen)

    def paragraph(self, title: str) -> Paragraph:
        for para in self.context:
            if para.title == title:
                return para
        raise KeyError(title)


def _require(record: dict, index: int, name: str):
    if name not in record:
        raise DatasetError(f"record {index}: missing field '{name}'")
    return record[name]


def _parse_example(record: dict, index: int) -> QAExample:
    if not isinstance(record, dict):
        raise DatasetError(f"record {index}: expected an object, got {type(record).__name__}")
    example_id = str(_require(record, index, "_id"))
    question = _require(record, index, "question")
    answer = _require(record, index, "answer")
    qtype = _require(record, index, "type")
    level = record.get("level", "")
    raw_sf = _require(record, index, "supporting_facts")
    raw_context = _require(record, index, "context")

    if qtype not in QUESTION_TYPES:
        raise DatasetError(f"record {index}: unknown question type '{qtype}'")

    context = []
    for entry in raw_context:
        try:
            title, sentences = entry
        except (TypeError, ValueError):
            raise DatasetError(f"record {index}: malformed context entry {entry!r}") from None
        if not title or not sentences:
            raise DatasetError(f"record {index}: context paragraph with empty title or sentences")
        context.append(Paragraph(title=str(title), sentences=tuple(str(s) for s in sentences)))

    flags = []
    supporting_facts = []
    titles = {p.title: p for p in context}
    for entry in raw_sf:
        try:
            title, sent_idx = entry
            sent_idx = int(sent_idx)
        except (TypeError, ValueError):
            raise DatasetError(f"record {index}: malformed supporting fact {entry!r}") from None
        supporting_facts.append((str(title), sent_idx))
        para = titles.get(str(title))
        if para is None:
            log.warning("record %d (%s): supporting-fact title %r absent from context", index, example_id, title)
            flags.append(f"missing_supporting_title:{title}")
        elif not 0 <= sent_idx < len(para.sentences):
            log.warning("record %d (%s): supporting-fact sentence index %d out of range for %r",
                        index, example_id, sent_idx, title)
            flags.append(f"supporting_index_out_of_range:{title}:{sent_idx}")

    distinct = {t for t, _ in supporting_facts}
    if len(distinct) != 2:
        log.warning("record %d (%s): expected 2 distinct gold titles, found %d", index, example_id, len(distinct))
        flags.append(f"gold_title_count:{len(distinct)}")

    return QAExample(
        id=example_id,
        question=str(question),
        answer=str(answer),
        qtype=qtype,
        level=str(level),
        supporting_facts=tuple(supporting_facts),
        context=tuple(context),
        flags=tuple(flags),
    )


def load_dataset(path: str | Path) -> list[QAExample]:
    """Load a dataset file, preserving record order.

    Malformed records raise DatasetError naming the record index; a
    supporting-fact title missing from the context only flags the example.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise DatasetError(f"{path}: expected a JSON list of records")
    return [_parse_example(record, i) for i, record in enumerate(raw)]


def save_dataset(examples: list[QAExample], path: str | Path) -> None:
    """Write examples back out in the dataset file schema."""
    records = []
    for ex in examples:
        records.append({
            "_id": ex.id,
            "question": ex.question,
            "answer": ex.answer,
            "type": ex.qtype,
            "level": ex.level,
            "supporting_facts": [[t, i] for t, i in ex.supporting_facts],
            "context": [[p.title, list(p.sentences)] for p in ex.context],
        })
    Path(path).write_text(json.dumps(records, ensure_ascii=False, indent=1, sort_keys=True), encoding="utf-8")


def load_predictions(path: str | Path) -> dict[str, str]:
    """Load an id -> answer mapping; duplicate ids are an error."""

    def _no_duplicates(pairs):
        out: dict[str, str] = {}
        for key, value in pairs:
            if key in out:
                raise DatasetError(f"{path}: duplicate prediction id '{key}'")
            out[key] = value
        return out

    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh, object_pairs_hook=_no_duplicates)
    if not isinstance(raw, dict):
        raise DatasetError(f"{path}: expected a JSON object mapping id to answer")
    return {str(k): str(v) for k, v in raw.items()}


def save_predictions(predictions: dict[str, str], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(predictions, ensure_ascii=False, indent=1, sort_keys=True),
        encoding="utf-8",
    )
