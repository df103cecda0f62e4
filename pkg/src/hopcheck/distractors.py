"""Distractor candidate pools and the three selection strategies.

Candidates come from TF-IDF retrieval over a first-paragraph corpus with
the gold paragraphs removed. Selection is either the plain retrieval
ranking (tfidf), the candidates a scorer finds most answer-bearing
(adversarial: smallest y_empty), or the adversarial pick restricted to
candidates whose entity type matches the golds (adversarial_typed).
"""

import json
import logging
import random
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

from hopcheck.data import Paragraph, QAExample
from hopcheck.pipeline import ParagraphScorer
from hopcheck.tfidf import InvertedIndex, top_k

log = logging.getLogger(__name__)

METHOD_TFIDF = "tfidf"
METHOD_ADVERSARIAL = "adversarial"
METHOD_ADVERSARIAL_TYPED = "adversarial_typed"

DEFAULT_POOL_SIZE = 50
DEFAULT_DISTRACTOR_COUNT = 8

ENTITY_TAGS = ("person", "organization", "location", "work", "animal", "other")


class DistractorError(ValueError):
    pass


@dataclass(frozen=True)
class CandidatePool:
    question_id: str
    question: str
    candidates: tuple[tuple[str, Paragraph, float], ...]  # (key, paragraph, retrieval score)
    requested: int
    flagged: bool

    def keys(self) -> list[str]:
        return [key for key, _, _ in self.candidates]


@dataclass(frozen=True)
class DistractorSet:
    question_id: str
    method: str
    paragraphs: tuple[str, ...]
    flagged: bool


def candidate_pool(
    example: QAExample,
    index: InvertedIndex,
    corpus: Mapping[str, Paragraph],
    n: int = DEFAULT_POOL_SIZE,
) -> CandidatePool:
    """Top-n retrieval for the question with the gold paragraphs removed.

    Retrieval order is preserved; the pool is flagged when fewer than n
    candidates are available.
    """
    if index.doc_count == 0:
        raise DistractorError("candidate pool needs a non-empty index")
    golds = set(example.gold_titles)
    # Over-fetch so dropping the golds still leaves n candidates.
    ranked = top_k(index, example.question, n + len(golds))
    candidates = []
    for key, score in ranked:
        if key in golds or len(candidates) >= n:
            continue
        para = corpus.get(key)
        if para is None:
            raise DistractorError(f"retrieved doc '{key}' missing from the corpus")
        candidates.append((key, para, score))
    return CandidatePool(
        question_id=example.id,
        question=example.question,
        candidates=tuple(candidates),
        requested=n,
        flagged=len(candidates) < n,
    )


def select_tfidf(pool: CandidatePool, m: int = DEFAULT_DISTRACTOR_COUNT) -> DistractorSet:
    """The original selection: the m best-retrieved candidates."""
    keys = pool.keys()[:m]
    return DistractorSet(
        question_id=pool.question_id,
        method=METHOD_TFIDF,
        paragraphs=tuple(keys),
        flagged=len(keys) < m,
    )


def adversarial_select(
    pool: CandidatePool,
    scorer: ParagraphScorer,
    m: int = DEFAULT_DISTRACTOR_COUNT,
    method: str = METHOD_ADVERSARIAL,
) -> DistractorSet:
    """Keep the m candidates the scorer finds most answer-bearing.

    Every candidate is scored; the m smallest y_empty win, with ties
    going to the better retrieval rank.
    """
    if not pool.candidates:
        raise DistractorError(f"empty candidate pool for question {pool.question_id}")
    scored = []
    for rank, (key, paragraph, _score) in enumerate(pool.candidates):
        try:
            out = scorer(pool.question_id, pool.question, paragraph)
        except Exception as exc:
            raise DistractorError(
                f"scorer failed on candidate '{key}' for question {pool.question_id}: {exc}"
            ) from exc
        scored.append((out.y_empty, rank, key))
    scored.sort(key=lambda item: (item[0], item[1]))
    keys = [key for _, _, key in scored[:m]]
    return DistractorSet(
        question_id=pool.question_id,
        method=method,
        paragraphs=tuple(keys),
        flagged=len(keys) < m,
    )


def type_filter(
    pool: CandidatePool,
    gold_types: set[str],
    annotations: Mapping[str, str],
) -> CandidatePool:
    """Retain candidates whose entity type is among the gold types.

    Unannotated candidates count as "other" (logged). Order is preserved;
    the result is flagged when it shrank below the requested size.
    """
    kept = []
    for key, paragraph, score in pool.candidates:
        tag = annotations.get(key)
        if tag is None:
            log.warning("candidate %r has no entity annotation, treating as 'other'", key)
            tag = "other"
        if tag in gold_types:
            kept.append((key, paragraph, score))
    return replace(
        pool,
        candidates=tuple(kept),
        flagged=len(kept) < pool.requested,
    )


def distractor_overlap(a: DistractorSet, b: DistractorSet) -> float:
    """Jaccard overlap of the two key sets; 1.0 when both are equal."""
    if a.question_id != b.question_id:
        raise DistractorError(
            f"overlap across different questions: {a.question_id!r} vs {b.question_id!r}"
        )
    sa, sb = set(a.paragraphs), set(b.paragraphs)
    union = sa | sb
    if not union:
        return 1.0
    return len(sa & sb) / len(union)


def overlap_report(sets_a: list[DistractorSet], sets_b: list[DistractorSet]) -> dict:
    """Macro (mean per-question Jaccard) and micro (pooled counts) overlap."""
    by_id = {d.question_id: d for d in sets_b}
    per_question = []
    inter_total = union_total = 0
    for da in sets_a:
        db = by_id.get(da.question_id)
        if db is None:
            continue
        per_question.append(distractor_overlap(da, db))
        sa, sb = set(da.paragraphs), set(db.paragraphs)
        inter_total += len(sa & sb)
        union_total += len(sa | sb)
    return {
        "count": len(per_question),
        "macro": sum(per_question) / len(per_question) if per_question else 0.0,
        "micro": inter_total / union_total if union_total else 0.0,
    }


def rebuild_example(
    example: QAExample,
    distractor_set: DistractorSet,
    paragraphs: Mapping[str, Paragraph],
    seed: int,
) -> QAExample:
    """New example whose context is the golds plus the given distractors.

    Context order is shuffled deterministically from (seed, example id);
    supporting facts are untouched.
    """
    golds = set(example.gold_titles)
    overlap = golds & set(distractor_set.paragraphs)
    if overlap:
        raise DistractorError(f"distractors overlap gold paragraphs: {sorted(overlap)}")
    context = [example.paragraph(title) for title in example.gold_titles]
    for key in distractor_set.paragraphs:
        para = paragraphs.get(key)
        if para is None:
            raise DistractorError(f"distractor paragraph '{key}' not available")
        context.append(para)
    rng = random.Random(f"{seed}:{example.id}")
    rng.shuffle(context)
    return QAExample(
        id=example.id,
        question=example.question,
        answer=example.answer,
        qtype=example.qtype,
        level=example.level,
        supporting_facts=example.supporting_facts,
        context=tuple(context),
    )


# Entity-type annotations ----------------------------------------------------

_TAG_WORDS = (
    ("person", frozenset("born actor actress singer writer author politician "
                         "musician player professor she he her his".split())),
    ("organization", frozenset("company corporation founded organization university "
                               "band team agency newspaper studio".split())),
    ("work", frozenset("film album novel song magazine television series book "
                       "opera sitcom".split())),
    ("location", frozenset("city town village country located river mountain "
                           "island region reserve park commune islet refuge".split())),
    ("animal", frozenset("species genus animal mammal bird fish reptile ape "
                         "primate breed".split())),
)


def naive_entity_type(title: str, text: str) -> str:
    """Keyword-heuristic entity tag for a paragraph's title entity.

    A desk-scale stand-in for a real NER tagger; not faithful to any
    trained system. Use an annotations file for serious runs.
    """
    tokens = set(re.findall(r"[a-z]+", text.lower()[:400]))
    tokens |= {t[:-1] for t in tokens if t.endswith("s")}
    for tag, words in _TAG_WORDS:
        if tokens & words:
            return tag
    if len(title.split()) == 2 and all(t[:1].isupper() for t in title.split()):
        return "person"
    return "other"


def gold_entity_types(example: QAExample, annotations: Mapping[str, str]) -> set[str]:
    """Entity tags of the two gold paragraphs' title entities."""
    types = set()
    for title in example.gold_titles:
        tag = annotations.get(title)
        if tag is None:
            try:
                tag = naive_entity_type(title, example.paragraph(title).text)
            except KeyError:
                tag = "other"
        types.add(tag)
    return types


def load_paragraph_annotations(path: str | Path) -> dict[str, str]:
    """JSONL of {paragraph_key, entity_type} records."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out[str(rec["paragraph_key"])] = str(rec["entity_type"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise DistractorError(f"{path}:{lineno + 1}: bad annotation record: {exc}") from exc
    return out


def save_paragraph_annotations(annotations: Mapping[str, str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(annotations):
            fh.write(json.dumps(
                {"paragraph_key": key, "entity_type": annotations[key]},
                ensure_ascii=False,
            ) + "\n")


def load_distractor_sets(path: str | Path) -> list[DistractorSet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out.append(DistractorSet(
                    question_id=str(rec["question_id"]),
                    method=str(rec["method"]),
                    paragraphs=tuple(str(k) for k in rec["paragraphs"]),
                    flagged=bool(rec.get("flagged", False)),
                ))
            except (json.JSONDecodeError, KeyError) as exc:
                raise DistractorError(f"{path}:{lineno + 1}: bad distractor record: {exc}") from exc
    return out


def save_distractor_sets(sets: list[DistractorSet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in sets:
            fh.write(json.dumps({
                "question_id": d.question_id,
                "method": d.method,
                "paragraphs": list(d.paragraphs),
                "flagged": d.flagged,
            }, ensure_ascii=False) + "\n")
