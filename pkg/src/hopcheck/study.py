"""Single-hop human study: sampling, task views, submissions, scoring.

Bridge questions with span answers are sampled and served under two
conditions to disjoint annotator pools: "full" shows all ten context
paragraphs, "withheld" removes the gold paragraph that does NOT contain
the answer span, leaving nine. Submissions land in an append-only record
store and are scored per condition with the standard answer metrics.
"""

import json
import logging
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from hopcheck import kernels
from hopcheck.data import Paragraph, QAExample
from hopcheck.metrics import MetricsReport, answer_bearing_gold, score_pairs
from hopcheck.recordstore import RecordStore

log = logging.getLogger(__name__)

CONDITION_FULL = "full"
CONDITION_WITHHELD = "withheld"


class StudyError(ValueError):
    pass


class DuplicateSubmissionError(StudyError):
    pass


class UnknownTaskError(StudyError):
    pass


@dataclass(frozen=True)
class Study:
    study_id: str
    seed: int
    question_ids: tuple[str, ...]


@dataclass(frozen=True)
class TaskView:
    question_id: str
    question: str
    paragraphs: tuple[Paragraph, ...]
    condition: str


@dataclass(frozen=True)
class StudySubmission:
    study_id: str
    annotator_id: str
    question_id: str
    answer: str
    timestamp: float
    condition: str


def _eligible(example: QAExample) -> bool:
    return (
        example.qtype == "bridge"
        and example.answer.strip().lower() not in ("yes", "no")
        and len(example.gold_titles) == 2
        and answer_bearing_gold(example) is not None
    )


def create_study(dataset: list[QAExample], sample_size: int, seed: int,
                 study_id: str | None = None) -> Study:
    """Deterministic seeded sample of eligible bridge questions.

    Eligible means: bridge type, span answer, and exactly one
    identifiable answer-bearing gold paragraph (ineligible examples are
    reported and skipped before sampling).
    """
    eligible = [ex for ex in dataset if _eligible(ex)]
    skipped = [ex.id for ex in dataset if ex.qtype == "bridge" and not _eligible(ex)]
    if skipped:
        log.warning("%d bridge questions ineligible for the study (no answer-bearing gold "
                    "or yes/no answer): %s%s", len(skipped), ", ".join(skipped[:5]),
                    "..." if len(skipped) > 5 else "")
    if len(eligible) < sample_size:
        raise StudyError(
            f"need {sample_size} eligible bridge questions, found {len(eligible)}"
        )
    rng = random.Random(str(seed))
    sample = rng.sample(eligible, sample_size)
    return Study(
        study_id=study_id or f"study-{seed}-{sample_size}",
        seed=seed,
        question_ids=tuple(ex.id for ex in sample),
    )


def save_study(study: Study, path: str | Path) -> None:
    Path(path).write_text(json.dumps({
        "study_id": study.study_id,
        "seed": study.seed,
        "question_ids": list(study.question_ids),
    }, indent=1, sort_keys=True), encoding="utf-8")


def load_study(path: str | Path) -> Study:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return Study(
            study_id=str(raw["study_id"]),
            seed=int(raw["seed"]),
            question_ids=tuple(str(q) for q in raw["question_ids"]),
        )
    except KeyError as exc:
        raise StudyError(f"study file missing field {exc}") from exc


def _shuffled(paragraphs: list[Paragraph], seed: int, question_id: str, condition: str) -> tuple[Paragraph, ...]:
    rng = random.Random(f"{seed}:{question_id}:{condition}")
    order = list(paragraphs)
    rng.shuffle(order)
    return tuple(order)


def withheld_view(example: QAExample, seed: int = 0) -> TaskView:
    """Nine-paragraph view: the non-answer-bearing gold is removed."""
    if example.qtype != "bridge":
        raise StudyError(f"example {example.id}: withheld view needs a bridge question")
    if example.answer.strip().lower() in ("yes", "no"):
        raise StudyError(f"example {example.id}: withheld view needs a span answer")
    golds = example.gold_titles
    if len(golds) != 2:
        raise StudyError(f"example {example.id}: expected 2 gold paragraphs, found {len(golds)}")
    bearing = answer_bearing_gold(example)
    if bearing is None:
        raise StudyError(f"example {example.id}: no gold paragraph contains the answer")
    withheld_title = golds[0] if golds[1] == bearing else golds[1]
    kept = [p for p in example.context if p.title != withheld_title]
    return TaskView(
        question_id=example.id,
        question=example.question,
        paragraphs=_shuffled(kept, seed, example.id, CONDITION_WITHHELD),
        condition=CONDITION_WITHHELD,
    )


def full_view(example: QAExample, seed: int = 0) -> TaskView:
    """Ten-paragraph view: the full context, shuffled."""
    return TaskView(
        question_id=example.id,
        question=example.question,
        paragraphs=_shuffled(list(example.context), seed, example.id, CONDITION_FULL),
        condition=CONDITION_FULL,
    )


def task_view(example: QAExample, condition: str, seed: int) -> TaskView:
    if condition == CONDITION_FULL:
        return full_view(example, seed)
    if condition == CONDITION_WITHHELD:
        return withheld_view(example, seed)
    raise StudyError(f"unknown condition {condition!r}")


def condition_for(study: Study, annotator_id: str) -> str:
    """Stable pool assignment: the annotator id hashed with the study seed."""
    digest = kernels.fnv1a64(f"{study.seed}:{annotator_id}".encode("utf-8"))
    return CONDITION_FULL if digest % 2 == 0 else CONDITION_WITHHELD


class StudyService:
    """Serves tasks and records submissions for one study.

    Task issuance is idempotent: an annotator keeps getting the same
    question until they submit it. Submissions are validated against the
    issued task, rejected as duplicates on re-submission, and persisted
    through the record store so a restarted service resumes cleanly.
    """

    def __init__(self, study: Study, dataset: list[QAExample], store: RecordStore):
        self.study = study
        self.store = store
        self._examples = {ex.id: ex for ex in dataset}
        missing = [qid for qid in study.question_ids if qid not in self._examples]
        if missing:
            raise StudyError(f"study questions missing from the dataset: {missing[:5]}")
        self._lock = threading.Lock()
        self._submissions: dict[tuple[str, str], StudySubmission] = {}
        for record in store.load():
            if record.get("study_id") != study.study_id:
                log.warning("ignoring stored submission for foreign study %r", record.get("study_id"))
                continue
            submission = StudySubmission(
                study_id=record["study_id"],
                annotator_id=record["annotator_id"],
                question_id=record["question_id"],
                answer=record["answer"],
                timestamp=float(record["timestamp"]),
                condition=record["condition"],
            )
            key = (submission.annotator_id, submission.question_id)
            if key in self._submissions:
                log.warning("duplicate stored submission for %s, keeping the first", key)
                continue
            self._submissions[key] = submission

    def condition_for(self, annotator_id: str) -> str:
        return condition_for(self.study, annotator_id)

    def _pending_question(self, annotator_id: str) -> str | None:
        for qid in self.study.question_ids:
            if (annotator_id, qid) not in self._submissions:
                return qid
        return None

    def next_task(self, annotator_id: str) -> TaskView | None:
        """The annotator's current task, or None when the study is done."""
        if not annotator_id or not annotator_id.strip():
            raise StudyError("annotator id must be non-empty")
        with self._lock:
            qid = self._pending_question(annotator_id)
            if qid is None:
                return None
            return task_view(
                self._examples[qid],
                self.condition_for(annotator_id),
                self.study.seed,
            )

    def submit_answer(self, annotator_id: str, question_id: str, answer: str,
                      timestamp: float | None = None) -> StudySubmission:
        if not annotator_id or not annotator_id.strip():
            raise StudyError("annotator id must be non-empty")
        with self._lock:
            if question_id not in self.study.question_ids:
                raise UnknownTaskError(f"question {question_id!r} is not part of this study")
            if (annotator_id, question_id) in self._submissions:
                raise DuplicateSubmissionError(
                    f"annotator {annotator_id!r} already answered {question_id!r}"
                )
            pending = self._pending_question(annotator_id)
            if question_id != pending:
                raise UnknownTaskError(
                    f"question {question_id!r} was not issued to annotator {annotator_id!r} "
                    f"(current task: {pending!r})"
                )
            submission = StudySubmission(
                study_id=self.study.study_id,
                annotator_id=annotator_id,
                question_id=question_id,
                answer=answer,
                timestamp=time.time() if timestamp is None else timestamp,
                condition=self.condition_for(annotator_id),
            )
            self.store.append({
                "study_id": submission.study_id,
                "annotator_id": submission.annotator_id,
                "question_id": submission.question_id,
                "answer": submission.answer,
                "timestamp": submission.timestamp,
                "condition": submission.condition,
            })
            self._submissions[(annotator_id, question_id)] = submission
            return submission

    def submissions(self) -> list[StudySubmission]:
        return sorted(self._submissions.values(), key=lambda s: (s.timestamp, s.annotator_id, s.question_id))

    def results(self) -> dict:
        """Per-condition answer metrics plus unanswered-question counts."""
        out = {}
        for condition in (CONDITION_FULL, CONDITION_WITHHELD):
            subs = [s for s in self.submissions() if s.condition == condition]
            pairs = [(s.answer, self._examples[s.question_id].answer) for s in subs]
            answered = {s.question_id for s in subs}
            report: MetricsReport = score_pairs(pairs)
            out[condition] = {
                **report.as_dict(),
                "submissions": len(subs),
                "unanswered_questions": len(self.study.question_ids) - len(answered),
            }
        return out

    def progress(self) -> dict:
        subs = self.submissions()
        return {
            "study_id": self.study.study_id,
            "questions": len(self.study.question_ids),
            "submissions": len(subs),
            "annotators": len({s.annotator_id for s in subs}),
            "by_condition": {
                condition: sum(1 for s in subs if s.condition == condition)
                for condition in (CONDITION_FULL, CONDITION_WITHHELD)
            },
        }
