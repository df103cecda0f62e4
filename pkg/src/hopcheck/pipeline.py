"""Answer aggregation and evaluation runs.

Every context paragraph is scored independently; the paragraph with the
smallest y_empty supplies the answer, whose kind is the argmax of
(y_span, y_yes, y_no) with ties resolved span > yes > no.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from hopcheck.data import Paragraph, QAExample
from hopcheck.metrics import (
    MetricsReport,
    answer_bearing_gold,
    evaluate_predictions,
)
from hopcheck.scorer import ScorerOutput, lexical_baseline
from hopcheck.tfidf import InvertedIndex, top_k

log = logging.getLogger(__name__)

# Contract for per-paragraph scoring: (question_id, question, paragraph).
ParagraphScorer = Callable[[str, str, Paragraph], ScorerOutput]


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class PipelineAnswer:
    text: str
    source_paragraph: str
    kind: str  # "span" | "yes" | "no"
    selected_y_empty: float


@dataclass(frozen=True)
class OpenDomainConfig:
    num_retrieved: int = 10
    inject_gold: bool = False

    def __post_init__(self):
        if self.num_retrieved < 1:
            raise ValueError("num_retrieved must be >= 1")


@dataclass(frozen=True)
class EvalReport:
    metrics: MetricsReport
    per_type: dict[str, MetricsReport]
    predictions: dict[str, str]
    gold_retrieval_rate: float | None = None

    def as_dict(self) -> dict:
        out = {
            "overall": self.metrics.as_dict(),
            "per_type": {t: m.as_dict() for t, m in sorted(self.per_type.items())},
        }
        if self.gold_retrieval_rate is not None:
            out["gold_retrieval_rate"] = self.gold_retrieval_rate
        return out


def select_answer(scores: list[tuple[str, ScorerOutput]]) -> PipelineAnswer:
    """Pick the final answer from per-paragraph scorer outputs.

    The paragraph with the smallest y_empty wins (ties: lowest list
    index); its answer kind is the largest of (y_span, y_yes, y_no),
    ties resolved in that order.
    """
    if not scores:
        raise PipelineError("select_answer needs at least one scored paragraph")
    best_idx = 0
    for i in range(1, len(scores)):
        if scores[i][1].y_empty < scores[best_idx][1].y_empty:
            best_idx = i
    key, out = scores[best_idx]
    kinds = (("span", out.y_span), ("yes", out.y_yes), ("no", out.y_no))
    kind = max(kinds, key=lambda item: item[1])[0]  # max keeps the first of ties
    text = {"span": out.span_text, "yes": "yes", "no": "no"}[kind]
    return PipelineAnswer(
        text=text,
        source_paragraph=key,
        kind=kind,
        selected_y_empty=out.y_empty,
    )


def answer_example(example: QAExample, scorer: ParagraphScorer) -> PipelineAnswer:
    """Score every context paragraph independently, then select."""
    if not example.context:
        raise PipelineError(f"example {example.id} has no context paragraphs")
    scores = []
    for paragraph in example.context:
        try:
            scores.append((paragraph.title, scorer(example.id, example.question, paragraph)))
        except Exception as exc:
            raise PipelineError(
                f"scorer failed on paragraph '{paragraph.title}' of example {example.id}: {exc}"
            ) from exc
    return select_answer(scores)


def _map_examples(fn, dataset: list[QAExample], threads: int):
    if threads <= 1:
        return [fn(ex) for ex in dataset]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, dataset))


def _per_type_reports(predictions: Mapping[str, str], dataset: list[QAExample]) -> dict[str, MetricsReport]:
    out = {}
    for qtype in sorted({ex.qtype for ex in dataset}):
        subset = [ex for ex in dataset if ex.qtype == qtype]
        scoped = {ex.id: predictions[ex.id] for ex in subset if ex.id in predictions}
        out[qtype] = evaluate_predictions(scoped, subset)
    return out


def run_distractor_eval(dataset: list[QAExample], scorer: ParagraphScorer,
                        threads: int = 1) -> EvalReport:
    """Answer every example over its provided context and score the answers."""
    answers = _map_examples(lambda ex: answer_example(ex, scorer), dataset, threads)
    predictions = {ex.id: ans.text for ex, ans in zip(dataset, answers)}
    return EvalReport(
        metrics=evaluate_predictions(predictions, dataset),
        per_type=_per_type_reports(predictions, dataset),
        predictions=predictions,
    )


def run_open_domain(
    dataset: list[QAExample],
    index: InvertedIndex,
    corpus: Mapping[str, Paragraph],
    scorer: ParagraphScorer,
    config: OpenDomainConfig,
    threads: int = 1,
) -> EvalReport:
    """Retrieve candidate paragraphs per question, then answer as usual.

    With inject_gold, each example's gold paragraphs are appended when
    retrieval missed them (deduplicated by title), which forces the
    gold-retrieval rate to 1.0.
    """
    if index.doc_count == 0:
        raise PipelineError("open-domain evaluation needs a non-empty index")

    def answer_one(example: QAExample) -> tuple[str, bool]:
        retrieved = top_k(index, example.question, config.num_retrieved)
        keys: list[str] = []
        paragraphs: list[Paragraph] = []
        for key, _score in retrieved:
            if key in keys:
                continue
            para = corpus.get(key)
            if para is None:
                raise PipelineError(f"retrieved doc '{key}' missing from the corpus")
            keys.append(key)
            paragraphs.append(para)
        if config.inject_gold:
            for title in example.gold_titles:
                if title in keys:
                    continue
                try:
                    paragraphs.append(example.paragraph(title))
                    keys.append(title)
                except KeyError:
                    log.warning("example %s: gold paragraph %r not in context, cannot inject",
                                example.id, title)
        bearing = answer_bearing_gold(example)
        hit = bearing in keys if bearing is not None else any(t in keys for t in example.gold_titles)
        scores = []
        for paragraph in paragraphs:
            try:
                scores.append((paragraph.title, scorer(example.id, example.question, paragraph)))
            except Exception as exc:
                raise PipelineError(
                    f"scorer failed on paragraph '{paragraph.title}' of example {example.id}: {exc}"
                ) from exc
        return select_answer(scores).text, hit

    results = _map_examples(answer_one, dataset, threads)
    predictions = {ex.id: text for ex, (text, _) in zip(dataset, results)}
    hits = sum(1 for _, hit in results if hit)
    return EvalReport(
        metrics=evaluate_predictions(predictions, dataset),
        per_type=_per_type_reports(predictions, dataset),
        predictions=predictions,
        gold_retrieval_rate=hits / len(dataset) if dataset else 0.0,
    )


# Scorer factories ----------------------------------------------------------

def lexical_scorer() -> ParagraphScorer:
    """The overlap baseline wrapped in the per-paragraph contract."""
    return lambda _qid, question, paragraph: lexical_baseline(question, paragraph.text)


def external_scorer(scores: Mapping[tuple[str, str], ScorerOutput]) -> ParagraphScorer:
    """Replay scores produced elsewhere; missing pairs fail loudly."""

    def score(question_id: str, _question: str, paragraph: Paragraph) -> ScorerOutput:
        key = (question_id, paragraph.title)
        if key not in scores:
            raise PipelineError(f"no external score for question {question_id!r}, paragraph {paragraph.title!r}")
        return scores[key]

    return score


def head_scorer(provider, weights, config=None) -> ParagraphScorer:
    """Neural head over an embedding provider, in the per-paragraph contract."""
    from hopcheck.scorer import ScorerConfig, score_paragraph

    config = config or ScorerConfig()
    return lambda _qid, question, paragraph: score_paragraph(
        question, paragraph.text, provider, weights, config
    )


def gold_oracle_scorer(dataset: Iterable[QAExample]) -> ParagraphScorer:
    """Perfect-information scorer for harness tests.

    The answer-bearing gold paragraph (first gold as a fallback) gets
    y_empty 0 and the exact gold answer; every other paragraph gets
    y_empty 1.
    """
    examples = {ex.id: ex for ex in dataset}

    def score(question_id: str, _question: str, paragraph: Paragraph) -> ScorerOutput:
        example = examples.get(question_id)
        if example is None:
            raise PipelineError(f"oracle scorer knows no example {question_id!r}")
        bearing = answer_bearing_gold(example)
        if bearing is None:
            golds = example.gold_titles
            bearing = golds[0] if golds else paragraph.title
        answer = example.answer
        is_yes = answer.strip().lower() == "yes"
        is_no = answer.strip().lower() == "no"
        y_span = 1.0 if not (is_yes or is_no) else -1.0
        return ScorerOutput(
            y_span=y_span,
            y_yes=1.0 if is_yes else -1.0,
            y_no=1.0 if is_no else -1.0,
            y_empty=0.0 if paragraph.title == bearing else 1.0,
            span=(0, 0),
            span_text=answer,
        )

    return score
