"""Answer normalization and EM/F1 scoring (SQuAD-style token overlap).

Scores are kept in [0, 1]; render *100 when comparing against published
leaderboard-style numbers.
"""

import logging
import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from hopcheck.data import QAExample

log = logging.getLogger(__name__)

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation, drop articles, collapse whitespace."""
    text = text.lower()
    text = text.translate(_PUNCT_TABLE)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def _tokens(text: str) -> list[str]:
    return normalize_answer(text).split()


def answer_f1(prediction: str, gold: str) -> tuple[float, float, float]:
    """Token-multiset (f1, precision, recall) over normalized tokens.

    Both token lists empty scores 1.0; exactly one empty scores 0.0.
    """
    pred = _tokens(prediction)
    gold_t = _tokens(gold)
    if not pred and not gold_t:
        return 1.0, 1.0, 1.0
    if not pred or not gold_t:
        return 0.0, 0.0, 0.0
    common = sum((Counter(pred) & Counter(gold_t)).values())
    if common == 0:
        return 0.0, 0.0, 0.0
    precision = common / len(pred)
    recall = common / len(gold_t)
    f1 = 2 * precision * recall / (precision + recall)
    return f1, precision, recall


def answer_em(prediction: str, gold: str) -> bool:
    return normalize_answer(prediction) == normalize_answer(gold)


@dataclass(frozen=True)
class MetricsReport:
    em: float
    f1: float
    precision: float
    recall: float
    count: int

    def as_dict(self) -> dict:
        return {
            "em": self.em,
            "f1": self.f1,
            "precision": self.precision,
            "recall": self.recall,
            "count": self.count,
        }


EMPTY_REPORT = MetricsReport(em=0.0, f1=0.0, precision=0.0, recall=0.0, count=0)


def score_pairs(pairs: Iterable[tuple[str, str]]) -> MetricsReport:
    """Macro-average EM/F1 over (prediction, gold) pairs."""
    em_sum = f1_sum = p_sum = r_sum = 0.0
    count = 0
    for prediction, gold in pairs:
        f1, precision, recall = answer_f1(prediction, gold)
        em_sum += float(answer_em(prediction, gold))
        f1_sum += f1
        p_sum += precision
        r_sum += recall
        count += 1
    if count == 0:
        return EMPTY_REPORT
    return MetricsReport(
        em=em_sum / count,
        f1=f1_sum / count,
        precision=p_sum / count,
        recall=r_sum / count,
        count=count,
    )


def answer_bearing_gold(example: QAExample) -> str | None:
    """Title of the gold paragraph whose text contains the answer.

    Decided by normalized substring match. None for yes/no answers or
    when no gold paragraph matches. If both golds match, the one with
    more supporting-fact sentences containing the answer wins, then the
    lexicographically first title.
    """
    answer = normalize_answer(example.answer)
    if not answer or example.answer.strip().lower() in ("yes", "no"):
        return None
    matches = []
    for title in example.gold_titles:
        try:
            para = example.paragraph(title)
        except KeyError:
            continue
        if answer in normalize_answer(para.text):
            matches.append(title)
    if not matches:
        return None
    if len(matches) == 1:
        return matches[0]

    def sentence_hits(title: str) -> int:
        para = example.paragraph(title)
        hits = 0
        for fact_title, idx in example.supporting_facts:
            if fact_title == title and 0 <= idx < len(para.sentences):
                if answer in normalize_answer(para.sentences[idx]):
                    hits += 1
        return hits

    matches.sort(key=lambda t: (-sentence_hits(t), t))
    return matches[0]


def evaluate_predictions(predictions: Mapping[str, str], dataset: list[QAExample]) -> MetricsReport:
    """Macro-average EM/F1 of predictions against the dataset golds.

    Dataset ids missing from the predictions count as empty predictions
    and are logged. Ids in the predictions but not the dataset are ignored.
    """
    unknown = set(predictions) - {ex.id for ex in dataset}
    if unknown:
        log.warning("%d prediction ids not in the dataset (ignored)", len(unknown))
    missing = [ex.id for ex in dataset if ex.id not in predictions]
    if missing:
        log.warning("%d examples without a prediction, scored as empty: %s%s",
                    len(missing), ", ".join(missing[:5]), "..." if len(missing) > 5 else "")
    return score_pairs((predictions.get(ex.id, ""), ex.answer) for ex in dataset)
