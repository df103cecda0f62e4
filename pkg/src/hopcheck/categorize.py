"""Rule-based categorization of comparison questions.

Identifies which of ten discrete operations a comparison question
performs (numerical: IsGreater/IsSmaller/WhichIsGreater/WhichIsSmaller,
logical: And/Or/WhichIsTrue, string: IsEqual/NotEqual/Intersection) and
maps the operation onto a hop category: numerical operations always need
multiple paragraphs, And/Or/IsEqual/NotEqual depend on the context, and
WhichIsTrue/Intersection are answerable from one paragraph.
"""

import json
import string
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from hopcheck.data import QAExample
from hopcheck.metrics import MetricsReport, score_pairs
from hopcheck.questions import WH_WORDS, YESNO_OPENERS, is_yesno_question


class ComparisonOperation(Enum):
    IS_GREATER = "IsGreater"
    IS_SMALLER = "IsSmaller"
    WHICH_IS_GREATER = "WhichIsGreater"
    WHICH_IS_SMALLER = "WhichIsSmaller"
    AND = "And"
    OR = "Or"
    WHICH_IS_TRUE = "WhichIsTrue"
    IS_EQUAL = "IsEqual"
    NOT_EQUAL = "NotEqual"
    INTERSECTION = "Intersection"


class HopCategory(Enum):
    MULTI_HOP = "MultiHop"
    CONTEXT_DEPENDENT = "ContextDependent"
    SINGLE_HOP = "SingleHop"
    UNCATEGORIZED = "Uncategorized"


GREATER_KEYWORDS = frozenset(
    "more most later last latest longer larger younger newer taller higher".split()
)
SMALLER_KEYWORDS = frozenset(
    "less earlier earliest first shorter smaller older closer".split()
)
_STRING_COMPARISON_TOKENS = frozenset("same different differ differs difference".split())

_HOP_OF_OPERATION = {
    ComparisonOperation.IS_GREATER: HopCategory.MULTI_HOP,
    ComparisonOperation.IS_SMALLER: HopCategory.MULTI_HOP,
    ComparisonOperation.WHICH_IS_GREATER: HopCategory.MULTI_HOP,
    ComparisonOperation.WHICH_IS_SMALLER: HopCategory.MULTI_HOP,
    ComparisonOperation.AND: HopCategory.CONTEXT_DEPENDENT,
    ComparisonOperation.OR: HopCategory.CONTEXT_DEPENDENT,
    ComparisonOperation.IS_EQUAL: HopCategory.CONTEXT_DEPENDENT,
    ComparisonOperation.NOT_EQUAL: HopCategory.CONTEXT_DEPENDENT,
    ComparisonOperation.WHICH_IS_TRUE: HopCategory.SINGLE_HOP,
    ComparisonOperation.INTERSECTION: HopCategory.SINGLE_HOP,
}

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)

# Function words allowed inside a multi-word title entity.
_ENTITY_GLUE = frozenset("the a an of de la le du von van der den el".split())

_QUESTION_PREFIX = (
    frozenset(w for w in WH_WORDS) | YESNO_OPENERS | {"either", "both", "of", "between"}
)


class EntityExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class ComparisonEntities:
    entity1: str
    entity2: str
    source: str  # "annotation" | "coordination_heuristic"


@dataclass(frozen=True)
class CoordinationInfo:
    coordination: str  # "or" | "and" | "none"
    preconjunct: str  # "either" | "both" | "none"
    head_entity: str | None


def _clean_tokens(question: str) -> list[str]:
    return question.lower().translate(_PUNCT_TABLE).split()


def _earliest_keyword(tokens: Sequence[str]) -> str | None:
    """'greater' or 'smaller' for the first comparison keyword, else None.

    Whole-token matching, earliest occurrence wins when both lists match.
    """
    for token in tokens:
        if token in GREATER_KEYWORDS:
            return "greater"
        if token in SMALLER_KEYWORDS:
            return "smaller"
    return None


def _split_coordination(question: str) -> tuple[str, str, str] | None:
    """(left, conjunction, right) around the first ' or ' / ' and '."""
    lower = question.lower()
    positions = []
    for conj in ("or", "and"):
        pos = lower.find(f" {conj} ")
        if pos >= 0:
            positions.append((0 if conj == "or" else 1, pos, conj))
    if not positions:
        return None
    # Prefer "or" (choice questions) over "and" when both occur.
    _, pos, conj = min(positions)
    return question[:pos], conj, question[pos + len(conj) + 2:]


def _strip_outer(text: str) -> str:
    return text.strip().strip(".,!?;:").strip()


def _is_capitalized(token: str) -> bool:
    clean = token.strip(string.punctuation)
    return bool(clean) and (clean[0].isupper() or clean[0].isdigit())


def _cap_run_forward(tokens: list[str]) -> list[str]:
    """Longest initial run of capitalized tokens glued by function words."""
    out: list[str] = []
    for i, token in enumerate(tokens):
        clean = token.strip(string.punctuation).lower()
        if not clean:
            break
        if _is_capitalized(token):
            out.append(token)
        elif clean in _ENTITY_GLUE and (out or (i + 1 < len(tokens) and _is_capitalized(tokens[i + 1]))):
            out.append(token)
        else:
            break
    while out and out[-1].strip(string.punctuation).lower() in _ENTITY_GLUE:
        out.pop()
    # A leading article stays ("the Memory of Our People"); other glue does not.
    while out and out[0].strip(string.punctuation).lower() in (_ENTITY_GLUE - {"the", "a", "an"}):
        out.pop(0)
    return out


def _left_conjunct(left: str) -> str:
    """Entity candidate ending at the conjunction."""
    left = _strip_outer(left)
    if "," in left:
        return _strip_outer(left.rsplit(",", 1)[1])
    tokens = left.split()
    while tokens and tokens[0].lower().strip(string.punctuation) in _QUESTION_PREFIX:
        tokens.pop(0)
    # Walk back from the conjunction over the capitalized run.
    run: list[str] = []
    for token in reversed(tokens):
        clean = token.strip(string.punctuation).lower()
        if _is_capitalized(token):
            run.insert(0, token)
        elif clean in _ENTITY_GLUE and run:
            run.insert(0, token)
        else:
            break
    while run and run[0].strip(string.punctuation).lower() in (_ENTITY_GLUE - {"the", "a", "an"}):
        run.pop(0)
    if run:
        return " ".join(run)
    return " ".join(tokens)


def _right_conjunct(right: str) -> str:
    """Entity candidate starting right after the conjunction."""
    right = _strip_outer(right)
    if "," in right:
        right = right.split(",", 1)[0]
    tokens = right.split()
    run = _cap_run_forward(tokens)
    if run:
        return _strip_outer(" ".join(run))
    return _strip_outer(" ".join(tokens))


def _refine_with_support(candidate: str, supporting: Sequence[str]) -> str:
    """Shorten a candidate until it appears in the supporting sentences."""
    if not supporting:
        return candidate
    haystack = " ".join(supporting).lower()
    words = candidate.split()
    for end in range(len(words), 0, -1):
        prefix = " ".join(words[:end]).strip(string.punctuation + " ")
        if prefix and prefix.lower() in haystack:
            return prefix
    return candidate


def extract_entities(
    question: str,
    supporting_sentences: Sequence[str] = (),
    annotation: tuple[str, str] | None = None,
) -> ComparisonEntities:
    """The two entities a comparison question compares.

    An explicit annotation wins; otherwise the question's top-level
    "X or Y" / "X and Y" coordination is split and each conjunct trimmed
    to its noun phrase (checked against the supporting sentences when
    given). No coordination and no annotation is an extraction failure.
    """
    if annotation is not None:
        e1, e2 = annotation
        if not e1 or not e2 or e1 == e2:
            raise EntityExtractionError(f"bad entity annotation {annotation!r}")
        return ComparisonEntities(entity1=e1, entity2=e2, source="annotation")
    split = _split_coordination(question)
    if split is None:
        raise EntityExtractionError(f"no coordination found in {question!r}")
    left, _conj, right = split
    entity1 = _refine_with_support(_left_conjunct(left), supporting_sentences)
    entity2 = _refine_with_support(_right_conjunct(right), supporting_sentences)
    if not entity1 or not entity2 or entity1 == entity2:
        raise EntityExtractionError(
            f"could not split distinct conjuncts in {question!r} (got {entity1!r}, {entity2!r})"
        )
    return ComparisonEntities(entity1=entity1, entity2=entity2, source="coordination_heuristic")


def _conjunction_between(question: str, e1: str, e2: str) -> str:
    """The conjunction joining the two entities, or between tokens anywhere."""
    lower = question.lower()
    p1, p2 = lower.find(e1.lower()), lower.find(e2.lower())
    if p1 >= 0 and p2 >= 0 and p1 != p2:
        if p1 > p2:
            p1, p2, e1, e2 = p2, p1, e2, e1
        between = f" {lower[p1 + len(e1):p2].strip()} "
        if " or " in between:
            return "or"
        if " and " in between:
            return "and"
    tokens = _clean_tokens(question)
    if "or" in tokens:
        return "or"
    if "and" in tokens:
        return "and"
    return "none"


def find_head_entity(question: str, e1: str, e2: str) -> str | None:
    """Marker for choose-between-the-entities questions, None otherwise.

    Exists when the question's first wh-token is who/which and the two
    entities are alternatives joined by "or" (the expected answer is one
    of them). Returns the questioned noun ("writer" for "Which writer
    ...") or the wh-word itself.
    """
    tokens = question.split()
    wh_token = None
    wh_index = -1
    for i, token in enumerate(tokens):
        clean = token.lower().strip(string.punctuation)
        if clean.startswith(WH_WORDS):
            wh_token, wh_index = clean, i
            break
    if wh_token not in ("who", "which"):
        return None
    if _conjunction_between(question, e1, e2) != "or":
        return None
    if wh_token == "which" and wh_index + 1 < len(tokens):
        nxt = tokens[wh_index + 1].lower().strip(string.punctuation)
        if nxt and nxt not in YESNO_OPENERS:
            return nxt
    return wh_token


def _coordination_info(question: str, e1: str, e2: str) -> CoordinationInfo:
    coordination = _conjunction_between(question, e1, e2)
    tokens = _clean_tokens(question)
    if coordination == "or" and "either" in tokens:
        preconjunct = "either"
    elif coordination == "and" and "both" in tokens:
        preconjunct = "both"
    else:
        preconjunct = "none"
    return CoordinationInfo(
        coordination=coordination,
        preconjunct=preconjunct,
        head_entity=find_head_entity(question, e1, e2),
    )


def detect_coordination(question: str, e1: str, e2: str) -> CoordinationInfo:
    """Coordination, preconjunct and head entity for two located entities.

    Unlike the tolerant path used by categorize, this raises when either
    entity cannot be found in the question text.
    """
    lower = question.lower()
    for entity in (e1, e2):
        if entity.lower() not in lower:
            raise EntityExtractionError(f"entity {entity!r} not found in question")
    return _coordination_info(question, e1, e2)


def _asks_property_in_common(question: str, tokens: Sequence[str]) -> bool:
    for i in range(len(tokens) - 1):
        if tokens[i] == "in" and tokens[i + 1] == "common":
            return True
    wh = None
    for token in question.split():
        clean = token.lower().strip(string.punctuation)
        if clean.startswith(WH_WORDS):
            wh = clean
            break
    return wh in ("what", "which") and "both" in tokens


def categorize(question: str, entity1: str, entity2: str) -> ComparisonOperation | None:
    """Identify the question's comparison operation; None if uncategorizable.

    Total over arbitrary strings: falls through to None rather than
    raising. Comparison keywords match whole tokens, case-insensitively,
    with the earliest occurrence deciding greater-vs-smaller conflicts.
    """
    tokens = _clean_tokens(question)
    info = _coordination_info(question, entity1, entity2)
    keyword = _earliest_keyword(tokens)
    if keyword == "greater":
        return ComparisonOperation.WHICH_IS_GREATER if info.head_entity else ComparisonOperation.IS_GREATER
    if keyword == "smaller":
        return ComparisonOperation.WHICH_IS_SMALLER if info.head_entity else ComparisonOperation.IS_SMALLER
    if info.head_entity:
        return ComparisonOperation.WHICH_IS_TRUE
    yesno = is_yesno_question(question)
    if not yesno and _asks_property_in_common(question, tokens):
        return ComparisonOperation.INTERSECTION
    if yesno:
        if any(t in _STRING_COMPARISON_TOKENS for t in tokens):
            return ComparisonOperation.IS_EQUAL if "same" in tokens else ComparisonOperation.NOT_EQUAL
        if info.coordination == "or":
            return ComparisonOperation.OR
        # No either/or marker: default to both-semantics (And); flagged
        # downstream when the coordination was missing entirely.
        return ComparisonOperation.AND
    return None


def operation_to_hop_category(operation: ComparisonOperation | None) -> HopCategory:
    if operation is None:
        return HopCategory.UNCATEGORIZED
    return _HOP_OF_OPERATION[operation]


@dataclass(frozen=True)
class CategoryReport:
    rows: tuple[dict, ...]
    bridge_skipped: int
    fractions_all: dict[str, float]
    fractions_categorized: dict[str, float]
    per_category_metrics: dict[str, MetricsReport] | None

    def as_dict(self) -> dict:
        out = {
            "questions": list(self.rows),
            "bridge_skipped": self.bridge_skipped,
            "fractions_all": self.fractions_all,
            "fractions_categorized": self.fractions_categorized,
        }
        if self.per_category_metrics is not None:
            out["per_category_f1"] = {
                cat: report.as_dict() for cat, report in sorted(self.per_category_metrics.items())
            }
        return out


def categorize_dataset(
    dataset: list[QAExample],
    entity_annotations: Mapping[str, tuple[str, str]] | None = None,
    predictions: Mapping[str, str] | None = None,
) -> CategoryReport:
    """Operation and hop category for every comparison question.

    Category fractions are reported against two denominators: all
    comparison questions, and only the categorized ones. With a
    predictions mapping, per-hop-category answer metrics are added.
    """
    entity_annotations = entity_annotations or {}
    rows = []
    bridge_skipped = 0
    for example in dataset:
        if example.qtype != "comparison":
            bridge_skipped += 1
            continue
        supporting = _supporting_sentences(example)
        flags = []
        operation = None
        entities = None
        try:
            entities = extract_entities(
                example.question,
                supporting,
                annotation=entity_annotations.get(example.id),
            )
        except EntityExtractionError as exc:
            flags.append(f"extraction_failed:{exc}")
        if entities is not None:
            operation = categorize(example.question, entities.entity1, entities.entity2)
            info = _coordination_info(example.question, entities.entity1, entities.entity2)
            if operation is ComparisonOperation.AND and info.coordination == "none":
                flags.append("defaulted_to_and_without_coordination")
        rows.append({
            "id": example.id,
            "question": example.question,
            "entity1": entities.entity1 if entities else None,
            "entity2": entities.entity2 if entities else None,
            "entity_source": entities.source if entities else None,
            "operation": operation.value if operation else None,
            "hop_category": operation_to_hop_category(operation).value,
            "label": "",  # free-text slot for human annotations
            "flags": flags,
        })

    counts: dict[str, int] = {}
    for row in rows:
        counts[row["hop_category"]] = counts.get(row["hop_category"], 0) + 1
    total = len(rows)
    categorized = total - counts.get(HopCategory.UNCATEGORIZED.value, 0)
    fractions_all = {cat: n / total for cat, n in sorted(counts.items())} if total else {}
    fractions_categorized = {
        cat: n / categorized
        for cat, n in sorted(counts.items())
        if cat != HopCategory.UNCATEGORIZED.value
    } if categorized else {}

    per_category_metrics = None
    if predictions is not None:
        per_category_metrics = {}
        by_category: dict[str, list[QAExample]] = {}
        comparison = {row["id"]: row["hop_category"] for row in rows}
        for example in dataset:
            category = comparison.get(example.id)
            if category is not None:
                by_category.setdefault(category, []).append(example)
        for category, examples in sorted(by_category.items()):
            per_category_metrics[category] = score_pairs(
                (predictions.get(ex.id, ""), ex.answer) for ex in examples
            )

    return CategoryReport(
        rows=tuple(rows),
        bridge_skipped=bridge_skipped,
        fractions_all=fractions_all,
        fractions_categorized=fractions_categorized,
        per_category_metrics=per_category_metrics,
    )


def _supporting_sentences(example: QAExample) -> list[str]:
    sentences = []
    for title, idx in example.supporting_facts:
        try:
            para = example.paragraph(title)
        except KeyError:
            continue
        if 0 <= idx < len(para.sentences):
            sentences.append(para.sentences[idx])
    return sentences


def load_entity_annotations(path: str | Path) -> dict[str, tuple[str, str]]:
    """JSONL of {question_id, entity1, entity2} records."""
    out: dict[str, tuple[str, str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out[str(rec["question_id"])] = (str(rec["entity1"]), str(rec["entity2"]))
            except (json.JSONDecodeError, KeyError) as exc:
                raise EntityExtractionError(f"{path}:{lineno + 1}: bad entity record: {exc}") from exc
    return out
