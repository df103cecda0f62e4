"""Single-paragraph scoring head over a pluggable token-embedding provider.

The head turns an h x L embedding matrix into four answer-kind logits
(span / yes / no / empty) via max-pooling plus a 4 x h linear map, and
into start/end span distributions via two h-vector projections and a
softmax. A lexical overlap baseline and an external-scores replay path
provide scorers that need no neural encoder at all.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from hopcheck import kernels
from hopcheck.questions import STOPWORDS

SEP = "[SEP]"

# Sentinel for answer kinds a scorer cannot produce.
NEG_INF = -1e9


class ScorerError(ValueError):
    """Raised for dimension mismatches and malformed scorer inputs."""


@dataclass(frozen=True)
class InputSequence:
    """[q_1..q_m, SEP, p_1..p_n] plus the offset of this chunk's first
    paragraph token within the full paragraph."""

    tokens: tuple[str, ...]
    question_len: int
    paragraph_len: int
    paragraph_offset: int = 0

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def sep_index(self) -> int:
        return self.question_len


@dataclass(frozen=True)
class ScorerConfig:
    max_seq_len: int = 300
    # Step between chunk starts; None means non-overlapping (the default
    # policy: stride equals the per-chunk paragraph capacity).
    stride: int | None = None


@dataclass(frozen=True)
class ScorerOutput:
    y_span: float
    y_yes: float
    y_no: float
    y_empty: float
    span: tuple[int, int]
    span_text: str


@dataclass(frozen=True)
class HeadWeights:
    h: int
    W1: np.ndarray  # (4, h): rows produce y_span, y_yes, y_no, y_empty
    W2: np.ndarray  # (h,): start-position projection
    W3: np.ndarray  # (h,): end-position projection

    def validate(self) -> None:
        if self.W1.shape != (4, self.h) or self.W2.shape != (self.h,) or self.W3.shape != (self.h,):
            raise ScorerError(
                f"inconsistent weight shapes for h={self.h}: "
                f"W1 {self.W1.shape}, W2 {self.W2.shape}, W3 {self.W3.shape}"
            )
        for name, arr in (("W1", self.W1), ("W2", self.W2), ("W3", self.W3)):
            if not np.all(np.isfinite(arr)):
                raise ScorerError(f"non-finite entries in {name}")


def load_weights(path: str | Path) -> HeadWeights:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        weights = HeadWeights(
            h=int(raw["h"]),
            W1=np.asarray(raw["W1"], dtype=float),
            W2=np.asarray(raw["W2"], dtype=float),
            W3=np.asarray(raw["W3"], dtype=float),
        )
    except KeyError as exc:
        raise ScorerError(f"weights file missing field {exc}") from exc
    weights.validate()
    return weights


def save_weights(weights: HeadWeights, path: str | Path) -> None:
    Path(path).write_text(json.dumps({
        "h": weights.h,
        "W1": weights.W1.tolist(),
        "W2": weights.W2.tolist(),
        "W3": weights.W3.tolist(),
    }), encoding="utf-8")


# A provider maps an InputSequence to an h x len(sequence) matrix.
EmbeddingProvider = Callable[[InputSequence], np.ndarray]


def build_input(question_tokens: list[str], paragraph_tokens: list[str],
                paragraph_offset: int = 0) -> InputSequence:
    """Merge question and paragraph into one lowercased sequence around SEP."""
    if not question_tokens:
        raise ScorerError("empty question")
    if not paragraph_tokens:
        raise ScorerError("empty paragraph")
    tokens = (
        tuple(t.lower() for t in question_tokens)
        + (SEP,)
        + tuple(t.lower() for t in paragraph_tokens)
    )
    return InputSequence(
        tokens=tokens,
        question_len=len(question_tokens),
        paragraph_len=len(paragraph_tokens),
        paragraph_offset=paragraph_offset,
    )


def chunk(sequence: InputSequence, config: ScorerConfig) -> list[InputSequence]:
    """Split an over-long sequence into non-overlapping paragraph pieces.

    Each chunk repeats the full question and SEP; with the default
    stride the chunks cover every paragraph token exactly once.
    """
    if len(sequence) <= config.max_seq_len:
        return [sequence]
    m = sequence.question_len
    capacity = config.max_seq_len - m - 1
    if capacity <= 0:
        raise ScorerError(
            f"max_seq_len {config.max_seq_len} cannot fit a question of {m} tokens plus SEP"
        )
    stride = capacity if config.stride is None else config.stride
    if stride < 1:
        raise ScorerError("stride must be >= 1")
    question = sequence.tokens[:m]
    paragraph = sequence.tokens[m + 1:]
    chunks = []
    for offset in range(0, len(paragraph), stride):
        piece = paragraph[offset:offset + capacity]
        chunks.append(InputSequence(
            tokens=question + (SEP,) + piece,
            question_len=m,
            paragraph_len=len(piece),
            paragraph_offset=sequence.paragraph_offset + offset,
        ))
    return chunks


def _check_matrix(matrix: np.ndarray, h: int, length: int) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (h, length):
        raise ScorerError(f"embedding matrix shape {matrix.shape}, expected {(h, length)}")
    return matrix


def classify(matrix: np.ndarray, W1: np.ndarray) -> tuple[float, float, float, float]:
    """Four answer-kind logits: W1 applied to the column-wise max-pool."""
    matrix = np.asarray(matrix, dtype=float)
    W1 = np.asarray(W1, dtype=float)
    if matrix.ndim != 2 or W1.shape != (4, matrix.shape[0]):
        raise ScorerError(f"classify dimension mismatch: S' {matrix.shape}, W1 {W1.shape}")
    pooled = matrix.max(axis=1)
    y = W1 @ pooled
    return float(y[0]), float(y[1]), float(y[2]), float(y[3])


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max subtraction)."""
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def span_distributions(matrix: np.ndarray, W2: np.ndarray, W3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start and end probability vectors over sequence positions."""
    matrix = np.asarray(matrix, dtype=float)
    W2 = np.asarray(W2, dtype=float)
    W3 = np.asarray(W3, dtype=float)
    if matrix.ndim != 2 or W2.shape != (matrix.shape[0],) or W3.shape != (matrix.shape[0],):
        raise ScorerError(
            f"span projection mismatch: S' {matrix.shape}, W2 {W2.shape}, W3 {W3.shape}"
        )
    return softmax(W2 @ matrix), softmax(W3 @ matrix)


def best_span(p_start, p_end, lo: int = 0, hi: int | None = None) -> tuple[int, int]:
    """Span (i, j), i <= j, maximizing p_start[i] * p_end[j] inside [lo, hi].

    Ties break toward the smallest i, then the smallest j. O(L) running
    argmax; the valid range defaults to the whole vector.
    """
    p_start = np.ascontiguousarray(p_start, dtype="<f8")
    p_end = np.ascontiguousarray(p_end, dtype="<f8")
    if p_start.shape != p_end.shape or p_start.ndim != 1:
        raise ScorerError("p_start and p_end must be 1-d vectors of equal length")
    if hi is None:
        hi = len(p_start) - 1
    if not 0 <= lo <= hi < len(p_start):
        raise ScorerError(f"empty or out-of-range span window [{lo}, {hi}]")
    i, j = kernels.best_span(p_start, p_end, lo, hi)
    return int(i), int(j)


def score_paragraph(
    question: str,
    paragraph: str,
    provider: EmbeddingProvider,
    weights: HeadWeights,
    config: ScorerConfig = ScorerConfig(),
) -> ScorerOutput:
    """Score one (question, paragraph) pair with the neural head.

    Long inputs are chunked; the chunk with the smallest y_empty wins.
    The span argmax is restricted to paragraph positions and reported in
    original paragraph token offsets, with span_text rebuilt from the
    original paragraph tokens.
    """
    weights.validate()
    question_tokens = question.split()
    paragraph_tokens = paragraph.split()
    sequence = build_input(question_tokens, paragraph_tokens)
    best: ScorerOutput | None = None
    for piece in chunk(sequence, config):
        matrix = _check_matrix(provider(piece), weights.h, len(piece))
        y_span, y_yes, y_no, y_empty = classify(matrix, weights.W1)
        p_start, p_end = span_distributions(matrix, weights.W2, weights.W3)
        lo = piece.sep_index + 1
        i, j = best_span(p_start, p_end, lo, len(piece) - 1)
        start = i - lo + piece.paragraph_offset
        end = j - lo + piece.paragraph_offset
        if best is None or y_empty < best.y_empty:
            best = ScorerOutput(
                y_span=y_span,
                y_yes=y_yes,
                y_no=y_no,
                y_empty=y_empty,
                span=(start, end),
                span_text=" ".join(paragraph_tokens[start:end + 1]),
            )
    assert best is not None
    return best


def lexical_baseline(question: str, paragraph: str) -> ScorerOutput:
    """Overlap-count scorer: no neural weights, runs the pipeline end to end.

    Windows of 1..10 paragraph tokens score by how many question content
    tokens occur within 15 tokens of the window. Ties prefer the window
    holding more question tokens itself, then the tightest window, then
    the earliest, so a window containing the question terms adjacently
    beats both its neighbors and looser supersets. y_empty is the negated
    best score, so paragraphs with more question overlap look more
    answer-bearing.
    """
    from hopcheck.metrics import normalize_answer

    paragraph_tokens = paragraph.split()
    norm_tokens = [normalize_answer(t) for t in paragraph_tokens]
    question_content = {t for t in normalize_answer(question).split() if t not in STOPWORDS}

    n = len(paragraph_tokens)
    best_key = (0, -1, 0, 0)
    best_window = (0, 0)
    for start in range(n):
        for length in range(1, 11):
            end = start + length - 1
            if end >= n:
                break
            nearby = set(norm_tokens[max(0, start - 15):end + 16])
            score = len(question_content & nearby)
            inside = len(question_content & set(norm_tokens[start:end + 1]))
            key = (score, inside, -length, -start)
            if key > best_key:
                best_key = key
                best_window = (start, end)
    best_score = best_key[0]
    start, end = best_window
    span_text = " ".join(paragraph_tokens[start:end + 1]) if n else ""
    return ScorerOutput(
        y_span=float(best_score),
        y_yes=NEG_INF,
        y_no=NEG_INF,
        y_empty=-float(best_score),
        span=best_window,
        span_text=span_text,
    )


_SCORE_FIELDS = ("question_id", "paragraph_key", "y_span", "y_yes", "y_no",
                 "y_empty", "span_start", "span_end", "span_text")


def load_external_scores(path: str | Path) -> dict[tuple[str, str], ScorerOutput]:
    """Read a JSONL scores file into a (question_id, paragraph_key) mapping.

    Every record must carry all nine fields; duplicate pairs are an error.
    """
    scores: dict[tuple[str, str], ScorerOutput] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScorerError(f"{path}:{lineno + 1}: not valid JSON: {exc}") from exc
            for name in _SCORE_FIELDS:
                if name not in rec:
                    raise ScorerError(f"{path}:{lineno + 1}: missing field '{name}'")
            key = (str(rec["question_id"]), str(rec["paragraph_key"]))
            if key in scores:
                raise ScorerError(f"{path}:{lineno + 1}: duplicate scores for {key}")
            scores[key] = ScorerOutput(
                y_span=float(rec["y_span"]),
                y_yes=float(rec["y_yes"]),
                y_no=float(rec["y_no"]),
                y_empty=float(rec["y_empty"]),
                span=(int(rec["span_start"]), int(rec["span_end"])),
                span_text=str(rec["span_text"]),
            )
    return scores


def save_external_scores(scores: dict[tuple[str, str], ScorerOutput], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (question_id, paragraph_key), out in scores.items():
            fh.write(json.dumps({
                "question_id": question_id,
                "paragraph_key": paragraph_key,
                "y_span": out.y_span,
                "y_yes": out.y_yes,
                "y_no": out.y_no,
                "y_empty": out.y_empty,
                "span_start": out.span[0],
                "span_end": out.span[1],
                "span_text": out.span_text,
            }, ensure_ascii=False) + "\n")


def hashed_provider(h: int) -> EmbeddingProvider:
    """Deterministic toy embedding provider for tests and demos.

    Each token's column is drawn from an RNG seeded by the token's hash,
    so providers built with the same h agree across processes. Not a
    language model; exists so the neural code path can run standalone.
    """
    cache: dict[str, np.ndarray] = {}

    def column(token: str) -> np.ndarray:
        col = cache.get(token)
        if col is None:
            rng = np.random.default_rng(kernels.fnv1a64(token.encode("utf-8")))
            col = rng.standard_normal(h)
            cache[token] = col
        return col

    def provider(sequence: InputSequence) -> np.ndarray:
        return np.column_stack([column(t) for t in sequence.tokens])

    return provider
