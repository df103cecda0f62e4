import json
import math

import numpy as np
import pytest

from hopcheck.scorer import (
    NEG_INF,
    SEP,
    HeadWeights,
    InputSequence,
    ScorerConfig,
    ScorerError,
    best_span,
    build_input,
    chunk,
    classify,
    hashed_provider,
    lexical_baseline,
    load_external_scores,
    load_weights,
    save_external_scores,
    save_weights,
    score_paragraph,
    softmax,
    span_distributions,
)
from hopcheck.scorer import ScorerOutput


def brute_best_span(p_start, p_end, lo, hi):
    """O(L^2) reference maximizer with the same tie-break."""
    sub = np.outer(p_start[lo:hi + 1], p_end[lo:hi + 1])
    sub = np.where(np.triu(np.ones(sub.shape, dtype=bool)), sub, -np.inf)
    flat = int(np.argmax(sub))  # first occurrence = smallest i, then smallest j
    i, j = divmod(flat, sub.shape[1])
    return lo + i, lo + j


# build_input / chunk --------------------------------------------------------

def test_build_input_layout():
    seq = build_input(["a"], ["b"])
    assert seq.tokens == ("a", SEP, "b")
    assert seq.question_len == 1 and seq.paragraph_len == 1
    assert seq.sep_index == 1


def test_build_input_lowercases():
    seq = build_input(["What", "Animal"], ["The", "Bonobo"])
    assert seq.tokens == ("what", "animal", SEP, "the", "bonobo")


def test_build_input_length_arithmetic():
    q = "What is the former name of the animal?".split()
    p = "The bonobo formerly called the pygmy chimpanzee".split()
    seq = build_input(q, p)
    assert len(seq) == len(q) + len(p) + 1


def test_build_input_rejects_empty():
    with pytest.raises(ScorerError):
        build_input([], ["x"])
    with pytest.raises(ScorerError):
        build_input(["x"], [])


def test_chunk_boundary_single():
    seq = build_input(["q"] * 10, ["p"] * 289)
    assert len(seq) == 300
    assert chunk(seq, ScorerConfig(300)) == [seq]


def test_chunk_partition_covers_once():
    seq = build_input(["q"] * 10, ["p"] * 600)
    pieces = chunk(seq, ScorerConfig(300))
    assert [p.paragraph_len for p in pieces] == [289, 289, 22]
    assert [p.paragraph_offset for p in pieces] == [0, 289, 578]
    assert all(len(p) <= 300 for p in pieces)
    assert all(p.tokens[:10] == seq.tokens[:10] and p.tokens[10] == SEP for p in pieces)


def test_chunk_tiny_paragraph():
    seq = build_input(["q"] * 3, ["p"])
    assert chunk(seq, ScorerConfig(300)) == [seq]


def test_chunk_question_too_long():
    seq = build_input(["q"] * 300, ["p"] * 10)
    with pytest.raises(ScorerError, match="max_seq_len"):
        chunk(seq, ScorerConfig(300))


def test_chunk_overlapping_stride():
    seq = build_input(["q"], ["p"] * 6)
    pieces = chunk(seq, ScorerConfig(max_seq_len=5, stride=2))
    assert [p.paragraph_offset for p in pieces] == [0, 2, 4]
    assert all(len(p) <= 5 for p in pieces)
    covered = set()
    for p in pieces:
        covered.update(range(p.paragraph_offset, p.paragraph_offset + p.paragraph_len))
    assert covered == set(range(6))


# classify / span distributions ---------------------------------------------

H2_S = np.array([[1.0, 0.0], [0.0, 2.0]])
H2_W1 = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.0]])


def test_classify_zero_weights():
    assert classify(np.ones((3, 4)), np.zeros((4, 3))) == (0.0, 0.0, 0.0, 0.0)


def test_classify_hand_fixture():
    assert classify(H2_S, H2_W1) == pytest.approx((1.0, 2.0, 3.0, -1.0), abs=1e-9)


def test_classify_single_column():
    col = np.array([[0.3], [-0.7]])
    assert classify(col, H2_W1) == pytest.approx((0.3, -0.7, -0.4, -0.3), abs=1e-12)


def test_classify_monotone_under_column_append():
    rng = np.random.default_rng(11)
    for _ in range(50):
        h, length = int(rng.integers(1, 6)), int(rng.integers(1, 8))
        matrix = rng.standard_normal((h, length))
        extra = rng.standard_normal((h, 1))
        before = matrix.max(axis=1)
        after = np.hstack([matrix, extra]).max(axis=1)
        assert (after >= before - 1e-15).all()


def test_classify_dimension_mismatch():
    with pytest.raises(ScorerError):
        classify(np.ones((3, 2)), np.ones((4, 2)))


def test_span_distributions_uniform():
    p_start, _ = span_distributions(np.ones((2, 5)), np.zeros(2), np.ones(2))
    assert p_start == pytest.approx(np.full(5, 0.2), abs=1e-12)


def test_span_distributions_hand_softmax():
    # logits (0, ln 3) -> probabilities (0.25, 0.75)
    matrix = np.array([[0.0, math.log(3.0)]])
    p_start, p_end = span_distributions(matrix, np.array([1.0]), np.array([1.0]))
    assert p_start == pytest.approx([0.25, 0.75], abs=1e-9)
    assert p_end == pytest.approx([0.25, 0.75], abs=1e-9)


def test_softmax_shift_invariance():
    rng = np.random.default_rng(5)
    logits = rng.standard_normal(20)
    assert softmax(logits + 123.456) == pytest.approx(softmax(logits), abs=1e-12)


def test_softmax_sums_to_one_random():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        logits = rng.standard_normal(int(rng.integers(1, 50))) * float(rng.integers(1, 100))
        probs = softmax(logits)
        assert abs(probs.sum() - 1.0) < 1e-9
        assert (probs > 0).all()


# best_span -------------------------------------------------------------------

def test_best_span_fixture():
    assert best_span([0.7, 0.2, 0.1], [0.1, 0.2, 0.7]) == (0, 2)


def test_best_span_single_index():
    assert best_span([0.4, 0.6], [0.5, 0.5], lo=1, hi=1) == (1, 1)


def test_best_span_uniform_tie_break():
    assert best_span([0.25] * 4, [0.25] * 4) == (0, 0)
    assert best_span([0.25] * 4, [0.25] * 4, lo=2, hi=3) == (2, 2)


def test_best_span_empty_range():
    with pytest.raises(ScorerError):
        best_span([0.5], [0.5], lo=1, hi=1)


def test_best_span_matches_brute_force():
    rng = np.random.default_rng(23)
    for trial in range(1000):
        n = int(rng.integers(1, 60))
        p_start = rng.random(n)
        p_end = rng.random(n)
        if trial % 3 == 0:
            p_start = np.round(p_start, 1)
            p_end = np.round(p_end, 1)
        lo = int(rng.integers(0, n))
        hi = int(rng.integers(lo, n))
        assert best_span(p_start, p_end, lo, hi) == brute_best_span(p_start, p_end, lo, hi)


def test_best_span_zero_heavy_inputs():
    # degenerate vectors full of exact zeros exercise every tie-break path
    rng = np.random.default_rng(31)
    for _ in range(500):
        n = int(rng.integers(1, 20))
        p_start = np.where(rng.random(n) < 0.6, 0.0, rng.random(n))
        p_end = np.where(rng.random(n) < 0.6, 0.0, rng.random(n))
        lo = int(rng.integers(0, n))
        hi = int(rng.integers(lo, n))
        assert best_span(p_start, p_end, lo, hi) == brute_best_span(p_start, p_end, lo, hi)


# score_paragraph -------------------------------------------------------------

def fixed_provider(matrix_by_offset):
    def provider(seq: InputSequence) -> np.ndarray:
        return np.asarray(matrix_by_offset[seq.paragraph_offset], dtype=float)
    return provider


def test_score_paragraph_hand_composed():
    question = "which animal"
    paragraph = "bonobo pygmy chimpanzee"
    matrix = np.array([
        [0.5, 0.1, 0.0, 1.0, 0.2, 0.3],
        [0.0, 0.4, 0.0, 0.1, 2.0, 0.5],
    ])
    weights = HeadWeights(h=2, W1=H2_W1, W2=np.array([1.0, 0.0]), W3=np.array([0.0, 1.0]))
    out = score_paragraph(question, paragraph, fixed_provider({0: matrix}), weights)
    assert (out.y_span, out.y_yes, out.y_no, out.y_empty) == pytest.approx(
        (1.0, 2.0, 3.0, -1.0), abs=1e-9
    )
    # hand softmax over row 0 / row 1, argmax over paragraph positions 3..5
    exp_start = np.exp(matrix[0] - matrix[0].max())
    exp_end = np.exp(matrix[1] - matrix[1].max())
    p_start, p_end = exp_start / exp_start.sum(), exp_end / exp_end.sum()
    assert brute_best_span(p_start, p_end, 3, 5) == (3, 4)
    assert out.span == (0, 1)
    assert out.span_text == "bonobo pygmy"


def test_score_paragraph_chunk_argmin():
    # h=1: y_empty equals the max embedding value; W2=W3 make spans trivial
    weights = HeadWeights(
        h=1,
        W1=np.array([[0.0], [0.0], [0.0], [1.0]]),
        W2=np.array([1.0]),
        W3=np.array([1.0]),
    )
    matrices = {
        0: np.array([[0.5, 0.1, 0.9, 0.2]]),   # chunk 1: y_empty 0.9
        2: np.array([[0.05, 0.02, 0.1, 0.04]]),  # chunk 2: y_empty 0.1
    }
    out = score_paragraph(
        "q", "p0 p1 p2 p3",
        fixed_provider(matrices), weights, ScorerConfig(max_seq_len=4),
    )
    assert out.y_empty == pytest.approx(0.1)
    assert out.span == (2, 2)
    assert out.span_text == "p2"


def test_score_paragraph_deterministic():
    provider = hashed_provider(4)
    rng = np.random.default_rng(2)
    weights = HeadWeights(h=4, W1=rng.standard_normal((4, 4)),
                          W2=rng.standard_normal(4), W3=rng.standard_normal(4))
    a = score_paragraph("what is this", "some words to score here", provider, weights)
    b = score_paragraph("what is this", "some words to score here", provider, weights)
    assert a == b


def test_score_paragraph_offsets_in_paragraph():
    provider = hashed_provider(3)
    rng = np.random.default_rng(4)
    weights = HeadWeights(h=3, W1=rng.standard_normal((4, 3)),
                          W2=rng.standard_normal(3), W3=rng.standard_normal(3))
    paragraph = " ".join(f"tok{i}" for i in range(700))
    out = score_paragraph("what tok3", paragraph, provider, weights, ScorerConfig(300))
    start, end = out.span
    assert 0 <= start <= end < 700
    assert out.span_text == " ".join(paragraph.split()[start:end + 1])


def test_provider_shape_mismatch():
    weights = HeadWeights(h=2, W1=np.zeros((4, 2)), W2=np.zeros(2), W3=np.zeros(2))
    bad_provider = lambda seq: np.zeros((3, len(seq)))
    with pytest.raises(ScorerError, match="shape"):
        score_paragraph("q", "p", bad_provider, weights)


# lexical baseline ------------------------------------------------------------

def test_lexical_baseline_dominant_window():
    out = lexical_baseline(
        "who founded the zephyr institute",
        "unrelated words here but the zephyr institute was founded by quill",
    )
    tokens = out.span_text.split()
    assert "zephyr" in tokens or "institute" in tokens or "founded" in tokens
    assert out.y_span > 0
    assert out.y_empty == -out.y_span
    assert out.y_yes == NEG_INF and out.y_no == NEG_INF


def test_lexical_baseline_zero_overlap():
    out = lexical_baseline("who founded the zephyr institute", "completely different words")
    assert out.y_empty == 0.0
    assert out.y_span == 0.0


def test_lexical_baseline_tie_earliest():
    out = lexical_baseline("find zephyr", "zephyr one two three four five zephyr")
    assert out.span[0] == 0


def test_lexical_baseline_empty_paragraph():
    out = lexical_baseline("anything", "")
    assert out.span_text == ""
    assert out.y_span == 0.0


# weights / external scores IO ------------------------------------------------

def test_weights_round_trip(tmp_path):
    weights = HeadWeights(h=2, W1=H2_W1, W2=np.array([1.0, 0.0]), W3=np.array([0.0, 1.0]))
    path = tmp_path / "weights.json"
    save_weights(weights, path)
    loaded = load_weights(path)
    assert loaded.h == 2
    assert np.array_equal(loaded.W1, weights.W1)
    assert np.array_equal(loaded.W2, weights.W2)


def test_weights_shape_validation(tmp_path):
    path = tmp_path / "weights.json"
    path.write_text(json.dumps({"h": 2, "W1": [[1, 2, 3]], "W2": [1, 2], "W3": [1, 2]}))
    with pytest.raises(ScorerError):
        load_weights(path)


def _score_fixture():
    return {
        ("q1", "Paragraph A"): ScorerOutput(1.0, -1.0, -2.0, 0.05, (0, 1), "pygmy chimpanzee"),
        ("q1", "Paragraph B"): ScorerOutput(0.5, -1.0, -2.0, 0.90, (2, 2), "reserve"),
    }


def test_external_scores_round_trip(tmp_path):
    path = tmp_path / "scores.jsonl"
    save_external_scores(_score_fixture(), path)
    assert load_external_scores(path) == _score_fixture()


def test_external_scores_missing_field(tmp_path):
    path = tmp_path / "scores.jsonl"
    record = {
        "question_id": "q1", "paragraph_key": "P", "y_span": 1.0, "y_yes": 0.0,
        "y_no": 0.0, "span_start": 0, "span_end": 0, "span_text": "x",
    }
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(ScorerError, match="y_empty"):
        load_external_scores(path)


def test_external_scores_duplicate_pair(tmp_path):
    path = tmp_path / "scores.jsonl"
    record = {
        "question_id": "q1", "paragraph_key": "P", "y_span": 1.0, "y_yes": 0.0,
        "y_no": 0.0, "y_empty": 0.1, "span_start": 0, "span_end": 0, "span_text": "x",
    }
    path.write_text(json.dumps(record) + "\n" + json.dumps(record) + "\n")
    with pytest.raises(ScorerError, match="duplicate"):
        load_external_scores(path)
