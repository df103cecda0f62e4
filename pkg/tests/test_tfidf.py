import math
import random
from collections import Counter

import pytest

from hopcheck.tfidf import (
    DEFAULT_NUM_BINS,
    IndexFormatError,
    InvertedIndex,
    bin_counts,
    build_index,
    featurize,
    load_corpus,
    load_index,
    save_index,
    tokenize,
    top_k,
)

NUM_BINS = 1 << 16  # small bin space keeps toy tests fast and collision-aware


def brute_force_ranking(corpus, query, num_bins, k):
    """Dense dot-product oracle, independent of the inverted index."""
    doc_counts = [bin_counts(text, num_bins) for _, text in corpus]
    df = Counter()
    for counts in doc_counts:
        df.update(counts.keys())
    n = len(corpus)

    def idf(bin_):
        return max(0.0, math.log((n - df[bin_] + 0.5) / (df[bin_] + 0.5)))

    query_counts = bin_counts(query, num_bins)
    scores = []
    for counts in doc_counts:
        total = 0.0
        for bin_ in sorted(query_counts):
            bin_idf = idf(bin_)
            if bin_ in counts and bin_idf > 0.0:
                query_weight = math.log1p(query_counts[bin_]) * bin_idf
                total += query_weight * (math.log1p(counts[bin_]) * bin_idf)
        scores.append(total)
    order = sorted(range(n), key=lambda i: (-scores[i], i))[:k]
    return [(corpus[i][0], scores[i]) for i in order]


def random_corpus(rng, size=100, vocab=60, with_duplicates=True):
    words = [f"w{v}" for v in range(vocab)]
    corpus = []
    for i in range(size):
        text = " ".join(rng.choices(words, k=rng.randint(3, 30)))
        corpus.append((f"doc-{i}", text))
    if with_duplicates:
        # identical texts force exact score ties, exercising the ordinal tie-break
        corpus[10] = ("doc-10", corpus[5][1])
        corpus[11] = ("doc-11", corpus[5][1])
    return corpus


def test_tokenize():
    assert tokenize("The Pygmy, Chimpanzee!") == ["the", "pygmy", "chimpanzee"]


def test_featurize_empty():
    vec = featurize("", NUM_BINS)
    assert vec.bins == () and vec.weights == ()


def test_featurize_repeated_token():
    vec = featurize("bonobo bonobo", NUM_BINS)
    # one unigram bin (tf 2) and one bigram bin (tf 1)
    assert len(vec.bins) == 2
    assert sorted(vec.weights) == pytest.approx(sorted([math.log(3), math.log(2)]))


def test_featurize_deterministic():
    a = featurize("the pygmy chimpanzee", DEFAULT_NUM_BINS)
    b = featurize("the pygmy chimpanzee", DEFAULT_NUM_BINS)
    assert a == b
    assert list(a.bins) == sorted(a.bins)


def test_featurize_corpus_independent():
    before = featurize("bonobo forest", NUM_BINS)
    build_index([("x", "completely different text")], NUM_BINS)
    assert featurize("bonobo forest", NUM_BINS) == before


def test_build_empty_corpus():
    index = build_index([], NUM_BINS)
    assert index.doc_count == 0
    assert top_k(index, "anything", 5) == []


def test_build_doc_freq():
    index = build_index(
        [("a", "bonobo ape"), ("b", "bonobo forest"), ("c", "city river")], NUM_BINS
    )
    (bonobo_bin,) = featurize("bonobo", NUM_BINS).bins
    assert index.doc_freq(bonobo_bin) == 2


def test_build_rejects_duplicate_ids():
    with pytest.raises(ValueError, match="duplicate"):
        build_index([("a", "x"), ("a", "y")], NUM_BINS)


def test_postings_sorted_and_df_consistent():
    rng = random.Random(3)
    index = build_index(random_corpus(rng, size=50), NUM_BINS)
    for bin_, (ords, tfs) in index.postings.items():
        assert list(ords) == sorted(ords)
        assert len(ords) == len(tfs) == index.doc_freq(bin_)
        assert (tfs > 0).all()


def test_doc_norms_match_featurize():
    corpus = [("a", "bonobo ape bonobo"), ("b", "forest river"), ("c", "ape river city")]
    index = build_index(corpus, NUM_BINS)
    for ordinal, (_, text) in enumerate(corpus):
        vec = featurize(text, NUM_BINS)
        expected = math.sqrt(sum(
            (w * index.idf(b)) ** 2 for b, w in zip(vec.bins, vec.weights)
        ))
        assert index.doc_norms[ordinal] == pytest.approx(expected, abs=1e-12)


def test_top_k_zero():
    index = build_index([("a", "x")], NUM_BINS)
    assert top_k(index, "x", 0) == []


def test_top_k_larger_than_corpus():
    index = build_index([("a", "alpha"), ("b", "beta")], NUM_BINS)
    results = top_k(index, "alpha", 10)
    assert len(results) == 2
    assert results[0][0] == "a"


def test_top_k_matches_brute_force():
    rng = random.Random(99)
    corpus = random_corpus(rng)
    index = build_index(corpus, NUM_BINS)
    for q in range(50):
        query = " ".join(rng.choices([f"w{v}" for v in range(60)], k=rng.randint(1, 8)))
        expected = brute_force_ranking(corpus, query, NUM_BINS, 10)
        actual = top_k(index, query, 10)
        assert [d for d, _ in actual] == [d for d, _ in expected], f"query {q}: {query!r}"
        for (_, sa), (_, se) in zip(actual, expected):
            assert sa == pytest.approx(se, abs=1e-9)


def test_scores_non_negative():
    rng = random.Random(5)
    corpus = random_corpus(rng, size=40)
    index = build_index(corpus, NUM_BINS)
    for _ in range(20):
        query = " ".join(rng.choices([f"w{v}" for v in range(60)], k=4))
        assert all(score >= 0.0 for _, score in top_k(index, query, 40))


def test_save_load_round_trip(tmp_path):
    rng = random.Random(21)
    index = build_index(random_corpus(rng, size=30), NUM_BINS)
    path = tmp_path / "index.bin"
    save_index(index, path)
    reloaded = load_index(path)
    assert reloaded == index
    # serialization is canonical: saving the reload is byte-identical
    path2 = tmp_path / "index2.bin"
    save_index(reloaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_rebuild_same_corpus_identical_bytes(tmp_path):
    rng = random.Random(8)
    corpus = random_corpus(rng, size=25)
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    save_index(build_index(corpus, NUM_BINS), p1)
    save_index(build_index(corpus, NUM_BINS), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_truncated_index_rejected(tmp_path):
    index = build_index([("a", "alpha beta"), ("b", "gamma")], NUM_BINS)
    path = tmp_path / "index.bin"
    save_index(index, path)
    blob = path.read_bytes()
    for cut in (10, len(blob) // 2, len(blob) - 1):
        path.write_bytes(blob[:cut])
        with pytest.raises(IndexFormatError):
            load_index(path)


def test_corrupt_byte_rejected(tmp_path):
    index = build_index([("a", "alpha beta")], NUM_BINS)
    path = tmp_path / "index.bin"
    save_index(index, path)
    blob = bytearray(path.read_bytes())
    blob[len(blob) // 2] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(IndexFormatError):
        load_index(path)


def test_version_mismatch_rejected(tmp_path):
    import struct
    import zlib

    index = build_index([("a", "alpha")], NUM_BINS)
    path = tmp_path / "index.bin"
    save_index(index, path)
    blob = bytearray(path.read_bytes())[:-4]
    struct.pack_into("<I", blob, 4, 99)  # version field follows the magic
    body = bytes(blob)
    path.write_bytes(body + struct.pack("<I", zlib.crc32(body)))
    with pytest.raises(IndexFormatError, match="version"):
        load_index(path)


def test_load_corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"doc_id": "a", "title": "A", "text": "alpha"}\n'
                    '{"doc_id": "b", "title": "B", "text": "beta"}\n')
    corpus = load_corpus(path)
    assert corpus == [("a", "A", "alpha"), ("b", "B", "beta")]


def test_load_corpus_duplicate_ids(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"doc_id": "a", "title": "A", "text": "x"}\n'
                    '{"doc_id": "a", "title": "B", "text": "y"}\n')
    with pytest.raises(ValueError, match="duplicate"):
        load_corpus(path)
