"""Hashed unigram+bigram TF-IDF retrieval over an inverted index.

Feature space: every unigram and adjacent bigram of the lowercased,
punctuation-stripped, whitespace-tokenized text, hashed with 64-bit
FNV-1a into `num_bins` buckets (collisions merge silently). Term weight
is log(1+tf) * idf with the Okapi-style idf log((N-df+0.5)/(df+0.5))
clamped at zero, and query/document vectors are compared by plain dot
product. Featurization is corpus-independent and bit-stable across runs,
platforms, and kernel backends.

Index files are little-endian, versioned, delta-encoded and carry a CRC;
identical corpora serialize to identical bytes.
"""

import json
import string
import struct
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass
from math import log, log1p, sqrt
from pathlib import Path

import numpy as np

from hopcheck import kernels

DEFAULT_NUM_BINS = 1 << 24

_MAGIC = b"HCIX"
_VERSION = 1
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


class IndexFormatError(ValueError):
    """Raised for corrupt, truncated, or wrong-version index files."""


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation characters, split on whitespace."""
    return text.lower().translate(_PUNCT_TABLE).split()


def bin_counts(text: str, num_bins: int = DEFAULT_NUM_BINS) -> Counter:
    """Raw n-gram counts per hash bin (collisions accumulate)."""
    return Counter(kernels.ngram_bins(tokenize(text), num_bins))


@dataclass(frozen=True)
class SparseVector:
    """TF-weighted feature vector: parallel (bin, weight) arrays, bins ascending."""

    bins: tuple[int, ...]
    weights: tuple[float, ...]

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.bins, self.weights))

    def norm(self) -> float:
        return sqrt(sum(w * w for w in self.weights))


def featurize(text: str, num_bins: int = DEFAULT_NUM_BINS) -> SparseVector:
    """Feature vector with term weights log(1 + tf); idf is applied at query time."""
    if num_bins <= 0:
        raise ValueError("num_bins must be positive")
    counts = bin_counts(text, num_bins)
    bins = sorted(counts)
    return SparseVector(
        bins=tuple(bins),
        weights=tuple(log1p(counts[b]) for b in bins),
    )


class InvertedIndex:
    """Immutable postings index over a (doc_id, text) corpus.

    postings[bin] is a pair of parallel arrays (doc ordinals ascending,
    raw term frequencies); doc_norms[d] is the L2 norm of document d's
    TF-IDF vector.
    """

    def __init__(self, num_bins: int, doc_ids: list[str], postings: dict, doc_norms):
        self.num_bins = num_bins
        self.doc_ids = doc_ids
        self.postings = postings
        self.doc_norms = np.asarray(doc_norms, dtype="<f8")
        self._weights: dict[int, np.ndarray] = {}

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    def doc_freq(self, bin_: int) -> int:
        post = self.postings.get(bin_)
        return 0 if post is None else len(post[0])

    def idf(self, bin_: int) -> float:
        df = self.doc_freq(bin_)
        if df == 0:
            return 0.0
        return max(0.0, log((self.doc_count - df + 0.5) / (df + 0.5)))

    def _bin_weights(self, bin_: int) -> np.ndarray:
        """Per-document TF-IDF weights log(1+tf) * idf for one bin, cached."""
        cached = self._weights.get(bin_)
        if cached is None:
            _, tfs = self.postings[bin_]
            cached = np.log1p(tfs.astype("<f8")) * self.idf(bin_)
            self._weights[bin_] = cached
        return cached

    def __eq__(self, other) -> bool:
        if not isinstance(other, InvertedIndex):
            return NotImplemented
        return (
            self.num_bins == other.num_bins
            and self.doc_ids == other.doc_ids
            and sorted(self.postings) == sorted(other.postings)
            and all(
                np.array_equal(self.postings[b][0], other.postings[b][0])
                and np.array_equal(self.postings[b][1], other.postings[b][1])
                for b in self.postings
            )
            and np.array_equal(self.doc_norms, other.doc_norms)
        )


def build_index(corpus: list[tuple[str, str]], num_bins: int = DEFAULT_NUM_BINS) -> InvertedIndex:
    """Build the inverted index for a (doc_id, text) corpus.

    Deterministic: identical corpora produce identical indexes (and
    identical serialized bytes). Duplicate doc_ids are an error.
    """
    doc_ids: list[str] = []
    seen: set[str] = set()
    builders: dict[int, list] = defaultdict(lambda: ([], []))
    doc_bins: list[list[tuple[int, int]]] = []

    for doc_id, text in corpus:
        if doc_id in seen:
            raise ValueError(f"duplicate doc_id '{doc_id}'")
        seen.add(doc_id)
        ordinal = len(doc_ids)
        doc_ids.append(doc_id)
        counts = bin_counts(text, num_bins)
        items = sorted(counts.items())
        doc_bins.append(items)
        for bin_, count in items:
            ords, tfs = builders[bin_]
            ords.append(ordinal)
            tfs.append(count)

    postings = {
        bin_: (np.asarray(ords, dtype="<i4"), np.asarray(tfs, dtype="<i4"))
        for bin_, (ords, tfs) in builders.items()
    }
    index = InvertedIndex(num_bins, doc_ids, postings, np.zeros(len(doc_ids)))

    # Norms need the final document frequencies, so a second pass.
    norms = np.zeros(len(doc_ids), dtype="<f8")
    for ordinal, items in enumerate(doc_bins):
        acc = 0.0
        for bin_, count in items:
            w = log1p(count) * index.idf(bin_)
            acc += w * w
        norms[ordinal] = sqrt(acc)
    index.doc_norms = norms
    return index


def top_k(index: InvertedIndex, query: str, k: int) -> list[tuple[str, float]]:
    """Top-k documents by TF-IDF dot product with the query.

    Scores sort descending with ties broken by ascending document
    ordinal; zero-score documents fill out the tail only when fewer than
    k documents score positive.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    n = index.doc_count
    if n == 0 or k == 0:
        return []
    scores = np.zeros(n, dtype="<f8")
    counts = bin_counts(query, index.num_bins)
    for bin_ in sorted(counts):
        post = index.postings.get(bin_)
        if post is None:
            continue
        idf = index.idf(bin_)
        if idf == 0.0:
            continue
        query_weight = log1p(counts[bin_]) * idf
        kernels.accumulate_scores(scores, post[0], index._bin_weights(bin_), query_weight)
    order = np.argsort(-scores, kind="stable")[: min(k, n)]
    return [(index.doc_ids[i], float(scores[i])) for i in order]


def save_index(index: InvertedIndex, path: str | Path) -> None:
    """Serialize to the versioned little-endian binary format."""
    chunks = [
        _MAGIC,
        struct.pack("<IQQQ", _VERSION, index.num_bins, index.doc_count, len(index.postings)),
    ]
    for doc_id in index.doc_ids:
        raw = doc_id.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
    for bin_ in sorted(index.postings):
        ords, tfs = index.postings[bin_]
        deltas = np.diff(ords.astype("<i8"), prepend=0).astype("<u4")
        chunks.append(struct.pack("<QQ", bin_, len(ords)))
        chunks.append(deltas.tobytes())
        chunks.append(tfs.astype("<u4").tobytes())
    chunks.append(index.doc_norms.astype("<f8").tobytes())
    body = b"".join(chunks)
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexFormatError("unexpected end of index file (truncated or corrupt)")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_index(path: str | Path) -> InvertedIndex:
    """Load an index file; refuses bad magic, versions, checksums."""
    blob = Path(path).read_bytes()
    if len(blob) < len(_MAGIC) + 4:
        raise IndexFormatError("index file too short")
    body, crc_raw = blob[:-4], blob[-4:]
    if struct.unpack("<I", crc_raw)[0] != zlib.crc32(body):
        raise IndexFormatError("index file checksum mismatch (corrupt or truncated)")
    reader = _Reader(body)
    if reader.take(4) != _MAGIC:
        raise IndexFormatError("not a hopcheck index file")
    version, num_bins, doc_count, n_bins = reader.unpack("<IQQQ")
    if version != _VERSION:
        raise IndexFormatError(f"unsupported index version {version} (expected {_VERSION})")
    doc_ids = []
    for _ in range(doc_count):
        (length,) = reader.unpack("<I")
        doc_ids.append(reader.take(length).decode("utf-8"))
    postings = {}
    for _ in range(n_bins):
        bin_, df = reader.unpack("<QQ")
        deltas = np.frombuffer(reader.take(4 * df), dtype="<u4")
        tfs = np.frombuffer(reader.take(4 * df), dtype="<u4").astype("<i4")
        ords = np.cumsum(deltas.astype("<i8")).astype("<i4")
        postings[bin_] = (ords, tfs)
    norms = np.frombuffer(reader.take(8 * doc_count), dtype="<f8").copy()
    if reader.pos != len(body):
        raise IndexFormatError("trailing bytes after index payload")
    return InvertedIndex(int(num_bins), doc_ids, postings, norms)


def load_corpus(path: str | Path) -> list[tuple[str, str, str]]:
    """Read a JSONL corpus of {doc_id, title, text} records."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                records.append((str(rec["doc_id"]), str(rec.get("title", rec["doc_id"])), str(rec["text"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno + 1}: bad corpus record: {exc}") from exc
    ids = [r[0] for r in records]
    if len(ids) != len(set(ids)):
        raise ValueError(f"{path}: duplicate doc_id in corpus")
    return records
