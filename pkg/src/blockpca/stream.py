"""Single-pass sample sources.

A stream yields each sample exactly once and exposes no rewind, which makes
the single-pass contract structural. Training code must refuse streams that
are flagged ``evaluation_only``: those exist so a second pass over the same
data (for scoring) cannot be mistaken for fresh training data.

Streams serve samples in bounded chunks (at most ``READ_BUFFER_FLOATS``
numbers of read-ahead, like stdio buffering) so the per-sample Python cost is
amortized without ever holding more than a small constant buffer.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass

import numpy as np

from .errors import (
    EvaluationStreamError,
    NotReopenableError,
    ParseError,
    ValidationError,
)
from .model import SpikedModel, draw_samples
from .rng import derive_rng

# Read-ahead cap in float64 numbers (~256 KiB).
READ_BUFFER_FLOATS = 32768


class SampleStream:
    """Base class: a single-consumer, forward-only source of p-vectors."""

    def __init__(self, dim: int, evaluation_only: bool = False):
        if dim < 1:
            raise ValidationError("stream dimension must be positive")
        self.dim = int(dim)
        self.evaluation_only = bool(evaluation_only)
        self.consumed_count = 0

    def _produce(self, count: int) -> np.ndarray | None:
        raise NotImplementedError

    def next_block(self, max_count: int) -> np.ndarray | None:
        """Up to ``max_count`` fresh samples as rows, or None at end of stream."""
        if max_count < 1:
            raise ValidationError("max_count must be positive")
        limit = max(1, READ_BUFFER_FLOATS // self.dim)
        block = self._produce(min(int(max_count), limit))
        if block is None:
            return None
        self.consumed_count += block.shape[0]
        return block

    def next_sample(self) -> np.ndarray | None:
        """One fresh sample, or None at end of stream (forever after)."""
        block = self.next_block(1)
        if block is None:
            return None
        return block[0]

    def __iter__(self):
        while True:
            block = self.next_block(READ_BUFFER_FLOATS)
            if block is None:
                return
            yield from block

    def reopen(self) -> "SampleStream":
        raise NotReopenableError(f"{type(self).__name__} has no reopenable source")


class ModelStream(SampleStream):
    """Exactly ``n`` samples drawn from a SpikedModel, seeded and reopenable."""

    def __init__(self, model: SpikedModel, n: int, seed: int, evaluation_only: bool = False):
        if n < 0:
            raise ValidationError("sample count must be nonnegative")
        super().__init__(model.p, evaluation_only)
        self._model = model
        self._n = int(n)
        self._seed = int(seed)
        self._rng = derive_rng(seed, "model-stream")
        self._remaining = int(n)

    def _produce(self, count: int) -> np.ndarray | None:
        if self._remaining <= 0:
            return None
        m = min(count, self._remaining)
        self._remaining -= m
        return draw_samples(self._model, m, self._rng)

    def reopen(self) -> "ModelStream":
        return ModelStream(self._model, self._n, self._seed, evaluation_only=True)


class ArrayStream(SampleStream):
    """In-memory one-shot stream for tests; not reopenable."""

    def __init__(self, data, evaluation_only: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError("data must be a 2-D array of row samples")
        if not np.isfinite(arr).all():
            raise ValidationError("data contains non-finite entries")
        super().__init__(arr.shape[1], evaluation_only)
        self._data = arr
        self._cursor = 0

    def _produce(self, count: int) -> np.ndarray | None:
        if self._cursor >= self._data.shape[0]:
            return None
        m = min(count, self._data.shape[0] - self._cursor)
        block = self._data[self._cursor : self._cursor + m]
        self._cursor += m
        return block


@dataclass(frozen=True)
class BagOfWordsCorpus:
    """Sparse document-word counts in the UCI docword layout (1-based ids)."""

    doc_count: int
    vocab_size: int
    triples: np.ndarray  # (nnz, 3) int64 rows of (doc_id, word_id, count)

    def __post_init__(self):
        t = np.asarray(self.triples, dtype=np.int64)
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValidationError("triples must be an (nnz, 3) integer array")
        if self.doc_count < 1 or self.vocab_size < 1:
            raise ValidationError("corpus dimensions must be positive")
        if t.shape[0] > 0:
            if t[:, 0].min() < 1 or t[:, 0].max() > self.doc_count:
                raise ValidationError("doc id out of range")
            if t[:, 1].min() < 1 or t[:, 1].max() > self.vocab_size:
                raise ValidationError("word id out of range")
            if t[:, 2].min() < 1:
                raise ValidationError("counts must be positive")
        t.setflags(write=False)
        object.__setattr__(self, "triples", t)

    @property
    def nnz(self) -> int:
        return self.triples.shape[0]


def parse_bag_of_words(path) -> BagOfWordsCorpus:
    """Parse a UCI docword file: three integer header lines (D, W, NNZ), then
    whitespace-separated ``doc word count`` triples. Gzip input is accepted by
    file extension."""
    opener = gzip.open if str(path).endswith(".gz") else open
    header: list[int] = []
    triples: list[tuple[int, int, int]] = []
    with opener(path, "rt", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = line.split()
            if len(header) < 3:
                if len(fields) != 1:
                    raise ParseError(lineno, f"expected a single header integer, got {raw!r}")
                try:
                    header.append(int(fields[0]))
                except ValueError:
                    raise ParseError(lineno, f"header value is not an integer: {raw!r}")
                continue
            if len(fields) != 3:
                raise ParseError(lineno, f"expected 'doc word count', got {raw!r}")
            try:
                triples.append((int(fields[0]), int(fields[1]), int(fields[2])))
            except ValueError:
                raise ParseError(lineno, f"non-integer triple: {raw!r}")
    if len(header) < 3:
        raise ParseError(len(header) + 1, "missing header lines (need D, W, NNZ)")
    d, w, nnz = header
    if len(triples) != nnz:
        raise ValidationError(f"header declares {nnz} triples but file has {len(triples)}")
    arr = np.array(triples, dtype=np.int64).reshape(len(triples), 3)
    return BagOfWordsCorpus(doc_count=d, vocab_size=w, triples=arr)


class CorpusStream(SampleStream):
    """Stream a corpus as dense count vectors, one per document or per word.

    ``orientation`` chooses the sample axis: ``"docs"`` yields doc_count
    samples of dimension vocab_size; ``"words"`` yields vocab_size samples of
    dimension doc_count. Construction re-buckets the triples by the sample
    axis in one O(nnz) pass (an ingestion cost, not part of the training
    path's memory budget). Optional per-sample l2 normalization is off by
    default; zero rows stay zero.
    """

    def __init__(
        self,
        corpus: BagOfWordsCorpus,
        orientation: str,
        normalize: bool = False,
        evaluation_only: bool = False,
    ):
        if orientation not in ("docs", "words"):
            raise ValidationError("orientation must be 'docs' or 'words'")
        n = corpus.doc_count if orientation == "docs" else corpus.vocab_size
        dim = corpus.vocab_size if orientation == "docs" else corpus.doc_count
        super().__init__(dim, evaluation_only)
        self._corpus = corpus
        self._orientation = orientation
        self._normalize = bool(normalize)
        self._n = n
        self._cursor = 0
        axis = 0 if orientation == "docs" else 1
        other = 1 - axis
        sample_ids = corpus.triples[:, axis] - 1
        order = np.argsort(sample_ids, kind="stable")
        self._sorted_other = (corpus.triples[order, other] - 1).astype(np.int64)
        self._sorted_counts = corpus.triples[order, 2].astype(np.float64)
        self._indptr = np.searchsorted(sample_ids[order], np.arange(n + 1))

    def _produce(self, count: int) -> np.ndarray | None:
        if self._cursor >= self._n:
            return None
        m = min(count, self._n - self._cursor)
        block = np.zeros((m, self.dim))
        for i in range(m):
            row = self._cursor + i
            lo, hi = self._indptr[row], self._indptr[row + 1]
            block[i, self._sorted_other[lo:hi]] = self._sorted_counts[lo:hi]
        if self._normalize:
            norms = np.sqrt((block * block).sum(axis=1))
            norms[norms == 0.0] = 1.0
            block /= norms[:, None]
        self._cursor += m
        return block

    def reopen(self) -> "CorpusStream":
        return CorpusStream(
            self._corpus, self._orientation, self._normalize, evaluation_only=True
        )


def stream_from_model(model: SpikedModel, n: int, seed: int) -> ModelStream:
    """A training stream of exactly ``n`` model samples."""
    if n < 0:
        raise ValidationError("n must be nonnegative")
    return ModelStream(model, n, seed)


def stream_from_corpus(
    corpus: BagOfWordsCorpus, orientation: str, normalize: bool = False
) -> CorpusStream:
    """A training stream over a parsed corpus."""
    return CorpusStream(corpus, orientation, normalize)


def reopen_for_evaluation(stream: SampleStream) -> SampleStream:
    """A fresh evaluation-only pass over the same underlying data.

    Only re-seedable (model-backed) or materialized (corpus-backed) sources
    can be reopened; one-shot in-memory streams raise NotReopenableError.
    """
    return stream.reopen()


def require_training_stream(stream: SampleStream) -> None:
    """Reject evaluation-only streams wherever training data is expected."""
    if stream.evaluation_only:
        raise EvaluationStreamError(
            "stream is flagged evaluation-only and cannot be used for training"
        )


def require_evaluation_stream(stream: SampleStream) -> None:
    """Metrics that promise a second pass must receive an evaluation stream."""
    if not stream.evaluation_only:
        raise EvaluationStreamError(
            "metric requires an evaluation stream (use reopen_for_evaluation)"
        )
