import gzip
import tracemalloc

import numpy as np
import pytest

from blockpca import (
    ArrayStream,
    BagOfWordsCorpus,
    EvaluationStreamError,
    NotReopenableError,
    ParseError,
    ValidationError,
    block_power_method_rank1,
    derive_rng,
    make_model,
    manual_schedule,
    parse_bag_of_words,
    reopen_for_evaluation,
    stream_from_corpus,
    stream_from_model,
)

TOY_DOCWORD = "2\n3\n3\n1 1 4\n1 3 1\n2 2 2\n"


def _toy_corpus(tmp_path, text=TOY_DOCWORD, name="docword.toy.txt"):
    path = tmp_path / name
    path.write_text(text)
    return parse_bag_of_words(path)


def _drain(stream):
    return np.array(list(stream))


def test_model_stream_counts_and_end():
    m = make_model(6, [1.0], 0.2, derive_rng(0, "m"))
    s = stream_from_model(m, 100, seed=5)
    samples = _drain(s)
    assert samples.shape == (100, 6)
    assert s.consumed_count == 100
    assert s.next_sample() is None
    assert s.next_sample() is None  # exhausted forever


def test_model_stream_zero_samples():
    m = make_model(6, [1.0], 0.2, derive_rng(0, "m"))
    s = stream_from_model(m, 0, seed=5)
    assert s.next_sample() is None


def test_model_stream_deterministic_and_reopenable():
    m = make_model(5, [1.0, 0.7], 0.3, derive_rng(1, "m"))
    a = _drain(stream_from_model(m, 40, seed=9))
    b = _drain(stream_from_model(m, 40, seed=9))
    assert np.array_equal(a, b)
    s = stream_from_model(m, 40, seed=9)
    ev = reopen_for_evaluation(s)
    assert ev.evaluation_only
    assert np.array_equal(_drain(ev), a)


def test_array_stream_not_reopenable():
    s = ArrayStream(np.ones((3, 2)))
    with pytest.raises(NotReopenableError):
        reopen_for_evaluation(s)


def test_trainer_rejects_evaluation_stream():
    m = make_model(8, [1.0], 0.1, derive_rng(2, "m"))
    ev = reopen_for_evaluation(stream_from_model(m, 50, seed=3))
    with pytest.raises(EvaluationStreamError):
        block_power_method_rank1(ev, manual_schedule(10, 5), seed=0)


def test_parse_toy_docword(tmp_path):
    corpus = _toy_corpus(tmp_path)
    assert corpus.doc_count == 2
    assert corpus.vocab_size == 3
    assert corpus.nnz == 3
    assert corpus.triples.tolist() == [[1, 1, 4], [1, 3, 1], [2, 2, 2]]


def test_parse_gzip_docword(tmp_path):
    path = tmp_path / "docword.toy.txt.gz"
    with gzip.open(path, "wt") as fh:
        fh.write(TOY_DOCWORD)
    corpus = parse_bag_of_words(path)
    assert corpus.nnz == 3


def test_parse_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2\n3\n3\n1 1 4\n1 3\n2 2 2\n")
    with pytest.raises(ParseError) as excinfo:
        parse_bag_of_words(path)
    assert excinfo.value.line == 5

    path.write_text("2\nx\n3\n")
    with pytest.raises(ParseError) as excinfo:
        parse_bag_of_words(path)
    assert excinfo.value.line == 2


def test_parse_validates_counts_and_ids(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2\n3\n4\n1 1 4\n1 3 1\n2 2 2\n")  # NNZ mismatch
    with pytest.raises(ValidationError):
        parse_bag_of_words(path)
    path.write_text("2\n3\n1\n5 1 4\n")  # doc id out of range
    with pytest.raises(ValidationError):
        parse_bag_of_words(path)


def test_corpus_stream_orientations(tmp_path):
    corpus = _toy_corpus(tmp_path)
    words = _drain(stream_from_corpus(corpus, "words"))
    assert words.shape == (3, 2)
    assert words[0].tolist() == [4.0, 0.0]  # word 1 appears 4 times in doc 1
    docs = _drain(stream_from_corpus(corpus, "docs"))
    assert docs.shape == (2, 3)
    assert docs[0].tolist() == [4.0, 0.0, 1.0]


def test_corpus_orientations_are_transposes(tmp_path):
    corpus = _toy_corpus(tmp_path)
    docs = _drain(stream_from_corpus(corpus, "docs"))
    words = _drain(stream_from_corpus(corpus, "words"))
    assert np.array_equal(docs.T, words)


def test_corpus_stream_reopen_identical(tmp_path):
    corpus = _toy_corpus(tmp_path)
    s = stream_from_corpus(corpus, "words")
    first = _drain(s)
    again = _drain(reopen_for_evaluation(s))
    assert np.array_equal(first, again)


def test_corpus_normalization_hook(tmp_path):
    corpus = _toy_corpus(tmp_path)
    rows = _drain(stream_from_corpus(corpus, "words", normalize=True))
    norms = np.linalg.norm(rows, axis=1)
    assert np.allclose(norms, 1.0)
    # raw counts by default
    raw = _drain(stream_from_corpus(corpus, "words"))
    assert raw[0, 0] == 4.0


def test_corpus_streaming_memory_stays_sparse_scale(tmp_path):
    # 3000 x 3000 corpus with 200 nonzeros: dense would be 72 MB; streaming
    # must stay near max(dim, nnz) per sample.
    rng = derive_rng(7, "sparse")
    docs = rng.integers(1, 3001, size=200)
    words = rng.integers(1, 3001, size=200)
    lines = ["3000", "3000", "200"] + [f"{d} {w} 1" for d, w in zip(docs, words)]
    path = tmp_path / "docword.sparse.txt"
    path.write_text("\n".join(lines) + "\n")
    corpus = parse_bag_of_words(path)
    tracemalloc.start()
    base = tracemalloc.get_traced_memory()[0]
    stream = stream_from_corpus(corpus, "words")
    total = 0.0
    while True:
        block = stream.next_block(64)
        if block is None:
            break
        total += float(block.sum())
    peak = tracemalloc.get_traced_memory()[1] - base
    tracemalloc.stop()
    assert total == 200.0
    assert peak < 8 * 3000 * 3000 / 100  # far below dense D*W storage


def test_stream_dimension_checks():
    with pytest.raises(ValidationError):
        ArrayStream(np.ones(3))
    corpus = BagOfWordsCorpus(doc_count=2, vocab_size=2, triples=np.array([[1, 1, 1]]))
    with pytest.raises(ValidationError):
        stream_from_corpus(corpus, "columns")
