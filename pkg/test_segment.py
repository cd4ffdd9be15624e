"""
Tests for sentence splitting, chunking and chunk x sentence aggregation
"""

import random

import numpy as np
import pytest

from core import HeadSelector, LexicalScorer, TextPair, score_pair, whitespace_spans
from errors import EmptyTextError, NonPositiveBudgetError, OutOfRangeError
from segment import (
    AggregationMode,
    ScoreMatrix,
    aggregate_align,
    aggregate_matrix,
    aggregate_three_way,
    alignment_matrix,
    chunk_context,
    claim_budgets,
    claim_sentences,
    fit_chunks,
    split_sentences,
)

MEAN, MIN = AggregationMode.MEAN_MAX, AggregationMode.MIN_MAX


def sentence_of(length: int, word: str = "w") -> str:
    words = [f"{word}{k}" for k in range(length)]
    return " ".join([words[0].capitalize()] + words[1:]) + "."


@pytest.mark.parametrize("text, expected", [
    ("A cat. A dog.", ["A cat.", "A dog."]),
    ("No punctuation here", ["No punctuation here"]),
    ("Dr. Smith arrived. He left.", ["Dr. Smith arrived.", "He left."]),
    ("Really? Yes! It works.", ["Really?", "Yes!", "It works."]),
    ("The value is 3.5 today. Next one.", ["The value is 3.5 today.", "Next one."]),
    ('He said "Stop." Then he left.', ['He said "Stop."', "Then he left."]),
    ("lower case. after a period", ["lower case. after a period"]),
])
def test_split_sentences(text, expected):
    assert split_sentences(text) == expected


def test_split_sentences_rejects_empty():
    with pytest.raises(EmptyTextError):
        split_sentences("   ")


def test_chunk_greedy_fill():
    text = " ".join(sentence_of(n) for n in (4, 5, 3))
    assert chunk_context(text, 10).token_counts == [9, 3]


def test_chunk_hard_split():
    assert chunk_context(sentence_of(25), 10).token_counts == [10, 10, 5]


def test_chunk_short_context_is_identity():
    text = "A short context. Only two sentences."
    chunks = chunk_context(text, 100)
    assert chunks.texts == [text]


def test_chunk_errors():
    with pytest.raises(NonPositiveBudgetError):
        chunk_context("Some text.", 0)
    with pytest.raises(EmptyTextError):
        chunk_context("   ", 5)


def test_chunks_partition_tokens_on_random_documents():
    rng = random.Random(11)
    for _ in range(1000):
        sentences = [sentence_of(rng.randint(1, 15), rng.choice("abc")) for _ in range(rng.randint(1, 8))]
        text = " ".join(sentences)
        budget = rng.randint(1, 20)
        chunk_set = chunk_context(text, budget)
        tokens = [text[b:e] for b, e in whitespace_spans(text)]
        rebuilt = [token for chunk in chunk_set.texts for token in chunk.split()]
        assert rebuilt == tokens
        assert all(count <= budget for count in chunk_set.token_counts)
        assert chunk_set.token_counts == [len(chunk.split()) for chunk in chunk_set.texts]


def test_score_matrix_validation():
    with pytest.raises(OutOfRangeError):
        ScoreMatrix(np.array([[0.2, 1.2]]), HeadSelector.REG)
    with pytest.raises(OutOfRangeError):
        ScoreMatrix(np.array([0.2, 0.4]), HeadSelector.REG)


def test_worked_two_by_two(matrix_scorer):
    values = [[0.2, 0.9], [0.6, 0.4]]
    x1, x2 = matrix_scorer.context(2), matrix_scorer.claim(2)
    assert aggregate_align(matrix_scorer(values), x1, x2, HeadSelector.BIN_ALIGNED, MEAN) == pytest.approx(0.75)
    assert aggregate_align(matrix_scorer(values), x1, x2, HeadSelector.BIN_ALIGNED, MIN) == pytest.approx(0.6)


def test_single_chunk_single_sentence_matches_score_pair():
    scorer = LexicalScorer()
    x1, x2 = "The cat sat on the mat", "The dog sat"
    expected = score_pair(scorer, TextPair(x1, x2)).head_value(HeadSelector.THREEWAY_ALIGNED)
    assert aggregate_align(scorer, x1, x2) == expected


def reference(values, mode):
    maxima = [max(row[j] for row in values) for j in range(len(values[0]))]
    return sum(maxima) / len(maxima) if mode is MEAN else min(maxima)


def test_aggregation_matches_reference_on_random_matrices(matrix_scorer):
    rng = random.Random(2022)
    for _ in range(10000):
        rows, cols = rng.randint(1, 5), rng.randint(1, 5)
        values = [[rng.random() for _ in range(cols)] for _ in range(rows)]
        scorer = matrix_scorer(values)
        x1, x2 = matrix_scorer.context(rows), matrix_scorer.claim(cols)
        mean = aggregate_align(scorer, x1, x2, HeadSelector.REG, MEAN)
        low = aggregate_align(scorer, x1, x2, HeadSelector.REG, MIN)
        assert mean == reference(values, MEAN)
        assert low == reference(values, MIN)
        assert mean >= low
        flat = [v for row in values for v in row]
        assert min(flat) <= low <= mean <= max(flat)


def test_aggregation_is_permutation_invariant(matrix_scorer):
    values = [[0.1, 0.7, 0.3], [0.5, 0.2, 0.9], [0.4, 0.6, 0.0]]
    x1, x2 = matrix_scorer.context(3), matrix_scorer.claim(3)
    expected = aggregate_align(matrix_scorer(values), x1, x2, HeadSelector.REG)
    permuted = [row[::-1] for row in values[::-1]]
    assert aggregate_align(matrix_scorer(permuted), x1, x2, HeadSelector.REG) == pytest.approx(expected)


def test_threads_do_not_change_the_result(matrix_scorer):
    rng = random.Random(5)
    values = [[rng.random() for _ in range(5)] for _ in range(5)]
    x1, x2 = matrix_scorer.context(5), matrix_scorer.claim(5)
    serial = aggregate_align(matrix_scorer(values), x1, x2, HeadSelector.REG, MEAN, jobs=1)
    threaded = aggregate_align(matrix_scorer(values), x1, x2, HeadSelector.REG, MEAN, jobs=8)
    assert serial == threaded


def test_matrix_scorer_is_called_once_per_cell(matrix_scorer):
    scorer = matrix_scorer([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])
    aggregate_align(scorer, matrix_scorer.context(3), matrix_scorer.claim(2))
    assert scorer.calls == 6


def test_long_context_fits_the_budget():
    scorer = LexicalScorer(max_tokens=32)
    context = " ".join(sentence_of(7, "ctx") for _ in range(60))
    claim = "Ctx4 ctx5 ctx6. Ctx0 ctx1 missing."
    assert aggregate_align(scorer, context, claim, HeadSelector.REG, MEAN) == pytest.approx((1.0 + 2 / 3) / 2)


class FragmentingScorer(LexicalScorer):
    """Counts a quarter more tokens for x1 on its own than its whitespace spans suggest."""

    def count_pair_tokens(self, pair):
        words = self.count_tokens(pair.x1)
        return words + words // 4 + self.count_tokens(pair.x2) + self.special_tokens


def test_chunks_are_recounted_before_scoring():
    scorer = FragmentingScorer(max_tokens=32)
    context = " ".join(sentence_of(7, "ctx") for _ in range(60))
    claim = "Ctx4 ctx5 ctx6. Ctx0 ctx1 missing."
    chunks = fit_chunks(scorer, chunk_context(context, 25).texts, ["Ctx4 ctx5 ctx6."])
    assert all(scorer.count_pair_tokens(TextPair(chunk, "Ctx4 ctx5 ctx6.")) <= 32 for chunk in chunks)
    assert [token for chunk in chunks for token in chunk.split()] == context.split()
    assert aggregate_align(scorer, context, claim, HeadSelector.REG, MEAN) == pytest.approx((1.0 + 2 / 3) / 2)


def test_fitting_chunks_keeps_chunks_that_fit():
    scorer = LexicalScorer(max_tokens=32)
    texts = chunk_context(" ".join(sentence_of(7) for _ in range(10)), 25).texts
    assert fit_chunks(scorer, texts, ["Short claim."]) == texts


def test_three_way_components_aggregate_separately(matrix_scorer):
    values = [[0.2, 0.9], [0.6, 0.4]]
    x1, x2 = matrix_scorer.context(2), matrix_scorer.claim(2)
    assert aggregate_three_way(matrix_scorer(values), x1, x2, MEAN) == pytest.approx((0.75, 0.0, 0.7))
    assert aggregate_three_way(matrix_scorer(values), x1, x2, MIN) == pytest.approx((0.6, 0.0, 0.6))
    with pytest.raises(EmptyTextError):
        aggregate_three_way(matrix_scorer(values), " ", x2)


def test_overlong_claim_sentence_is_split():
    scorer = LexicalScorer(max_tokens=16)
    claim = sentence_of(30)
    pieces = claim_sentences(scorer, claim)
    assert len(pieces) > 1
    assert all(scorer.count_tokens(piece) <= scorer.max_tokens - scorer.special_tokens - 1 for piece in pieces)
    # 4-token chunks against 8-token pieces; the last piece has 6 tokens
    assert aggregate_align(scorer, claim, claim, HeadSelector.REG) == pytest.approx((3 * 0.5 + 4 / 6) / 4)


def test_claims_over_half_the_limit_get_their_own_budget():
    scorer = LexicalScorer(max_tokens=20)
    claims = ["Short one.", sentence_of(12)]
    assert claim_budgets(scorer, claims) == {20 - 2 - 4: [0], 20 - 12 - 4: [1]}


def test_alignment_matrix_shape(matrix_scorer):
    scorer = matrix_scorer([[0.2, 0.9], [0.6, 0.4], [0.1, 0.3]])
    matrix, chunks, claims = alignment_matrix(scorer, matrix_scorer.context(3), matrix_scorer.claim(2),
                                              HeadSelector.BIN_ALIGNED)
    assert matrix.values.shape == (3, 2)
    assert chunks == ["C0.", "C1.", "C2."]
    assert claims == ["S0.", "S1."]
    assert aggregate_matrix(matrix, MEAN) == pytest.approx(0.75)


def test_empty_sides_raise(lexical):
    with pytest.raises(EmptyTextError):
        aggregate_align(lexical, "", "claim")
    with pytest.raises(EmptyTextError):
        aggregate_align(lexical, "context", "  ")
