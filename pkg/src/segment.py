"""Sentence splitting, context chunking and chunk x sentence aggregation."""

import bisect
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from core import AlignmentScore, HeadSelector, PairScorer, Span, TextPair, score_pair, whitespace_spans
from errors import EmptyTextError, NonPositiveBudgetError, OutOfRangeError

logger = logging.getLogger(__name__)

# Words ending in a period that do not end a sentence (compared lowercased, without the final period)
ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "vs", "etc", "inc", "ltd", "co",
    "corp", "no", "fig", "gen", "gov", "sen", "rep", "lt", "col", "sgt", "capt", "e.g", "i.e",
    "u.s", "u.k", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
})

_TERMINAL = re.compile(r"[.!?]+[\"'”’)\]]*")


class AggregationMode(Enum):
    MEAN_MAX = "mean-max"
    MIN_MAX = "min-max"


@dataclass(frozen=True)
class Chunk:
    text: str
    start: int
    end: int
    token_count: int


@dataclass(frozen=True)
class ChunkSet:
    chunks: List[Chunk]

    def __len__(self) -> int:
        return len(self.chunks)

    @property
    def texts(self) -> List[str]:
        return [chunk.text for chunk in self.chunks]

    @property
    def token_counts(self) -> List[int]:
        return [chunk.token_count for chunk in self.chunks]


@dataclass(frozen=True)
class ScoreMatrix:
    """Head-selected scores, rows are chunks and columns are claim sentences."""

    values: np.ndarray
    head: HeadSelector

    def __post_init__(self):
        if self.values.ndim != 2 or 0 in self.values.shape:
            raise OutOfRangeError("score matrix must be a non-empty 2-d grid", shape=self.values.shape)
        if np.any(self.values < 0.0) or np.any(self.values > 1.0):
            raise OutOfRangeError("score matrix entries must lie in [0, 1]")

    def column_maxima(self) -> List[float]:
        return [float(value) for value in self.values.max(axis=0)]


def _is_boundary(text: str, match: "re.Match") -> bool:
    rest = text[match.end():]
    if not rest.strip():
        return True
    if not rest[0].isspace() or not rest.lstrip()[0].isupper():
        return False
    if match.group().startswith(".") and match.group().rstrip("\"'”’)]") == ".":
        preceding = text[:match.start()].split()
        if preceding and preceding[-1].lower().lstrip("(\"'") in ABBREVIATIONS:
            return False
    return True


def sentence_spans(text: str) -> List[Span]:
    """Character spans of the sentences of ``text``, whitespace trimmed."""
    spans = []
    start = 0
    for match in _TERMINAL.finditer(text):
        if _is_boundary(text, match):
            spans.append((start, match.end()))
            start = match.end()
    if text[start:].strip():
        spans.append((start, len(text)))

    trimmed = []
    for begin, end in spans:
        piece = text[begin:end]
        lead = len(piece) - len(piece.lstrip())
        trail = len(piece) - len(piece.rstrip())
        if end - trail > begin + lead:
            trimmed.append((begin + lead, end - trail))
    return trimmed


def split_sentences(text: str) -> List[str]:
    if not text or not text.strip():
        raise EmptyTextError("cannot split empty text into sentences")
    return [text[begin:end] for begin, end in sentence_spans(text)]


def chunk_context(
    x1: str,
    budget: int,
    tokenize: Callable[[str], List[Span]] = whitespace_spans,
) -> ChunkSet:
    """Greedy sentence-respecting chunking of ``x1`` into pieces of at most ``budget`` tokens."""
    if budget < 1:
        raise NonPositiveBudgetError("chunk budget must be at least 1", budget=budget)
    tokens = tokenize(x1) if x1 else []
    if not tokens:
        raise EmptyTextError("context has no tokens")

    starts = [begin for begin, _ in sentence_spans(x1)] or [0]
    groups: List[List[Span]] = [[] for _ in starts]
    for token in tokens:
        index = max(0, bisect.bisect_right(starts, token[0]) - 1)
        groups[index].append(token)

    chunks: List[Chunk] = []

    def emit(span_tokens: List[Span]) -> None:
        begin, end = span_tokens[0][0], span_tokens[-1][1]
        chunks.append(Chunk(text=x1[begin:end], start=begin, end=end, token_count=len(span_tokens)))

    current: List[Span] = []
    for group in groups:
        if not group:
            continue
        if len(group) > budget:
            if current:
                emit(current)
                current = []
            for offset in range(0, len(group), budget):
                emit(group[offset:offset + budget])
        elif len(current) + len(group) <= budget:
            current.extend(group)
        else:
            emit(current)
            current = list(group)
    if current:
        emit(current)
    return ChunkSet(chunks)


def _effective_jobs(scorer: PairScorer, jobs: int) -> int:
    return 1 if scorer.single_flight else max(1, jobs)


def build_score_grid(
    scorer: PairScorer,
    chunks: Sequence[str],
    sentences: Sequence[str],
    jobs: int = 1,
) -> List[List[AlignmentScore]]:
    """Full three-head scores, one row per chunk, in row-major order regardless of ``jobs``."""
    cells = [(i, j) for i in range(len(chunks)) for j in range(len(sentences))]

    def score_cell(cell):
        i, j = cell
        return score_pair(scorer, TextPair(chunks[i], sentences[j]))

    workers = _effective_jobs(scorer, jobs)
    if workers == 1:
        scores = [score_cell(cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score_cell, cells))

    width = len(sentences)
    return [scores[row * width:(row + 1) * width] for row in range(len(chunks))]


def build_score_matrix(
    scorer: PairScorer,
    chunks: Sequence[str],
    sentences: Sequence[str],
    head: HeadSelector,
    jobs: int = 1,
) -> ScoreMatrix:
    grid = build_score_grid(scorer, chunks, sentences, jobs)
    values = np.array([[score.head_value(head) for score in row] for row in grid], dtype=np.float64)
    return ScoreMatrix(values=values.reshape(len(chunks), len(sentences)), head=head)


def reduce_maxima(maxima: Sequence[float], mode: AggregationMode) -> float:
    """Reduce per-sentence maxima in sentence order."""
    if not maxima:
        raise EmptyTextError("no claim sentences to aggregate")
    if mode is AggregationMode.MIN_MAX:
        return min(maxima)
    total = 0.0
    for value in maxima:
        total += value
    return total / len(maxima)


def aggregate_matrix(matrix: ScoreMatrix, mode: AggregationMode) -> float:
    return reduce_maxima(matrix.column_maxima(), mode)


def claim_sentences(scorer: PairScorer, x2: str) -> List[str]:
    # a claim sentence that cannot fit next to even a one-token chunk is cut into half-budget pieces
    limit = scorer.max_tokens - scorer.special_tokens - 1
    piece = max(1, min(scorer.max_tokens // 2, limit))
    claims = []
    for sentence in split_sentences(x2):
        spans = scorer.token_spans(sentence)
        if len(spans) <= limit:
            claims.append(sentence)
            continue
        logger.debug("splitting a %d-token claim sentence", len(spans))
        for offset in range(0, len(spans), piece):
            part = spans[offset:offset + piece]
            claims.append(sentence[part[0][0]:part[-1][1]])
    return claims


def claim_budgets(scorer: PairScorer, claims: Sequence[str]) -> Dict[int, List[int]]:
    """Chunk budget -> claim columns scored at it.

    Claims up to half the token limit share one budget sized for the longest of them;
    each longer claim gets a budget of its own.
    """
    counts = [scorer.count_tokens(claim) for claim in claims]
    half = scorer.max_tokens / 2
    shared = [j for j, count in enumerate(counts) if count <= half]
    budgets: Dict[int, List[int]] = {}
    if shared:
        budget = scorer.max_tokens - max(counts[j] for j in shared) - scorer.special_tokens
        budgets[budget] = list(shared)
    for j, count in enumerate(counts):
        if count > half:
            budgets.setdefault(scorer.max_tokens - count - scorer.special_tokens, []).append(j)
    return budgets


def fit_chunks(scorer: PairScorer, chunks: Sequence[str], claims: Sequence[str]) -> List[str]:
    """Halve chunks until each fits next to the longest claim when tokenized on its own.

    Subword tokenizers can count a chunk's text differently from the same span inside the
    full context (a word that loses its leading space splits into more pieces).
    """
    longest = max(claims, key=scorer.count_tokens)
    fitted: List[str] = []
    pending = list(reversed(chunks))
    while pending:
        chunk = pending.pop()
        if scorer.count_pair_tokens(TextPair(chunk, longest)) <= scorer.max_tokens:
            fitted.append(chunk)
            continue
        spans = scorer.token_spans(chunk)
        if len(spans) < 2:
            # a single token that cannot fit; score() reports the overflow
            fitted.append(chunk)
            continue
        middle = len(spans) // 2
        left = chunk[spans[0][0]:spans[middle - 1][1]]
        right = chunk[spans[middle][0]:spans[-1][1]]
        if not left.strip() or not right.strip() or len(left) >= len(chunk):
            fitted.append(chunk)
            continue
        logger.debug("re-splitting a chunk that overflows once tokenized alone")
        pending.extend([right, left])
    return fitted


def _claim_chunks(scorer: PairScorer, x1: str, budget: int, claims: Sequence[str]) -> List[str]:
    return fit_chunks(scorer, chunk_context(x1, budget, scorer.token_spans).texts, claims)


def aggregate_align(
    scorer: PairScorer,
    x1: str,
    x2: str,
    head: HeadSelector = HeadSelector.THREEWAY_ALIGNED,
    mode: AggregationMode = AggregationMode.MEAN_MAX,
    jobs: int = 1,
) -> float:
    """Score ``x2`` against an arbitrarily long ``x1``: max over chunks per sentence, then mean or min."""
    if not x1 or not x1.strip():
        raise EmptyTextError("x1 is empty")
    claims = claim_sentences(scorer, x2)
    maxima: List[float] = [0.0] * len(claims)
    for budget, columns in claim_budgets(scorer, claims).items():
        selected = [claims[j] for j in columns]
        chunks = _claim_chunks(scorer, x1, budget, selected)
        matrix = build_score_matrix(scorer, chunks, selected, head, jobs)
        for j, value in zip(columns, matrix.column_maxima()):
            maxima[j] = value
        logger.debug("scored %d chunks x %d sentences at budget %d", len(chunks), len(columns), budget)

    return reduce_maxima(maxima, mode)


def aggregate_three_way(
    scorer: PairScorer,
    x1: str,
    x2: str,
    mode: AggregationMode = AggregationMode.MEAN_MAX,
    jobs: int = 1,
) -> Tuple[float, float, float]:
    """Each p3 component reduced over the chunk x sentence grid like ``aggregate_align``."""
    if not x1 or not x1.strip():
        raise EmptyTextError("x1 is empty")
    claims = claim_sentences(scorer, x2)
    maxima = np.zeros((len(claims), 3), dtype=np.float64)
    for budget, columns in claim_budgets(scorer, claims).items():
        selected = [claims[j] for j in columns]
        chunks = _claim_chunks(scorer, x1, budget, selected)
        grid = np.array([[score.p3 for score in row] for row in build_score_grid(scorer, chunks, selected, jobs)],
                        dtype=np.float64)
        maxima[columns] = grid.max(axis=0)
    return tuple(reduce_maxima(maxima[:, k].tolist(), mode) for k in range(3))


def alignment_matrix(
    scorer: PairScorer,
    x1: str,
    x2: str,
    head: HeadSelector = HeadSelector.THREEWAY_ALIGNED,
) -> Tuple[ScoreMatrix, List[str], List[str]]:
    """(matrix, chunk texts, claim texts) for the claims sharing the first chunk budget."""
    claims = claim_sentences(scorer, x2)
    budget, columns = next(iter(claim_budgets(scorer, claims).items()))
    selected = [claims[j] for j in columns]
    chunks = _claim_chunks(scorer, x1, budget, selected)
    return build_score_matrix(scorer, chunks, selected, head), chunks, selected
