"""Train/eval n-gram overlap audit: pick n, index the training text, split eval into clean and dirty."""

import hashlib
import logging
import math
import string
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Sequence, Set

from tqdm import tqdm

from errors import EmptyInputError, OutOfRangeError

logger = logging.getLogger(__name__)

MIN_N = 8
MAX_N = 13
PERCENTILE = 5
HASH_BITS = 64
DEFAULT_MIN_SUBSET_SIZE = 100
PERCENTILE_METHOD = "nearest-rank"

_EDGE_PUNCTUATION = string.punctuation + "“”‘’«»…–—"


def normalize_words(text: str) -> List[str]:
    """Lowercase, split on whitespace, strip punctuation from token edges."""
    words = (token.strip(_EDGE_PUNCTUATION) for token in text.lower().split())
    return [word for word in words if word]


def hash_ngram(words: Sequence[str]) -> int:
    digest = hashlib.blake2b(" ".join(words).encode("utf-8"), digest_size=HASH_BITS // 8).digest()
    return int.from_bytes(digest, "big")


def text_ngrams(text: str, n: int) -> Set[int]:
    words = normalize_words(text)
    return {hash_ngram(words[i:i + n]) for i in range(len(words) - n + 1)}


@dataclass
class NgramIndex:
    n: int
    grams: Set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.n < 1:
            raise OutOfRangeError("n-gram size must be at least 1", n=self.n)

    def __len__(self) -> int:
        return len(self.grams)

    def add_text(self, text: str) -> None:
        self.grams.update(text_ngrams(text, self.n))

    def merge(self, other: "NgramIndex") -> "NgramIndex":
        if other.n != self.n:
            raise OutOfRangeError("cannot merge indexes of different n", left=self.n, right=other.n)
        return NgramIndex(self.n, self.grams | other.grams)

    def overlaps(self, text: str) -> bool:
        return any(gram in self.grams for gram in text_ngrams(text, self.n))

    def false_positive_probability(self, queries: int) -> float:
        """Union bound on a hash collision for ``queries`` lookups."""
        return min(1.0, len(self.grams) * queries / float(2 ** HASH_BITS))


@dataclass(frozen=True)
class Partition:
    clean: List[int]
    dirty: List[int]


@dataclass(frozen=True)
class ContaminationReport:
    n: int
    dirty_fraction: float
    metric_full: float
    metric_clean: Optional[float]
    metric_dirty: Optional[float]
    delta_clean_vs_full: Optional[float]
    min_subset_size: int

    def __post_init__(self):
        if not (0.0 <= self.dirty_fraction <= 1.0):
            raise OutOfRangeError("dirty fraction outside [0, 1]", dirty_fraction=self.dirty_fraction)

    def to_dict(self) -> dict:
        return asdict(self)


def nearest_rank(values: Sequence[int], percentile: float) -> int:
    ordered = sorted(values)
    rank = max(1, math.ceil(percentile / 100.0 * len(ordered)))
    return ordered[rank - 1]


def choose_n(eval_examples: Sequence[str]) -> int:
    """5th-percentile example length in words, clamped to [8, 13]."""
    if not eval_examples:
        raise EmptyInputError("no evaluation examples to size n from")
    lengths = [len(normalize_words(text)) for text in eval_examples]
    n = min(MAX_N, max(MIN_N, nearest_rank(lengths, PERCENTILE)))
    logger.info("chose n=%d from %d evaluation examples", n, len(lengths))
    return n


def build_ngram_index(training_texts: Iterable[str], n: int, progress: bool = False) -> NgramIndex:
    index = NgramIndex(n)
    for text in tqdm(training_texts, desc="indexing", unit="doc", disable=not progress):
        index.add_text(text)
    logger.info("indexed %d distinct %d-grams", len(index), n)
    return index


def classify_examples(index: NgramIndex, eval_examples: Sequence[str]) -> Partition:
    clean, dirty = [], []
    for position, text in enumerate(eval_examples):
        (dirty if index.overlaps(text) else clean).append(position)
    return Partition(clean=clean, dirty=dirty)


def contamination_delta(
    n: int,
    metric_full: float,
    clean_size: int,
    dirty_size: int,
    metric_clean: Optional[float] = None,
    metric_dirty: Optional[float] = None,
    min_subset_size: int = DEFAULT_MIN_SUBSET_SIZE,
) -> ContaminationReport:
    """Subset metrics are dropped when their subset has fewer than ``min_subset_size`` examples."""
    if metric_full is None:
        raise EmptyInputError("metric on the full evaluation set is required")
    total = clean_size + dirty_size
    dirty_fraction = dirty_size / total if total else 0.0
    if clean_size < min_subset_size:
        metric_clean = None
    if dirty_size < min_subset_size:
        metric_dirty = None
    delta = metric_clean - metric_full if metric_clean is not None else None
    return ContaminationReport(
        n=n,
        dirty_fraction=dirty_fraction,
        metric_full=metric_full,
        metric_clean=metric_clean,
        metric_dirty=metric_dirty,
        delta_clean_vs_full=delta,
        min_subset_size=min_subset_size,
    )
