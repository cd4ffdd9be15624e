"""Domain types, the pair-scorer contract, the lexical baseline and the training loss."""

import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from errors import (
    AlignmentError,
    BackendFailure,
    BudgetExceededError,
    EmptyBatchError,
    EmptyTextError,
    LengthMismatchError,
    OutOfRangeError,
)

SIMPLEX_TOLERANCE = 1e-6
# log(0) guard for the cross-entropy terms
PROBABILITY_FLOOR = 1e-12

Span = Tuple[int, int]


class ThreeWayLabel(Enum):
    ALIGNED = 0
    CONTRADICT = 1
    NEUTRAL = 2


class BinaryLabel(Enum):
    ALIGNED = 0
    NOT_ALIGNED = 1


class HeadSelector(Enum):
    BIN_ALIGNED = "bin"
    THREEWAY_ALIGNED = "3way"
    REG = "reg"


class TargetKind(Enum):
    THREE_WAY = "three_way"
    BINARY = "binary"
    REGRESSION = "regression"


def _check_distribution(values: Tuple[float, ...], name: str) -> None:
    for value in values:
        if not (-SIMPLEX_TOLERANCE <= value <= 1 + SIMPLEX_TOLERANCE):
            raise OutOfRangeError(f"{name} probability outside [0, 1]", values=values)
    if abs(sum(values) - 1.0) > SIMPLEX_TOLERANCE:
        raise OutOfRangeError(f"{name} does not sum to 1", values=values)


@dataclass(frozen=True)
class AlignmentScore:
    """Three-head output: p3 over (ALIGNED, CONTRADICT, NEUTRAL), pbin over (ALIGNED, NOT_ALIGNED), reg."""

    p3: Tuple[float, float, float]
    pbin: Tuple[float, float]
    reg: float

    def __post_init__(self):
        if len(self.p3) != 3 or len(self.pbin) != 2:
            raise OutOfRangeError("p3 needs 3 entries and pbin needs 2", p3=self.p3, pbin=self.pbin)
        _check_distribution(tuple(self.p3), "p3")
        _check_distribution(tuple(self.pbin), "pbin")
        if not (0.0 <= self.reg <= 1.0):
            raise OutOfRangeError("reg outside [0, 1]", reg=self.reg)

    @classmethod
    def from_logits(cls, logits_3way: Sequence[float], logits_bin: Sequence[float], reg: float) -> "AlignmentScore":
        p3 = softmax(np.asarray(logits_3way, dtype=np.float64))
        pbin = softmax(np.asarray(logits_bin, dtype=np.float64))
        return cls(
            p3=tuple(float(p) for p in p3),
            pbin=tuple(float(p) for p in pbin),
            reg=min(1.0, max(0.0, float(reg))),
        )

    def head_value(self, head: HeadSelector) -> float:
        if head is HeadSelector.BIN_ALIGNED:
            return self.pbin[BinaryLabel.ALIGNED.value]
        if head is HeadSelector.THREEWAY_ALIGNED:
            return self.p3[ThreeWayLabel.ALIGNED.value]
        return self.reg

    def to_dict(self) -> dict:
        return {"p3": list(self.p3), "pbin": list(self.pbin), "reg": self.reg}


@dataclass(frozen=True)
class TextPair:
    x1: str
    x2: str

    def __post_init__(self):
        if not self.x1 or not self.x1.strip():
            raise EmptyTextError("x1 is empty")
        if not self.x2 or not self.x2.strip():
            raise EmptyTextError("x2 is empty")


@dataclass(frozen=True)
class Target:
    kind: TargetKind
    label: Optional[Enum] = None
    value: Optional[float] = None

    def __post_init__(self):
        if self.kind is TargetKind.REGRESSION:
            if self.value is None or not (0.0 <= self.value <= 1.0):
                raise OutOfRangeError("regression target outside [0, 1]", value=self.value)
        elif self.kind is TargetKind.THREE_WAY and not isinstance(self.label, ThreeWayLabel):
            raise OutOfRangeError("3-way target needs a ThreeWayLabel", label=self.label)
        elif self.kind is TargetKind.BINARY and not isinstance(self.label, BinaryLabel):
            raise OutOfRangeError("binary target needs a BinaryLabel", label=self.label)

    @classmethod
    def three_way(cls, label: ThreeWayLabel) -> "Target":
        return cls(TargetKind.THREE_WAY, label=label)

    @classmethod
    def binary(cls, label: BinaryLabel) -> "Target":
        return cls(TargetKind.BINARY, label=label)

    @classmethod
    def regression(cls, value: float) -> "Target":
        return cls(TargetKind.REGRESSION, value=float(value))

    def to_dict(self) -> dict:
        if self.kind is TargetKind.REGRESSION:
            return {"kind": self.kind.value, "value": self.value}
        return {"kind": self.kind.value, "label": self.label.name}


@dataclass(frozen=True)
class LossWeights:
    """Head weights. Natural log: a uniform prediction costs exactly 1 per classification head."""

    lambda3way: float = 1.0 / math.log(3)
    lambdaBin: float = 1.0 / math.log(2)
    lambdaReg: float = 1.0

    def __post_init__(self):
        for name in ("lambda3way", "lambdaBin", "lambdaReg"):
            if getattr(self, name) <= 0:
                raise OutOfRangeError("loss weights must be strictly positive", weight=name)


def whitespace_spans(text: str) -> List[Span]:
    return [match.span() for match in re.finditer(r"\S+", text)]


class PairScorer(ABC):
    """Contract every scoring backend implements.

    ``max_tokens`` is the budget for a whole pair including ``special_tokens``.
    Backends that cannot be called from several threads at once set
    ``single_flight``; the engine then funnels calls through one worker.
    """

    name = "scorer"
    max_tokens = 512
    special_tokens = 4
    single_flight = False

    def token_spans(self, text: str) -> List[Span]:
        return whitespace_spans(text)

    def count_tokens(self, text: str) -> int:
        return len(self.token_spans(text))

    def count_pair_tokens(self, pair: TextPair) -> int:
        return self.count_tokens(pair.x1) + self.count_tokens(pair.x2) + self.special_tokens

    def fingerprint(self) -> str:
        return f"{self.name}:{self.max_tokens}"

    @abstractmethod
    def _score(self, pair: TextPair) -> AlignmentScore:
        ...

    def score(self, pair: TextPair) -> AlignmentScore:
        n_tokens = self.count_pair_tokens(pair)
        if n_tokens > self.max_tokens:
            raise BudgetExceededError(
                "pair exceeds the scorer's token budget", tokens=n_tokens, budget=self.max_tokens
            )
        try:
            return self._score(pair)
        except AlignmentError:
            raise
        except Exception as exc:
            raise BackendFailure(f"{self.name} backend failed: {exc}") from exc


def _lexical_tokens(text: str) -> set:
    return set(text.lower().split())


def lexical_score(pair: TextPair) -> AlignmentScore:
    """Share of x2's distinct lowercase whitespace tokens that also occur in x1."""
    premise = _lexical_tokens(pair.x1)
    claim = _lexical_tokens(pair.x2)
    if not premise or not claim:
        raise EmptyTextError("lexical scoring needs at least one token on each side")
    r = len(claim & premise) / len(claim)
    return AlignmentScore(p3=(r, 0.0, 1.0 - r), pbin=(r, 1.0 - r), reg=r)


class LexicalScorer(PairScorer):
    """Deterministic overlap scorer; stands in for a trained model in tests and demos."""

    name = "lexical"

    def __init__(self, max_tokens: int = 512):
        self.max_tokens = max_tokens

    def _score(self, pair: TextPair) -> AlignmentScore:
        return lexical_score(pair)


def score_pair(scorer: PairScorer, pair: TextPair) -> AlignmentScore:
    score = scorer.score(pair)
    if not isinstance(score, AlignmentScore):
        raise BackendFailure(f"{scorer.name} returned {type(score).__name__}, not an AlignmentScore")
    return score


def compute_loss(
    predictions: Sequence[AlignmentScore],
    targets: Sequence[Target],
    weights: LossWeights = LossWeights(),
) -> float:
    """Weighted multi-head loss; each head is averaged over its own targets first."""
    if len(predictions) != len(targets):
        raise LengthMismatchError("predictions and targets differ in length",
                                  predictions=len(predictions), targets=len(targets))
    if not predictions:
        raise EmptyBatchError("empty batch")

    nll_3way, nll_bin, sq_err = [], [], []
    for prediction, target in zip(predictions, targets):
        if target.kind is TargetKind.THREE_WAY:
            nll_3way.append(-math.log(max(prediction.p3[target.label.value], PROBABILITY_FLOOR)))
        elif target.kind is TargetKind.BINARY:
            nll_bin.append(-math.log(max(prediction.pbin[target.label.value], PROBABILITY_FLOOR)))
        else:
            sq_err.append((prediction.reg - target.value) ** 2)

    def mean(values: List[float]) -> float:
        return sum(values) / len(values) if values else 0.0

    return (weights.lambda3way * mean(nll_3way)
            + weights.lambdaBin * mean(nll_bin)
            + weights.lambdaReg * mean(sq_err))
