"""Evaluation measures: accuracy, correlations, ROC AUC and SQuAD-style EM/F1."""

import collections
import math
import re
import string
from dataclasses import asdict, dataclass
from typing import Dict, Hashable, List, Sequence, Tuple

import numpy as np
from scipy.stats import kendalltau, pearsonr, rankdata, spearmanr

from errors import ConstantInputError, EmptyInputError, LengthMismatchError, OutOfRangeError, SingleClassError

NO_ANSWER = "unanswerable"
KENDALL_VARIANTS = ("b", "c")
# chat-style QA models abstain in prose as well as with the sentinel
ABSTENTION_PHRASES = ("no answer", "context does not provide an answer")


@dataclass(frozen=True)
class ScoredBinarySet:
    scores: Tuple[float, ...]
    labels: Tuple[int, ...]

    def __post_init__(self):
        if len(self.scores) != len(self.labels):
            raise LengthMismatchError("scores and labels differ in length",
                                      scores=len(self.scores), labels=len(self.labels))
        if len(self.scores) < 2:
            raise EmptyInputError("need at least two scored examples")
        if any(label not in (0, 1) for label in self.labels):
            raise OutOfRangeError("labels must be 0 or 1")
        if len(set(self.labels)) < 2:
            raise SingleClassError("both classes are needed for ROC AUC")

    @classmethod
    def of(cls, scores: Sequence[float], labels: Sequence[int]) -> "ScoredBinarySet":
        return cls(tuple(float(s) for s in scores), tuple(int(l) for l in labels))


@dataclass(frozen=True)
class CorrelationTriple:
    pearson: float
    spearman: float
    kendall: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _check_pairs(a: Sequence, b: Sequence, minimum: int) -> None:
    if len(a) != len(b):
        raise LengthMismatchError("inputs differ in length", left=len(a), right=len(b))
    if len(a) < minimum:
        raise EmptyInputError(f"need at least {minimum} items", size=len(a))


def accuracy(predictions: Sequence[Hashable], golds: Sequence[Hashable]) -> float:
    _check_pairs(predictions, golds, 1)
    return sum(p == g for p, g in zip(predictions, golds)) / len(golds)


def _clip(value: float) -> float:
    return float(min(1.0, max(-1.0, value)))


def correlations(x: Sequence[float], y: Sequence[float], kendall_variant: str = "b") -> CorrelationTriple:
    """Pearson, Spearman (average ranks for ties) and Kendall tau (tau-b by default)."""
    _check_pairs(x, y, 3)
    if kendall_variant not in KENDALL_VARIANTS:
        raise OutOfRangeError("unknown Kendall variant", variant=kendall_variant)
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        raise ConstantInputError("correlation is undefined for constant input")

    pearson = pearsonr(xs, ys)[0]
    spearman = spearmanr(xs, ys)[0]
    kendall = kendalltau(xs, ys, variant=kendall_variant)[0]
    return CorrelationTriple(pearson=_clip(pearson), spearman=_clip(spearman), kendall=_clip(kendall))


def roc_auc(data: ScoredBinarySet) -> float:
    """Mann-Whitney form: P(positive outscores negative), ties count one half."""
    scores = np.asarray(data.scores, dtype=np.float64)
    labels = np.asarray(data.labels)
    ranks = rankdata(scores, method="average")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def normalize_answer(s: str) -> str:
    """Lower text and remove punctuation, articles and extra whitespace."""

    def remove_articles(text):
        return re.sub(r"\b(a|an|the)\b", " ", text)

    def white_space_fix(text):
        return " ".join(text.split())

    def remove_punc(text):
        exclude = set(string.punctuation)
        return "".join(ch for ch in text if ch not in exclude)

    return white_space_fix(remove_articles(remove_punc(s.lower())))


def is_no_answer(prediction: str, sentinel: str = NO_ANSWER) -> bool:
    """Empty, or contains the sentinel or an abstention phrase as whole words."""
    normalized = normalize_answer(prediction or "")
    if not normalized:
        return True
    padded = f" {normalized} "
    return any(f" {normalize_answer(phrase)} " in padded for phrase in (sentinel,) + ABSTENTION_PHRASES)


def _token_f1(prediction_tokens: List[str], gold_tokens: List[str]) -> float:
    common = collections.Counter(prediction_tokens) & collections.Counter(gold_tokens)
    num_same = sum(common.values())
    if not prediction_tokens or not gold_tokens:
        return float(prediction_tokens == gold_tokens)
    if num_same == 0:
        return 0.0
    precision = num_same / len(prediction_tokens)
    recall = num_same / len(gold_tokens)
    return (2 * precision * recall) / (precision + recall)


def squad_scores(prediction: str, gold_answers: Sequence[str], sentinel: str = NO_ANSWER) -> Tuple[int, float]:
    """(exact match, F1) against the best-matching gold; no golds means the question is unanswerable."""
    if not gold_answers:
        score = 1 if is_no_answer(prediction, sentinel) else 0
        return score, float(score)
    normalized = normalize_answer(prediction or "")
    em = int(any(normalized == normalize_answer(gold) for gold in gold_answers))
    f1 = max(_token_f1(normalized.split(), normalize_answer(gold).split()) for gold in gold_answers)
    if em:
        f1 = 1.0
    return em, f1


def metric_report(values: Dict[str, float]) -> Dict[str, float]:
    """Plain-float copy suitable for JSON; rejects non-finite values."""
    report = {}
    for name, value in values.items():
        value = float(value)
        if not math.isfinite(value):
            raise OutOfRangeError("metric value is not finite", metric=name)
        report[name] = value
    return report
