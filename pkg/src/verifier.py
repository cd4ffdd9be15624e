"""Answerability verifier: turns alignment scores into abstain decisions for a QA model."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from adapters import QaSample, join_question
from core import HeadSelector, PairScorer
from errors import EmptyDevError, OutOfRangeError
from metrics import NO_ANSWER, ScoredBinarySet, is_no_answer, roc_auc, squad_scores
from segment import AggregationMode, aggregate_align

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerifierConfig:
    threshold: float = 0.5
    head: HeadSelector = HeadSelector.BIN_ALIGNED
    sentinel: str = NO_ANSWER
    mode: AggregationMode = AggregationMode.MEAN_MAX

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise OutOfRangeError("threshold must lie in [0, 1]", threshold=self.threshold)


@dataclass(frozen=True)
class VerifiedPrediction:
    answer: str
    p_unanswerable: float
    id: str = ""

    def __post_init__(self):
        if not (0.0 <= self.p_unanswerable <= 1.0):
            raise OutOfRangeError("p_unanswerable must lie in [0, 1]", p=self.p_unanswerable)

    def to_dict(self) -> dict:
        return {"id": self.id, "answer": self.answer, "p_unanswerable": self.p_unanswerable}


def unanswerable_prob(
    scorer: PairScorer,
    sample: QaSample,
    candidate_answer: str,
    head: HeadSelector = HeadSelector.BIN_ALIGNED,
    mode: AggregationMode = AggregationMode.MEAN_MAX,
) -> float:
    claim = join_question(sample.question, candidate_answer)
    return 1.0 - aggregate_align(scorer, sample.context, claim, head, mode)


def prediction_probability(scorer: PairScorer, sample: QaSample, prediction: str, config: VerifierConfig) -> float:
    # a QA model that already abstained needs no verification
    if is_no_answer(prediction, config.sentinel):
        return 1.0
    return unanswerable_prob(scorer, sample, prediction, config.head, config.mode)


def verify_answer(scorer: PairScorer, sample: QaSample, qa_prediction: str, config: VerifierConfig) -> VerifiedPrediction:
    p = prediction_probability(scorer, sample, qa_prediction, config)
    answer = config.sentinel if p > config.threshold else qa_prediction
    return VerifiedPrediction(answer=answer, p_unanswerable=p, id=sample.id)


def apply_threshold(qa_prediction: str, p_unanswerable: float, threshold: float, sentinel: str = NO_ANSWER) -> str:
    return sentinel if p_unanswerable > threshold else qa_prediction


def candidate_thresholds(probabilities: Sequence[float]) -> List[float]:
    distinct = sorted(set(probabilities))
    midpoints = [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
    return sorted(set([0.0, 1.0] + midpoints))


def mean_f1(dev: Sequence[Tuple[QaSample, float]], threshold: float, sentinel: str = NO_ANSWER) -> float:
    total = 0.0
    for sample, p in dev:
        answer = apply_threshold(sample.qa_prediction, p, threshold, sentinel)
        total += squad_scores(answer, sample.gold_answers, sentinel)[1]
    return total / len(dev)


def threshold_sweep(dev: Sequence[Tuple[QaSample, float]], sentinel: str = NO_ANSWER) -> List[Tuple[float, float]]:
    """(threshold, mean F1) for every candidate threshold, ascending."""
    if not dev:
        raise EmptyDevError("threshold tuning needs at least one dev sample")
    for sample, p in dev:
        if sample.qa_prediction is None:
            raise EmptyDevError("dev sample has no qa_prediction", id=sample.id)
        if not (0.0 <= p <= 1.0):
            raise OutOfRangeError("probability outside [0, 1]", id=sample.id, p=p)
    return [(tau, mean_f1(dev, tau, sentinel)) for tau in candidate_thresholds([p for _, p in dev])]


def tune_threshold(dev: Sequence[Tuple[QaSample, float]], sentinel: str = NO_ANSWER) -> Tuple[float, float]:
    """Threshold with the best mean F1 on ``dev``; the lowest one wins ties."""
    best_tau, best_f1 = None, -1.0
    for tau, f1 in threshold_sweep(dev, sentinel):
        if f1 > best_f1:
            best_tau, best_f1 = tau, f1
    logger.info("tuned unanswerable threshold %.4f (dev F1 %.4f over %d samples)", best_tau, best_f1, len(dev))
    return best_tau, best_f1


def baseline_unanswerable_score(prediction: str, sentinel: str = NO_ANSWER) -> float:
    """Score for systems without probabilities: 0 if they answered, 1 if they abstained."""
    return 1.0 if is_no_answer(prediction, sentinel) else 0.0


def evaluate_verified(
    samples: Sequence[QaSample],
    predictions: Sequence[VerifiedPrediction],
    sentinel: str = NO_ANSWER,
) -> dict:
    """Mean EM/F1 of the verified answers, plus AUC of p_unanswerable when both classes occur."""
    em_total, f1_total = 0.0, 0.0
    for sample, prediction in zip(samples, predictions):
        em, f1 = squad_scores(prediction.answer, sample.gold_answers, sentinel)
        em_total += em
        f1_total += f1
    metrics = {"exact_match": em_total / len(samples), "f1": f1_total / len(samples)}

    labels = [0 if sample.answerable else 1 for sample in samples]
    if len(set(labels)) == 2:
        data = ScoredBinarySet.of([p.p_unanswerable for p in predictions], labels)
        metrics["auc"] = roc_auc(data)
    else:
        logger.warning("all %d QA samples share one answerability label; AUC skipped", len(samples))
    return metrics


def verify_all(
    scorer: PairScorer,
    samples: Sequence[QaSample],
    config: VerifierConfig,
    probabilities: Optional[Sequence[float]] = None,
) -> List[VerifiedPrediction]:
    """Verify every sample's qa_prediction; reuses ``probabilities`` when already computed."""
    if probabilities is None:
        return [verify_answer(scorer, sample, sample.qa_prediction, config) for sample in samples]
    return [
        VerifiedPrediction(
            answer=apply_threshold(sample.qa_prediction, p, config.threshold, config.sentinel),
            p_unanswerable=p,
            id=sample.id,
        )
        for sample, p in zip(samples, probabilities)
    ]
