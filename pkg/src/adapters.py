"""Task adapters into (x1, x2, target) alignment format, the choice solvers and synthetic negatives."""

import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from core import BinaryLabel, HeadSelector, PairScorer, Target, TargetKind, TextPair, ThreeWayLabel
from errors import EmptyTextError, OutOfRangeError, SpanOutOfBoundsError, TooShortError, UnknownLabelError
from metrics import normalize_answer
from segment import AggregationMode, aggregate_align, split_sentences

JOINER = " "
MASK = "<mask>"


class Task(Enum):
    NLI = "nli"
    FACT_VERIFICATION = "fact_verification"
    STS = "sts"
    PARAPHRASE = "paraphrase"
    IR = "ir"
    QA = "qa"
    COREF = "coref"
    SUMMARIZATION = "summarization"
    CONSISTENCY = "consistency"


# DocNLI-style binary NLI data uses the binary head, hence BINARY is allowed for nli
TASK_TARGETS = {
    Task.NLI: {TargetKind.THREE_WAY, TargetKind.BINARY},
    Task.FACT_VERIFICATION: {TargetKind.THREE_WAY, TargetKind.BINARY},
    Task.STS: {TargetKind.REGRESSION},
    Task.PARAPHRASE: {TargetKind.BINARY},
    Task.IR: {TargetKind.BINARY},
    Task.QA: {TargetKind.BINARY},
    Task.COREF: {TargetKind.BINARY},
    Task.SUMMARIZATION: {TargetKind.BINARY},
    Task.CONSISTENCY: {TargetKind.BINARY, TargetKind.REGRESSION},
}

THREE_WAY_LABELS = {
    "entail": ThreeWayLabel.ALIGNED,
    "entailment": ThreeWayLabel.ALIGNED,
    "contradict": ThreeWayLabel.CONTRADICT,
    "contradiction": ThreeWayLabel.CONTRADICT,
    "neutral": ThreeWayLabel.NEUTRAL,
}

BINARY_PAIR_TASKS = (Task.PARAPHRASE, Task.IR, Task.SUMMARIZATION)


def stable_id(task: Task, x1: str, x2: str) -> str:
    digest = hashlib.blake2b(f"{x1}\x00{x2}".encode("utf-8"), digest_size=6).hexdigest()
    return f"{task.value}-{digest}"


@dataclass(frozen=True)
class AdaptedExample:
    pair: TextPair
    target: Target
    task: Task
    id: str = ""

    def __post_init__(self):
        if self.target.kind not in TASK_TARGETS[self.task]:
            raise OutOfRangeError("target kind does not fit the task",
                                  task=self.task.value, kind=self.target.kind.value)
        if not self.id:
            object.__setattr__(self, "id", stable_id(self.task, self.pair.x1, self.pair.x2))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "task": self.task.value,
            "x1": self.pair.x1,
            "x2": self.pair.x2,
            "target": self.target.to_dict(),
        }


@dataclass(frozen=True)
class McqSample:
    context: str
    question: str
    choices: Tuple[str, ...]
    answer_index: int
    id: str = ""

    def __post_init__(self):
        if len(self.choices) < 2:
            raise OutOfRangeError("multiple choice needs at least two choices", choices=len(self.choices))
        if not (0 <= self.answer_index < len(self.choices)):
            raise OutOfRangeError("answer_index outside the choices", answer_index=self.answer_index)


@dataclass(frozen=True)
class QaSample:
    context: str
    question: str
    gold_answers: Tuple[str, ...]
    answerable: bool
    qa_prediction: Optional[str] = None
    id: str = ""

    def __post_init__(self):
        if self.answerable != bool(self.gold_answers):
            raise OutOfRangeError("answerable must be true exactly when gold answers exist",
                                  answerable=self.answerable, golds=len(self.gold_answers))


@dataclass(frozen=True)
class CorefSample:
    context: str
    pronoun_span: Tuple[int, int]
    candidates: Tuple[str, ...]
    answer_index: int
    id: str = ""

    def __post_init__(self):
        start, end = self.pronoun_span
        if not (0 <= start < end <= len(self.context)):
            raise SpanOutOfBoundsError("pronoun span outside the context", span=self.pronoun_span)
        if len(self.candidates) < 2:
            raise OutOfRangeError("coreference needs at least two candidates", candidates=len(self.candidates))
        if not (0 <= self.answer_index < len(self.candidates)):
            raise OutOfRangeError("answer_index outside the candidates", answer_index=self.answer_index)

    def substitute(self, candidate: str) -> str:
        start, end = self.pronoun_span
        return self.context[:start] + candidate + self.context[end:]


@dataclass(frozen=True)
class ConsistencySample:
    """A generation context, a system output and its human judgement."""

    context: str
    output: str
    human_score: float
    id: str = ""


def join_question(question: str, answer: str) -> str:
    if not question or not question.strip():
        raise EmptyTextError("question is empty")
    if not answer or not answer.strip():
        raise EmptyTextError("answer is empty")
    return question + JOINER + answer


def adapt_three_way(premise: str, hypothesis: str, label: str, task: Task = Task.NLI, id: str = "") -> AdaptedExample:
    try:
        mapped = THREE_WAY_LABELS[label.strip().lower()]
    except (KeyError, AttributeError):
        raise UnknownLabelError("unknown 3-way label", label=label) from None
    return AdaptedExample(TextPair(premise, hypothesis), Target.three_way(mapped), task, id)


def adapt_sts(sentence1: str, sentence2: str, raw_score: float, scale: Tuple[float, float], id: str = "") -> AdaptedExample:
    low, high = scale
    if not low < high:
        raise OutOfRangeError("scale minimum must be below its maximum", scale=scale)
    if not (low <= raw_score <= high):
        raise OutOfRangeError("score outside its scale", score=raw_score, scale=scale)
    value = (raw_score - low) / (high - low)
    return AdaptedExample(TextPair(sentence1, sentence2), Target.regression(value), Task.STS, id)


def adapt_binary_pair(x1: str, x2: str, positive: bool, task: Task, id: str = "") -> AdaptedExample:
    """Document or source text is always x1; query, paraphrase or summary is x2."""
    if task not in BINARY_PAIR_TASKS:
        raise UnknownLabelError("binary pair task must be paraphrase, ir or summarization", task=task.value)
    label = BinaryLabel.ALIGNED if positive else BinaryLabel.NOT_ALIGNED
    return AdaptedExample(TextPair(x1, x2), Target.binary(label), task, id)


def build_mcq_pairs(sample: McqSample) -> List[AdaptedExample]:
    pairs = []
    for index, choice in enumerate(sample.choices):
        label = BinaryLabel.ALIGNED if index == sample.answer_index else BinaryLabel.NOT_ALIGNED
        pair = TextPair(sample.context, join_question(sample.question, choice))
        pairs.append(AdaptedExample(pair, Target.binary(label), Task.QA,
                                    f"{sample.id}-{index}" if sample.id else ""))
    return pairs


def _argmax(scores: Sequence[float]) -> int:
    # first maximum wins, so ties go to the lowest index
    return int(np.argmax(np.asarray(scores, dtype=np.float64)))


def solve_mcq(
    scorer: PairScorer,
    sample: McqSample,
    head: HeadSelector = HeadSelector.BIN_ALIGNED,
    mode: AggregationMode = AggregationMode.MEAN_MAX,
) -> int:
    scores = [
        aggregate_align(scorer, sample.context, join_question(sample.question, choice), head, mode)
        for choice in sample.choices
    ]
    return _argmax(scores)


def _matches_gold(candidate: str, golds: Sequence[str]) -> bool:
    normalized = normalize_answer(candidate)
    return any(normalized == normalize_answer(gold) for gold in golds)


def adapt_answerability(sample: QaSample, candidate_answer: str, id: str = "") -> AdaptedExample:
    aligned = sample.answerable and _matches_gold(candidate_answer, sample.gold_answers)
    label = BinaryLabel.ALIGNED if aligned else BinaryLabel.NOT_ALIGNED
    pair = TextPair(sample.context, join_question(sample.question, candidate_answer))
    return AdaptedExample(pair, Target.binary(label), Task.QA, id)


def answerability_pairs(sample: QaSample, wrong_answers: Sequence[str] = ()) -> List[AdaptedExample]:
    """One positive pair per gold answer, one negative per wrong answer."""
    examples = []
    for index, gold in enumerate(sample.gold_answers):
        examples.append(adapt_answerability(sample, gold, f"{sample.id}-gold{index}" if sample.id else ""))
    for index, wrong in enumerate(wrong_answers):
        examples.append(adapt_answerability(sample, wrong, f"{sample.id}-neg{index}" if sample.id else ""))
    return examples


def solve_coref(
    scorer: PairScorer,
    sample: CorefSample,
    head: HeadSelector = HeadSelector.BIN_ALIGNED,
    mode: AggregationMode = AggregationMode.MEAN_MAX,
) -> int:
    scores = [
        aggregate_align(scorer, sample.context, sample.substitute(candidate), head, mode)
        for candidate in sample.candidates
    ]
    return _argmax(scores)


def adapt_coref_pairs(sample: CorefSample) -> List[AdaptedExample]:
    examples = []
    for index, candidate in enumerate(sample.candidates):
        label = BinaryLabel.ALIGNED if index == sample.answer_index else BinaryLabel.NOT_ALIGNED
        pair = TextPair(sample.context, sample.substitute(candidate))
        examples.append(AdaptedExample(pair, Target.binary(label), Task.COREF,
                                       f"{sample.id}-{index}" if sample.id else ""))
    return examples


def score_consistency(
    scorer: PairScorer,
    context: str,
    output: str,
    mode: AggregationMode = AggregationMode.MEAN_MAX,
    head: HeadSelector = HeadSelector.THREEWAY_ALIGNED,
) -> float:
    return aggregate_align(scorer, context, output, head, mode)


# Synthetic-data hooks. Each default is a cheap stand-in for the neural component.

Infiller = Callable[[List[str], List[int], np.random.Generator], List[str]]
WrongAnswerGenerator = Callable[[QaSample, np.random.Generator], List[str]]
Paraphraser = Callable[[str], str]
Summarizer = Callable[[str], str]


@dataclass(frozen=True)
class MaskPlan:
    tokens: Tuple[str, ...]
    positions: Tuple[int, ...]

    @property
    def masked_text(self) -> str:
        masked = list(self.tokens)
        for position in self.positions:
            masked[position] = MASK
        return " ".join(masked)


def mask_negative_plan(text: str, rng_seed: int, mask_fraction: float = 0.25) -> MaskPlan:
    """Choose ceil(fraction * N) distinct token positions to mask, reproducibly for a seed."""
    if not (0.0 < mask_fraction <= 1.0):
        raise OutOfRangeError("mask fraction must lie in (0, 1]", mask_fraction=mask_fraction)
    tokens = text.split()
    if len(tokens) < 4:
        raise TooShortError("masking needs at least 4 tokens", tokens=len(tokens))
    count = math.ceil(mask_fraction * len(tokens))
    rng = np.random.default_rng(rng_seed)
    positions = rng.choice(len(tokens), size=count, replace=False)
    return MaskPlan(tokens=tuple(tokens), positions=tuple(sorted(int(p) for p in positions)))


def vocabulary_infiller(tokens: List[str], positions: List[int], rng: np.random.Generator) -> List[str]:
    vocabulary = sorted(set(tokens))
    return [vocabulary[int(rng.integers(len(vocabulary)))] for _ in positions]


def infill_masked(plan: MaskPlan, rng_seed: int, infiller: Infiller = vocabulary_infiller) -> str:
    rng = np.random.default_rng(rng_seed)
    fills = infiller(list(plan.tokens), list(plan.positions), rng)
    filled = list(plan.tokens)
    for position, token in zip(plan.positions, fills):
        filled[position] = token
    return " ".join(filled)


def synthesize_masked_negative(
    source: str,
    text: str,
    task: Task,
    rng_seed: int,
    infiller: Infiller = vocabulary_infiller,
    mask_fraction: float = 0.25,
) -> AdaptedExample:
    """Mask and infill ``text`` to build a NOT_ALIGNED pair against ``source``."""
    plan = mask_negative_plan(text, rng_seed, mask_fraction)
    corrupted = infill_masked(plan, rng_seed, infiller)
    return adapt_binary_pair(source, corrupted, False, task)


def context_span_wrong_answers(sample: QaSample, rng: np.random.Generator, count: int = 1) -> List[str]:
    """Short spans of the context, with every gold answer removed, that match no gold answer."""
    context = sample.context
    for gold in sample.gold_answers:
        context = context.replace(gold, " ")
    words = context.split()
    if not words:
        return []
    answers: List[str] = []
    for _ in range(count * 10):
        if len(answers) == count:
            break
        length = int(rng.integers(1, 4))
        start = int(rng.integers(max(1, len(words) - length + 1)))
        span = " ".join(words[start:start + length])
        if span and span not in answers and not _matches_gold(span, sample.gold_answers):
            answers.append(span)
    return answers


def synthesize_qa_negatives(
    sample: QaSample,
    rng_seed: int,
    generator: Optional[WrongAnswerGenerator] = None,
) -> List[AdaptedExample]:
    rng = np.random.default_rng(rng_seed)
    wrong = generator(sample, rng) if generator else context_span_wrong_answers(sample, rng)
    return [adapt_answerability(sample, answer) for answer in wrong]


def identity_paraphraser(text: str) -> str:
    return text


def synthesize_paraphrase_pair(text: str, paraphraser: Paraphraser = identity_paraphraser) -> AdaptedExample:
    return adapt_binary_pair(text, paraphraser(text), True, Task.PARAPHRASE)


def lead_summarizer(document: str, sentences: int = 3) -> str:
    return " ".join(split_sentences(document)[:sentences])


def synthesize_summary_pair(document: str, summarizer: Summarizer = lead_summarizer) -> AdaptedExample:
    return adapt_binary_pair(document, summarizer(document), True, Task.SUMMARIZATION)
