"""Dataset loading, benchmark orchestration and report assembly for the CLI."""

import logging
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from adapters import (
    AdaptedExample,
    ConsistencySample,
    CorefSample,
    McqSample,
    QaSample,
    Task,
    adapt_binary_pair,
    adapt_coref_pairs,
    adapt_sts,
    adapt_three_way,
    answerability_pairs,
    build_mcq_pairs,
    score_consistency,
    solve_coref,
    solve_mcq,
    synthesize_masked_negative,
    synthesize_qa_negatives,
)
from contamination import (
    DEFAULT_MIN_SUBSET_SIZE,
    HASH_BITS,
    PERCENTILE_METHOD,
    ContaminationReport,
    Partition,
    build_ngram_index,
    choose_n,
    classify_examples,
    contamination_delta,
    text_ngrams,
)
from core import BinaryLabel, HeadSelector, LexicalScorer, PairScorer, Target, TextPair, score_pair
from errors import (
    AlignmentError,
    ConstantInputError,
    EmptyInputError,
    ExampleFailure,
    InputError,
    OutOfRangeError,
    SchemaViolation,
    SingleClassError,
    TooShortError,
)
from metrics import (
    KENDALL_VARIANTS,
    NO_ANSWER,
    ScoredBinarySet,
    accuracy,
    correlations,
    metric_report,
    roc_auc,
)
from score_cache import CachedScorer, ScoreCache
from segment import AggregationMode, aggregate_align, aggregate_three_way
from utils import dump_json, read_jsonl, record_text
from verifier import (
    VerifiedPrediction,
    VerifierConfig,
    baseline_unanswerable_score,
    evaluate_verified,
    prediction_probability,
    threshold_sweep,
    tune_threshold,
    verify_all,
)

logger = logging.getLogger(__name__)

TASKS = ("nli", "fv", "sts", "pair", "mcq", "qa", "coref", "geneval", "mixed")
SCHEMA_TASKS = TASKS[:-1]
SCORERS = ("lexical", "onnx")
MIN_MODEL_TOKENS = 16
# 4 special tokens plus one token on each side
MIN_TOKENS = 6

DEFAULT_HEADS = {
    "sts": HeadSelector.REG,
    "pair": HeadSelector.BIN_ALIGNED,
    "mcq": HeadSelector.BIN_ALIGNED,
    "coref": HeadSelector.BIN_ALIGNED,
    "qa": HeadSelector.BIN_ALIGNED,
    "geneval": HeadSelector.THREEWAY_ALIGNED,
}
HEAD_OVERRIDABLE = ("pair", "mcq", "coref", "geneval")

PRIMARY_METRIC = {
    "nli": "accuracy",
    "fv": "accuracy",
    "pair": "accuracy",
    "mcq": "accuracy",
    "coref": "accuracy",
    "sts": "pearson",
    "qa": "f1",
    "geneval": "pearson",
}

# field -> kind; a trailing "?" marks an optional field
SCHEMAS: Dict[str, Dict[str, str]] = {
    "nli": {"premise": "text", "hypothesis": "text", "label": "text"},
    "fv": {"premise": "text", "hypothesis": "text", "label": "text"},
    "sts": {"sentence1": "text", "sentence2": "text", "score": "number", "scale_min": "number",
            "scale_max": "number"},
    "pair": {"x1": "text", "x2": "text", "positive": "bool", "task": "text"},
    "mcq": {"context": "text", "question": "text", "choices": "texts", "answer_index": "int"},
    "qa": {"context": "text", "question": "text", "answers": "texts", "answerable": "bool",
           "qa_prediction": "text?"},
    "coref": {"context": "text", "pronoun_start": "int", "pronoun_end": "int", "candidates": "texts",
              "answer_index": "int"},
    "geneval": {"context": "text", "output": "text", "human_score": "number"},
}


@dataclass
class RunConfig:
    scorer: str = "lexical"
    model_path: Optional[str] = None
    tokenizer_path: Optional[str] = None
    max_tokens: int = 512
    head: Optional[HeadSelector] = None
    mode: AggregationMode = AggregationMode.MEAN_MAX
    task: str = "nli"
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    seed: int = 2022
    jobs: int = 1
    threshold: float = 0.5
    binary_threshold: float = 0.5
    tune_path: Optional[str] = None
    kendall_variant: str = "b"
    cache_path: Optional[str] = None
    min_subset_size: int = DEFAULT_MIN_SUBSET_SIZE
    progress: bool = True

    # settings that change how a run executes but never what it reports
    EXECUTION_ONLY = ("output_path", "jobs", "cache_path", "progress")

    def __post_init__(self):
        if self.scorer not in SCORERS:
            raise OutOfRangeError("unknown scorer", scorer=self.scorer)
        if self.scorer == "onnx":
            if not self.model_path or not self.tokenizer_path:
                raise InputError("the onnx scorer needs --model and --tokenizer")
            if self.max_tokens < MIN_MODEL_TOKENS:
                raise OutOfRangeError(f"model backends need --max-tokens >= {MIN_MODEL_TOKENS}",
                                      max_tokens=self.max_tokens)
        if self.max_tokens < MIN_TOKENS:
            raise OutOfRangeError(f"--max-tokens must be at least {MIN_TOKENS}", max_tokens=self.max_tokens)
        if self.task not in TASKS:
            raise OutOfRangeError("unknown task", task=self.task)
        if self.jobs < 1:
            raise OutOfRangeError("--jobs must be at least 1", jobs=self.jobs)
        for name in ("threshold", "binary_threshold"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise OutOfRangeError(f"{name} must lie in [0, 1]", value=getattr(self, name))
        if self.kendall_variant not in KENDALL_VARIANTS:
            raise OutOfRangeError("unknown Kendall variant", variant=self.kendall_variant)
        if self.min_subset_size < 1:
            raise OutOfRangeError("minimum subset size must be positive", min_subset_size=self.min_subset_size)

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        def arg(name, default=None):
            value = getattr(args, name, None)
            return default if value is None else value

        return cls(
            scorer=arg("scorer", "lexical"),
            model_path=arg("model"),
            tokenizer_path=arg("tokenizer"),
            max_tokens=arg("max_tokens", 512),
            head=HeadSelector(args.head) if getattr(args, "head", None) else None,
            mode=AggregationMode(arg("agg", AggregationMode.MEAN_MAX.value)),
            task=arg("task", "nli"),
            input_path=arg("input"),
            output_path=arg("output"),
            seed=arg("seed", 2022),
            jobs=arg("jobs", 1),
            threshold=arg("threshold", 0.5),
            binary_threshold=arg("binary_threshold", 0.5),
            tune_path=arg("tune"),
            kendall_variant=arg("kendall", "b"),
            cache_path=arg("cache"),
            min_subset_size=arg("min_subset_size", DEFAULT_MIN_SUBSET_SIZE),
            progress=not getattr(args, "quiet", False),
        )

    def head_for(self, task: str) -> HeadSelector:
        if self.head is not None and task in HEAD_OVERRIDABLE:
            return self.head
        return DEFAULT_HEADS[task]

    def to_echo(self) -> Dict[str, Any]:
        echo = {}
        for name, value in asdict(self).items():
            if name in self.EXECUTION_ONLY:
                continue
            if name in ("model_path", "tokenizer_path", "input_path", "tune_path") and value:
                value = Path(value).name
            elif isinstance(value, (HeadSelector, AggregationMode)):
                value = value.value
            echo[name] = value
        return echo


@dataclass
class Example:
    id: str
    task: str
    sample: Any
    text: str
    line: int = 0


@dataclass
class EvalReport:
    dataset: str
    example_count: int
    metrics: Dict[str, float]
    config: Dict[str, Any] = field(default_factory=dict)
    duration_seconds: float = 0.0

    def __post_init__(self):
        if self.example_count < 1:
            raise EmptyInputError("a report needs at least one example")
        self.metrics = metric_report(self.metrics)

    def to_dict(self, include_duration: bool = True) -> Dict[str, Any]:
        data = asdict(self)
        if not include_duration:
            data.pop("duration_seconds")
        return data

    def to_json(self, include_duration: bool = True) -> str:
        return dump_json(self.to_dict(include_duration))


# ---------------------------------------------------------------- loading

def _check_field(record: Dict[str, Any], name: str, kind: str, line: int) -> None:
    optional = kind.endswith("?")
    kind = kind.rstrip("?")
    if name not in record or record[name] is None:
        if optional:
            return
        raise SchemaViolation(f"missing field {name!r}", line=line, field=name)
    value = record[name]
    if kind == "text":
        ok = isinstance(value, str)
    elif kind == "texts":
        ok = isinstance(value, list) and all(isinstance(item, str) for item in value)
    elif kind == "bool":
        ok = isinstance(value, bool)
    elif kind == "int":
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if not ok:
        raise SchemaViolation(f"field {name!r} must be {kind}", line=line, field=name,
                              got=type(value).__name__)


def _build_sample(schema: str, record: Dict[str, Any], example_id: str) -> Any:
    if schema in ("nli", "fv"):
        task = Task.NLI if schema == "nli" else Task.FACT_VERIFICATION
        return adapt_three_way(record["premise"], record["hypothesis"], record["label"], task, example_id)
    if schema == "sts":
        return adapt_sts(record["sentence1"], record["sentence2"], float(record["score"]),
                         (float(record["scale_min"]), float(record["scale_max"])), example_id)
    if schema == "pair":
        return adapt_binary_pair(record["x1"], record["x2"], record["positive"], Task(record["task"]),
                                 example_id)
    if schema == "mcq":
        return McqSample(record["context"], record["question"], tuple(record["choices"]),
                         record["answer_index"], example_id)
    if schema == "qa":
        return QaSample(record["context"], record["question"], tuple(record["answers"]),
                        record["answerable"], record.get("qa_prediction"), example_id)
    if schema == "coref":
        return CorefSample(record["context"], (record["pronoun_start"], record["pronoun_end"]),
                           tuple(record["candidates"]), record["answer_index"], example_id)
    return ConsistencySample(record["context"], record["output"], float(record["human_score"]), example_id)


def parse_record(record: Dict[str, Any], task: str, line: int) -> Example:
    schema = task
    if task == "mixed":
        schema = record.get("schema")
        if schema not in SCHEMA_TASKS:
            raise SchemaViolation("mixed records need a known 'schema'", line=line, field="schema",
                                  schema=schema)
    for name, kind in SCHEMAS[schema].items():
        _check_field(record, name, kind, line)
    if schema == "pair" and record["task"] not in ("paraphrase", "ir", "summarization"):
        raise SchemaViolation("pair task must be paraphrase, ir or summarization", line=line, field="task")

    example_id = record.get("id") if isinstance(record.get("id"), str) and record.get("id") else f"line-{line}"
    try:
        sample = _build_sample(schema, record, example_id)
    except AlignmentError as exc:
        raise ExampleFailure(example_id, exc) from exc
    return Example(id=example_id, task=schema, sample=sample, text=record_text(record), line=line)


def load_dataset(path: str, task: str) -> List[Example]:
    """Validated examples of one JSONL file, in file order."""
    if task not in TASKS:
        raise OutOfRangeError("unknown task", task=task)
    examples = [parse_record(record, task, line) for line, record in read_jsonl(path)]
    if not examples:
        raise EmptyInputError("dataset is empty", path=str(path))
    logger.info("loaded %d %s examples from %s", len(examples), task, path)
    return examples


# ---------------------------------------------------------------- scoring

def build_scorer(config: RunConfig) -> PairScorer:
    if config.scorer == "onnx":
        from onnx_scorer import OnnxPairScorer

        scorer = OnnxPairScorer(config.model_path, config.tokenizer_path, config.max_tokens)
    else:
        scorer = LexicalScorer(config.max_tokens)
    if config.cache_path:
        scorer = CachedScorer(scorer, ScoreCache(config.cache_path))
    return scorer


def verifier_config(config: RunConfig, threshold: Optional[float] = None) -> VerifierConfig:
    return VerifierConfig(
        threshold=config.threshold if threshold is None else threshold,
        head=config.head_for("qa"),
        sentinel=NO_ANSWER,
        mode=config.mode,
    )


def score_example(example: Example, scorer: PairScorer, config: RunConfig) -> Tuple[Any, Any]:
    """(system output, gold) for one example."""
    task, sample = example.task, example.sample
    if task in ("nli", "fv"):
        pair = sample.pair
        if scorer.count_pair_tokens(pair) <= scorer.max_tokens:
            p3 = score_pair(scorer, pair).p3
        else:
            p3 = aggregate_three_way(scorer, pair.x1, pair.x2, config.mode)
        return int(np.argmax(p3)), sample.target.label.value
    if task == "pair":
        p = aggregate_align(scorer, sample.pair.x1, sample.pair.x2, config.head_for(task), config.mode)
        return int(p < config.binary_threshold), sample.target.label.value
    if task == "sts":
        value = aggregate_align(scorer, sample.pair.x1, sample.pair.x2, config.head_for(task), config.mode)
        return value, sample.target.value
    if task == "mcq":
        return solve_mcq(scorer, sample, config.head_for(task), config.mode), sample.answer_index
    if task == "coref":
        return solve_coref(scorer, sample, config.head_for(task), config.mode), sample.answer_index
    if task == "qa":
        if sample.qa_prediction is None:
            raise SchemaViolation("qa evaluation needs a qa_prediction", line=example.line,
                                  field="qa_prediction")
        return prediction_probability(scorer, sample, sample.qa_prediction, verifier_config(config)), None
    value = score_consistency(scorer, sample.context, sample.output, config.mode, config.head_for(task))
    return value, sample.human_score


def score_examples(examples: Sequence[Example], scorer: PairScorer, config: RunConfig) -> List[Tuple[Any, Any]]:
    """Outcomes in input order; the pool only changes how fast they arrive."""

    def run(example: Example):
        try:
            return score_example(example, scorer, config)
        except AlignmentError as exc:
            raise ExampleFailure(example.id, exc) from exc

    workers = 1 if scorer.single_flight else config.jobs
    progress = dict(total=len(examples), desc="scoring", unit="ex", disable=not config.progress)
    if workers == 1:
        return [run(example) for example in tqdm(examples, **progress)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(tqdm(pool.map(run, examples), **progress))


def _binary_human_labels(values: Sequence[float]) -> bool:
    return all(value in (0.0, 1.0) for value in values)


def summarize_task(
    task: str,
    examples: Sequence[Example],
    outcomes: Sequence[Tuple[Any, Any]],
    config: RunConfig,
    threshold: Optional[float] = None,
) -> Dict[str, float]:
    """Metric vocabulary of one task from its scored outcomes."""
    systems = [system for system, _ in outcomes]
    golds = [gold for _, gold in outcomes]
    if task in ("nli", "fv", "pair", "mcq", "coref"):
        return {"accuracy": accuracy(systems, golds)}
    if task == "sts":
        return correlations(systems, golds, config.kendall_variant).to_dict()
    if task == "qa":
        tau = config.threshold if threshold is None else threshold
        samples = [example.sample for example in examples]
        predictions = verify_all(None, samples, verifier_config(config, tau), probabilities=systems)
        metrics = evaluate_verified(samples, predictions, NO_ANSWER)
        metrics["threshold"] = tau
        return metrics

    metrics = correlations(systems, golds, config.kendall_variant).to_dict()
    if _binary_human_labels(golds):
        if len(set(golds)) == 2:
            metrics["auc"] = roc_auc(ScoredBinarySet.of(systems, [int(g) for g in golds]))
        else:
            logger.warning("geneval human labels hold one class; AUC skipped")
    return metrics


def primary_metric(task: str, examples: Sequence[Example]) -> str:
    if task == "geneval" and _binary_human_labels([e.sample.human_score for e in examples]):
        return "auc"
    return PRIMARY_METRIC[task]


def group_by_task(examples: Sequence[Example]) -> "OrderedDict[str, List[int]]":
    groups: "OrderedDict[str, List[int]]" = OrderedDict()
    for position, example in enumerate(examples):
        groups.setdefault(example.task, []).append(position)
    return groups


def tuned_threshold(scorer: PairScorer, config: RunConfig) -> Tuple[float, Optional[List[Tuple[float, float]]]]:
    """The configured threshold, or the dev-tuned one with its F1 sweep when --tune is set."""
    if not config.tune_path:
        return config.threshold, None
    dev = load_dataset(config.tune_path, "qa")
    outcomes = score_examples(dev, scorer, replace(config, task="qa"))
    pairs = [(example.sample, p) for example, (p, _) in zip(dev, outcomes)]
    tau, _ = tune_threshold(pairs, NO_ANSWER)
    return tau, threshold_sweep(pairs, NO_ANSWER)


def evaluate_examples(examples: Sequence[Example], scorer: PairScorer, config: RunConfig) -> Dict[str, float]:
    outcomes = score_examples(examples, scorer, config)
    groups = group_by_task(examples)
    threshold = tuned_threshold(scorer, config)[0] if "qa" in groups else None

    metrics: Dict[str, float] = {}
    for task, positions in groups.items():
        task_metrics = summarize_task(task, [examples[i] for i in positions],
                                      [outcomes[i] for i in positions], config, threshold)
        for name, value in sorted(task_metrics.items()):
            metrics[f"{task}.{name}" if config.task == "mixed" else name] = value
    return metrics


def run_benchmark(config: RunConfig, scorer: Optional[PairScorer] = None) -> EvalReport:
    examples = load_dataset(config.input_path, config.task)
    scorer = scorer or build_scorer(config)
    started = time.perf_counter()
    metrics = evaluate_examples(examples, scorer, config)
    report = EvalReport(
        dataset=Path(config.input_path).stem,
        example_count=len(examples),
        metrics=metrics,
        config=config.to_echo(),
        duration_seconds=round(time.perf_counter() - started, 3),
    )
    logger.info("%s: %s", report.dataset, ", ".join(f"{k}={v:.4f}" for k, v in report.metrics.items()))
    return report


def score_text_pair(scorer: PairScorer, x1: str, x2: str, config: RunConfig) -> Dict[str, Any]:
    """Three-head output for the raw pair when it fits, and the aggregated score always."""
    head = config.head or HeadSelector.THREEWAY_ALIGNED
    pair = TextPair(x1, x2)
    tokens = scorer.count_pair_tokens(pair)
    return {
        "head": head.value,
        "mode": config.mode.value,
        "pair_tokens": tokens,
        "pair": score_pair(scorer, pair).to_dict() if tokens <= scorer.max_tokens else None,
        "aggregate": aggregate_align(scorer, x1, x2, head, config.mode, config.jobs),
    }


@dataclass
class VerificationRun:
    report: EvalReport
    predictions: List[VerifiedPrediction]
    labels: List[int]
    sweep: Optional[List[Tuple[float, float]]] = None


def qa_model_metrics(samples: Sequence[QaSample]) -> Dict[str, float]:
    """EM/F1/AUC of the QA model's own predictions, abstentions scored 1 and answers 0."""
    baseline = [
        VerifiedPrediction(sample.qa_prediction, baseline_unanswerable_score(sample.qa_prediction), sample.id)
        for sample in samples
    ]
    return {f"qa_model.{name}": value for name, value in evaluate_verified(samples, baseline, NO_ANSWER).items()}


def run_verification(config: RunConfig, scorer: Optional[PairScorer] = None) -> VerificationRun:
    """Verify every qa_prediction of a QA file, tuning the threshold on --tune when given."""
    qa_config = replace(config, task="qa")
    examples = load_dataset(qa_config.input_path, "qa")
    scorer = scorer or build_scorer(qa_config)
    started = time.perf_counter()

    threshold, sweep = tuned_threshold(scorer, qa_config)
    outcomes = score_examples(examples, scorer, qa_config)
    samples = [example.sample for example in examples]
    predictions = verify_all(None, samples, verifier_config(qa_config, threshold),
                             probabilities=[p for p, _ in outcomes])
    metrics = evaluate_verified(samples, predictions, NO_ANSWER)
    metrics["threshold"] = threshold
    metrics.update(qa_model_metrics(samples))

    report = EvalReport(
        dataset=Path(qa_config.input_path).stem,
        example_count=len(examples),
        metrics=metrics,
        config=qa_config.to_echo(),
        duration_seconds=round(time.perf_counter() - started, 3),
    )
    labels = [0 if sample.answerable else 1 for sample in samples]
    return VerificationRun(report=report, predictions=predictions, labels=labels, sweep=sweep)


# ---------------------------------------------------------------- adapting

def adapt_example(example: Example, negatives: bool = False, seed: int = 2022) -> List[AdaptedExample]:
    """Alignment-format pairs for one example, plus synthetic negatives when asked."""
    task, sample = example.task, example.sample
    if task in ("nli", "fv", "sts"):
        return [sample]
    if task == "pair":
        adapted = [sample]
        if negatives and sample.target.label is BinaryLabel.ALIGNED:
            try:
                adapted.append(synthesize_masked_negative(sample.pair.x1, sample.pair.x2, sample.task, seed))
            except TooShortError:
                logger.debug("%s: too short for a masked negative", example.id)
        return adapted
    if task == "mcq":
        return build_mcq_pairs(sample)
    if task == "coref":
        return adapt_coref_pairs(sample)
    if task == "qa":
        adapted = answerability_pairs(sample)
        if negatives:
            adapted.extend(synthesize_qa_negatives(sample, seed))
        return adapted
    if not (0.0 <= sample.human_score <= 1.0):
        raise OutOfRangeError("consistency scores must lie in [0, 1] to adapt", id=example.id)
    return [AdaptedExample(TextPair(sample.context, sample.output), Target.regression(sample.human_score),
                           Task.CONSISTENCY, sample.id)]


def adapt_records(examples: Sequence[Example], negatives: bool = False, seed: int = 2022) -> List[AdaptedExample]:
    adapted: List[AdaptedExample] = []
    for offset, example in enumerate(examples):
        try:
            adapted.extend(adapt_example(example, negatives, seed + offset))
        except AlignmentError as exc:
            raise ExampleFailure(example.id, exc) from exc
    logger.info("adapted %d examples into %d pairs", len(examples), len(adapted))
    return adapted


# ---------------------------------------------------------------- contamination

@dataclass
class ContaminationRun:
    report: ContaminationReport
    partition: Partition
    metric: str
    details: Dict[str, Any]


def sample_examples(examples: Sequence[Example], limit: Optional[int], seed: int) -> List[Example]:
    if not limit or len(examples) <= limit:
        return list(examples)
    rng = np.random.default_rng(seed)
    keep = sorted(int(i) for i in rng.choice(len(examples), size=limit, replace=False))
    logger.info("sampled %d of %d evaluation examples", limit, len(examples))
    return [examples[i] for i in keep]


def _subset_metric(
    task: str,
    metric: str,
    examples: Sequence[Example],
    outcomes: Sequence[Tuple[Any, Any]],
    positions: Sequence[int],
    config: RunConfig,
) -> float:
    """Only the named metric, so an undefined companion metric cannot sink the subset."""
    subset = [examples[i] for i in positions]
    scored = [outcomes[i] for i in positions]
    systems = [system for system, _ in scored]
    golds = [gold for _, gold in scored]
    if metric == "auc":
        return roc_auc(ScoredBinarySet.of(systems, [int(gold) for gold in golds]))
    if metric == "pearson":
        return correlations(systems, golds, config.kendall_variant).pearson
    return summarize_task(task, subset, scored, config)[metric]


def run_contamination(
    config: RunConfig,
    train_path: str,
    n: Optional[int] = None,
    sample: Optional[int] = None,
    scorer: Optional[PairScorer] = None,
) -> ContaminationRun:
    if config.task == "mixed":
        raise OutOfRangeError("contamination runs on a single-schema task")
    examples = sample_examples(load_dataset(config.input_path, config.task), sample, config.seed)
    eval_texts = [example.text for example in examples]
    train_texts = [record_text(record) for _, record in read_jsonl(train_path)]
    if not train_texts:
        raise EmptyInputError("training corpus is empty", path=train_path)

    n = n or choose_n(eval_texts)
    index = build_ngram_index(train_texts, n, progress=config.progress)
    partition = classify_examples(index, eval_texts)

    scorer = scorer or build_scorer(config)
    outcomes = score_examples(examples, scorer, config)
    metric = primary_metric(config.task, examples)
    everything = range(len(examples))
    clean, dirty = partition.clean, partition.dirty

    def subset(name: str, positions: Sequence[int]) -> Optional[float]:
        if len(positions) < config.min_subset_size:
            return None
        try:
            return _subset_metric(config.task, metric, examples, outcomes, positions, config)
        except (ConstantInputError, SingleClassError, EmptyInputError) as exc:
            logger.warning("%s is undefined on the %s subset (%s); reported as null", metric, name, exc.code)
            return None

    report = contamination_delta(
        n=n,
        metric_full=_subset_metric(config.task, metric, examples, outcomes, everything, config),
        clean_size=len(clean),
        dirty_size=len(dirty),
        metric_clean=subset("clean", clean),
        metric_dirty=subset("dirty", dirty),
        min_subset_size=config.min_subset_size,
    )
    if min(len(clean), len(dirty)) < config.min_subset_size:
        logger.warning("subset below %d examples; its metric is suppressed (clean %d, dirty %d)",
                       config.min_subset_size, len(clean), len(dirty))
    logger.info("n=%d: %.1f%% of %d examples dirty", n, 100 * report.dirty_fraction, len(examples))

    queries = sum(len(text_ngrams(text, n)) for text in eval_texts)
    details = {
        "metric": metric,
        "percentile_method": PERCENTILE_METHOD,
        "hash_bits": HASH_BITS,
        "indexed_ngrams": len(index),
        "false_positive_probability": index.false_positive_probability(queries),
        "train_documents": len(train_texts),
        "eval_examples": len(examples),
        "clean_size": len(clean),
        "dirty_size": len(dirty),
        "dirty_ids": [examples[i].id for i in dirty],
    }
    return ContaminationRun(report=report, partition=partition, metric=metric, details=details)
