"""
Tests for dataset loading, benchmark runs, adaptation, contamination runs and the CLI
"""

import json

import pytest

from core import HeadSelector
from errors import EmptyInputError, ExampleFailure, InputError, OutOfRangeError, ParseError, SchemaViolation
from harness import (
    RunConfig,
    adapt_records,
    load_dataset,
    run_benchmark,
    run_contamination,
    run_verification,
    score_text_pair,
)
from main import main

PREMISE = "a b c"
NLI_RECORDS = [
    {"premise": PREMISE, "hypothesis": "a b", "label": "entailment"},
    {"premise": PREMISE, "hypothesis": "x y", "label": "neutral"},
    {"premise": PREMISE, "hypothesis": "a x", "label": "entailment"},
    {"premise": PREMISE, "hypothesis": "x y", "label": "contradiction"},
]

QA_CONTEXT = "The Eiffel Tower was completed in 1889."
QA_RECORDS = [
    {"context": QA_CONTEXT, "question": "The Eiffel Tower was completed in", "answers": ["1889"],
     "answerable": True, "qa_prediction": "1889.", "id": "q-supported"},
    {"context": QA_CONTEXT, "question": "Zebra", "answers": [], "answerable": False,
     "qa_prediction": "quokka", "id": "q-unsupported"},
]


def config_for(path, task, **overrides):
    return RunConfig(task=task, input_path=path, progress=False, **overrides)


def test_load_dataset_keeps_file_order(write_jsonl):
    examples = load_dataset(write_jsonl(NLI_RECORDS[:3]), "nli")
    assert [e.id for e in examples] == ["line-1", "line-2", "line-3"]
    assert examples[0].text == "a b c a b"


def test_missing_field_reports_line_and_field(write_jsonl):
    path = write_jsonl([NLI_RECORDS[0], {"premise": "p", "label": "neutral"}])
    with pytest.raises(SchemaViolation) as info:
        load_dataset(path, "nli")
    assert info.value.code == "SCHEMA_VIOLATION"
    assert info.value.line == 2
    assert info.value.field == "hypothesis"


def test_bool_is_not_an_int(write_jsonl):
    path = write_jsonl([{"x1": "doc", "x2": "query", "positive": 1, "task": "ir"}])
    with pytest.raises(SchemaViolation) as info:
        load_dataset(path, "pair")
    assert info.value.field == "positive"


def test_empty_and_unparseable_files(write_jsonl):
    with pytest.raises(EmptyInputError) as info:
        load_dataset(write_jsonl([]), "nli")
    assert info.value.code == "EMPTY"
    with pytest.raises(ParseError) as info:
        load_dataset(write_jsonl([NLI_RECORDS[0], "{not json"]), "nli")
    assert info.value.line == 2


def test_mixed_records_need_a_schema(write_jsonl):
    with pytest.raises(SchemaViolation) as info:
        load_dataset(write_jsonl([dict(NLI_RECORDS[0])]), "mixed")
    assert info.value.field == "schema"


def test_constructor_errors_name_the_example(write_jsonl):
    path = write_jsonl([{"premise": "p", "hypothesis": "h", "label": "maybe", "id": "bad-one"}])
    with pytest.raises(ExampleFailure) as info:
        load_dataset(path, "nli")
    assert info.value.code == "UNKNOWN_LABEL"
    assert info.value.example_id == "bad-one"
    assert info.value.exit_code == 2


def test_nli_accuracy(write_jsonl):
    report = run_benchmark(config_for(write_jsonl(NLI_RECORDS), "nli"))
    assert report.metrics == {"accuracy": 0.75}
    assert report.example_count == 4
    assert report.dataset == "data"


def test_nli_premise_longer_than_the_scorer_budget(write_jsonl):
    premise = " ".join(f"a b w{k}" for k in range(200)) + "."
    records = [
        {"premise": premise, "hypothesis": "a b", "label": "entailment"},
        {"premise": premise, "hypothesis": "x y", "label": "neutral"},
    ]
    report = run_benchmark(config_for(write_jsonl(records), "nli"))
    assert report.metrics == {"accuracy": 1.0}


def test_geneval_tracks_human_scores(write_jsonl):
    context = "the cat sat on the mat"
    records = [
        {"context": context, "output": "the cat", "human_score": 1.0},
        {"context": context, "output": "the dog", "human_score": 0.5},
        {"context": context, "output": "a bird flew", "human_score": 0.0},
    ]
    metrics = run_benchmark(config_for(write_jsonl(records), "geneval")).metrics
    assert metrics["pearson"] == pytest.approx(1.0)
    assert metrics["spearman"] == pytest.approx(1.0)
    assert "auc" not in metrics


def test_qa_threshold_one_passes_every_prediction(write_jsonl):
    metrics = run_benchmark(config_for(write_jsonl(QA_RECORDS), "qa", threshold=1.0)).metrics
    assert metrics["exact_match"] == 0.5
    assert metrics["f1"] == 0.5
    assert metrics["auc"] == 1.0
    assert metrics["threshold"] == 1.0


def test_qa_needs_predictions(write_jsonl):
    record = {key: value for key, value in QA_RECORDS[0].items() if key != "qa_prediction"}
    with pytest.raises(ExampleFailure) as info:
        run_benchmark(config_for(write_jsonl([record]), "qa"))
    assert info.value.code == "SCHEMA_VIOLATION"


def test_verification_abstains_on_unsupported_answers(write_jsonl):
    run = run_verification(config_for(write_jsonl(QA_RECORDS), "qa"))
    assert [p.answer for p in run.predictions] == ["1889.", "unanswerable"]
    assert [p.p_unanswerable for p in run.predictions] == [0.0, 1.0]
    assert run.labels == [0, 1]
    assert run.report.metrics["f1"] == 1.0
    assert run.sweep is None


def test_verification_reports_the_qa_model_alone(write_jsonl):
    metrics = run_verification(config_for(write_jsonl(QA_RECORDS), "qa")).report.metrics
    assert metrics["qa_model.exact_match"] == 0.5
    assert metrics["qa_model.f1"] == 0.5
    assert metrics["qa_model.auc"] == 0.5
    assert metrics["f1"] > metrics["qa_model.f1"]


def test_qa_model_counts_prose_abstentions(write_jsonl):
    records = [dict(QA_RECORDS[0]), dict(QA_RECORDS[1], qa_prediction="The context does not provide an answer.")]
    metrics = run_verification(config_for(write_jsonl(records), "qa")).report.metrics
    assert metrics["qa_model.exact_match"] == 1.0
    assert metrics["qa_model.auc"] == 1.0


def test_verification_tunes_on_a_dev_file(write_jsonl):
    dev = write_jsonl(QA_RECORDS, "dev.jsonl")
    run = run_verification(config_for(write_jsonl(QA_RECORDS), "qa", tune_path=dev))
    assert run.report.metrics["threshold"] == 0.0
    assert run.report.metrics["f1"] == 1.0
    assert [tau for tau, _ in run.sweep] == [0.0, 0.5, 1.0]


def test_mixed_fixture_is_deterministic(mixed_fixture):
    outputs = {run_benchmark(RunConfig(task="mixed", input_path=mixed_fixture, progress=False))
               .to_json(include_duration=False) for _ in range(3)}
    assert len(outputs) == 1

    threaded = run_benchmark(RunConfig(task="mixed", input_path=mixed_fixture, jobs=8, progress=False))
    assert threaded.to_json(include_duration=False) == outputs.pop()


def test_mixed_metrics_are_namespaced(mixed_fixture):
    report = run_benchmark(RunConfig(task="mixed", input_path=mixed_fixture, progress=False))
    assert report.example_count == 50
    assert {name.split(".")[0] for name in report.metrics} == {
        "nli", "sts", "pair", "mcq", "qa", "coref", "geneval"}
    assert 0.0 <= report.metrics["nli.accuracy"] <= 1.0
    assert report.config["input_path"] == "mixed_50.jsonl"


def test_run_config_validation():
    with pytest.raises(OutOfRangeError):
        RunConfig(max_tokens=5)
    with pytest.raises(InputError):
        RunConfig(scorer="onnx")
    with pytest.raises(OutOfRangeError):
        RunConfig(jobs=0)
    with pytest.raises(OutOfRangeError):
        RunConfig(threshold=1.2)
    with pytest.raises(OutOfRangeError):
        RunConfig(task="translation")


def test_echo_drops_execution_settings():
    echo = RunConfig(input_path="/data/sets/dev.jsonl", jobs=4, cache_path="/tmp/c.db",
                     head=HeadSelector.REG).to_echo()
    assert echo["input_path"] == "dev.jsonl"
    assert echo["head"] == "reg"
    assert echo["mode"] == "mean-max"
    assert echo["seed"] == 2022
    assert not {"jobs", "cache_path", "output_path", "progress"} & set(echo)


def test_head_overrides():
    config = RunConfig(head=HeadSelector.REG)
    assert config.head_for("mcq") is HeadSelector.REG
    assert config.head_for("qa") is HeadSelector.BIN_ALIGNED
    assert RunConfig().head_for("sts") is HeadSelector.REG


def test_score_text_pair(lexical):
    result = score_text_pair(lexical, "the cat sat", "the cat", RunConfig())
    assert result["aggregate"] == 1.0
    assert result["pair"]["reg"] == 1.0
    assert result["head"] == "3way"


def test_adapt_records(write_jsonl):
    mcq = [{"context": "c", "question": "q?", "choices": ["a", "b", "c"], "answer_index": 1, "id": "m"}]
    adapted = adapt_records(load_dataset(write_jsonl(mcq), "mcq"))
    assert len(adapted) == 3
    assert [a.target.label.value for a in adapted] == [1, 0, 1]

    qa = adapt_records(load_dataset(write_jsonl(QA_RECORDS[:1], "qa.jsonl"), "qa"), negatives=True)
    assert qa[0].id == "q-supported-gold0"
    assert len(qa) > 1


def test_adapt_rejects_unscaled_consistency(write_jsonl):
    path = write_jsonl([{"context": "c", "output": "o", "human_score": 4.0, "id": "g"}])
    with pytest.raises(ExampleFailure) as info:
        adapt_records(load_dataset(path, "geneval"))
    assert info.value.code == "OUT_OF_RANGE"


def contamination_files(write_jsonl):
    records = [
        {"premise": "the quick brown fox jumps over the lazy dog", "hypothesis": "a fox jumps",
         "label": "entailment", "id": "seen"},
        {"premise": "a b c", "hypothesis": "a b", "label": "entailment", "id": "fresh"},
    ]
    train = [{"text": "yesterday the quick brown fox jumps over the lazy dog again"}]
    return write_jsonl(records, "eval.jsonl"), write_jsonl(train, "train.jsonl")


def test_contamination_run(write_jsonl):
    eval_path, train_path = contamination_files(write_jsonl)
    run = run_contamination(config_for(eval_path, "nli", min_subset_size=1), train_path, n=8)
    assert run.partition.dirty == [0]
    assert run.details["dirty_ids"] == ["seen"]
    assert run.metric == "accuracy"
    assert run.report.dirty_fraction == 0.5
    assert run.report.metric_clean is not None


def test_contamination_suppresses_small_subsets(write_jsonl):
    eval_path, train_path = contamination_files(write_jsonl)
    run = run_contamination(config_for(eval_path, "nli"), train_path, n=8)
    assert run.report.metric_clean is None
    assert run.report.metric_dirty is None
    with pytest.raises(OutOfRangeError):
        run_contamination(config_for(eval_path, "mixed"), train_path)


@pytest.mark.parametrize("clean_humans, metric", [
    ([0.9, 0.5, 0.1, 0.8, 0.4, 0.2], "pearson"),
    ([1.0, 0.0, 0.0, 1.0, 1.0, 0.0], "auc"),
])
def test_contamination_subset_with_one_human_score(write_jsonl, clean_humans, metric):
    dirty = [{"context": f"the quick brown fox jumps over the lazy dog {k}", "output": "the quick brown fox",
              "human_score": 1.0} for k in range(6)]
    outputs = ["alpha beta", "alpha zeta", "zeta eta"] * 2
    clean = [{"context": f"alpha beta gamma {k}", "output": output, "human_score": human}
             for k, (output, human) in enumerate(zip(outputs, clean_humans))]
    train = write_jsonl([{"text": "the quick brown fox jumps over the lazy dog"}], "train.jsonl")
    config = config_for(write_jsonl(dirty + clean, "eval.jsonl"), "geneval", min_subset_size=3)
    run = run_contamination(config, train, n=8)
    assert run.metric == metric
    assert run.partition.dirty == list(range(6))
    assert run.report.metric_dirty is None
    assert run.report.metric_clean is not None
    assert run.report.delta_clean_vs_full is not None


def test_cli_eval(write_jsonl, capsys):
    assert main(["--quiet", "eval", "--task", "nli", "--input", write_jsonl(NLI_RECORDS)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metrics"]["accuracy"] == 0.75
    assert report["config"]["task"] == "nli"


def test_cli_input_errors_exit_2(write_jsonl, capsys):
    path = write_jsonl([{"premise": "p", "label": "neutral"}])
    assert main(["--quiet", "eval", "--task", "nli", "--input", path]) == 2
    assert "SCHEMA_VIOLATION" in capsys.readouterr().err
    assert main(["--quiet", "score", "--max-tokens", "3", "a", "b"]) == 2


def test_cli_adapt_and_verify(write_jsonl, tmp_path):
    out = tmp_path / "adapted.jsonl"
    assert main(["--quiet", "adapt", "--task", "nli", "--input", write_jsonl(NLI_RECORDS),
                 "--output", str(out)]) == 0
    assert len(out.read_text(encoding="utf-8").splitlines()) == 4

    predictions = tmp_path / "verified.jsonl"
    report = tmp_path / "report.json"
    assert main(["--quiet", "verify", "--input", write_jsonl(QA_RECORDS, "qa.jsonl"),
                 "--predictions", str(predictions), "--output", str(report)]) == 0
    rows = [json.loads(line) for line in predictions.read_text(encoding="utf-8").splitlines()]
    assert [row["id"] for row in rows] == ["q-supported", "q-unsupported"]
    assert json.loads(report.read_text(encoding="utf-8"))["metrics"]["f1"] == 1.0


def test_cli_contam(write_jsonl, tmp_path, capsys):
    eval_path, train_path = contamination_files(write_jsonl)
    details = tmp_path / "details.json"
    assert main(["--quiet", "contam", "--task", "nli", "--input", eval_path, "--train", train_path,
                 "--n", "8", "--min-subset-size", "1", "--details", str(details)]) == 0
    assert json.loads(capsys.readouterr().out)["dirty_fraction"] == 0.5
    assert json.loads(details.read_text(encoding="utf-8"))["dirty_ids"] == ["seen"]
