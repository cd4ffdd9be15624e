#!/usr/bin/env python3
"""
Text Alignment Engine
Score how well one text is supported by another, and evaluate that score
across NLI, similarity, QA, coreference and generation-evaluation datasets
"""

import argparse
import json
import logging
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

from core import HeadSelector
from errors import AlignmentError
from harness import (
    TASKS,
    RunConfig,
    adapt_records,
    build_scorer,
    load_dataset,
    run_benchmark,
    run_contamination,
    run_verification,
    score_text_pair,
)
from metrics import ScoredBinarySet, roc_auc
from segment import alignment_matrix
from utils import dump_json, export_to_csv, save_json, write_jsonl

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def add_scorer_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--scorer', choices=['lexical', 'onnx'], default='lexical')
    parser.add_argument('--model', help='ONNX alignment checkpoint (with --scorer onnx)')
    parser.add_argument('--tokenizer', help='tokenizer.json for the checkpoint')
    parser.add_argument('--max-tokens', type=int, default=512)
    parser.add_argument('--head', choices=['bin', '3way', 'reg'])
    parser.add_argument('--agg', choices=['mean-max', 'min-max'], default='mean-max')
    parser.add_argument('--jobs', type=int, default=1)
    parser.add_argument('--cache', help='SQLite score cache')
    parser.add_argument('--seed', type=int, default=2022)


def add_eval_flags(parser: argparse.ArgumentParser, with_task: bool = True):
    if with_task:
        parser.add_argument('--task', choices=TASKS, required=True)
    parser.add_argument('--input', '--dataset', '--eval', dest='input', required=True, help='task JSONL file')
    parser.add_argument('--output', help='write the JSON report here instead of standard output')
    parser.add_argument('--threshold', type=float, default=0.5, help='unanswerable threshold for qa')
    parser.add_argument('--binary-threshold', type=float, default=0.5)
    parser.add_argument('--tune', help='qa dev JSONL used to tune the unanswerable threshold')
    parser.add_argument('--kendall', choices=['b', 'c'], default='b')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Unified text alignment scoring and evaluation')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true')
    verbosity.add_argument('--quiet', action='store_true')
    commands = parser.add_subparsers(dest='command', required=True)

    score = commands.add_parser('score', help='score one (x1, x2) pair')
    score.add_argument('x1')
    score.add_argument('x2')
    score.add_argument('--heatmap', help='save the chunk x sentence heatmap to this PNG')
    add_scorer_flags(score)

    adapt = commands.add_parser('adapt', help='convert task JSONL into alignment-format pairs')
    adapt.add_argument('--task', choices=TASKS, required=True)
    adapt.add_argument('--input', required=True)
    adapt.add_argument('--output', help='adapted JSONL (standard output when omitted)')
    adapt.add_argument('--negatives', action='store_true', help='append synthetic negatives')
    adapt.add_argument('--seed', type=int, default=2022)

    evaluate = commands.add_parser('eval', help='run a benchmark and report its metrics')
    add_scorer_flags(evaluate)
    add_eval_flags(evaluate)
    evaluate.add_argument('--csv', help='also export the report as a CSV table')

    verify = commands.add_parser('verify', help='abstain on unanswerable QA predictions')
    add_scorer_flags(verify)
    add_eval_flags(verify, with_task=False)
    verify.add_argument('--predictions', help='verified predictions JSONL')
    verify.add_argument('--charts', help='directory for ROC and threshold charts')

    contam = commands.add_parser('contam', help='train/eval n-gram contamination audit')
    add_scorer_flags(contam)
    add_eval_flags(contam)
    contam.add_argument('--train', required=True, help='training corpus JSONL')
    contam.add_argument('--n', type=int, help='n-gram size (chosen from the eval set when omitted)')
    contam.add_argument('--sample', type=int, help='evaluate at most this many examples')
    contam.add_argument('--min-subset-size', type=int, default=100)
    contam.add_argument('--details', help='write audit details JSON here')
    contam.add_argument('--charts', help='directory for the contamination chart')
    return parser


def emit(payload: str, path: str = None):
    """JSON goes to standard output unless a file was named"""
    if path:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(payload + '\n')
        print(f"✅ Saved {path}", file=sys.stderr)
    else:
        print(payload)


def cmd_score(args) -> int:
    config = RunConfig.from_args(args)
    scorer = build_scorer(config)
    result = score_text_pair(scorer, args.x1, args.x2, config)
    print(json.dumps(result, sort_keys=True))

    if args.heatmap:
        from visualizations import AlignmentVisualizer

        head = config.head or HeadSelector.THREEWAY_ALIGNED
        matrix, _, _ = alignment_matrix(scorer, args.x1, args.x2, head)
        directory, filename = os.path.split(os.path.abspath(args.heatmap))
        AlignmentVisualizer(directory).plot_score_matrix(matrix, filename=filename)
        print(f"✅ Heatmap saved to {args.heatmap}", file=sys.stderr)
    return 0


def cmd_adapt(args) -> int:
    examples = load_dataset(args.input, args.task)
    adapted = adapt_records(examples, negatives=args.negatives, seed=args.seed)
    rows = [example.to_dict() for example in adapted]
    if args.output:
        write_jsonl(rows, args.output)
        print(f"✅ Adapted {len(examples)} examples into {len(rows)} pairs", file=sys.stderr)
    else:
        for row in rows:
            print(json.dumps(row, ensure_ascii=False))
    return 0


def cmd_eval(args) -> int:
    config = RunConfig.from_args(args)
    report = run_benchmark(config)
    emit(report.to_json(), args.output)
    if args.csv:
        export_to_csv([report.to_dict()], args.csv)
        print(f"✅ Report table saved to {args.csv}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    config = RunConfig.from_args(args)
    run = run_verification(config)
    emit(run.report.to_json(), args.output)
    if args.predictions:
        write_jsonl([prediction.to_dict() for prediction in run.predictions], args.predictions)
        print(f"✅ {len(run.predictions)} verified predictions saved to {args.predictions}", file=sys.stderr)

    if args.charts:
        from visualizations import AlignmentVisualizer

        visualizer = AlignmentVisualizer(args.charts)
        scores = [prediction.p_unanswerable for prediction in run.predictions]
        if len(set(run.labels)) == 2:
            visualizer.plot_roc_curve(scores, run.labels, roc_auc(ScoredBinarySet.of(scores, run.labels)))
        if run.sweep:
            visualizer.plot_threshold_sweep(run.sweep, chosen=run.report.metrics['threshold'])
        print(f"✅ Charts saved to {args.charts}/", file=sys.stderr)
    return 0


def cmd_contam(args) -> int:
    config = RunConfig.from_args(args)
    run = run_contamination(config, args.train, n=args.n, sample=args.sample)
    emit(dump_json(run.report.to_dict()), args.output)
    if args.details:
        save_json(run.details, args.details)
        print(f"✅ Audit details saved to {args.details}", file=sys.stderr)
    if args.charts:
        from visualizations import AlignmentVisualizer

        AlignmentVisualizer(args.charts).plot_contamination(run.report, run.metric)
        print(f"✅ Chart saved to {args.charts}/", file=sys.stderr)
    return 0


COMMANDS = {
    'score': cmd_score,
    'adapt': cmd_adapt,
    'eval': cmd_eval,
    'verify': cmd_verify,
    'contam': cmd_contam,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        return COMMANDS[args.command](args)
    except AlignmentError as e:
        print(f"❌ {e.code}: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("\n👋 Interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
