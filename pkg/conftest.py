import json
import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

from core import AlignmentScore, LexicalScorer, PairScorer, TextPair  # noqa: E402

ROOT = os.path.dirname(os.path.abspath(__file__))
MIXED_FIXTURE = os.path.join(ROOT, 'fixtures', 'mixed_50.jsonl')


class MatrixScorer(PairScorer):
    """Serves preset scores for one-token chunks "C<i>." against claims "S<j>."

    With a 6-token budget and 4 special tokens every chunk holds exactly one
    context sentence, so ``context(n)`` and ``claim(m)`` lay out an n x m grid.
    """

    name = "matrix"

    def __init__(self, values):
        self.values = [list(row) for row in values]
        self.max_tokens = 6
        self.calls = 0

    @staticmethod
    def context(rows: int) -> str:
        return " ".join(f"C{i}." for i in range(rows))

    @staticmethod
    def claim(cols: int) -> str:
        return " ".join(f"S{j}." for j in range(cols))

    def _score(self, pair: TextPair) -> AlignmentScore:
        self.calls += 1
        v = float(self.values[int(pair.x1[1:-1])][int(pair.x2[1:-1])])
        return AlignmentScore(p3=(v, 0.0, 1.0 - v), pbin=(v, 1.0 - v), reg=v)


class FailingScorer(PairScorer):
    name = "failing"

    def _score(self, pair: TextPair) -> AlignmentScore:
        raise RuntimeError("device lost")


@pytest.fixture
def lexical():
    return LexicalScorer()


@pytest.fixture
def matrix_scorer():
    return MatrixScorer


@pytest.fixture
def failing_scorer():
    return FailingScorer()


@pytest.fixture
def write_jsonl(tmp_path):
    """Write records (dicts or raw strings) to a JSONL file under tmp_path"""
    def write(records, name='data.jsonl'):
        path = tmp_path / name
        with open(path, 'w', encoding='utf-8') as f:
            for record in records:
                f.write(record if isinstance(record, str) else json.dumps(record))
                f.write('\n')
        return str(path)
    return write


@pytest.fixture
def mixed_fixture():
    return MIXED_FIXTURE
