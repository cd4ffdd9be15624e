"""
Tests for the ONNX backend. Model-backed tests need ALIGN_ONNX_MODEL and ALIGN_TOKENIZER.
"""

import os
import random
from pathlib import Path

import numpy as np
import pytest

pytest.importorskip("onnxruntime")
pytest.importorskip("tokenizers")

from core import HeadSelector, TextPair, score_pair  # noqa: E402
from errors import BackendFailure, OutOfRangeError  # noqa: E402
from onnx_scorer import OnnxPairScorer  # noqa: E402
from segment import aggregate_align  # noqa: E402
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, processors, trainers  # noqa: E402

MODEL = os.environ.get("ALIGN_ONNX_MODEL")
TOKENIZER = os.environ.get("ALIGN_TOKENIZER")
needs_model = pytest.mark.skipif(not (MODEL and TOKENIZER), reason="no ONNX checkpoint configured")

WORDS = ("the city council approved a new budget for schools and parks after long debate on "
         "tuesday while residents protested outside the hall").split()


def test_small_budget_rejected():
    with pytest.raises(OutOfRangeError):
        OnnxPairScorer("model.onnx", "tokenizer.json", max_tokens=8)


def test_missing_files_are_backend_failures(tmp_path):
    with pytest.raises(BackendFailure) as info:
        OnnxPairScorer(str(tmp_path / "missing.onnx"), str(tmp_path / "missing.json"))
    assert info.value.exit_code == 3


@pytest.fixture(scope="module")
def onnx_scorer():
    return OnnxPairScorer(MODEL, TOKENIZER)


@needs_model
def test_heads_are_distributions(onnx_scorer):
    rng = random.Random(7)
    for _ in range(100):
        x1 = " ".join(rng.choice(WORDS) for _ in range(rng.randint(3, 40)))
        x2 = " ".join(rng.choice(WORDS) for _ in range(rng.randint(2, 15)))
        score = score_pair(onnx_scorer, TextPair(x1, x2))
        assert sum(score.p3) == pytest.approx(1.0, abs=1e-6)
        assert sum(score.pbin) == pytest.approx(1.0, abs=1e-6)
        assert 0.0 <= score.reg <= 1.0


@needs_model
def test_long_context_stays_within_budget(onnx_scorer):
    rng = random.Random(3)
    sentences = []
    while sum(len(s.split()) for s in sentences) < 3000:
        words = [rng.choice(WORDS) for _ in range(rng.randint(8, 25))]
        sentences.append(" ".join([words[0].capitalize()] + words[1:]) + ".")
    context = " ".join(sentences)
    value = aggregate_align(onnx_scorer, context, sentences[5] + " " + sentences[40], HeadSelector.BIN_ALIGNED)
    assert 0.0 <= value <= 1.0



class RecordingSession:
    """Stands in for an InferenceSession and remembers each input length."""

    def __init__(self):
        self.lengths = []

    def run(self, output_names, feeds):
        self.lengths.append(feeds["input_ids"].shape[1])
        return [np.array([[2.0, 0.0, -1.0]]), np.array([[1.0, 0.0]]), np.array([[0.5]])]


def byte_level_tokenizer(corpus):
    tokenizer = Tokenizer(models.BPE())
    tokenizer.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tokenizer.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(vocab_size=320, special_tokens=["<s>", "</s>", "<pad>"],
                                  initial_alphabet=pre_tokenizers.ByteLevel.alphabet(), show_progress=False)
    tokenizer.train_from_iterator(corpus, trainer=trainer)
    tokenizer.post_processor = processors.RobertaProcessing(
        ("</s>", tokenizer.token_to_id("</s>")), ("<s>", tokenizer.token_to_id("<s>")), trim_offsets=True
    )
    return tokenizer


def stub_scorer(tokenizer, max_tokens):
    scorer = OnnxPairScorer.__new__(OnnxPairScorer)
    scorer.model_path = Path("stub.onnx")
    scorer.max_tokens = max_tokens
    scorer.tokenizer = tokenizer
    scorer.special_tokens = tokenizer.num_special_tokens_to_add(True)
    scorer.input_names = ["input_ids", "attention_mask"]
    scorer.session = RecordingSession()
    return scorer


def test_byte_level_chunks_fit_when_tokenized_alone():
    rng = random.Random(19)
    context = " ".join(rng.choice(WORDS) for _ in range(800)) + "."
    scorer = stub_scorer(byte_level_tokenizer([context] * 20), max_tokens=64)
    claim = "The city council approved a new budget."
    value = aggregate_align(scorer, context, claim, HeadSelector.BIN_ALIGNED)
    assert 0.0 <= value <= 1.0
    assert scorer.session.lengths
    assert max(scorer.session.lengths) <= 64
