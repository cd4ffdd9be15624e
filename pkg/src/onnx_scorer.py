"""Neural PairScorer backed by an ONNX alignment checkpoint and a `tokenizers` definition file."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import onnxruntime as ort
from tokenizers import Tokenizer

from core import AlignmentScore, PairScorer, Span, TextPair
from errors import BackendFailure, OutOfRangeError

logger = logging.getLogger(__name__)

MIN_MAX_TOKENS = 16


class OnnxPairScorer(PairScorer):
    """Runs ⟨start⟩ x1 ⟨sep⟩ x2 ⟨end⟩ through the model.

    Outputs are read positionally: 3-way logits, binary logits, regression scalar.
    onnxruntime sessions accept concurrent ``run`` calls, so this backend is not single-flight.
    """

    name = "onnx"

    def __init__(
        self,
        model_path: str,
        tokenizer_path: str,
        max_tokens: int = 512,
        providers: Optional[Sequence[str]] = None,
    ):
        if max_tokens < MIN_MAX_TOKENS:
            raise OutOfRangeError(f"model backends need a token budget of at least {MIN_MAX_TOKENS}",
                                  max_tokens=max_tokens)
        self.model_path = Path(model_path)
        self.max_tokens = max_tokens
        try:
            self.tokenizer = Tokenizer.from_file(str(tokenizer_path))
            self.tokenizer.no_truncation()
            self.tokenizer.no_padding()
            self.session = ort.InferenceSession(
                str(self.model_path), providers=list(providers or ["CPUExecutionProvider"])
            )
        except Exception as exc:
            raise BackendFailure(f"could not load model backend: {exc}") from exc
        self.special_tokens = self.tokenizer.num_special_tokens_to_add(True)
        self.input_names = [node.name for node in self.session.get_inputs()]
        logger.info("loaded %s (inputs: %s, budget %d tokens)",
                    self.model_path.name, ", ".join(self.input_names), max_tokens)

    def fingerprint(self) -> str:
        return f"{self.name}:{self.model_path.name}:{self.max_tokens}"

    def token_spans(self, text: str) -> List[Span]:
        encoding = self.tokenizer.encode(text, add_special_tokens=False)
        return [tuple(offset) for offset in encoding.offsets if offset[1] > offset[0]]

    def count_pair_tokens(self, pair: TextPair) -> int:
        return len(self.tokenizer.encode(pair.x1, pair.x2).ids)

    def _feeds(self, pair: TextPair) -> Dict[str, np.ndarray]:
        encoding = self.tokenizer.encode(pair.x1, pair.x2)
        ids = np.array([encoding.ids], dtype=np.int64)
        feeds = {}
        for name in self.input_names:
            if "mask" in name:
                feeds[name] = np.array([encoding.attention_mask], dtype=np.int64)
            elif "type" in name:
                feeds[name] = np.array([encoding.type_ids], dtype=np.int64)
            else:
                feeds[name] = ids
        return feeds

    def _score(self, pair: TextPair) -> AlignmentScore:
        outputs = self.session.run(None, self._feeds(pair))
        if len(outputs) < 3:
            raise BackendFailure("model must expose 3-way logits, binary logits and a regression output",
                                 outputs=len(outputs))
        logits_3way = np.ravel(outputs[0])
        logits_bin = np.ravel(outputs[1])
        reg = float(np.ravel(outputs[2])[0])
        return AlignmentScore.from_logits(logits_3way, logits_bin, reg)
