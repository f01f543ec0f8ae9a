"""Scoring models the service can serve.

Texts are scored raw: no punctuation stripping or other preprocessing
happens before the model, so the service output depends only on the model
and the exact request text.
"""

from __future__ import annotations

from typing import Sequence

DEFAULT_MODEL = "cross-encoder/stsb-roberta-base"
STUB_MODEL = "lexical-stub"


class LexicalStub:
    """Jaccard overlap of lowercase whitespace tokens.

    Deterministic and dependency-free, so integration tests need no model
    download. Identical texts score exactly 1.0.
    """

    name = STUB_MODEL

    def load(self) -> None:
        pass

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self._score(left, right) for left, right in pairs]

    @staticmethod
    def _score(left: str, right: str) -> float:
        a = set(left.lower().split())
        b = set(right.lower().split())
        if not a and not b:
            return 1.0
        if not a or not b:
            return 0.0
        return len(a & b) / len(a | b)


class CrossEncoderModel:
    """Sentence-pair cross-encoder, loaded lazily.

    The import happens inside load() so the service module stays importable
    without the inference stack installed (the "model" extra provides it).
    """

    def __init__(self, name: str = DEFAULT_MODEL) -> None:
        self.name = name
        self._model = None

    def load(self) -> None:
        from sentence_transformers import CrossEncoder

        self._model = CrossEncoder(self.name)

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        if self._model is None:
            raise RuntimeError("model not loaded")
        return [float(v) for v in self._model.predict(list(pairs))]


def make_model(name: str):
    if name == STUB_MODEL:
        return LexicalStub()
    return CrossEncoderModel(name)
