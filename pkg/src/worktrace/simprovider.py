"""Similarity scoring behind one batched interface.

The numeric pipeline never touches a model runtime: it hands (transcript
chunk, report chunk) pairs to a provider and gets bounded scores back.
Providers: a precomputed score table, a remote scorer service, and two
deterministic stubs (constant, lexical overlap) for tests and dry runs.
"""

from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import requests

from .chunker import Chunk
from .errors import (
    ConfigError,
    MissingPairError,
    ProviderUnavailableError,
    WindowMismatchError,
)
from .tableio import read_table, write_table

log = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "WORKTRACE_SCORER_ENDPOINT"


@dataclass(frozen=True)
class PairScore:
    left: str  # transcript-side chunk id
    right: str  # report-side chunk id
    score: float


class SimilarityProvider:
    """Order-preserving batched scorer; subclasses supply raw scores."""

    name = "base"

    def score_pairs(self, pairs: Sequence[tuple[Chunk, Chunk]]) -> list[PairScore]:
        for left, right in pairs:
            if left.window != right.window:
                raise WindowMismatchError(
                    f"cannot score {left.chunk_id} ({left.window}w) against "
                    f"{right.chunk_id} ({right.window}w)"
                )
        raw = self._raw_scores(pairs)
        clamped = 0
        worst = None
        out = []
        for (left, right), score in zip(pairs, raw):
            if not math.isfinite(score):
                raise ValueError(
                    f"{self.name} provider returned non-finite score for "
                    f"{left.chunk_id} / {right.chunk_id}"
                )
            if not 0.0 <= score <= 1.0:
                clamped += 1
                if worst is None or abs(score - 0.5) > abs(worst - 0.5):
                    worst = score
                score = min(1.0, max(0.0, score))
            out.append(PairScore(left.chunk_id, right.chunk_id, score))
        if clamped:
            log.warning(
                "%s provider: clamped %d of %d scores to [0, 1] (worst raw %r)",
                self.name, clamped, len(out), worst,
            )
        return out

    def _raw_scores(self, pairs: Sequence[tuple[Chunk, Chunk]]) -> list[float]:
        raise NotImplementedError


class ConstantProvider(SimilarityProvider):
    name = "constant"

    def __init__(self, value: float = 0.5) -> None:
        self.value = float(value)

    def _raw_scores(self, pairs: Sequence[tuple[Chunk, Chunk]]) -> list[float]:
        return [self.value] * len(pairs)


class LexicalProvider(SimilarityProvider):
    """Word-set overlap (intersection over union) of the two chunks.

    Deterministic and model-free; meant for tests and smoke runs, not for
    real studies. Two chunks with no canonical words at all count as
    identical rather than dissimilar.
    """

    name = "lexical"

    def _raw_scores(self, pairs: Sequence[tuple[Chunk, Chunk]]) -> list[float]:
        return [lexical_similarity(left, right) for left, right in pairs]


def lexical_similarity(left: Chunk, right: Chunk) -> float:
    union = left.word_set | right.word_set
    if not union:
        return 1.0
    return len(left.word_set & right.word_set) / len(union)


class FileProvider(SimilarityProvider):
    """Scores looked up from a precomputed table, keyed by chunk id pair."""

    name = "file"

    def __init__(self, scores: dict[tuple[str, str], float]) -> None:
        self.scores = dict(scores)

    @classmethod
    def from_path(cls, path: str | Path) -> "FileProvider":
        return cls(load_score_file(path))

    def _raw_scores(self, pairs: Sequence[tuple[Chunk, Chunk]]) -> list[float]:
        missing = [
            (left.chunk_id, right.chunk_id)
            for left, right in pairs
            if (left.chunk_id, right.chunk_id) not in self.scores
        ]
        if missing:
            raise MissingPairError(missing)
        return [self.scores[(left.chunk_id, right.chunk_id)] for left, right in pairs]


class RemoteProvider(SimilarityProvider):
    """Client for the scorer service's JSON-over-HTTP protocol.

    Waits for the service to report ready before the first batch, splits
    oversized batches, and keeps at most one request in flight per provider
    instance.
    """

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        *,
        batch_size: int = 256,
        timeout: float = 60.0,
        ready_timeout: float = 60.0,
        poll_interval: float = 0.25,
        session: requests.Session | None = None,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.timeout = timeout
        self.ready_timeout = ready_timeout
        self.poll_interval = poll_interval
        self.session = session or requests.Session()
        self._ready = False

    def wait_ready(self) -> str:
        """Poll health until the service reports ready; returns the model id."""
        deadline = time.monotonic() + self.ready_timeout
        last = "unreachable"
        while time.monotonic() < deadline:
            try:
                resp = self.session.get(f"{self.endpoint}/v1/health", timeout=self.timeout)
                payload = resp.json()
                if resp.ok and payload.get("status") == "ready":
                    self._ready = True
                    return payload.get("model", "")
                last = payload.get("status", f"http {resp.status_code}")
            except (requests.RequestException, ValueError) as exc:
                last = str(exc)
            time.sleep(self.poll_interval)
        raise ProviderUnavailableError(
            f"scorer at {self.endpoint} not ready after {self.ready_timeout}s (last: {last})"
        )

    def _raw_scores(self, pairs: Sequence[tuple[Chunk, Chunk]]) -> list[float]:
        if not self._ready and pairs:
            self.wait_ready()
        scores: list[float] = []
        for lo in range(0, len(pairs), self.batch_size):
            batch = pairs[lo : lo + self.batch_size]
            body = {
                "pairs": [
                    {"left_text": left.text, "right_text": right.text}
                    for left, right in batch
                ]
            }
            try:
                resp = self.session.post(
                    f"{self.endpoint}/v1/score", json=body, timeout=self.timeout
                )
            except requests.RequestException as exc:
                raise ProviderUnavailableError(
                    f"scorer at {self.endpoint} unreachable: {exc}"
                ) from None
            if not resp.ok:
                raise ProviderUnavailableError(
                    f"scorer at {self.endpoint} returned {resp.status_code}: {resp.text[:200]}"
                )
            batch_scores = resp.json().get("scores")
            if not isinstance(batch_scores, list) or len(batch_scores) != len(batch):
                raise ProviderUnavailableError(
                    f"scorer returned {len(batch_scores or [])} scores for {len(batch)} pairs"
                )
            scores.extend(float(s) for s in batch_scores)
        return scores


def load_score_file(source: str | Path) -> dict[tuple[str, str], float]:
    _, header, rows = read_table(source)
    expected = ["left_chunk_id", "right_chunk_id", "score"]
    if header != expected:
        raise ConfigError(f"score table header {header} != {expected}")
    return {
        (row["left_chunk_id"], row["right_chunk_id"]): float(row["score"]) for row in rows
    }


def write_score_file(path: str | Path, scores: Iterable[PairScore]) -> None:
    write_table(
        path,
        ["left_chunk_id", "right_chunk_id", "score"],
        [[s.left, s.right, s.score] for s in scores],
    )


def make_provider(cfg: dict, base_dir: Path) -> SimilarityProvider:
    """Build a provider from its configuration block.

    The remote endpoint may be overridden through the environment so a
    config checked into a study repo does not pin a host name.
    """
    kind = cfg.get("kind")
    if kind == "constant":
        return ConstantProvider(cfg.get("value", 0.5))
    if kind == "lexical":
        return LexicalProvider()
    if kind == "file":
        if "path" not in cfg:
            raise ConfigError("file provider requires a 'path'")
        return FileProvider.from_path(base_dir / cfg["path"])
    if kind == "remote":
        endpoint = os.environ.get(ENDPOINT_ENV_VAR) or cfg.get("endpoint")
        if not endpoint:
            raise ConfigError(
                f"remote provider requires an 'endpoint' or {ENDPOINT_ENV_VAR}"
            )
        kwargs = {
            k: cfg[k]
            for k in ("batch_size", "timeout", "ready_timeout", "poll_interval")
            if k in cfg
        }
        return RemoteProvider(endpoint, **kwargs)
    raise ConfigError(f"unknown provider kind {kind!r}")
