"""Overlapping fixed-window chunking and parent-child weight computation.

Chunks advance by half the window size, so adjacent chunks of one window
share exactly half their positions; a text shorter than the window yields a
single undersized chunk. Weights between a larger-window chunk and an
overlapping smaller-window chunk are the shared fraction of the parent's
distinct words.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Report, Utterance
from .errors import MismatchedOriginError, WindowMismatchError
from .textnorm import canonical_set

WINDOWS = (20, 50, 100)

TRANSCRIPT = "transcript"
REPORT = "report"


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    origin: str  # "{pid}:t{turn}{p|r}" for utterances, "{pid}:doc" for reports
    side: str  # transcript | report
    window: int
    start_index: int
    words: tuple[str, ...]
    word_set: frozenset[str]

    @property
    def word_count(self) -> int:
        return len(self.words)

    @property
    def end_index(self) -> int:
        return self.start_index + len(self.words)

    @property
    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class HierEdge:
    parent: str
    child: str
    weight: float


def chunk_text(
    words: Sequence[str], window: int, *, origin: str, side: str
) -> list[Chunk]:
    """Cut a word sequence into window-sized chunks at half-window stride."""
    if not words:
        raise ValueError(f"{origin}: cannot chunk empty text")
    if window < 2 or window % 2:
        raise ValueError(f"window must be an even integer >= 2, got {window}")
    stride = window // 2
    starts = [0]
    while starts[-1] + window < len(words):
        starts.append(starts[-1] + stride)
    chunks = []
    for start in starts:
        piece = tuple(words[start : start + window])
        chunks.append(
            Chunk(
                chunk_id=f"{origin}:w{window}:{start}",
                origin=origin,
                side=side,
                window=window,
                start_index=start,
                words=piece,
                word_set=canonical_set(piece),
            )
        )
    return chunks


def utterance_origin(u: Utterance) -> str:
    tag = "p" if u.speaker == "prompt" else "r"
    return f"{u.participant_id}:t{u.turn_index}{tag}"


def chunk_utterance(u: Utterance, windows: Sequence[int] = WINDOWS) -> list[Chunk]:
    origin = utterance_origin(u)
    out: list[Chunk] = []
    for window in windows:
        out.extend(chunk_text(u.words, window, origin=origin, side=TRANSCRIPT))
    return out


def chunk_report(report: Report, windows: Sequence[int] = WINDOWS) -> list[Chunk]:
    origin = f"{report.participant_id}:doc"
    out: list[Chunk] = []
    for window in windows:
        out.extend(chunk_text(report.words, window, origin=origin, side=REPORT))
    return out


def parent_child_weight(parent: Chunk, child: Chunk) -> float:
    """Fraction of the parent's distinct words that the child also carries.

    A parent whose words all canonicalize away (pure punctuation) weighs 0;
    callers treat 0 as "do not link".
    """
    if parent.origin != child.origin:
        raise MismatchedOriginError(
            f"weight across origins {parent.origin!r} and {child.origin!r}"
        )
    if parent.window <= child.window:
        raise WindowMismatchError(
            f"parent window {parent.window} not larger than child window {child.window}"
        )
    if not parent.word_set:
        return 0.0
    return len(parent.word_set & child.word_set) / len(parent.word_set)


def build_hierarchy(chunks: Iterable[Chunk]) -> list[HierEdge]:
    """Weighted edges between positionally overlapping chunks of adjacent windows.

    Zero-weight pairs (no shared words) are not linked; they would add rows
    and columns of dead weight downstream.
    """
    by_window: dict[int, list[Chunk]] = {}
    origins = set()
    for c in chunks:
        by_window.setdefault(c.window, []).append(c)
        origins.add(c.origin)
    if len(origins) > 1:
        raise MismatchedOriginError(f"hierarchy across origins {sorted(origins)}")
    sizes = sorted(by_window, reverse=True)
    edges = []
    for larger, smaller in zip(sizes, sizes[1:]):
        for parent in by_window[larger]:
            for child in by_window[smaller]:
                if child.start_index < parent.end_index and parent.start_index < child.end_index:
                    weight = parent_child_weight(parent, child)
                    if weight > 0.0:
                        edges.append(HierEdge(parent.chunk_id, child.chunk_id, weight))
    return edges


def inventory_rows(chunks: Iterable[Chunk]) -> list[list[object]]:
    """Audit rows (chunk_id, origin, side, window, start_index, word_count)."""
    return [
        [c.chunk_id, c.origin, c.side, c.window, c.start_index, c.word_count]
        for c in chunks
    ]
