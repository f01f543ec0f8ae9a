"""Transcript structure measures and their subtask-level aggregates.

Three families: lexical usage counts against the report (word overlap,
number matches, and a first-principal-component composite with the
normalized similarity score), pairwise-distance measures over the coded
subtasks (coherence within an utterance, diversity within a turn), and an
attention fold that grows an information frontier and measures how far each
mention sits from it.
"""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import PROMPT, RESPONSE, Report, TurnRecord, Utterance, pair_turns
from .decomposition import Decomposition, distance
from .errors import StructuralError
from .textnorm import canonical_set, extract_numbers

logger = logging.getLogger("worktrace.metrics")

FRONTIER_THRESHOLD = 0.25

BOTH = "both"
PROMPTS = "prompts"
BEFORE = "before"
AFTER = "after"
UNION = "union"
CROSS = "cross"

USAGE_COLUMNS = ("semantic_similarity", "log_word_overlap", "log_number_matches")


@dataclass(frozen=True)
class FrontierState:
    participant_id: str
    cumulative_attention: Mapping[str, float]
    frontier: frozenset[str]
    as_of_utterance: int  # -1 before anything has been consumed


@dataclass(frozen=True)
class UsageRow:
    participant_id: str
    subtask_id: str
    semantic_similarity: float | None
    word_overlap: int | None
    number_matches: int | None
    composite_usage: float | None = None

    @property
    def log_word_overlap(self) -> float | None:
        return None if self.word_overlap is None else math.log1p(self.word_overlap)

    @property
    def log_number_matches(self) -> float | None:
        return None if self.number_matches is None else math.log1p(self.number_matches)

    def complete(self) -> bool:
        return (
            self.semantic_similarity is not None
            and self.word_overlap is not None
            and self.number_matches is not None
        )


@dataclass(frozen=True)
class PcaSummary:
    loadings: dict[str, float]
    explained_variance: float
    n_rows: int
    dropped: tuple[str, ...] = ()


@dataclass(frozen=True)
class TraversalRow:
    participant_id: str
    subtask_id: str
    in_transcript: bool
    mention_count: int
    avg_response_coherence: float | None
    median_diversity: float | None
    avg_distance_to_frontier: float | None


def _pairwise_mean(codes: Iterable[str], d: Decomposition) -> float:
    ids = sorted(set(codes))
    if len(ids) <= 1:
        return 0.0
    total = 0
    count = 0
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            total += distance(d, a, b)
            count += 1
    return total / count


def coherence(u: Utterance, d: Decomposition) -> float:
    """Mean pairwise subtask distance inside one utterance; 0 below two codes."""
    return _pairwise_mean(u.subtask_codes, d)


def diversity(t: TurnRecord, d: Decomposition, variant: str = UNION) -> float:
    """Mean pairwise subtask distance across a turn.

    The default runs the coherence kernel on the union of both sides' codes.
    The cross variant instead averages distances from each prompt code to
    each response code, zero when either side is uncoded.
    """
    u_p = t.prompt.subtask_codes
    u_r = t.response.subtask_codes
    if variant == UNION:
        return _pairwise_mean(u_p | u_r, d)
    if variant == CROSS:
        if not u_p or not u_r:
            return 0.0
        pairs = [(a, b) for a in sorted(u_p) for b in sorted(u_r)]
        return sum(distance(d, a, b) for a, b in pairs) / len(pairs)
    raise ValueError(f"diversity variant must be union or cross, got {variant!r}")


def unanswered_unsolicited(t: TurnRecord) -> tuple[frozenset[str], frozenset[str]]:
    """(prompt codes the response dropped, response codes nobody asked for)."""
    u_p = t.prompt.subtask_codes
    u_r = t.response.subtask_codes
    return u_p - u_r, u_r - u_p


def attention_shares(u: Utterance) -> dict[str, float]:
    """One unit of attention split evenly over the utterance's codes."""
    if not u.subtask_codes:
        return {}
    share = 1.0 / len(u.subtask_codes)
    return {code: share for code in sorted(u.subtask_codes)}


def utterance_index(u: Utterance) -> int:
    return (u.turn_index - 1) * 2 + (1 if u.speaker == RESPONSE else 0)


def initial_frontier(participant_id: str) -> FrontierState:
    return FrontierState(participant_id, {}, frozenset(), -1)


def advance_frontier(
    state: FrontierState,
    u: Utterance,
    *,
    threshold: float = FRONTIER_THRESHOLD,
    accrue: bool = True,
) -> FrontierState:
    """Fold one utterance into the attention state.

    The threshold test is inclusive, so four fresh codes on one utterance
    activate together at exactly 0.25 each.
    """
    if u.participant_id != state.participant_id:
        raise StructuralError(
            f"utterance belongs to {u.participant_id}, state to {state.participant_id}"
        )
    index = utterance_index(u)
    if index <= state.as_of_utterance:
        raise StructuralError(
            f"utterance index {index} does not follow {state.as_of_utterance}",
            entity=state.participant_id,
        )
    cumulative = dict(state.cumulative_attention)
    if accrue:
        for code, share in attention_shares(u).items():
            cumulative[code] = cumulative.get(code, 0.0) + share
    frontier = frozenset(s for s, total in cumulative.items() if total >= threshold)
    return FrontierState(state.participant_id, cumulative, frontier, index)


def frontier_states(
    utterances: Sequence[Utterance],
    *,
    threshold: float = FRONTIER_THRESHOLD,
    speakers: str = BOTH,
) -> list[tuple[Utterance, FrontierState, FrontierState]]:
    """(utterance, state before, state after) for one participant in order."""
    if speakers not in (BOTH, PROMPTS):
        raise ValueError(f"speakers must be both or prompts, got {speakers!r}")
    out = []
    state = None
    for u in utterances:
        if state is None:
            state = initial_frontier(u.participant_id)
        accrue = speakers == BOTH or u.speaker == PROMPT
        after = advance_frontier(state, u, threshold=threshold, accrue=accrue)
        out.append((u, state, after))
        state = after
    return out


def distance_to_frontier(
    subtask: str, state: FrontierState, d: Decomposition
) -> int | None:
    """Hops from the subtask to the nearest frontier member; None when empty."""
    if not state.frontier:
        return None
    return min(distance(d, subtask, f) for f in sorted(state.frontier))


def word_overlap(
    utterances: Iterable[Utterance], report: Report, stopwords: frozenset[str]
) -> int:
    """Distinct non-stop-word report tokens per utterance, summed."""
    report_set = canonical_set(report.words)
    total = 0
    for u in utterances:
        tokens = canonical_set(u.words) - stopwords
        total += len(tokens & report_set)
    return total


def number_matches(
    utterances: Iterable[Utterance],
    report: Report,
    *,
    common_max: int = 20,
    year_range: tuple[int, int] = (1900, 2100),
) -> int:
    """Distinct numeric values shared with the report, filters applied."""
    response_values: set[float | int] = set()
    for u in utterances:
        response_values |= extract_numbers(
            u.words, common_max=common_max, year_range=year_range
        )
    report_values = extract_numbers(
        report.words, common_max=common_max, year_range=year_range
    )
    return len(response_values & report_values)


def composite_usage(rows: Sequence[UsageRow]) -> tuple[list[UsageRow], PcaSummary]:
    """Project complete rows onto the first principal component.

    Counts enter log-transformed; every column is standardized; the
    component is computed from the correlation matrix and oriented so the
    similarity loading is positive. A constant column carries no signal, so
    it is dropped with a warning rather than poisoning the standardization.
    """
    complete = [r for r in rows if r.complete()]
    if len(complete) < 3:
        raise StructuralError(
            f"composite needs at least 3 complete rows, got {len(complete)}"
        )
    raw = {
        "semantic_similarity": np.array([r.semantic_similarity for r in complete]),
        "log_word_overlap": np.array([r.log_word_overlap for r in complete]),
        "log_number_matches": np.array([r.log_number_matches for r in complete]),
    }
    kept = []
    dropped = []
    columns = []
    for name in USAGE_COLUMNS:
        std = raw[name].std()
        if std == 0:
            dropped.append(name)
            logger.warning("usage column %s has zero variance; dropped", name)
            continue
        kept.append(name)
        columns.append((raw[name] - raw[name].mean()) / std)
    if not kept:
        raise StructuralError("every usage column is constant")
    z = np.column_stack(columns)
    corr = (z.T @ z) / len(complete)
    eigenvalues, eigenvectors = np.linalg.eigh(corr)
    component = eigenvectors[:, -1]
    orient_on = "semantic_similarity" if "semantic_similarity" in kept else kept[0]
    if component[kept.index(orient_on)] < 0:
        component = -component
    projections = z @ component
    summary = PcaSummary(
        loadings={name: float(v) for name, v in zip(kept, component)},
        explained_variance=float(eigenvalues[-1] / len(kept)),
        n_rows=len(complete),
        dropped=tuple(dropped),
    )
    scores = iter(projections)
    out = [
        replace(r, composite_usage=float(next(scores))) if r.complete() else r
        for r in rows
    ]
    return out, summary


def aggregate_traversal(
    utterances: Sequence[Utterance],
    d: Decomposition,
    *,
    threshold: float = FRONTIER_THRESHOLD,
    speakers: str = BOTH,
    timing: str = BEFORE,
    diversity_variant: str = UNION,
) -> list[TraversalRow]:
    """Per-subtask traversal aggregates for one participant's transcript.

    Rows cover every leaf subtask plus any non-leaf actually coded;
    aggregates stay missing for subtasks the transcript never mentions, and
    distances are averaged only over mentions with a nonempty frontier.
    """
    if timing not in (BEFORE, AFTER):
        raise ValueError(f"timing must be before or after, got {timing!r}")
    trace = frontier_states(utterances, threshold=threshold, speakers=speakers)
    turns = pair_turns(utterances)

    mentions: dict[str, int] = {}
    response_coherence: dict[str, list[float]] = {}
    distances: dict[str, list[int]] = {}
    for u, before, after in trace:
        state = before if timing == BEFORE else after
        for code in sorted(u.subtask_codes):
            mentions[code] = mentions.get(code, 0) + 1
            hops = distance_to_frontier(code, state, d)
            if hops is not None:
                distances.setdefault(code, []).append(hops)
        if u.speaker == RESPONSE and u.subtask_codes:
            value = coherence(u, d)
            for code in sorted(u.subtask_codes):
                response_coherence.setdefault(code, []).append(value)

    diversities: dict[str, list[float]] = {}
    for t in turns:
        codes = t.prompt.subtask_codes | t.response.subtask_codes
        if not codes:
            continue
        value = diversity(t, d, diversity_variant)
        for code in sorted(codes):
            diversities.setdefault(code, []).append(value)

    participant_id = utterances[0].participant_id if utterances else ""
    subtasks = sorted(set(d.leaf_ids()) | set(mentions))
    rows = []
    for subtask in subtasks:
        count = mentions.get(subtask, 0)
        rows.append(
            TraversalRow(
                participant_id=participant_id,
                subtask_id=subtask,
                in_transcript=count >= 1,
                mention_count=count,
                avg_response_coherence=(
                    statistics.fmean(response_coherence[subtask])
                    if subtask in response_coherence
                    else None
                ),
                median_diversity=(
                    statistics.median(diversities[subtask])
                    if subtask in diversities
                    else None
                ),
                avg_distance_to_frontier=(
                    statistics.fmean(distances[subtask])
                    if subtask in distances
                    else None
                ),
            )
        )
    return rows
