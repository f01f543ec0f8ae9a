"""Similarity propagation: per-relation matrices, weight balancing, level
aggregation, and the subtask-level reductions.

For each similarity edge between a transcript chunk and a report chunk, the
children on both sides define a relation: a score matrix with report
children as rows and transcript children as columns, and a weight matrix
from pairwise-added parent-child weights. Weights are balanced toward
doubly stochastic, applied to the scores, row-summed, and averaged with the
focal pair's own score. Columns are stitched per level, duplicate report
keys summing, and the top level reduces to one raw score per subtask, which
a median-centered sigmoid makes comparable across participants.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateMatrixError, StructuralError, UnknownNodeError
from .semgraph import SemanticGraph

K_MAX_DEFAULT = 1000
EPSILON_DEFAULT = 1e-9
STEEPNESS_DEFAULT = 1.0

AGGREGATED = "aggregated"
RAW = "raw"


@dataclass(frozen=True)
class ConvergenceRecord:
    rows: int
    cols: int
    iterations: int
    converged: bool
    max_delta: float


@dataclass(frozen=True, eq=False)
class RelationMatrices:
    row_ids: tuple[str, ...]  # report-side children
    col_ids: tuple[str, ...]  # transcript-side children
    sim: np.ndarray  # (m, n)
    weights: np.ndarray  # (m, n)
    parent_score: float


@dataclass(frozen=True, eq=False)
class RelationResult:
    matrices: RelationMatrices
    normalized_weights: np.ndarray
    weighted_sim: np.ndarray  # after balancing and element-wise multiply
    v: np.ndarray  # row sums
    v_adj: np.ndarray  # averaged with the parent score
    by_key: dict[str, float]
    record: ConvergenceRecord


@dataclass
class LevelMatrix:
    level: int
    columns: dict[str, dict[str, float]]  # parent chunk id -> row key -> value
    records: list[tuple[str, str, ConvergenceRecord]]

    def row_ids(self) -> tuple[str, ...]:
        keys = {k for column in self.columns.values() for k in column}
        return tuple(sorted(keys))

    def dense(self) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
        """(row ids, column ids, zero-filled matrix) view."""
        rows = self.row_ids()
        cols = tuple(self.columns)
        index = {k: i for i, k in enumerate(rows)}
        out = np.zeros((len(rows), len(cols)))
        for j, parent in enumerate(cols):
            for key, value in self.columns[parent].items():
                out[index[key], j] = value
        return rows, cols, out


@dataclass(frozen=True)
class SubtaskSimilarity:
    participant_id: str
    subtask_id: str
    raw_score: float
    normalized_score: float | None
    n_chunks: int
    n_utterances: int


def sinkhorn_knopp(
    weights: np.ndarray | Sequence[Sequence[float]],
    k_max: int = K_MAX_DEFAULT,
    epsilon: float = EPSILON_DEFAULT,
) -> tuple[np.ndarray, ConvergenceRecord]:
    """Alternate row and column normalization until the matrix stops moving.

    Denominators carry +epsilon so near-zero lines cannot divide out; the
    same epsilon is the movement tolerance. Square positive matrices come
    out doubly stochastic to high precision; non-square matrices cannot
    (total mass differs by axis), so callers read the record instead of
    asserting sums.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    w = np.array(weights, dtype=float)
    if w.ndim != 2 or w.size == 0:
        raise DegenerateMatrixError(f"expected a nonempty 2-d matrix, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DegenerateMatrixError("matrix entries must be finite and non-negative")
    if np.any(w.sum(axis=1) == 0):
        raise DegenerateMatrixError("matrix has an all-zero row")
    if np.any(w.sum(axis=0) == 0):
        raise DegenerateMatrixError("matrix has an all-zero column")

    iterations = 0
    delta = math.inf
    for iterations in range(1, k_max + 1):
        previous = w
        w = w / (w.sum(axis=1, keepdims=True) + epsilon)
        w = w / (w.sum(axis=0, keepdims=True) + epsilon)
        delta = float(np.max(np.abs(w - previous)))
        if delta < epsilon:
            break
    return w, ConvergenceRecord(
        rows=w.shape[0],
        cols=w.shape[1],
        iterations=iterations,
        converged=delta < epsilon,
        max_delta=delta,
    )


def _sim_map(g: SemanticGraph, node: str) -> dict[str, float]:
    return dict(g.sim_scores(node))


def _chunk_children(g: SemanticGraph, parent: str) -> tuple[tuple[str, float], ...]:
    if parent not in g.layer_of:
        raise UnknownNodeError(f"{parent!r} is not in the graph")
    return g.child_weights(parent)


def _finish(
    matrices: RelationMatrices,
    keys_per_row: Sequence[tuple[str, ...]],
    blocks: Sequence[np.ndarray],
    k_max: int,
    epsilon: float,
) -> RelationResult:
    normalized, record = sinkhorn_knopp(matrices.weights, k_max, epsilon)
    weighted_rows = [block * normalized[i] for i, block in enumerate(blocks)]
    v_rows = [wr.sum(axis=1) for wr in weighted_rows]
    v_adj_rows = [(vr + matrices.parent_score) / 2.0 for vr in v_rows]
    by_key: dict[str, float] = {}
    for keys, values in zip(keys_per_row, v_adj_rows):
        for key, value in zip(keys, values):
            by_key[key] = by_key.get(key, 0.0) + float(value)
    scalar = all(len(keys) == 1 for keys in keys_per_row)
    if scalar:
        weighted = np.vstack(weighted_rows) if weighted_rows else np.zeros_like(matrices.sim)
        v = np.array([vr[0] for vr in v_rows])
        v_adj = np.array([vr[0] for vr in v_adj_rows])
    else:
        weighted = normalized  # placeholder; block results live in by_key
        v = np.concatenate(v_rows)
        v_adj = np.concatenate(v_adj_rows)
    return RelationResult(matrices, normalized, weighted, v, v_adj, by_key, record)


def aggregate_relation(
    g: SemanticGraph,
    parent_t: str,
    parent_r: str,
    child_sims: Mapping[tuple[str, str], float] | None = None,
    *,
    k_max: int = K_MAX_DEFAULT,
    epsilon: float = EPSILON_DEFAULT,
) -> RelationResult:
    """One focal pair, scalar child scores; returns all intermediates.

    child_sims maps (transcript child, report child) to a score; by default
    the graph's own similarity edges supply it. Pairs without an entry score
    zero, which only arises under a pruning floor.
    """
    t_children = _chunk_children(g, parent_t)
    r_children = _chunk_children(g, parent_r)
    if not t_children:
        raise StructuralError(f"{parent_t} has no weighted children", entity=parent_t)
    if not r_children:
        raise StructuralError(f"{parent_r} has no weighted children", entity=parent_r)
    parent_score = g.sim_score(parent_t, parent_r)

    if child_sims is None:
        maps = {t_id: _sim_map(g, t_id) for t_id, _ in t_children}
        lookup = lambda t_id, r_id: maps[t_id].get(r_id, 0.0)  # noqa: E731
    else:
        lookup = lambda t_id, r_id: child_sims.get((t_id, r_id), 0.0)  # noqa: E731

    row_ids = tuple(r_id for r_id, _ in r_children)
    col_ids = tuple(t_id for t_id, _ in t_children)
    sim = np.array([[lookup(t_id, r_id) for t_id, _ in t_children] for r_id, _ in r_children])
    weights = np.array(
        [[w_r + w_t for _, w_t in t_children] for _, w_r in r_children]
    )
    matrices = RelationMatrices(row_ids, col_ids, sim, weights, parent_score)
    keys = [(r_id,) for r_id in row_ids]
    blocks = [sim[i : i + 1, :] for i in range(len(row_ids))]
    return _finish(matrices, keys, blocks, k_max, epsilon)


def aggregate_relation_vectors(
    g: SemanticGraph,
    parent_t: str,
    parent_r: str,
    lower_columns: Mapping[str, Mapping[str, float]],
    *,
    k_max: int = K_MAX_DEFAULT,
    epsilon: float = EPSILON_DEFAULT,
) -> RelationResult:
    """One focal pair whose child inputs are aggregated lower-level columns.

    Each report-side child contributes one row whose entries are vectors
    over its own children's keys; the cell for (row, transcript child) is
    the transcript child's aggregated column restricted to those keys. The
    balancing still runs on the plain child-by-child weight matrix, and the
    scalar pipeline is the special case of one key per row.
    """
    t_children = _chunk_children(g, parent_t)
    r_children = _chunk_children(g, parent_r)
    if not t_children:
        raise StructuralError(f"{parent_t} has no weighted children", entity=parent_t)
    if not r_children:
        raise StructuralError(f"{parent_r} has no weighted children", entity=parent_r)
    parent_score = g.sim_score(parent_t, parent_r)

    row_ids = tuple(r_id for r_id, _ in r_children)
    col_ids = tuple(t_id for t_id, _ in t_children)
    keys = []
    blocks = []
    sim_means = np.zeros((len(r_children), len(t_children)))
    for i, (r_id, _) in enumerate(r_children):
        row_keys = tuple(key for key, _ in _chunk_children(g, r_id))
        keys.append(row_keys)
        block = np.zeros((len(row_keys), len(t_children)))
        for j, (t_id, _) in enumerate(t_children):
            column = lower_columns.get(t_id, {})
            for k, key in enumerate(row_keys):
                block[k, j] = column.get(key, 0.0)
        blocks.append(block)
        if len(row_keys):
            sim_means[i] = block.mean(axis=0)
    weights = np.array(
        [[w_r + w_t for _, w_t in t_children] for _, w_r in r_children]
    )
    matrices = RelationMatrices(row_ids, col_ids, sim_means, weights, parent_score)
    return _finish(matrices, keys, blocks, k_max, epsilon)


def _merge(into: dict[str, float], add: Mapping[str, float]) -> None:
    for key, value in add.items():
        into[key] = into.get(key, 0.0) + value


def aggregate_level(
    g: SemanticGraph,
    level: int,
    *,
    lower: LevelMatrix | None = None,
    child_inputs: str = AGGREGATED,
    k_max: int = K_MAX_DEFAULT,
    epsilon: float = EPSILON_DEFAULT,
) -> LevelMatrix:
    """One column per transcript chunk at `level`, merged over its edges.

    The bottom aggregation level always consumes raw child-pair scores. A
    higher level consumes the previous level's aggregated columns unless
    child_inputs is "raw", in which case it consumes provider scores at the
    child window and keys rows by the immediate children instead.

    A focal pair with no weighted transcript-side children degenerates to
    the parent score halved, spread over the report-side keys; no weighted
    report-side children means nothing to key, so the pair contributes
    nothing.
    """
    if child_inputs not in (AGGREGATED, RAW):
        raise ValueError(f"child_inputs must be aggregated or raw, got {child_inputs!r}")
    t_layer = f"t{level}"
    if t_layer not in g.layers:
        raise UnknownNodeError(f"no transcript layer for window {level}")
    sizes = sorted(int(name[1:]) for name in g.chunk_layers("transcript"))
    position = sizes.index(level)
    if position == 0:
        raise StructuralError(f"window {level} chunks have no children to aggregate")
    use_vectors = child_inputs == AGGREGATED and position >= 2
    if use_vectors and lower is None:
        raise StructuralError(f"level {level} needs the lower-level matrix first")

    columns: dict[str, dict[str, float]] = {}
    records: list[tuple[str, str, ConvergenceRecord]] = []
    for parent_t in g.layers[t_layer]:
        column: dict[str, float] = {}
        for parent_r, parent_score in g.sim_scores(parent_t):
            t_children = g.child_weights(parent_t)
            r_children = g.child_weights(parent_r)
            if not r_children:
                continue
            if not t_children:
                degenerate: dict[str, float] = {}
                for r_id, _ in r_children:
                    if use_vectors:
                        for key, _ in g.child_weights(r_id):
                            degenerate[key] = degenerate.get(key, 0.0) + parent_score / 2.0
                    else:
                        degenerate[r_id] = degenerate.get(r_id, 0.0) + parent_score / 2.0
                _merge(column, degenerate)
                continue
            if use_vectors:
                result = aggregate_relation_vectors(
                    g, parent_t, parent_r, lower.columns, k_max=k_max, epsilon=epsilon
                )
            else:
                result = aggregate_relation(g, parent_t, parent_r, k_max=k_max, epsilon=epsilon)
            records.append((parent_t, parent_r, result.record))
            _merge(column, result.by_key)
        columns[parent_t] = column
    return LevelMatrix(level, columns, records)


def propagate_participant(
    g: SemanticGraph,
    *,
    child_inputs: str = AGGREGATED,
    k_max: int = K_MAX_DEFAULT,
    epsilon: float = EPSILON_DEFAULT,
) -> dict[int, LevelMatrix]:
    """All aggregation levels bottom-up; the largest window is the result."""
    sizes = sorted(int(name[1:]) for name in g.chunk_layers("transcript"))
    matrices: dict[int, LevelMatrix] = {}
    lower: LevelMatrix | None = None
    for level in sizes[1:]:
        matrices[level] = aggregate_level(
            g,
            level,
            lower=lower,
            child_inputs=child_inputs,
            k_max=k_max,
            epsilon=epsilon,
        )
        lower = matrices[level]
    return matrices


def subtask_scores(g: SemanticGraph, top: LevelMatrix) -> list[SubtaskSimilarity]:
    """Median of each subtask's slice of the top-level matrix.

    A subtask's slice is the columns of top-level transcript chunks that
    descend from utterances coded with it, over all row keys of the level
    (absent cells count as zero, as in the stitched matrix). Subtasks never
    coded in the transcript have no slice and are absent.
    """
    rows, cols, dense = top.dense()
    col_index = {c: i for i, c in enumerate(cols)}
    out = []
    for subtask in g.layers.get("subtask", ()):
        chunk_ids = []
        utterances = g.children(subtask)
        for utterance in utterances:
            for top_chunk in g.children(utterance):
                if top_chunk in col_index:
                    chunk_ids.append(top_chunk)
        if not chunk_ids or not rows:
            continue
        sub = dense[:, [col_index[c] for c in chunk_ids]]
        out.append(
            SubtaskSimilarity(
                participant_id=g.participant_id,
                subtask_id=subtask,
                raw_score=float(np.median(sub)),
                normalized_score=None,
                n_chunks=len(chunk_ids),
                n_utterances=len(utterances),
            )
        )
    return out


def normalize_scores(
    scores: Sequence[SubtaskSimilarity], steepness: float = STEEPNESS_DEFAULT
) -> list[SubtaskSimilarity]:
    """Center all raw scores on their joint median and squash through a sigmoid."""
    if not scores:
        return []
    if steepness <= 0:
        raise ValueError(f"steepness must be positive, got {steepness}")
    center = statistics.median(s.raw_score for s in scores)
    out = []
    for s in scores:
        normalized = 1.0 / (1.0 + math.exp(-steepness * (s.raw_score - center)))
        out.append(
            SubtaskSimilarity(
                s.participant_id, s.subtask_id, s.raw_score, normalized, s.n_chunks, s.n_utterances
            )
        )
    return out
