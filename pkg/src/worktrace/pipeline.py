"""Stage orchestration: validate, chunk, score, graph, propagate, metrics,
export, all driven by one config.

Every stage reads only the raw inputs plus earlier stage artifacts and
writes plain files under the output directory, so a single stage can rerun
alone, precomputed score tables slot in where a model would be, and a full
run is nothing more than the stages in order. Nothing here consults clocks
or randomness; rerunning on identical inputs reproduces identical bytes.
Wall-clock timings land in run_info.json, which stays outside the digested
artifact set for exactly that reason.
"""

from __future__ import annotations

import hashlib
import json
import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .chunker import Chunk, chunk_report, chunk_utterance, inventory_rows
from .config import PipelineConfig
from .corpus import (
    RESPONSE,
    GraderScore,
    Report,
    Utterance,
    load_grades,
    load_report,
    load_transcript,
    pair_turns,
)
from .decomposition import Decomposition, load_decomposition, validate
from .errors import ConfigError, MissingArtifactError, StructuralError, WorktraceError
from .metrics import (
    UsageRow,
    aggregate_traversal,
    attention_shares,
    coherence,
    composite_usage,
    diversity,
    unanswered_unsolicited,
    word_overlap,
)
from .metrics import number_matches as count_number_matches
from .propagation import normalize_scores, propagate_participant, subtask_scores
from .semgraph import audit, build_graph, export_graph, load_graph_export
from .simprovider import FileProvider, RemoteProvider, make_provider, write_score_file
from .tableio import read_table, write_table
from .textnorm import load_stopwords

log = logging.getLogger("worktrace.pipeline")

STAGES = ("validate", "chunk", "score", "graph", "propagate", "metrics", "export")

DEFAULT_WORKERS = 4

_NOT_DIGESTED = ("manifest.json", "run_info.json", "error_report.json")


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _need(cfg: PipelineConfig, stage: str, *relpaths: str) -> None:
    missing = [p for p in relpaths if not (cfg.output_dir / p).exists()]
    if missing:
        raise MissingArtifactError(
            f"stage {stage} needs {', '.join(missing)} from an earlier stage",
            entity=missing[0],
        )


def _pid_map(pids: Sequence[str], fn: Callable, workers: int) -> dict:
    """Run fn per participant, results keyed and consumed in pid order."""
    if workers > 1 and len(pids) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pid: pool.submit(fn, pid) for pid in pids}
            return {pid: futures[pid].result() for pid in pids}
    return {pid: fn(pid) for pid in pids}


def _corpus(cfg: PipelineConfig) -> tuple[Decomposition, list[Utterance]]:
    d = load_decomposition(cfg.decomposition.read_text())
    utterances = load_transcript(cfg.transcripts.read_text(), d)
    return d, utterances


def _by_pid(utterances: Sequence[Utterance]) -> dict[str, list[Utterance]]:
    out: dict[str, list[Utterance]] = {}
    for u in utterances:
        out.setdefault(u.participant_id, []).append(u)
    return dict(sorted(out.items()))


def _report(cfg: PipelineConfig, pid: str) -> Report:
    path = cfg.reports_dir / f"{pid}.txt"
    if not path.exists():
        raise StructuralError(
            f"transcript names participant {pid} but {path.name} is not in "
            f"{cfg.reports_dir}",
            entity=pid,
        )
    return load_report(path.read_text(), pid)


def _selected(cfg: PipelineConfig, utterances: Sequence[Utterance]) -> list[Utterance]:
    if cfg.include_uncoded_utterances:
        return list(utterances)
    return [u for u in utterances if u.subtask_codes]


def _participant_chunks(
    cfg: PipelineConfig, pid: str, utterances: Sequence[Utterance]
) -> tuple[list[Utterance], list[Chunk], list[Chunk]]:
    selected = _selected(cfg, utterances)
    t_chunks = [c for u in selected for c in chunk_utterance(u, windows=cfg.windows)]
    r_chunks = chunk_report(_report(cfg, pid), windows=cfg.windows)
    return selected, t_chunks, list(r_chunks)


def stage_validate(cfg: PipelineConfig, workers: int) -> None:
    d, utterances = _corpus(cfg)
    violations = validate(d)
    groups = _by_pid(utterances)
    n_turns = 0
    for pid, rows in groups.items():
        _report(cfg, pid)
        n_turns += len(pair_turns(rows))
    grades: list[GraderScore] = []
    if cfg.grades is not None:
        grades = load_grades(
            cfg.grades.read_text(), d, ordinal_range=cfg.grades_ordinal_range
        )
    _write_json(
        cfg.output_dir / "validation.json",
        {
            "format_version": 1,
            "decomposition": {
                "nodes": len(d.nodes),
                "leaves": len(d.leaf_ids()),
                "violations": [
                    {"rule": v.rule, "node_ids": list(v.node_ids), "message": v.message}
                    for v in violations
                ],
            },
            "participants": list(groups),
            "utterances": len(utterances),
            "coded_utterances": sum(1 for u in utterances if u.subtask_codes),
            "turns": n_turns,
            "grades": len(grades),
        },
    )
    if violations:
        log.warning("decomposition has %d rule violations; see validation.json", len(violations))


def stage_chunk(cfg: PipelineConfig, workers: int) -> None:
    _need(cfg, "chunk", "validation.json")
    _, utterances = _corpus(cfg)
    groups = _by_pid(utterances)
    chunks = _pid_map(
        list(groups),
        lambda pid: _participant_chunks(cfg, pid, groups[pid]),
        workers,
    )
    rows: list[list[object]] = []
    for pid in groups:
        _, t_chunks, r_chunks = chunks[pid]
        rows.extend(inventory_rows(t_chunks + r_chunks))
    write_table(
        cfg.output_dir / "chunks.csv",
        ["chunk_id", "origin", "side", "window", "start_index", "word_count"],
        rows,
    )


def _score_pairs(
    cfg: PipelineConfig, t_chunks: Sequence[Chunk], r_chunks: Sequence[Chunk]
) -> list[tuple[Chunk, Chunk]]:
    """Same-window pairs in the exact order the graph builder scores them."""
    t_by: dict[int, list[Chunk]] = {w: [] for w in cfg.windows}
    r_by: dict[int, list[Chunk]] = {w: [] for w in cfg.windows}
    for c in t_chunks:
        t_by[c.window].append(c)
    for c in r_chunks:
        r_by[c.window].append(c)
    return [
        (t, r)
        for w in sorted(cfg.windows, reverse=True)
        for t in t_by[w]
        for r in r_by[w]
    ]


def stage_score(cfg: PipelineConfig, workers: int) -> None:
    _need(cfg, "score", "chunks.csv")
    _, utterances = _corpus(cfg)
    groups = _by_pid(utterances)
    pairs: list[tuple[Chunk, Chunk]] = []
    for pid, rows in groups.items():
        _, t_chunks, r_chunks = _participant_chunks(cfg, pid, rows)
        pairs.extend(_score_pairs(cfg, t_chunks, r_chunks))
    provider = make_provider(cfg.provider, cfg.base_dir)
    if isinstance(provider, RemoteProvider):
        model = provider.wait_ready()
        log.info("remote scorer ready, model %s", model)
    scored = provider.score_pairs(pairs)
    write_score_file(cfg.output_dir / "scores.csv", scored)


def stage_graph(cfg: PipelineConfig, workers: int) -> None:
    _need(cfg, "graph", "scores.csv")
    _, utterances = _corpus(cfg)
    groups = _by_pid(utterances)
    d = load_decomposition(cfg.decomposition.read_text())
    provider = FileProvider.from_path(cfg.output_dir / "scores.csv")
    graph_dir = cfg.output_dir / "graph"
    graph_dir.mkdir(parents=True, exist_ok=True)

    def build(pid: str):
        selected, t_chunks, r_chunks = _participant_chunks(cfg, pid, groups[pid])
        g = build_graph(
            pid, selected, d, t_chunks, r_chunks, provider,
            windows=cfg.windows, score_floor=cfg.score_floor,
        )
        problems = audit(g)
        if problems:
            raise StructuralError(
                f"graph audit failed for {pid}: {problems[0]}", entity=pid
            )
        return g

    graphs = _pid_map(list(groups), build, workers)
    for pid in groups:
        export_graph(
            graphs[pid], graph_dir / f"{pid}.nodes.csv", graph_dir / f"{pid}.edges.csv"
        )


def stage_propagate(cfg: PipelineConfig, workers: int) -> None:
    _, utterances = _corpus(cfg)
    groups = _by_pid(utterances)
    graph_dir = cfg.output_dir / "graph"
    _need(
        cfg, "propagate",
        *(f"graph/{pid}.{part}.csv" for pid in groups for part in ("nodes", "edges")),
    )
    prop_dir = cfg.output_dir / "propagation"
    prop_dir.mkdir(parents=True, exist_ok=True)

    def propagate(pid: str):
        g = load_graph_export(
            graph_dir / f"{pid}.nodes.csv", graph_dir / f"{pid}.edges.csv", pid
        )
        levels = propagate_participant(
            g,
            child_inputs=cfg.w100_child_inputs,
            k_max=cfg.sinkhorn.k_max,
            epsilon=cfg.sinkhorn.epsilon,
        )
        top = levels[max(levels)]
        return g, levels, subtask_scores(g, top)

    results = _pid_map(list(groups), propagate, workers)

    convergence_rows: list[list[object]] = []
    pooled = []
    for pid in groups:
        _, levels, scores = results[pid]
        pooled.extend(scores)
        for level in sorted(levels):
            matrix = levels[level]
            parents = list(matrix.columns)
            rows = [
                [key] + [matrix.columns[p].get(key, 0.0) for p in parents]
                for key in matrix.row_ids()
            ]
            write_table(
                prop_dir / f"{pid}.w{level}.csv", ["row_key"] + parents, rows
            )
            for t_parent, r_parent, record in matrix.records:
                convergence_rows.append(
                    [
                        pid, level, t_parent, r_parent, record.rows, record.cols,
                        record.iterations, record.converged, record.max_delta,
                    ]
                )
    write_table(
        prop_dir / "convergence.csv",
        [
            "participant_id", "level", "t_parent", "r_parent", "rows", "cols",
            "iterations", "converged", "max_delta",
        ],
        convergence_rows,
    )
    normalized = normalize_scores(pooled, steepness=cfg.sigmoid_steepness)
    normalized.sort(key=lambda s: (s.participant_id, s.subtask_id))
    write_table(
        cfg.output_dir / "subtask_scores.csv",
        [
            "participant_id", "subtask_id", "raw_score", "normalized_score",
            "n_chunks", "n_utterances",
        ],
        [
            [s.participant_id, s.subtask_id, s.raw_score, s.normalized_score,
             s.n_chunks, s.n_utterances]
            for s in normalized
        ],
    )


def _grade_reductions(grades: Sequence[GraderScore]) -> dict[tuple[str, str], dict]:
    grouped: dict[tuple[str, str], list[GraderScore]] = {}
    for g in grades:
        grouped.setdefault((g.participant_id, g.subtask_id), []).append(g)
    out = {}
    for key, rows in grouped.items():
        cells = {}
        for field in ("completeness", "output_quality", "room_for_improvement"):
            values = [getattr(g, field) for g in rows]
            cells[f"{field}_mean"] = statistics.fmean(values)
            cells[f"{field}_median"] = statistics.median(values)
        cells["satisfactory_share"] = statistics.fmean(
            1.0 if g.satisfactory else 0.0 for g in rows
        )
        cells["n_graders"] = len(rows)
        out[key] = cells
    return out


_GRADE_COLUMNS = [
    "completeness_mean", "completeness_median",
    "output_quality_mean", "output_quality_median",
    "room_for_improvement_mean", "room_for_improvement_median",
    "satisfactory_share", "n_graders",
]


def stage_metrics(cfg: PipelineConfig, workers: int) -> None:
    _need(cfg, "metrics", "subtask_scores.csv")
    d, utterances = _corpus(cfg)
    groups = _by_pid(utterances)
    stopwords = load_stopwords(cfg.stopwords_extra)
    mc = cfg.metrics
    metrics_dir = cfg.output_dir / "metrics"
    metrics_dir.mkdir(parents=True, exist_ok=True)

    utterance_rows: list[list[object]] = []
    turn_rows: list[list[object]] = []
    for pid, rows in groups.items():
        for u in rows:
            coded = bool(u.subtask_codes)
            shares = attention_shares(u)
            utterance_rows.append(
                [
                    pid, u.turn_index, u.speaker,
                    ";".join(sorted(u.subtask_codes)), len(u.subtask_codes),
                    coherence(u, d) if coded else None,
                    next(iter(shares.values())) if shares else None,
                ]
            )
        for t in pair_turns(rows):
            unanswered, unsolicited = unanswered_unsolicited(t)
            turn_rows.append(
                [
                    pid, t.turn_index,
                    diversity(t, d, mc.diversity_variant),
                    len(unanswered), len(unsolicited),
                    ";".join(sorted(unanswered)), ";".join(sorted(unsolicited)),
                    t.response_missing,
                ]
            )
    write_table(
        metrics_dir / "per_utterance.csv",
        [
            "participant_id", "turn_index", "speaker", "subtask_codes",
            "n_codes", "coherence", "attention_share",
        ],
        utterance_rows,
    )
    write_table(
        metrics_dir / "per_turn.csv",
        [
            "participant_id", "turn_index", "diversity", "unanswered_count",
            "unsolicited_count", "unanswered", "unsolicited", "response_missing",
        ],
        turn_rows,
    )

    _, _, score_rows = read_table(cfg.output_dir / "subtask_scores.csv")
    similarity = {
        (r["participant_id"], r["subtask_id"]): float(r["normalized_score"])
        for r in score_rows
    }

    traversal = {}
    usage_rows: list[UsageRow] = []
    for pid, rows in groups.items():
        report = _report(cfg, pid)
        for tr in aggregate_traversal(
            rows, d,
            threshold=mc.frontier_threshold,
            speakers=mc.attention_speakers,
            timing=mc.frontier_timing,
            diversity_variant=mc.diversity_variant,
        ):
            key = (pid, tr.subtask_id)
            traversal[key] = tr
            responses = [
                u
                for u in rows
                if u.speaker == RESPONSE and tr.subtask_id in u.subtask_codes
            ]
            usage_rows.append(
                UsageRow(
                    pid, tr.subtask_id,
                    semantic_similarity=similarity.get(key),
                    word_overlap=(
                        word_overlap(responses, report, stopwords) if responses else None
                    ),
                    number_matches=(
                        count_number_matches(
                            responses, report,
                            common_max=mc.common_number_max,
                            year_range=mc.year_range,
                        )
                        if responses
                        else None
                    ),
                )
            )

    try:
        usage_rows, summary = composite_usage(usage_rows)
        summary_payload = {
            "loadings": summary.loadings,
            "explained_variance": summary.explained_variance,
            "n_rows": summary.n_rows,
            "dropped": list(summary.dropped),
        }
    except StructuralError as exc:
        log.warning("composite skipped: %s", exc)
        summary_payload = {"error": str(exc)}
    usage = {(r.participant_id, r.subtask_id): r for r in usage_rows}
    _write_json(metrics_dir / "pca_summary.json", summary_payload)

    grade_cells: dict[tuple[str, str], dict] = {}
    if cfg.grades is not None:
        grades = load_grades(
            cfg.grades.read_text(), d, ordinal_range=cfg.grades_ordinal_range
        )
        grade_cells = _grade_reductions(grades)

    keys = sorted(set(traversal) | set(grade_cells))
    subtask_rows = []
    for key in keys:
        pid, subtask = key
        tr = traversal.get(key)
        ur = usage.get(key)
        cells = grade_cells.get(key, {})
        subtask_rows.append(
            [
                pid, subtask,
                tr.in_transcript if tr else False,
                tr.mention_count if tr else 0,
                tr.avg_response_coherence if tr else None,
                tr.median_diversity if tr else None,
                tr.avg_distance_to_frontier if tr else None,
                ur.semantic_similarity if ur else None,
                ur.word_overlap if ur else None,
                ur.log_word_overlap if ur else None,
                ur.number_matches if ur else None,
                ur.log_number_matches if ur else None,
                ur.composite_usage if ur else None,
            ]
            + [cells.get(column) for column in _GRADE_COLUMNS]
        )
    write_table(
        metrics_dir / "per_subtask.csv",
        [
            "participant_id", "subtask_id", "in_transcript", "mention_count",
            "avg_response_coherence", "median_diversity", "avg_distance_to_frontier",
            "semantic_similarity", "word_overlap", "log_word_overlap",
            "number_matches", "log_number_matches", "composite_usage",
        ]
        + _GRADE_COLUMNS,
        subtask_rows,
    )


def _stage_artifacts(cfg: PipelineConfig) -> dict[str, list[Path]]:
    out = cfg.output_dir
    return {
        "validate": [out / "validation.json"],
        "chunk": [out / "chunks.csv"],
        "score": [out / "scores.csv"],
        "graph": sorted((out / "graph").glob("*.csv")),
        "propagate": sorted((out / "propagation").glob("*.csv"))
        + [out / "subtask_scores.csv"],
        "metrics": sorted((out / "metrics").glob("*")),
        "export": [],
    }


def stage_export(cfg: PipelineConfig, workers: int) -> None:
    _need(cfg, "export", "metrics/per_subtask.csv")
    inputs: dict[str, str] = {}
    named = {
        str(cfg.raw["decomposition"]): cfg.decomposition,
        str(cfg.raw["transcripts"]): cfg.transcripts,
    }
    if cfg.grades is not None:
        named[str(cfg.raw["grades"])] = cfg.grades
    if cfg.stopwords_extra is not None:
        named[str(cfg.raw["stopwords_extra"])] = cfg.stopwords_extra
    if cfg.provider.get("kind") == "file":
        named[str(cfg.provider["path"])] = cfg.base_dir / cfg.provider["path"]
    for report in sorted(cfg.reports_dir.glob("*.txt")):
        named[f"{cfg.raw['reports_dir']}/{report.name}"] = report
    for rel, path in named.items():
        inputs[rel] = _sha256(path)

    stages = []
    for name in STAGES:
        artifacts = {}
        for path in _stage_artifacts(cfg)[name]:
            if path.exists() and path.name not in _NOT_DIGESTED:
                artifacts[str(path.relative_to(cfg.output_dir))] = _sha256(path)
        stages.append({"name": name, "artifacts": artifacts})
    _write_json(
        cfg.output_dir / "manifest.json",
        {
            "format_version": 1,
            "tool": {"name": "worktrace", "version": __version__},
            "config": cfg.raw,
            "inputs": inputs,
            "stages": stages,
            # timings change run to run, so they live in an undigested sidecar
            "timings": "run_info.json",
        },
    )


_STAGE_FUNCS = {
    "validate": stage_validate,
    "chunk": stage_chunk,
    "score": stage_score,
    "graph": stage_graph,
    "propagate": stage_propagate,
    "metrics": stage_metrics,
    "export": stage_export,
}


def _execute(cfg: PipelineConfig, names: Sequence[str], workers: int) -> list[dict]:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    timings = []
    for name in names:
        started = time.perf_counter()
        log.info("stage %s starting", name)
        try:
            _STAGE_FUNCS[name](cfg, workers)
        except WorktraceError as exc:
            _write_json(
                cfg.output_dir / "error_report.json",
                {
                    "stage": name,
                    "error": type(exc).__name__,
                    "entity": exc.entity,
                    "message": str(exc),
                },
            )
            log.error("stage %s failed: %s", name, exc)
            raise
        seconds = time.perf_counter() - started
        timings.append({"name": name, "seconds": round(seconds, 6)})
        log.info("stage %s done in %.3fs", name, seconds)
    return timings


def run(cfg: PipelineConfig, *, workers: int = DEFAULT_WORKERS) -> Path:
    """All stages in order; returns the manifest path."""
    timings = _execute(cfg, STAGES, workers)
    _write_json(
        cfg.output_dir / "run_info.json", {"workers": workers, "stages": timings}
    )
    return cfg.output_dir / "manifest.json"


def run_stage(cfg: PipelineConfig, name: str, *, workers: int = DEFAULT_WORKERS) -> None:
    if name not in _STAGE_FUNCS:
        raise ConfigError(f"unknown stage {name!r}; stages are {', '.join(STAGES)}")
    _execute(cfg, [name], workers)
