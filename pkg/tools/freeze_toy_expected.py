"""Freeze expected propagation values for the toy fixture.

Everything here is recomputed from the fixture's raw text with the naive
oracle implementations in tests/oracles.py, not with the package, so the
frozen numbers are an independent check on the production code path.
"""

import csv
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import (  # noqa: E402
    jaccard,
    naive_level_columns,
    naive_sinkhorn,
    naive_spans,
    shared_fraction,
)

FIXTURE = ROOT / "tests" / "fixtures" / "toy"

FOCAL_T = "P1:t1r:w50:25"
FOCAL_R = "P1:doc:w50:25"


def load_corpus():
    by_pid: dict[str, list[tuple[str, list[str]]]] = {}
    with open(FIXTURE / "transcripts.csv", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
        for row in csv.DictReader(lines):
            if not row["subtask_codes"]:
                continue
            pid = row["participant_id"]
            tag = "p" if row["speaker"] == "prompt" else "r"
            origin = f"{pid}:t{row['turn_index']}{tag}"
            by_pid.setdefault(pid, []).append((origin, row["text"].split()))
    reports = {}
    for path in sorted((FIXTURE / "reports").glob("*.txt")):
        reports[path.stem] = path.read_text().split()
    return by_pid, reports


def focal_trace(utterances, report_words):
    t_origin, t50_off = "P1:t1r", 25
    r50_off = 25
    t_words = dict(utterances)[t_origin]
    t50_span = dict(naive_spans(t_words, 50))[t50_off]
    r50_span = dict(naive_spans(report_words, 50))[r50_off]
    parent_score = jaccard(t50_span, r50_span)

    def kids(words, parent_off, parent_window, child_window):
        parent = words[parent_off : parent_off + parent_window]
        out = []
        for off, span in naive_spans(words, child_window):
            if off < parent_off + len(parent) and parent_off < off + len(span):
                w = shared_fraction(parent, span)
                if w > 0:
                    out.append((off, span, w))
        return out

    rows = kids(report_words, r50_off, 50, 20)
    cols = kids(t_words, t50_off, 50, 20)
    sim = [
        [jaccard(c_span, r_span) for _, c_span, _ in cols]
        for _, r_span, _ in rows
    ]
    weights = [[wr + wt for _, _, wt in cols] for _, _, wr in rows]
    norm = naive_sinkhorn(weights)
    weighted = [
        [norm[i][j] * sim[i][j] for j in range(len(cols))]
        for i in range(len(rows))
    ]
    v = [sum(row) for row in weighted]
    v_adj = [(x + parent_score) / 2.0 for x in v]
    return {
        "t_parent": FOCAL_T,
        "r_parent": FOCAL_R,
        "row_ids": [f"P1:doc:w20:{off}" for off, _, _ in rows],
        "col_ids": [f"{t_origin}:w20:{off}" for off, _, _ in cols],
        "parent_score": parent_score,
        "sim": sim,
        "weights": weights,
        "normalized_weights": norm,
        "weighted_sim": weighted,
        "v": v,
        "v_adj": v_adj,
    }


def main():
    by_pid, reports = load_corpus()
    out = {
        "trace": focal_trace(by_pid["P1"], reports["P1"]),
        "levels": {},
    }
    for pid in sorted(by_pid):
        w50, w100 = naive_level_columns(
            by_pid[pid], reports[pid], report_origin=f"{pid}:doc"
        )
        out["levels"][pid] = {"50": w50, "100": w100}
    path = FIXTURE / "expected_propagation.json"
    path.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    trace = out["trace"]
    print(f"trace {len(trace['row_ids'])}x{len(trace['col_ids'])}")
    print(f"parent score {trace['parent_score']:.6f}")
    print(f"v_adj {['%.6f' % x for x in trace['v_adj']]}")
    for pid, levels in out["levels"].items():
        for lvl, cols in levels.items():
            print(f"{pid} w{lvl}: {len(cols)} columns")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
