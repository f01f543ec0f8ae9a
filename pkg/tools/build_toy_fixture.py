"""Regenerate the bundled two-participant toy fixture.

The fixture is sized so P1's turn-1 response (exactly 60 words) and P1's
report (exactly 70 words) produce a mid-text 50-word chunk pair with 4
transcript children against 5 report children. The committed score table
holds lexical-overlap scores for every same-window pair, so file-backed
runs, lexical runs, and stub-service runs all see identical numbers.

Run from the repo root: python tools/build_toy_fixture.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from worktrace.chunker import chunk_report, chunk_utterance
from worktrace.corpus import load_report, load_transcript, pair_turns
from worktrace.decomposition import build, load_decomposition, serialize
from worktrace.simprovider import LexicalProvider, write_score_file

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "toy"

P1_T1_RESPONSE = (
    "Define three configuration options for the launch: a base unit, a bundle "
    "with accessories, and a service plan. Price bands should follow competitor "
    "pricing in the region, roughly 480 dollars for the base unit. Demand "
    "forecasts suggest the bundle drives margin growth. Document regulatory "
    "constraints early, because certification requirements often delay launches "
    "beyond the planned quarter by several full weeks."
)

P1_REPORT = (
    "The launch assessment recommends the bundle configuration at 480 dollars. "
    "Competitor pricing in the region clusters near that band, and demand "
    "forecasts show the bundle driving margin growth of 4.5 percent. "
    "Certification requirements remain the main regulatory constraint and could "
    "delay the launch a full quarter. Support costs near 9,900 dollars per "
    "month fit the budget. We recommend proceeding with the regional launch in "
    "the next planning cycle this year."
)

TRANSCRIPT_ROWS = [
    # participant, turn, speaker, text, subtask codes, specialty codes
    [
        "P1", 1, "prompt",
        "What launch configuration options should we define for the base product tier?",
        "1.1", "product",
    ],
    ["P1", 1, "response", P1_T1_RESPONSE, "1.1;2.1", ""],
    [
        "P1", 2, "prompt",
        "How should competitor pricing in the region shape our price bands, and "
        "which channel segments matter most when we estimate category growth?",
        "2.1", "",
    ],
    [
        "P1", 2, "response",
        "Anchor the price bands on the three closest competitors and revisit them "
        "after the certification milestone. Channel mix matters more than raw "
        "category growth: direct sales carry better margin, while retail "
        "partners move volume during the launch quarter.",
        "2.1;3.1", "",
    ],
    [
        "P1", 3, "prompt",
        "Thanks, that helps. Can you also sanity check the support budget for me?",
        "", "",
    ],
    [
        "P1", 3, "response",
        "At the forecast volumes the support team stays under budget: roughly "
        "9,900 dollars per month, including warranty reserves. Margin growth of "
        "4.5 percent survives that support cost in every demand scenario.",
        "3.1", "finance",
    ],
    [
        "P2", 1, "prompt",
        "Summarize the barriers to entering the region and how severe each one "
        "looks for our launch.",
        "1.1", "",
    ],
    [
        "P2", 1, "response",
        "The serious barriers are certification requirements and distribution "
        "lock-ins; import duties matter less at the planned price. Certification "
        "usually takes two quarters in this region. Distribution lock-ins can be "
        "worked around through direct channels, which several competitors "
        "already use for comparable products. Expect the brand awareness gap to "
        "demand sustained marketing spend well past launch.",
        "1.1;3.1", "",
    ],
    [
        "P2", 2, "prompt",
        "Good. Draft the severity table before our next session, please.",
        "3.1", "",
    ],
]

P2_REPORT = (
    "Entry barriers for the region rank as follows: certification requirements "
    "are severe, distribution lock-ins moderate, import duties minor. "
    "Certification timelines near two quarters dominate the launch plan. Direct "
    "channels bypass the distribution lock-ins, as competitors have shown. The "
    "brand awareness gap requires sustained marketing spend beyond launch."
)

GRADES_ROWS = [
    "P1,1.1,g1,4,4,2,true",
    "P1,1.1,g2,5,4,1,true",
    "P1,2.1,g1,3,3,3,true",
    "P1,2.1,g2,4,3,2,false",
    "P1,3.1,g1,2,2,4,false",
    "P1,3.1,g2,3,2,3,false",
    "P1,1.2,g1,0,1,5,false",
    "P2,1.1,g1,4,3,2,true",
    "P2,3.1,g1,1,1,4,false",
]

CONFIG = {
    "format_version": 1,
    "decomposition": "decomposition.json",
    "transcripts": "transcripts.csv",
    "reports_dir": "reports",
    "grades": "grades.csv",
    "provider": {"kind": "file", "path": "scores.csv"},
    "windows": [20, 50, 100],
    "sinkhorn": {"k_max": 1000, "epsilon": 1e-9},
    "sigmoid_steepness": 1.0,
    "metrics": {
        "attention_speakers": "both",
        "diversity_variant": "union",
        "frontier_threshold": 0.25,
        "frontier_timing": "before",
        "common_number_max": 20,
        "year_range": [1900, 2100],
    },
    "w100_child_inputs": "aggregated",
    "include_uncoded_utterances": False,
    "score_floor": 0.0,
    "output_dir": "out",
}


def toy_decomposition():
    return build(
        [
            ("0", "Assess the launch", None),
            ("1", "Frame the decision", "0"),
            ("1.1", "Scope the offering", "1"),
            ("1.2", "Assemble prior evidence", "1"),
            ("2", "Study the market", "0"),
            ("2.1", "Set price bands", "2"),
            ("2.2", "Map the channels", "2"),
            ("3", "Project the outcome", "0"),
            ("3.1", "Budget support costs", "3"),
            ("3.2", "Write the recommendation", "3"),
        ],
        [("1", "2", "must"), ("2", "3", "must"), ("1.1", "1.2", "equivocal")],
    )


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "reports").mkdir(exist_ok=True)

    assert len(P1_T1_RESPONSE.split()) == 60, len(P1_T1_RESPONSE.split())
    assert len(P1_REPORT.split()) == 70, len(P1_REPORT.split())

    d = toy_decomposition()
    (OUT / "decomposition.json").write_text(serialize(d), encoding="utf-8")

    import csv
    import io

    buf = io.StringIO()
    buf.write("# format_version=1\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["participant_id", "turn_index", "speaker", "text", "subtask_codes", "specialty_codes"]
    )
    writer.writerows(TRANSCRIPT_ROWS)
    (OUT / "transcripts.csv").write_text(buf.getvalue(), encoding="utf-8")

    (OUT / "reports" / "P1.txt").write_text(P1_REPORT + "\n", encoding="utf-8")
    (OUT / "reports" / "P2.txt").write_text(P2_REPORT + "\n", encoding="utf-8")

    header = (
        "participant_id,subtask_id,grader_id,completeness,"
        "output_quality,room_for_improvement,satisfactory"
    )
    (OUT / "grades.csv").write_text(
        "# format_version=1\n" + header + "\n" + "\n".join(GRADES_ROWS) + "\n",
        encoding="utf-8",
    )

    (OUT / "config.json").write_text(
        json.dumps(CONFIG, indent=2) + "\n", encoding="utf-8"
    )

    # Score every same-window pair with the lexical stub and commit the table.
    loaded = load_decomposition((OUT / "decomposition.json").read_bytes())
    utterances = load_transcript((OUT / "transcripts.csv").read_text(), loaded)
    provider = LexicalProvider()
    scores = []
    for pid in ("P1", "P2"):
        mine = [
            u
            for record in pair_turns([u for u in utterances if u.participant_id == pid])
            for u in (record.prompt, record.response)
            if u.subtask_codes
        ]
        t_chunks = [c for u in mine for c in chunk_utterance(u)]
        report = load_report((OUT / "reports" / f"{pid}.txt").read_bytes(), pid)
        r_chunks = chunk_report(report)
        pairs = [
            (t, r)
            for w in (100, 50, 20)
            for t in t_chunks
            if t.window == w
            for r in r_chunks
            if r.window == w
        ]
        scores.extend(provider.score_pairs(pairs))
    write_score_file(OUT / "scores.csv", scores)
    print(f"wrote toy fixture with {len(scores)} scored pairs to {OUT}")


if __name__ == "__main__":
    main()
