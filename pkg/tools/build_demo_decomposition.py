"""Regenerate the bundled demonstration decomposition fixture.

A product-launch feasibility study broken down far enough to exercise every
structural feature: 116 subtasks, 96 of them leaves, six level-1 phases,
mixed-depth children, and both dependency kinds. Run from the repo root:

    python tools/build_demo_decomposition.py
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from worktrace.decomposition import build, serialize, validate

# (phase label, [(group label, [leaf labels]) or (None, [direct leaf labels])])
PHASES = [
    (
        "Frame the launch decision",
        [
            (
                "Scope the product offering",
                [
                    "Define launch configuration options",
                    "Identify the flagship feature set",
                    "Map accessory and service attach points",
                    "Set target price bands",
                    "Document regulatory constraints on the offering",
                    "Note open engineering risks",
                ],
            ),
            (
                "Profile the decision audience",
                [
                    "List decision makers and advisors",
                    "Record evaluation criteria by stakeholder",
                    "Capture risk tolerance by stakeholder",
                    "Identify information gaps to close",
                    "Agree on the reporting format",
                    "Schedule stakeholder reviews",
                ],
            ),
            (
                "Assemble prior evidence",
                [
                    "Collect prior launch retrospectives",
                    "Gather analyst coverage of the category",
                    "Pull internal sales baselines",
                    "Index competitor launch timelines",
                    "Summarize relevant regulatory rulings",
                    "File source quality notes",
                ],
            ),
            (None, ["Confirm success criteria with sponsors", "Set the analysis timeline"]),
        ],
    ),
    (
        "Map the market landscape",
        [
            (
                "Analyze competitors",
                [
                    "Identify direct competitors",
                    "Profile competitor pricing moves",
                    "Compare feature positioning",
                    "Track competitor supply partnerships",
                    "Assess competitor channel strength",
                    "Estimate competitor cost structures",
                ],
            ),
            (
                "Assess market entry barriers",
                [
                    "Quantify import duties and tariffs",
                    "Review certification requirements",
                    "Evaluate distribution lock-ins",
                    "Estimate the brand awareness gap",
                    "Analyze switching costs for buyers",
                    "Review local content rules",
                    "Summarize barrier severity",
                ],
            ),
            (
                None,
                [
                    "Define the served addressable market",
                    "Segment the region by channel structure",
                    "Estimate category growth",
                ],
            ),
        ],
    ),
    (
        "Model customer demand",
        [
            (
                "Research customer segments",
                [
                    "Define segment boundaries",
                    "Size each segment",
                    "Estimate willingness to pay per segment",
                    "Rank segments by product fit",
                    "Identify early-adopter niches",
                    "Document segment churn drivers",
                ],
            ),
            (
                "Run demand experiments",
                [
                    "Design the landing page test",
                    "Field the pricing survey",
                    "Analyze preorder signals",
                    "Benchmark against analog launches",
                    "Stress-test conversion assumptions",
                    "Log experiment caveats",
                ],
            ),
            (
                "Forecast adoption scenarios",
                [
                    "Build the low adoption scenario",
                    "Build the base adoption scenario",
                    "Build the high adoption scenario",
                    "Attach probability weights",
                    "Trace scenario sensitivities",
                    "Map scenarios to inventory needs",
                    "Write the scenario narrative",
                ],
            ),
            (None, ["Reconcile demand signals into a base forecast"]),
        ],
    ),
    (
        "Check operations readiness",
        [
            (
                "Plan fulfillment and logistics",
                [
                    "Select fulfillment partners",
                    "Model shipping cost per unit",
                    "Plan the customs clearance workflow",
                    "Define returns handling",
                    "Set service level targets",
                    "Identify logistics failure modes",
                ],
            ),
            (
                "Prepare support and warranty",
                [
                    "Size the support team",
                    "Draft warranty terms",
                    "Localize support content",
                    "Set spare parts stocking levels",
                    "Define escalation paths",
                    "Budget support operations",
                ],
            ),
            (None, ["Audit supplier commitments", "Confirm the launch staffing plan"]),
        ],
    ),
    (
        "Project the financials",
        [
            (
                "Estimate revenue",
                [
                    "Project unit volumes by quarter",
                    "Set realized price after promotions",
                    "Model attach revenue",
                    "Estimate channel margin give-up",
                    "Project deferred revenue items",
                    "Convert to reporting currency",
                    "Cross-check revenue against market share",
                ],
            ),
            (
                "Estimate costs",
                [
                    "Build the bill of materials cost",
                    "Estimate freight and duty per unit",
                    "Project marketing spend",
                    "Budget channel incentives",
                    "Allocate overhead",
                    "Estimate working capital needs",
                    "Quantify currency exposure",
                ],
            ),
            (None, ["Consolidate the pro forma statement", "Run the breakeven analysis"]),
        ],
    ),
    (
        "Deliver the recommendation",
        [
            (
                "Stress-test the recommendation",
                [
                    "List key assumptions",
                    "Identify assumption break points",
                    "Run the downside case",
                    "Run the upside case",
                    "Document mitigation options",
                    "Solicit red-team review",
                    "Record residual risks",
                ],
            ),
            (
                None,
                [
                    "Draft the go or no-go recommendation",
                    "Present findings to the steering group",
                    "Archive evidence and the decision log",
                ],
            ),
        ],
    ),
]


def main() -> None:
    nodes: list[tuple[str, str, str | None]] = [("0", "Assess the regional product launch", None)]
    deps: list[tuple[str, str, str]] = []

    for p, (phase_label, entries) in enumerate(PHASES, start=1):
        pid = str(p)
        nodes.append((pid, phase_label, "0"))
        child_no = 0
        for group_label, leaves in entries:
            if group_label is not None:
                child_no += 1
                gid = f"{pid}.{child_no}"
                nodes.append((gid, group_label, pid))
                for i, leaf in enumerate(leaves, start=1):
                    nodes.append((f"{gid}.{i}", leaf, gid))
            else:
                for leaf in leaves:
                    child_no += 1
                    nodes.append((f"{pid}.{child_no}", leaf, pid))

    for p in range(1, 6):
        deps.append((str(p), str(p + 1), "must"))
    deps.append(("2", "4", "equivocal"))
    # Scenario builds branch off the base case; ordering between the branches is soft.
    deps.append(("3.3.2", "3.3.1", "must"))
    deps.append(("3.3.2", "3.3.3", "must"))
    deps.append(("3.3.1", "3.3.3", "equivocal"))
    deps.append(("5.1", "5.3", "must"))
    deps.append(("5.2", "5.3", "must"))
    deps.append(("5.3", "5.4", "must"))

    d = build(nodes, deps)
    problems = validate(d)
    if problems:
        raise SystemExit(f"fixture invalid: {problems}")
    leaves = d.leaf_ids()
    phases = [n.id for n in d.nodes if n.level == 1]
    print(f"nodes={len(d.nodes)} leaves={len(leaves)} phases={len(phases)}")
    assert (len(d.nodes), len(leaves), len(phases)) == (116, 96, 6)

    out = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "study" / "decomposition.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialize(d), encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
