"""Per-participant multipartite semantic graph.

Layers run subtask -> coded utterance -> transcript chunks (largest window
down to smallest) and mirror back up the report side: with the standard
windows the eight layers are subtask, utterance, t100, t50, t20, r20, r50,
r100. Directed hierarchy edges carry shared-word weights between chunk
layers and weight 1 above them; undirected similarity edges join transcript
and report chunks of equal window size.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .chunker import WINDOWS, Chunk, build_hierarchy, utterance_origin
from .corpus import Utterance
from .decomposition import Decomposition
from .errors import EmptyGraphError, ParseError, UnknownNodeError
from .simprovider import PairScore, SimilarityProvider
from .tableio import read_table, write_table

HIER = "hier"
SIM = "sim"


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    kind: str  # hier | sim
    weight: float


@dataclass
class SemanticGraph:
    participant_id: str
    layers: dict[str, tuple[str, ...]]
    layer_of: dict[str, str]
    edges: tuple[GraphEdge, ...]
    chunks: dict[str, Chunk] = field(default_factory=dict)
    _out: dict[str, list[tuple[str, float]]] = field(init=False, repr=False)
    _in: dict[str, list[tuple[str, float]]] = field(init=False, repr=False)
    _sim: dict[str, list[tuple[str, float]]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        out: dict[str, list[tuple[str, float]]] = {n: [] for n in self.layer_of}
        incoming: dict[str, list[tuple[str, float]]] = {n: [] for n in self.layer_of}
        sim: dict[str, list[tuple[str, float]]] = {n: [] for n in self.layer_of}
        for e in self.edges:
            if e.kind == HIER:
                out[e.src].append((e.dst, e.weight))
                incoming[e.dst].append((e.src, e.weight))
            else:
                sim[e.src].append((e.dst, e.weight))
                sim[e.dst].append((e.src, e.weight))
        self._out = out
        self._in = incoming
        self._sim = sim

    def _check(self, node: str) -> None:
        if node not in self.layer_of:
            raise UnknownNodeError(f"{node!r} is not in {self.participant_id}'s graph")

    def children(self, node: str) -> tuple[str, ...]:
        self._check(node)
        return tuple(dst for dst, _ in self._out[node])

    def parents(self, node: str) -> tuple[str, ...]:
        self._check(node)
        return tuple(src for src, _ in self._in[node])

    def sim_neighbors(self, node: str) -> tuple[str, ...]:
        self._check(node)
        return tuple(dst for dst, _ in self._sim[node])

    def child_weights(self, node: str) -> tuple[tuple[str, float], ...]:
        self._check(node)
        return tuple(self._out[node])

    def sim_scores(self, node: str) -> tuple[tuple[str, float], ...]:
        self._check(node)
        return tuple(self._sim[node])

    def sim_score(self, a: str, b: str) -> float:
        self._check(a)
        for dst, score in self._sim[a]:
            if dst == b:
                return score
        raise UnknownNodeError(f"no similarity edge between {a!r} and {b!r}")

    def chunk_layers(self, side: str) -> list[str]:
        """Chunk layer names for one side, largest window first."""
        prefix = side[0]
        sized = []
        for name in self.layers:
            if name.startswith(prefix) and name[1:].isdigit():
                sized.append((int(name[1:]), name))
        return [name for _, name in sorted(sized, reverse=True)]


def build_graph(
    participant_id: str,
    utterances: Sequence[Utterance],
    decomposition: Decomposition,
    transcript_chunks: Sequence[Chunk],
    report_chunks: Sequence[Chunk],
    provider: SimilarityProvider,
    *,
    windows: Sequence[int] = WINDOWS,
    score_floor: float = 0.0,
) -> SemanticGraph:
    """Assemble the graph and score every same-window transcript/report pair.

    The similarity request is one batch in a fixed order, so providers see
    identical inputs run over run.
    """
    coded = [u for u in utterances if u.subtask_codes]
    if not coded:
        raise EmptyGraphError(
            f"participant {participant_id} has no coded utterances",
            entity=participant_id,
        )

    subtasks = sorted({code for u in utterances for code in u.subtask_codes})
    for code in subtasks:
        decomposition.node(code)

    utter_ids = [utterance_origin(u) for u in utterances]
    by_origin: dict[str, list[Chunk]] = {}
    for c in transcript_chunks:
        by_origin.setdefault(c.origin, []).append(c)

    top = max(windows)
    layers: dict[str, list[str]] = {"subtask": list(subtasks), "utterance": list(utter_ids)}
    for w in sorted(windows, reverse=True):
        layers[f"t{w}"] = []
    for w in sorted(windows):
        layers[f"r{w}"] = []
    t_by_window: dict[int, list[Chunk]] = {w: [] for w in windows}
    for u, uid in zip(utterances, utter_ids):
        for c in by_origin.get(uid, []):
            layers[f"t{c.window}"].append(c.chunk_id)
            t_by_window[c.window].append(c)
    r_by_window: dict[int, list[Chunk]] = {w: [] for w in windows}
    for c in report_chunks:
        layers[f"r{c.window}"].append(c.chunk_id)
        r_by_window[c.window].append(c)

    edges: list[GraphEdge] = []
    for u, uid in zip(utterances, utter_ids):
        for code in sorted(u.subtask_codes):
            edges.append(GraphEdge(code, uid, HIER, 1.0))
        for c in by_origin.get(uid, []):
            if c.window == top:
                edges.append(GraphEdge(uid, c.chunk_id, HIER, 1.0))
    for origin_chunks in (by_origin.get(uid, []) for uid in utter_ids):
        for h in build_hierarchy(origin_chunks):
            edges.append(GraphEdge(h.parent, h.child, HIER, h.weight))
    for h in build_hierarchy(report_chunks):
        edges.append(GraphEdge(h.parent, h.child, HIER, h.weight))

    pairs = [
        (t, r)
        for w in sorted(windows, reverse=True)
        for t in t_by_window[w]
        for r in r_by_window[w]
    ]
    for scored in provider.score_pairs(pairs):
        if scored.score >= score_floor:
            edges.append(GraphEdge(scored.left, scored.right, SIM, scored.score))

    frozen = {name: tuple(ids) for name, ids in layers.items()}
    layer_of = {node: name for name, ids in frozen.items() for node in ids}
    chunks = {c.chunk_id: c for c in (*transcript_chunks, *report_chunks)}
    return SemanticGraph(participant_id, frozen, layer_of, tuple(edges), chunks)


def audit(g: SemanticGraph) -> list[str]:
    """Structural problems in the graph; empty means sound."""
    problems = []
    node_count = sum(len(ids) for ids in g.layers.values())
    if len(g.layer_of) != node_count:
        problems.append("a node appears in more than one layer")

    t_layers = g.chunk_layers("transcript")
    r_layers = g.chunk_layers("report")
    allowed = {("subtask", "utterance")}
    if t_layers:
        allowed.add(("utterance", t_layers[0]))
        allowed.update(zip(t_layers, t_layers[1:]))
        allowed.update(zip(r_layers, r_layers[1:]))
    for e in g.edges:
        src_layer = g.layer_of.get(e.src)
        dst_layer = g.layer_of.get(e.dst)
        if src_layer is None or dst_layer is None:
            problems.append(f"edge {e.src}->{e.dst} touches an unknown node")
            continue
        if e.kind == HIER:
            if (src_layer, dst_layer) not in allowed:
                problems.append(
                    f"hier edge {e.src}->{e.dst} joins layers {src_layer}/{dst_layer}"
                )
            chunk_to_chunk = src_layer not in ("subtask", "utterance")
            if chunk_to_chunk and not 0.0 < e.weight <= 1.0:
                problems.append(f"hier edge {e.src}->{e.dst} weight {e.weight} outside (0, 1]")
            if not chunk_to_chunk and e.weight != 1.0:
                problems.append(f"edge {e.src}->{e.dst} above chunk layers must weigh 1")
        else:
            if not (src_layer.startswith("t") and dst_layer.startswith("r")):
                problems.append(f"sim edge {e.src}->{e.dst} joins layers {src_layer}/{dst_layer}")
            elif src_layer[1:] != dst_layer[1:]:
                problems.append(f"sim edge {e.src}->{e.dst} crosses window sizes")
            if not 0.0 <= e.weight <= 1.0:
                problems.append(f"sim edge {e.src}->{e.dst} score {e.weight} outside [0, 1]")
    return problems


def export_graph(g: SemanticGraph, nodes_path: str | Path, edges_path: str | Path) -> None:
    node_rows: list[list[object]] = []
    for layer, ids in g.layers.items():
        node_rows.extend([node, layer] for node in ids)
    write_table(nodes_path, ["node_id", "layer"], node_rows)
    write_table(
        edges_path,
        ["src", "dst", "kind", "weight_or_score"],
        [[e.src, e.dst, e.kind, e.weight] for e in g.edges],
    )


def load_graph_export(
    nodes_path: str | Path, edges_path: str | Path, participant_id: str
) -> SemanticGraph:
    """Rebuild the id-level graph from its export files.

    Chunk payloads (texts, word sets) are not part of the export; downstream
    propagation only needs ids, weights, and scores.
    """
    _, _, node_rows = read_table(nodes_path)
    layers: dict[str, list[str]] = {}
    for row in node_rows:
        layers.setdefault(row["layer"], []).append(row["node_id"])
    _, _, edge_rows = read_table(edges_path)
    edges = []
    for row in edge_rows:
        if row["kind"] not in (HIER, SIM):
            raise ParseError(f"unknown edge kind {row['kind']!r}")
        edges.append(
            GraphEdge(row["src"], row["dst"], row["kind"], float(row["weight_or_score"]))
        )
    frozen = {name: tuple(ids) for name, ids in layers.items()}
    layer_of = {node: name for name, ids in frozen.items() for node in ids}
    return SemanticGraph(participant_id, frozen, layer_of, tuple(edges))


def sim_pairs(edges: Iterable[GraphEdge]) -> list[PairScore]:
    return [PairScore(e.src, e.dst, e.weight) for e in edges if e.kind == SIM]
