"""Task decomposition graph: the coordinate system for every metric.

A decomposition is a rooted tree of subtasks plus temporal-dependency edges
between siblings. Loading enforces what is needed to build the object at all
(unique ids, resolvable references, a single root, derivable levels);
:func:`validate` reports the authoring rules, so a structurally loadable but
badly authored decomposition is described rather than rejected.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Iterable

from .errors import IntegrityError, ParseError, UnknownNodeError

FORMAT_VERSION = 1

DependencyKind = str  # "must" or "equivocal"
_KINDS = ("must", "equivocal")


@dataclass(frozen=True)
class SubtaskNode:
    id: str
    label: str
    parent_id: str | None
    level: int


@dataclass(frozen=True)
class TemporalDependency:
    from_id: str
    to_id: str
    kind: DependencyKind


@dataclass(frozen=True)
class Violation:
    """One broken authoring rule, with the nodes involved."""

    rule: str  # min_children | non_sibling_dependency | dependency_cycle | parent_count
    node_ids: tuple[str, ...]
    message: str


@dataclass(frozen=True)
class Decomposition:
    nodes: tuple[SubtaskNode, ...]
    dependencies: tuple[TemporalDependency, ...]
    root_id: str
    by_id: dict[str, SubtaskNode] = field(init=False, repr=False, compare=False)
    children_of: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id = {n.id: n for n in self.nodes}
        children: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            if n.parent_id is not None and n.parent_id in children:
                children[n.parent_id].append(n.id)
        object.__setattr__(self, "by_id", by_id)
        object.__setattr__(
            self, "children_of", {pid: tuple(ids) for pid, ids in children.items()}
        )

    def node(self, node_id: str) -> SubtaskNode:
        try:
            return self.by_id[node_id]
        except KeyError:
            raise UnknownNodeError(f"no subtask with id {node_id!r}") from None

    def leaf_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if not self.children_of[n.id])

    def ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)


def build(
    nodes: Iterable[tuple[str, str, str | None]],
    dependencies: Iterable[tuple[str, str, str]] = (),
) -> Decomposition:
    """Construct a decomposition from (id, label, parent_id) triples.

    Levels are derived by walking parent links; the same derivation the
    loader uses. Intended for tests and programmatic authoring, and applies
    the same structural checks as loading a file.
    """
    raw_nodes = list(nodes)
    seen: set[str] = set()
    for node_id, _, _ in raw_nodes:
        if node_id in seen:
            raise IntegrityError(f"duplicate subtask id {node_id!r}", entity=node_id)
        seen.add(node_id)
    for node_id, _, parent_id in raw_nodes:
        if parent_id is not None and parent_id not in seen:
            raise IntegrityError(
                f"node {node_id!r} references missing parent {parent_id!r}", entity=node_id
            )
    roots = [node_id for node_id, _, parent_id in raw_nodes if parent_id is None]
    if len(roots) != 1:
        raise IntegrityError(f"expected exactly one root node, found {len(roots)}")
    root_id = roots[0]

    parent = {node_id: parent_id for node_id, _, parent_id in raw_nodes}
    levels: dict[str, int] = {root_id: 0}
    order = deque([root_id])
    child_ids: dict[str, list[str]] = {node_id: [] for node_id, _, _ in raw_nodes}
    for node_id, _, parent_id in raw_nodes:
        if parent_id is not None:
            child_ids[parent_id].append(node_id)
    while order:
        current = order.popleft()
        for child in child_ids[current]:
            levels[child] = levels[current] + 1
            order.append(child)
    if len(levels) != len(raw_nodes):
        stranded = sorted(set(parent) - set(levels))
        raise IntegrityError(
            f"nodes unreachable from root (parent cycle?): {', '.join(stranded)}"
        )

    deps = []
    for from_id, to_id, kind in dependencies:
        for endpoint in (from_id, to_id):
            if endpoint not in seen:
                raise IntegrityError(
                    f"dependency references missing subtask {endpoint!r}", entity=endpoint
                )
        if from_id == to_id:
            raise IntegrityError(
                f"dependency loops on {from_id!r}", entity=from_id
            )
        if kind not in _KINDS:
            raise ParseError(f"unknown dependency kind {kind!r}")
        deps.append(TemporalDependency(from_id, to_id, kind))

    built = tuple(
        SubtaskNode(node_id, label, parent_id, levels[node_id])
        for node_id, label, parent_id in raw_nodes
    )
    return Decomposition(built, tuple(deps), root_id)


def load_decomposition(source: IO[bytes] | str | bytes) -> Decomposition:
    """Load a decomposition document (see the file format in the README)."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"decomposition is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "nodes" not in doc:
        raise ParseError("decomposition document must be an object with a 'nodes' list")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported decomposition format_version {version!r}")

    nodes: list[tuple[str, str, str | None]] = []
    for i, entry in enumerate(doc["nodes"]):
        try:
            nodes.append((entry["id"], entry["label"], entry.get("parent_id")))
        except (TypeError, KeyError) as exc:
            raise ParseError(f"node entry {i} missing field: {exc}") from None
    deps: list[tuple[str, str, str]] = []
    for i, entry in enumerate(doc.get("dependencies", [])):
        try:
            deps.append((entry["from"], entry["to"], entry["kind"]))
        except (TypeError, KeyError) as exc:
            raise ParseError(f"dependency entry {i} missing field: {exc}") from None
    return build(nodes, deps)


def serialize(d: Decomposition) -> str:
    """Inverse of :func:`load_decomposition`, stable across runs."""
    doc = {
        "format_version": FORMAT_VERSION,
        "nodes": [
            {"id": n.id, "label": n.label, "parent_id": n.parent_id} for n in d.nodes
        ],
        "dependencies": [
            {"from": dep.from_id, "to": dep.to_id, "kind": dep.kind}
            for dep in d.dependencies
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def validate(d: Decomposition) -> list[Violation]:
    """Check the authoring rules; an empty list means the decomposition is valid.

    Rules: every non-leaf node splits into at least two subtasks; dependencies
    connect siblings only; must-dependencies within a sibling group are
    acyclic; every non-root node has exactly one resolvable parent.
    """
    violations: list[Violation] = []

    for node in d.nodes:
        kids = d.children_of[node.id]
        if len(kids) == 1:
            violations.append(
                Violation(
                    "min_children",
                    (node.id,),
                    f"subtask {node.id!r} breaks into only one subtask",
                )
            )

    for node in d.nodes:
        if node.id == d.root_id:
            continue
        if node.parent_id is None or node.parent_id not in d.by_id:
            violations.append(
                Violation(
                    "parent_count",
                    (node.id,),
                    f"non-root subtask {node.id!r} lacks a resolvable parent",
                )
            )

    sibling_groups: dict[str | None, list[TemporalDependency]] = {}
    for dep in d.dependencies:
        from_node = d.by_id.get(dep.from_id)
        to_node = d.by_id.get(dep.to_id)
        if (
            from_node is None
            or to_node is None
            or from_node.parent_id != to_node.parent_id
            or from_node.parent_id is None
        ):
            violations.append(
                Violation(
                    "non_sibling_dependency",
                    (dep.from_id, dep.to_id),
                    f"dependency {dep.from_id!r} -> {dep.to_id!r} does not connect siblings",
                )
            )
            continue
        if dep.kind == "must":
            sibling_groups.setdefault(from_node.parent_id, []).append(dep)

    for parent_id, deps in sorted(sibling_groups.items()):
        cycle = _find_cycle(deps)
        if cycle:
            violations.append(
                Violation(
                    "dependency_cycle",
                    tuple(cycle),
                    f"must-dependencies under {parent_id!r} form a cycle: "
                    + " -> ".join(cycle),
                )
            )
    return violations


def _find_cycle(deps: list[TemporalDependency]) -> list[str] | None:
    """First cycle in a must-dependency edge set, as a closed node walk."""
    out: dict[str, list[str]] = {}
    for dep in deps:
        out.setdefault(dep.from_id, []).append(dep.to_id)
    state: dict[str, int] = {}  # 1 = on stack, 2 = done
    for start in sorted(out):
        if state.get(start):
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        path = []
        while stack:
            node, idx = stack.pop()
            if idx == 0:
                state[node] = 1
                path.append(node)
            targets = out.get(node, [])
            advanced = False
            for j in range(idx, len(targets)):
                target = targets[j]
                if state.get(target) == 1:
                    return path[path.index(target) :] + [target]
                if not state.get(target):
                    stack.append((node, j + 1))
                    stack.append((target, 0))
                    advanced = True
                    break
            if not advanced:
                state[node] = 2
                path.pop()
    return None


def distance(
    d: Decomposition, a: str, b: str, *, include_dependencies: bool = False
) -> int:
    """Shortest-path length between two subtasks over undirected hierarchy edges.

    Dependency edges carry ordering rather than topical relatedness and are
    excluded by default; include_dependencies lets them shorten paths for
    sensitivity checks.
    """
    d.node(a)
    d.node(b)
    if a == b:
        return 0
    adjacent: dict[str, set[str]] = {n.id: set() for n in d.nodes}
    for n in d.nodes:
        if n.parent_id is not None and n.parent_id in adjacent:
            adjacent[n.id].add(n.parent_id)
            adjacent[n.parent_id].add(n.id)
    if include_dependencies:
        for dep in d.dependencies:
            if dep.from_id in adjacent and dep.to_id in adjacent:
                adjacent[dep.from_id].add(dep.to_id)
                adjacent[dep.to_id].add(dep.from_id)
    seen = {a}
    frontier = deque([(a, 0)])
    while frontier:
        node, dist = frontier.popleft()
        for neighbor in adjacent[node]:
            if neighbor == b:
                return dist + 1
            if neighbor not in seen:
                seen.add(neighbor)
                frontier.append((neighbor, dist + 1))
    raise UnknownNodeError(f"no path between {a!r} and {b!r}")
