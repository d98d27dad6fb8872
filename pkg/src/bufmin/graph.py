"""Conflict graphs, named families and structural queries.

Machines are indexed 0..n-1 internally and labelled m_1..m_n everywhere a
human sees them (JSON, CLI, traces). An edge means the two machines share a
resource and can never run at the same time.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Optional, Tuple

Edge = Tuple[int, int]


class GraphError(ValueError):
    pass


def _norm_edge(u: int, v: int) -> Edge:
    if u == v:
        raise GraphError(f"self-loop on machine {u + 1}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class ConflictGraph:
    """Immutable conflict graph; safe to share across parallel workers."""

    n: int
    edges: FrozenSet[Edge]
    family: Optional[str] = None
    params: Optional[tuple] = None
    _neighbors: tuple = field(init=False, repr=False, compare=False, default=())

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("machine count must be positive")
        for u, v in self.edges:
            if not (0 <= u < v < self.n):
                raise GraphError(f"edge ({u + 1},{v + 1}) out of range")
        nbrs = [set() for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        object.__setattr__(self, "_neighbors", tuple(frozenset(s) for s in nbrs))
        if not self._connected():
            raise GraphError("disconnected conflict graphs are rejected; "
                             "analyze components separately")

    def _connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self._neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    # -- queries ---------------------------------------------------------
    def machines(self) -> range:
        return range(self.n)

    def label(self, i: int) -> str:
        return f"m{i + 1}"

    def adjacent(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in self.edges if u != v else False

    def neighbors(self, v: int) -> FrozenSet[int]:
        return self._neighbors[v]

    def is_independent(self, subset: Iterable[int]) -> bool:
        sub = list(subset)
        return all(not self.adjacent(u, v) for u, v in itertools.combinations(sub, 2))

    def is_clique(self, subset: Iterable[int]) -> bool:
        sub = list(subset)
        return all(self.adjacent(u, v) for u, v in itertools.combinations(sub, 2))

    def independent_sets(self) -> Tuple[FrozenSet[int], ...]:
        """All independent sets (including the empty set), enumerated
        exhaustively and sorted canonically (by size, then lexicographic).

        Graphs here are desk-scale (n <= ~16), so brute force is fine and
        keeps correctness independent of any cleverness.
        """
        out = []
        for mask in range(1 << self.n):
            subset = [i for i in range(self.n) if mask >> i & 1]
            if self.is_independent(subset):
                out.append(frozenset(subset))
        out.sort(key=lambda s: (len(s), sorted(s)))
        return tuple(out)

    def neighbors_outside(self, subset: Iterable[int]) -> FrozenSet[int]:
        """N(X) = union of neighborhoods of X, minus X itself."""
        xs = frozenset(subset)
        acc = set()
        for v in xs:
            acc |= self._neighbors[v]
        return frozenset(acc - xs)

    def is_smooth(self, subset: Iterable[int]) -> bool:
        """True iff every vertex of X sees exactly N(X) outside X."""
        xs = frozenset(subset)
        outside = self.neighbors_outside(xs)
        return all(self._neighbors[v] - xs == outside for v in xs)

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        doc = {"n": self.n,
               "edges": sorted([u + 1, v + 1] for u, v in self.edges)}
        if self.family is not None:
            doc["family"] = self.family
        if self.params is not None:
            doc["params"] = list(self.params)
        return doc

    @staticmethod
    def from_json(doc: dict) -> "ConflictGraph":
        n = int(doc["n"])
        edges = frozenset(_norm_edge(int(u) - 1, int(v) - 1) for u, v in doc["edges"])
        params = tuple(doc["params"]) if doc.get("params") is not None else None
        return ConflictGraph(n, edges, doc.get("family"), params)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @staticmethod
    def loads(text: str) -> "ConflictGraph":
        return ConflictGraph.from_json(json.loads(text))


@dataclass(frozen=True)
class PartiteSpec:
    """Complete k-partite graph given by its class sizes n_1..n_k."""

    class_sizes: Tuple[int, ...]

    def __post_init__(self):
        if len(self.class_sizes) < 2:
            raise GraphError("k-partite spec needs k >= 2")
        if any(s < 1 for s in self.class_sizes):
            raise GraphError("class sizes must be positive")

    @property
    def k(self) -> int:
        return len(self.class_sizes)

    def classes(self) -> Tuple[Tuple[int, ...], ...]:
        """Machine indices per class, labelled class by class."""
        out, start = [], 0
        for size in self.class_sizes:
            out.append(tuple(range(start, start + size)))
            start += size
        return tuple(out)

    def build(self) -> ConflictGraph:
        classes = self.classes()
        edges = set()
        for a, b in itertools.combinations(classes, 2):
            for u in a:
                for v in b:
                    edges.add(_norm_edge(u, v))
        name = "K_" + ",".join(str(s) for s in self.class_sizes)
        return ConflictGraph(sum(self.class_sizes), frozenset(edges),
                             family=name, params=self.class_sizes)


def mu(spec: PartiteSpec) -> int:
    """Number of partition classes that consist of a single machine."""
    return sum(1 for s in spec.class_sizes if s == 1)


def _complete(n: int) -> FrozenSet[Edge]:
    return frozenset(_norm_edge(u, v) for u, v in itertools.combinations(range(n), 2))


def build_named(family: str, *params: int) -> ConflictGraph:
    """Construct a graph family with its canonical machine numbering.

    K3+e is numbered so deg(m3)=3 and deg(m4)=1; K4-e so that
    deg(m1)=deg(m4)=2 and deg(m2)=deg(m3)=3 (the missing edge is m1-m4).
    Algorithm thresholds bind to these labels, so the numbering is part of
    the contract.
    """
    fam = family.lower().replace("_", "").replace("-", "-")
    if fam in ("kn", "k"):
        (n,) = params
        if n < 1:
            raise GraphError("K_n needs n >= 1")
        return ConflictGraph(n, _complete(n), family=f"K{n}", params=(n,))
    if fam in ("pn", "p"):
        (n,) = params
        if n < 1:
            raise GraphError("P_n needs n >= 1")
        edges = frozenset(_norm_edge(i, i + 1) for i in range(n - 1))
        return ConflictGraph(n, edges, family=f"P{n}", params=(n,))
    if fam == "c4":
        edges = frozenset([_norm_edge(0, 1), _norm_edge(1, 2),
                           _norm_edge(2, 3), _norm_edge(3, 0)])
        return ConflictGraph(4, edges, family="C4")
    if fam in ("kab", "bipartite"):
        a, b = params
        return PartiteSpec((a, b)).build()
    if fam in ("kpartite", "completekpartite", "partite"):
        return PartiteSpec(tuple(params)).build()
    if fam in ("k4-e", "k4me", "k4minus"):
        edges = frozenset([_norm_edge(0, 1), _norm_edge(1, 3), _norm_edge(3, 2),
                           _norm_edge(2, 0), _norm_edge(1, 2)])
        return ConflictGraph(4, edges, family="K4-e")
    if fam in ("k3+e", "k3pe", "k3plus"):
        edges = frozenset([_norm_edge(0, 1), _norm_edge(0, 2),
                           _norm_edge(1, 2), _norm_edge(2, 3)])
        return ConflictGraph(4, edges, family="K3+e")
    raise GraphError(f"unknown graph family: {family!r}")


def parse_graph_arg(text: str) -> ConflictGraph:
    """CLI helper: 'k4', 'k3+e', 'k4-e', 'c4', 'p4', 'k1,3', 'k2,2,2',
    or a path to a JSON graph file."""
    t = text.strip().lower()
    if t.startswith("{"):
        return ConflictGraph.loads(text)
    if t == "c4":
        return build_named("c4")
    if t in ("k4-e", "k4me"):
        return build_named("k4-e")
    if t in ("k3+e", "k3pe"):
        return build_named("k3+e")
    if t.startswith("k") and "," in t:
        sizes = tuple(int(s) for s in t[1:].split(","))
        return PartiteSpec(sizes).build()
    if t.startswith("k") and t[1:].isdigit():
        return build_named("kn", int(t[1:]))
    if t.startswith("p") and t[1:].isdigit():
        return build_named("pn", int(t[1:]))
    with open(text) as fh:
        return ConflictGraph.from_json(json.load(fh))
