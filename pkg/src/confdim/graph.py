"""Finite multigraphs with q-conformal structures.

Graphs are stored as half-edges with an origin map and a pairing
involution.  Loops and parallel edges need no special treatment.  The
constructor ``Graph.from_edges`` lays half-edges out as ``2e`` (tail to
head) and ``2e + 1`` (head to tail), which is what every builder in the
package uses; arbitrary layouts are accepted so that malformed input can
be diagnosed by :func:`validate`.
"""

from __future__ import annotations

import math
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

INF = math.inf
REL_TOL = 1e-9


def holder_conjugate(q: float) -> float:
    """Return q' with 1/q + 1/q' = 1 (so 1 <-> inf, 2 <-> 2)."""
    if q < 1:
        raise ValueError(f"exponent must be >= 1, got {q}")
    if q == 1:
        return INF
    if math.isinf(q):
        return 1.0
    return q / (q - 1.0)


@dataclass(frozen=True)
class Graph:
    n_vertices: int
    origin: tuple[int, ...]
    involution: tuple[int, ...]
    vertex_names: tuple[str, ...] = ()
    edge_names: tuple[str, ...] = ()

    @classmethod
    def from_edges(
        cls,
        n_vertices: int,
        ends: Iterable[tuple[int, int]],
        vertex_names: Sequence[str] | None = None,
        edge_names: Sequence[str] | None = None,
    ) -> "Graph":
        origin: list[int] = []
        for tail, head in ends:
            origin += [tail, head]
        m = len(origin) // 2
        inv = tuple(h ^ 1 for h in range(2 * m))
        vnames = tuple(vertex_names) if vertex_names else tuple(f"v{i}" for i in range(n_vertices))
        enames = tuple(edge_names) if edge_names else tuple(f"e{i}" for i in range(m))
        return cls(n_vertices, tuple(origin), inv, vnames, enames)

    # Half-edge bookkeeping.  These assume a valid involution.

    @cached_property
    def _edge_table(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        edge_of = [-1] * len(self.origin)
        positive: list[int] = []
        for h, k in enumerate(self.involution):
            if h < k:
                edge_of[h] = edge_of[k] = len(positive)
                positive.append(h)
        return tuple(edge_of), tuple(positive)

    @property
    def n_half_edges(self) -> int:
        return len(self.origin)

    @property
    def n_edges(self) -> int:
        return len(self._edge_table[1])

    def edge_of(self, h: int) -> int:
        return self._edge_table[0][h]

    def half(self, e: int, sign: int = 1) -> int:
        """Half-edge of edge ``e`` pointing forward (+1) or backward (-1)."""
        h = self._edge_table[1][e]
        return h if sign > 0 else self.involution[h]

    def sign(self, h: int) -> int:
        return 1 if self._edge_table[1][self.edge_of(h)] == h else -1

    def rev(self, h: int) -> int:
        return self.involution[h]

    def tail(self, h: int) -> int:
        return self.origin[h]

    def head(self, h: int) -> int:
        return self.origin[self.involution[h]]

    def ends(self, e: int) -> tuple[int, int]:
        h = self.half(e)
        return self.tail(h), self.head(h)

    @cached_property
    def star(self) -> tuple[tuple[int, ...], ...]:
        """Half-edges leaving each vertex, in increasing order."""
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for h, v in enumerate(self.origin):
            out[v].append(h)
        return tuple(tuple(s) for s in out)

    def degree(self, v: int) -> int:
        return len(self.star[v])

    def components(self) -> list[list[int]]:
        parent = list(range(self.n_vertices))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for h, k in enumerate(self.involution):
            a, b = find(self.origin[h]), find(self.origin[k])
            if a != b:
                parent[a] = b
        groups: dict[int, list[int]] = {}
        for v in range(self.n_vertices):
            groups.setdefault(find(v), []).append(v)
        return list(groups.values())

    def is_connected(self) -> bool:
        return self.n_vertices > 0 and len(self.components()) == 1

    def rank(self) -> int:
        """Rank of the fundamental group (connected graphs)."""
        return self.n_edges - self.n_vertices + len(self.components())

    # Naming helpers for signed edge words like "e3" / "-e3".

    @cached_property
    def _edge_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.edge_names)}

    @cached_property
    def _vertex_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.vertex_names)}

    def vertex(self, name: str) -> int:
        return self._vertex_index[name]

    def parse_half(self, token: str) -> int:
        if token.startswith("-"):
            return self.half(self._edge_index[token[1:]], -1)
        return self.half(self._edge_index[token], 1)

    def half_name(self, h: int) -> str:
        name = self.edge_names[self.edge_of(h)]
        return name if self.sign(h) > 0 else "-" + name

    def parse_path(self, tokens: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.parse_half(t) for t in tokens)

    def path_names(self, path: Iterable[int]) -> list[str]:
        return [self.half_name(h) for h in path]

    def is_path(self, path: Sequence[int], start: int | None = None) -> bool:
        for a, b in zip(path, path[1:]):
            if self.head(a) != self.tail(b):
                return False
        return not path or start is None or self.tail(path[0]) == start


@dataclass(frozen=True)
class ConformalStructure:
    """Edge values: q-lengths for q > 1, weights for q = 1."""

    exponent: float
    values: tuple[float, ...]

    @classmethod
    def uniform(cls, graph: Graph, q: float = 2.0, value: float = 1.0) -> "ConformalStructure":
        return cls(q, (value,) * graph.n_edges)

    def with_exponent(self, q: float) -> "ConformalStructure":
        return ConformalStructure(q, self.values)


def validate(graph: Graph, structure: ConformalStructure | None = None) -> list[str]:
    """Return human-readable violations; an empty list means valid."""
    problems: list[str] = []
    nh = len(graph.origin)
    if len(graph.involution) != nh:
        problems.append("involution and origin tables differ in length")
        return problems
    for h, v in enumerate(graph.origin):
        if not 0 <= v < graph.n_vertices:
            problems.append(f"dangling half-edge {h}: origin {v} is not a vertex")
    for h, k in enumerate(graph.involution):
        if not 0 <= k < nh:
            problems.append(f"dangling half-edge {h}: partner {k} does not exist")
        elif k == h:
            problems.append(f"involution fixed point at half-edge {h}")
        elif graph.involution[k] != h:
            problems.append(f"involution is not an involution at half-edge {h}")
    if problems:
        return problems
    comps = graph.components()
    if len(comps) > 1:
        problems.append(f"disconnected: {len(comps)} components")
    if structure is not None:
        if structure.exponent < 1:
            problems.append(f"exponent {structure.exponent} < 1")
        if len(structure.values) != graph.n_edges:
            problems.append("structure has wrong number of edge values")
        for e, a in enumerate(structure.values):
            if not (a > 0 and math.isfinite(a)):
                label = "q-length" if structure.exponent > 1 else "weight"
                problems.append(f"non-positive {label} on edge {graph.edge_names[e]}: {a}")
    return problems


def parallel_join(a: float, b: float, q: float) -> float:
    """Effective q-length of two parallel edges."""
    if not (1 < q < INF):
        raise ValueError("parallel law needs 1 < q < inf")
    if a <= 0 or b <= 0:
        raise ValueError("lengths must be positive")
    return (a ** (1 - q) + b ** (1 - q)) ** (1 / (1 - q))


@dataclass
class _EdgeList:
    ends: list[tuple[int, int]]
    lengths: list[float]
    names: list[str] = field(default_factory=list)


def series_parallel_reduce(
    graph: Graph,
    structure: ConformalStructure,
    protected: Iterable[int] | None = None,
    seed: int | None = None,
) -> tuple[Graph, ConformalStructure]:
    """Merge parallel edges and splice series edges until stuck.

    A vertex is spliced out once it has exactly two incident edge ends, so
    interior vertices of parallel bundles in series disappear after merging.
    ``seed`` shuffles
    the order in which available moves are applied; the result does not
    depend on it for series-parallel networks.
    """
    q = structure.exponent
    if not (1 < q < INF):
        raise ValueError("reduction needs 1 < q < inf")
    keep = set(protected or ())
    rng = random.Random(seed)
    el = _EdgeList(
        [graph.ends(e) for e in range(graph.n_edges)],
        list(structure.values),
        list(graph.edge_names),
    )
    alive = set(range(graph.n_vertices))

    while True:
        moves: list[tuple[str, object]] = []
        seen: dict[frozenset[int], int] = {}
        for i, (u, v) in enumerate(el.ends):
            if u == v:
                continue
            key = frozenset((u, v))
            if key in seen:
                moves.append(("parallel", (seen[key], i)))
            else:
                seen[key] = i
        incident: dict[int, list[int]] = {}
        for i, (u, v) in enumerate(el.ends):
            incident.setdefault(u, []).append(i)
            if v != u:
                incident.setdefault(v, []).append(i)
            else:
                incident.setdefault(u, []).append(i)
        for v in sorted(alive - keep):
            inc = incident.get(v, [])
            if len(inc) == 2 and inc[0] != inc[1]:
                a, b = (el.ends[i] for i in inc)
                if a[0] != a[1] and b[0] != b[1]:
                    moves.append(("series", (v, inc[0], inc[1])))
        if not moves:
            break
        kind, data = moves[rng.randrange(len(moves))] if seed is not None else moves[0]
        if kind == "parallel":
            i, j = data  # type: ignore[misc]
            el.lengths[i] = parallel_join(el.lengths[i], el.lengths[j], q)
            _drop(el, j)
        else:
            v, i, j = data  # type: ignore[misc]
            u = _other_end(el.ends[i], v)
            w = _other_end(el.ends[j], v)
            el.ends[i] = (u, w)
            el.lengths[i] += el.lengths[j]
            el.names[i] = f"{el.names[i]}+{el.names[j]}"
            _drop(el, j)
            alive.discard(v)

    order = sorted(alive)
    index = {v: k for k, v in enumerate(order)}
    g = Graph.from_edges(
        len(order),
        [(index[u], index[v]) for u, v in el.ends],
        [graph.vertex_names[v] for v in order],
        el.names,
    )
    return g, ConformalStructure(q, tuple(el.lengths))


def _drop(el: _EdgeList, j: int) -> None:
    del el.ends[j]
    del el.lengths[j]
    del el.names[j]


def _other_end(ends: tuple[int, int], v: int) -> int:
    return ends[1] if ends[0] == v else ends[0]


def subdivide_loops(graph: Graph, structure: ConformalStructure) -> tuple[Graph, ConformalStructure]:
    """Split every self-loop at a new midpoint vertex."""
    ends: list[tuple[int, int]] = []
    lengths: list[float] = []
    names: list[str] = []
    vnames = list(graph.vertex_names)
    n = graph.n_vertices
    for e in range(graph.n_edges):
        u, v = graph.ends(e)
        a = structure.values[e]
        if u == v:
            w = n
            n += 1
            vnames.append(f"{graph.edge_names[e]}_mid")
            ends += [(u, w), (w, v)]
            lengths += [a / 2, a / 2]
            names += [f"{graph.edge_names[e]}_a", f"{graph.edge_names[e]}_b"]
        else:
            ends.append((u, v))
            lengths.append(a)
            names.append(graph.edge_names[e])
    if n == graph.n_vertices:
        return graph, structure
    return Graph.from_edges(n, ends, vnames, names), ConformalStructure(structure.exponent, tuple(lengths))
