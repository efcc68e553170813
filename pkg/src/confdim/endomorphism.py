"""Virtual endomorphisms of graphs and their iteration tower.

A virtual endomorphism is a pair of maps ``pi, phi: G1 -> G0`` where
``pi`` is a finite covering.  Level ``n`` of the tower is the iterated
fiber product; every level carries a covering ``pi_n0`` and an edge-path
map ``phi_n0`` down to ``G0``.
"""

from __future__ import annotations

import os
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field

from .graph import ConformalStructure, Graph

DEFAULT_MAX_EDGES = 10_000_000

Path = tuple[int, ...]


class LevelCapError(RuntimeError):
    """Raised when a tower level would exceed the configured edge cap."""


def max_edges() -> int:
    raw = os.environ.get("CONFDIM_MAX_EDGES")
    return int(float(raw)) if raw else DEFAULT_MAX_EDGES


def reduce_path(graph: Graph, path: Sequence[int]) -> Path:
    """Cancel immediate backtracks ``h, rev(h)``, leftmost first."""
    out: list[int] = []
    for h in path:
        if out and out[-1] == graph.rev(h):
            out.pop()
        else:
            out.append(h)
    return tuple(out)


def reverse_path(graph: Graph, path: Sequence[int]) -> Path:
    return tuple(graph.rev(h) for h in reversed(path))


def has_backtrack(graph: Graph, path: Sequence[int]) -> bool:
    return any(b == graph.rev(a) for a, b in zip(path, path[1:]))


@dataclass(frozen=True)
class CoveringMap:
    domain: Graph
    codomain: Graph
    vertex_image: tuple[int, ...]
    half_edge_image: tuple[int, ...]

    def lift_table(self) -> dict[tuple[int, int], int]:
        """(domain vertex, codomain half-edge) -> domain half-edge."""
        return {(self.domain.tail(h), self.half_edge_image[h]): h for h in range(self.domain.n_half_edges)}

    def fiber(self, v: int) -> list[int]:
        return [x for x, y in enumerate(self.vertex_image) if y == v]

    def compose(self, other: "CoveringMap") -> "CoveringMap":
        """``other`` after ``self``."""
        return CoveringMap(
            self.domain,
            other.codomain,
            tuple(other.vertex_image[v] for v in self.vertex_image),
            tuple(other.half_edge_image[h] for h in self.half_edge_image),
        )

    @classmethod
    def identity(cls, graph: Graph) -> "CoveringMap":
        return cls(graph, graph, tuple(range(graph.n_vertices)), tuple(range(graph.n_half_edges)))


@dataclass(frozen=True)
class EdgePathMap:
    domain: Graph
    codomain: Graph
    vertex_image: tuple[int, ...]
    edge_image: tuple[Path, ...]

    def image(self, h: int) -> Path:
        """Image path of a domain half-edge."""
        e = self.domain.edge_of(h)
        p = self.edge_image[e]
        return p if self.domain.sign(h) > 0 else reverse_path(self.codomain, p)

    def path_image(self, path: Sequence[int]) -> Path:
        out: list[int] = []
        for h in path:
            out.extend(self.image(h))
        return reduce_path(self.codomain, out)

    def check(self) -> list[str]:
        problems = []
        for e, p in enumerate(self.edge_image):
            u, v = self.domain.ends(e)
            a, b = self.vertex_image[u], self.vertex_image[v]
            name = self.domain.edge_names[e]
            if not self.codomain.is_path(p):
                problems.append(f"image of {name} is not a path")
            elif p and (self.codomain.tail(p[0]) != a or self.codomain.head(p[-1]) != b):
                problems.append(f"image of {name} does not join the vertex images")
            elif not p and a != b:
                problems.append(f"{name} collapses but its ends map to different vertices")
        return problems

    def is_reduced(self) -> bool:
        return not any(has_backtrack(self.codomain, p) for p in self.edge_image)

    def reduced(self) -> "EdgePathMap":
        return EdgePathMap(
            self.domain,
            self.codomain,
            self.vertex_image,
            tuple(reduce_path(self.codomain, p) for p in self.edge_image),
        )

    def then(self, other: "EdgePathMap") -> "EdgePathMap":
        """``other`` after ``self``, freely reduced."""
        return EdgePathMap(
            self.domain,
            other.codomain,
            tuple(other.vertex_image[v] for v in self.vertex_image),
            tuple(other.path_image(p) for p in self.edge_image),
        )

    @classmethod
    def identity(cls, graph: Graph) -> "EdgePathMap":
        return cls(
            graph,
            graph,
            tuple(range(graph.n_vertices)),
            tuple((graph.half(e),) for e in range(graph.n_edges)),
        )

    @classmethod
    def from_covering(cls, pi: CoveringMap) -> "EdgePathMap":
        g = pi.domain
        return cls(
            g,
            pi.codomain,
            pi.vertex_image,
            tuple((pi.half_edge_image[g.half(e)],) for e in range(g.n_edges)),
        )


def check_covering(pi: CoveringMap) -> int | list[str]:
    """Degree of ``pi`` if it is a covering map, otherwise the violations."""
    g, h = pi.domain, pi.codomain
    problems: list[str] = []
    for x in range(g.n_half_edges):
        y = pi.half_edge_image[x]
        if pi.half_edge_image[g.rev(x)] != h.rev(y):
            problems.append(f"half-edge {g.half_name(x)}: map does not commute with the involution")
        if pi.vertex_image[g.tail(x)] != h.tail(y):
            problems.append(f"half-edge {g.half_name(x)}: map does not commute with origins")
    for v in range(g.n_vertices):
        images = sorted(pi.half_edge_image[x] for x in g.star[v])
        target = sorted(h.star[pi.vertex_image[v]])
        if images != target:
            problems.append(f"vertex {g.vertex_names[v]}: not locally bijective")
    sizes = {len(pi.fiber(w)) for w in range(h.n_vertices)}
    if len(sizes) > 1:
        problems.append(f"fiber sizes differ: {sorted(sizes)}")
    if problems:
        return problems
    return sizes.pop() if sizes else 0


def lift_structure(pi: CoveringMap, structure: ConformalStructure) -> ConformalStructure:
    g = pi.domain
    values = tuple(
        structure.values[pi.codomain.edge_of(pi.half_edge_image[g.half(e)])] for e in range(g.n_edges)
    )
    return ConformalStructure(structure.exponent, values)


@dataclass(frozen=True)
class VirtualEndomorphism:
    g1: Graph
    g0: Graph
    pi: CoveringMap
    phi: EdgePathMap
    degree: int
    structure: ConformalStructure | None = None

    def problems(self) -> list[str]:
        out: list[str] = []
        d = check_covering(self.pi)
        if isinstance(d, list):
            out += d
        elif d != self.degree:
            out.append(f"declared degree {self.degree} but covering has degree {d}")
        out += self.phi.check()
        return out


# Recurrence: surjectivity on fundamental groups via Stallings folding.


def _spanning_tree(graph: Graph, root: int) -> tuple[dict[int, int], set[int]]:
    """Parent half-edge (pointing towards the vertex) and tree edge set."""
    parent: dict[int, int] = {}
    tree: set[int] = set()
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for h in graph.star[v]:
            w = graph.head(h)
            if w not in seen:
                seen.add(w)
                parent[w] = h
                tree.add(graph.edge_of(h))
                queue.append(w)
    return parent, tree


def _tree_path(graph: Graph, parent: dict[int, int], v: int) -> list[int]:
    """Tree path from the root to ``v``."""
    out = []
    while v in parent:
        h = parent[v]
        out.append(h)
        v = graph.tail(h)
    return out[::-1]


def loop_generators(graph: Graph, root: int = 0) -> list[Path]:
    """Closed paths at ``root`` freely generating the fundamental group."""
    parent, tree = _spanning_tree(graph, root)
    gens = []
    for e in range(graph.n_edges):
        if e in tree:
            continue
        h = graph.half(e)
        p = _tree_path(graph, parent, graph.tail(h)) + [h]
        p += reverse_path(graph, _tree_path(graph, parent, graph.head(h)))
        gens.append(reduce_path(graph, p))
    return gens


def _letters(graph: Graph, tree: set[int], path: Sequence[int]) -> tuple[tuple[int, int], ...]:
    nontree = {e: i for i, e in enumerate(e for e in range(graph.n_edges) if e not in tree)}
    out: list[tuple[int, int]] = []
    for h in path:
        e = graph.edge_of(h)
        if e in tree:
            continue
        letter = (nontree[e], graph.sign(h))
        if out and out[-1] == (letter[0], -letter[1]):
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def stallings_fold(words: Sequence[Sequence[tuple[int, int]]]) -> tuple[int, list[tuple[int, int, int]]]:
    """Fold the wedge of ``words`` into an immersed graph.

    Returns the vertex count and the labelled edges ``(u, generator, v)``
    after removing hanging trees away from the base vertex 0.
    """
    edges: list[tuple[int, int, int]] = []
    n = 1
    for w in words:
        if not w:
            continue
        cur = 0
        for i, (g, s) in enumerate(w):
            nxt = 0 if i == len(w) - 1 else n
            if nxt:
                n += 1
            edges.append((cur, g, nxt) if s > 0 else (nxt, g, cur))
            cur = nxt
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    changed = True
    while changed:
        changed = False
        edges = sorted({(find(u), g, find(v)) for u, g, v in edges})
        out: dict[tuple[int, int, int], int] = {}
        for u, g, v in edges:
            for key, other in (((u, g, 1), v), ((v, g, -1), u)):
                if key in out and find(out[key]) != find(other):
                    parent[find(other)] = find(out[key])
                    changed = True
                else:
                    out.setdefault(key, other)
    edges = sorted({(find(u), g, find(v)) for u, g, v in edges})
    base = find(0)
    while True:
        deg: dict[int, int] = {}
        for u, _, v in edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        leaves = {x for x, k in deg.items() if k == 1 and x != base}
        if not leaves:
            break
        edges = [t for t in edges if t[0] not in leaves and t[2] not in leaves]
    verts = {base} | {u for u, _, _ in edges} | {v for _, _, v in edges}
    return len(verts), edges


def check_recurrent(ve: VirtualEndomorphism) -> bool:
    """True iff phi induces a surjection of fundamental groups."""
    if not (ve.g1.is_connected() and ve.g0.is_connected()):
        raise ValueError("recurrence needs connected graphs")
    return maps_onto_pi1(ve.phi)


def maps_onto_pi1(phi: EdgePathMap, root: int = 0) -> bool:
    g1, g0 = phi.domain, phi.codomain
    if g0.rank() == 0:
        return True
    base = phi.vertex_image[root]
    _, tree0 = _spanning_tree(g0, base)
    words = [_letters(g0, tree0, phi.path_image(loop)) for loop in loop_generators(g1, root)]
    n, edges = stallings_fold(words)
    labels = {(g, u == v) for u, g, v in edges}
    return n == 1 and {g for g, loop in labels if loop} == set(range(g0.rank()))


# The tower.


@dataclass(frozen=True)
class TowerLevel:
    level: int
    graph: Graph
    pi: CoveringMap
    phi: EdgePathMap
    structure: ConformalStructure | None = None
    vertex_pairs: tuple[tuple[int, int], ...] = ()
    edge_pairs: tuple[tuple[int, int], ...] = ()
    phi_step: EdgePathMap | None = None
    pi_step: CoveringMap | None = None
    first: tuple[int, ...] = field(default=())

    @property
    def degree(self) -> int:
        return self.graph.n_vertices // max(self.pi.codomain.n_vertices, 1)


def base_level(ve: VirtualEndomorphism) -> TowerLevel:
    """Level 1: the endomorphism itself."""
    structure = lift_structure(ve.pi, ve.structure) if ve.structure else None
    return TowerLevel(
        1,
        ve.g1,
        ve.pi,
        ve.phi.reduced(),
        structure,
        pi_step=ve.pi,
        phi_step=ve.phi.reduced(),
        first=tuple(range(ve.g1.n_vertices)),
    )


def fiber_product(a: TowerLevel, b: TowerLevel, structure: ConformalStructure | None = None) -> TowerLevel:
    """Level ``a.level + b.level`` as pairs over ``pi_a`` and ``phi_b``.

    Each ``phi_b`` edge path is lifted through the covering ``pi_a`` from
    every point of the fiber over its start.
    """
    ga, gb = a.graph, b.graph
    lift = a.pi.lift_table()
    fibers: dict[int, list[int]] = {}
    for x, y in enumerate(a.pi.vertex_image):
        fibers.setdefault(y, []).append(x)

    pairs: list[tuple[int, int]] = []
    index: dict[tuple[int, int], int] = {}
    for vb in range(gb.n_vertices):
        for va in fibers.get(b.phi.vertex_image[vb], []):
            index[(va, vb)] = len(pairs)
            pairs.append((va, vb))

    ends: list[tuple[int, int]] = []
    epairs: list[tuple[int, int]] = []
    lifted: list[Path] = []
    for e in range(gb.n_edges):
        t, h = gb.ends(e)
        path = b.phi.edge_image[e]
        for va in fibers.get(b.phi.vertex_image[t], []):
            cur = va
            up: list[int] = []
            for k in path:
                x = lift.get((cur, k))
                if x is None:
                    raise RuntimeError("path lifting failed: broken covering")
                up.append(x)
                cur = ga.head(x)
            ends.append((index[(va, t)], index[(cur, h)]))
            epairs.append((e, va))
            lifted.append(tuple(up))

    n = a.level + b.level
    graph = Graph.from_edges(
        len(pairs),
        ends,
        [f"L{n}v{i}" for i in range(len(pairs))],
        [f"L{n}e{i}" for i in range(len(ends))],
    )
    hb = [0] * graph.n_half_edges
    for i, (e, _) in enumerate(epairs):
        hb[graph.half(i)] = gb.half(e)
        hb[graph.half(i, -1)] = gb.half(e, -1)
    proj_b = CoveringMap(graph, gb, tuple(v for _, v in pairs), tuple(hb))
    pi = proj_b.compose(b.pi)
    step = EdgePathMap(graph, ga, tuple(v for v, _ in pairs), tuple(lifted))
    phi = step.then(a.phi)
    return TowerLevel(
        n,
        graph,
        pi,
        phi,
        lift_structure(pi, structure) if structure is not None else None,
        tuple(pairs),
        tuple(epairs),
        phi_step=step,
        first=tuple(a.first[v] for v, _ in pairs) if a.first else (),
    )


def _drop_first(prev: TowerLevel, level: TowerLevel, one: TowerLevel) -> CoveringMap:
    """Covering ``G_n -> G_(n-1)`` forgetting the first coordinate."""
    if prev.level == 1:
        return CoveringMap(
            level.graph,
            one.graph,
            tuple(b for _, b in level.vertex_pairs),
            tuple(_pair_half(level, one, i) for i in range(level.graph.n_half_edges)),
        )
    down = prev.pi_step
    assert down is not None
    vindex = {p: i for i, p in enumerate(prev.vertex_pairs)}
    eindex = {p: i for i, p in enumerate(prev.edge_pairs)}
    vimg = tuple(vindex[(down.vertex_image[a], b)] for a, b in level.vertex_pairs)
    himg = [0] * level.graph.n_half_edges
    for i, (e, a) in enumerate(level.edge_pairs):
        j = eindex[(e, down.vertex_image[a])]
        himg[level.graph.half(i)] = prev.graph.half(j)
        himg[level.graph.half(i, -1)] = prev.graph.half(j, -1)
    return CoveringMap(level.graph, prev.graph, vimg, tuple(himg))


def _pair_half(level: TowerLevel, one: TowerLevel, h: int) -> int:
    e, _ = level.edge_pairs[level.graph.edge_of(h)]
    return one.graph.half(e, level.graph.sign(h))


def pullback(ve: VirtualEndomorphism, level: TowerLevel, one: TowerLevel | None = None) -> TowerLevel:
    """Build level n+1 from level n."""
    one = one or base_level(ve)
    nxt = fiber_product(level, one, ve.structure)
    pi_step = _drop_first(level, nxt, one)
    return TowerLevel(
        nxt.level,
        nxt.graph,
        nxt.pi,
        nxt.phi,
        nxt.structure,
        nxt.vertex_pairs,
        nxt.edge_pairs,
        nxt.phi_step,
        pi_step,
        nxt.first,
    )


def iterate(ve: VirtualEndomorphism, n: int, cap: int | None = None) -> list[TowerLevel]:
    """Levels 1..n of the tower (index k-1 holds level k)."""
    if n < 1:
        raise ValueError("level must be >= 1")
    cap = max_edges() if cap is None else cap
    projected = ve.degree**n * ve.g0.n_edges
    if projected > cap:
        raise LevelCapError(f"level {n} would have {projected} edges (cap {cap})")
    one = base_level(ve)
    levels = [one]
    while len(levels) < n:
        levels.append(pullback(ve, levels[-1], one))
    return levels


def isomorphic_over_base(x: TowerLevel, y: TowerLevel) -> bool:
    """Cover isomorphism over G0 that also matches the reduced phi words."""
    gx, gy = x.graph, y.graph
    if (gx.n_vertices, gx.n_edges) != (gy.n_vertices, gy.n_edges):
        return False
    lift_y = y.pi.lift_table()
    vmap: dict[int, int] = {}
    used: set[int] = set()
    for start in range(gx.n_vertices):
        if start in vmap:
            continue
        for cand in range(gy.n_vertices):
            if cand in used:
                continue
            attempt = _extend(x, y, lift_y, start, cand, vmap, used)
            if attempt is not None:
                vmap.update(attempt)
                used.update(attempt.values())
                break
        else:
            return False
    return len(used) == gy.n_vertices


def _extend(x, y, lift_y, start, cand, vmap, used):
    gx = x.graph
    if x.pi.vertex_image[start] != y.pi.vertex_image[cand] or x.phi.vertex_image[start] != y.phi.vertex_image[cand]:
        return None
    local = {start: cand}
    taken = set(used) | {cand}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        w = local[v]
        for h in gx.star[v]:
            k = lift_y.get((w, x.pi.half_edge_image[h]))
            if k is None or x.phi.image(h) != y.phi.image(k):
                return None
            hv, hw = gx.head(h), y.graph.head(k)
            if hv in local or hv in vmap:
                if local.get(hv, vmap.get(hv)) != hw:
                    return None
                continue
            if hw in taken or y.phi.vertex_image[hw] != x.phi.vertex_image[hv]:
                return None
            local[hv] = hw
            taken.add(hw)
            queue.append(hv)
    return local
