"""Combinatorial modulus and extremal length of curve families.

A cover is a finite list of elements, each a set of edges read as a closed
set, an open set, or a star (the closed edges plus the first third of every
edge adjacent to them).  Curves are edge paths, so incidence is decided
combinatorially.  For a family of weighted multicurves the admissible test
metrics are ``rho >= 0`` with ``sum_i w_i * #{elements met by strand i} >= 1``
for every member; the modulus is the least ``sum rho^q``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .graph import Graph
from .words import Strand, WeightedMultiCurve

CLOSED, OPEN, STAR = "closed", "open", "star"


@dataclass(frozen=True)
class Cover:
    graph: Graph
    kind: str
    elements: tuple[frozenset[int], ...]
    partial: bool = False

    def __post_init__(self):
        if self.kind not in (CLOSED, OPEN, STAR):
            raise ValueError(f"unknown cover kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.elements)

    def _vertices(self, i: int) -> set[int]:
        return {v for e in self.elements[i] for v in self.graph.ends(e)}

    def _halo(self, i: int) -> set[int]:
        """Edges whose interior the element touches."""
        core = set(self.elements[i])
        if self.kind != STAR:
            return core
        vs = self._vertices(i)
        return core | {self.graph.edge_of(k) for v in vs for k in self.graph.star[v]}

    def meets(self, i: int, strand: Strand) -> bool:
        g = self.graph
        edges = {g.edge_of(h) for h in strand.path}
        if self.kind == OPEN:
            return bool(edges & self.elements[i])
        if edges & self._halo(i):
            return True
        visited = {g.tail(h) for h in strand.path} | {g.head(h) for h in strand.path}
        return bool(visited & self._vertices(i))

    def intersects(self, i: int, other: "Cover", j: int) -> bool:
        """Whether element i of this cover meets element j of ``other`` as point sets."""
        a_open, b_open = self.kind == OPEN, other.kind == OPEN
        if a_open and b_open:
            return bool(self.elements[i] & other.elements[j])
        if a_open:
            return bool(self.elements[i] & other._halo(j))
        if b_open:
            return bool(other.elements[j] & self._halo(i))
        return bool(self._vertices(i) & other._vertices(j)) or bool(self.elements[i] & other.elements[j])


def edge_cover(graph: Graph) -> Cover:
    return Cover(graph, CLOSED, tuple(frozenset([e]) for e in range(graph.n_edges)))


def open_edge_cover(graph: Graph) -> Cover:
    return Cover(graph, OPEN, tuple(frozenset([e]) for e in range(graph.n_edges)), partial=True)


def star_cover(graph: Graph) -> Cover:
    return Cover(graph, STAR, tuple(frozenset([e]) for e in range(graph.n_edges)))


def build_covers(graph: Graph) -> dict[str, Cover]:
    return {"edge": edge_cover(graph), "open_edge": open_edge_cover(graph), "star": star_cover(graph)}


def _as_multicurve(graph: Graph, c) -> WeightedMultiCurve:
    if isinstance(c, WeightedMultiCurve):
        return c
    return WeightedMultiCurve.of(graph, tuple(c))


def incidence_row(c: WeightedMultiCurve, cover: Cover) -> np.ndarray:
    """Coefficients of rho in the length of a weighted multicurve."""
    row = np.zeros(len(cover))
    for s in c.strands:
        for i in range(len(cover)):
            if cover.meets(i, s):
                row[i] += s.weight
    return row


def rho_length(c, rho: Sequence[float], cover: Cover) -> float:
    """Each element met by a strand counts once, whatever the traversal count."""
    c = _as_multicurve(cover.graph, c)
    return float(incidence_row(c, cover) @ np.asarray(rho, float))


@dataclass(frozen=True)
class ModulusResult:
    value: float
    rho: tuple[float, ...]
    lower: float  # dual bound
    q: float

    @property
    def extremal_length(self) -> float:
        return 1.0 / self.value

    def as_json(self) -> dict[str, float]:
        return {str(i): r for i, r in enumerate(self.rho)}


def _solve(A: np.ndarray, q: float, tol: float) -> tuple[float, np.ndarray, float]:
    m, n = A.shape
    if q == 1:
        res = linprog(np.ones(n), A_ub=-A, b_ub=-np.ones(m), bounds=[(0, None)] * n, method="highs")
        if not res.success:
            raise RuntimeError(f"linear program failed: {res.message}")
        rho = np.asarray(res.x)
        return float(rho.sum()), rho, float(-res.ineqlin.marginals.sum())
    p = q / (q - 1)
    scale = q ** (-1 / (q - 1))

    def primal(lam: np.ndarray) -> np.ndarray:
        return scale * np.maximum(A.T @ lam, 0.0) ** (1 / (q - 1))

    def neg_dual(lam: np.ndarray) -> tuple[float, np.ndarray]:
        # g(lam) = sum lam - (q-1) * sum (A^T lam / q)^p
        rho = primal(lam)
        val = lam.sum() - (q - 1) * np.sum((np.maximum(A.T @ lam, 0.0) / q) ** p)
        return -float(val), -(np.ones(m) - A @ rho)

    lam = np.full(m, 1.0 / max(m, 1))
    best_rho, upper, lower = None, np.inf, -np.inf
    for _ in range(4):
        res = minimize(neg_dual, lam, jac=True, method="L-BFGS-B", bounds=[(0, None)] * m,
                       options={"maxiter": 20_000, "ftol": 1e-16, "gtol": 1e-14})
        lam = res.x
        lower = max(lower, -float(res.fun))
        rho = primal(lam)
        short = (A @ rho).min()
        if short <= 0:
            continue
        rho = rho / short
        # every rescaled rho is admissible and every dual value is a lower bound; keep the best of each
        if float(np.sum(rho**q)) < upper:
            best_rho, upper = rho, float(np.sum(rho**q))
        if upper - lower <= tol * upper:
            break
    if best_rho is None:
        raise RuntimeError("dual solve produced no admissible metric")
    return upper, best_rho, lower


def modulus(family: Sequence, cover: Cover, q: float, tol: float = 1e-11) -> ModulusResult:
    """Least q-volume of an admissible test metric, with a dual lower bound."""
    if not family:
        raise ValueError("modulus of an empty family")
    if q < 1:
        raise ValueError("modulus needs q >= 1")
    rows = [incidence_row(_as_multicurve(cover.graph, c), cover) for c in family]
    A = np.array(rows)
    for i, r in enumerate(rows):
        if not r.any():
            raise ValueError(f"family member {i} meets no element of the cover")
    value, rho, lower = _solve(A, q, tol)
    return ModulusResult(value, tuple(float(r) for r in rho), lower, q)


def extremal_length(family: Sequence, cover: Cover, q: float) -> float:
    return modulus(family, cover, q).extremal_length


def subdivide_multicurve(c: WeightedMultiCurve, cuts: Sequence[Sequence[int]]) -> WeightedMultiCurve:
    """Split strand i at the path positions ``cuts[i]``; pieces keep the weight.

    Positions are indices into the edge path, so ``[2]`` splits a path of
    length 5 into its first two edges and its last three.
    """
    if len(cuts) != len(c.strands):
        raise ValueError("one cut list per strand is required")
    out = []
    for s, cs in zip(c.strands, cuts):
        cs = list(cs)
        if len(set(cs)) != len(cs) or cs != sorted(cs):
            raise ValueError("cuts must be strictly increasing (overlapping pieces)")
        if any(not 0 < k < len(s.path) for k in cs):
            raise ValueError("cut outside the strand")
        if not cs:
            out.append(s)
            continue
        bounds = [0, *cs, len(s.path)]
        if s.closed:
            # the last piece wraps around to the first cut
            pieces = [s.path[a:b] for a, b in zip(bounds[1:-1], bounds[2:-1])]
            pieces.append(s.path[cs[-1]:] + s.path[: cs[0]])
        else:
            pieces = [s.path[a:b] for a, b in zip(bounds, bounds[1:])]
        out += [Strand(tuple(p), s.weight, False) for p in pieces]
    return WeightedMultiCurve(c.graph, tuple(out))


def weighted_closure_sample(family: Sequence[WeightedMultiCurve], weights: Sequence[Sequence[float]]):
    """Normalized combinations ``sum_j w_j * family[j]`` as multicurves."""
    out = []
    for w in weights:
        w = np.asarray(w, float)
        if (w < 0).any() or w.sum() <= 0:
            raise ValueError("combination weights must be nonnegative and not all zero")
        w = w / w.sum()
        strands = tuple(
            Strand(s.path, s.weight * float(wj), s.closed) for wj, c in zip(w, family) if wj > 0 for s in c.strands
        )
        out.append(WeightedMultiCurve(family[0].graph, strands))
    return out


def overlap_constant(u: Cover, v: Cover) -> int:
    """Least K such that every element of either cover meets at most K of the other."""
    k = 0
    for a, b in ((u, v), (v, u)):
        for i in range(len(a)):
            hits = sum(1 for j in range(len(b)) if a.intersects(i, b, j))
            if hits == 0:
                raise ValueError(f"element {i} of the {a.kind} cover meets no element of the {b.kind} cover")
            k = max(k, hits)
    return k


@dataclass(frozen=True)
class CoverComparison:
    mod_u: float
    mod_v: float
    K: int
    q: float

    @property
    def ratio(self) -> float:
        return self.mod_u / self.mod_v

    @property
    def band(self) -> tuple[float, float]:
        return float(self.K) ** (-self.q - 1), float(self.K) ** (self.q + 1)

    @property
    def within(self) -> bool:
        lo, hi = self.band
        return lo * (1 - 1e-9) <= self.ratio <= hi * (1 + 1e-9)


def compare_covers(family: Sequence, u: Cover, v: Cover, q: float) -> CoverComparison:
    """Moduli in two covers; the ratio lies in the band when both cover the whole graph."""
    if u.partial or v.partial:
        raise ValueError("bounded-overlap comparison needs covers of the whole graph")
    K = overlap_constant(u, v)
    return CoverComparison(modulus(family, u, q).value, modulus(family, v, q).value, K, q)


def single_loop_modulus(k: int, q: float) -> float:
    """Closed form for one loop around a k-cycle in the edge cover."""
    return float(k) ** (1 - q)

