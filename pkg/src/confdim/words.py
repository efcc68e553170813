"""Edge words, cyclic words and weighted multicurves on a graph."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .endomorphism import EdgePathMap, has_backtrack, reduce_path, reverse_path
from .graph import Graph

Word = tuple[int, ...]


def cyclic_reduce(graph: Graph, word: Sequence[int]) -> Word:
    """Freely and cyclically reduce a closed edge word."""
    w = list(reduce_path(graph, word))
    while len(w) >= 2 and w[-1] == graph.rev(w[0]):
        w = w[1:-1]
    return tuple(w)


def is_cyclically_reduced(graph: Graph, word: Sequence[int]) -> bool:
    if has_backtrack(graph, word):
        return False
    return len(word) < 2 or word[-1] != graph.rev(word[0])


def _least_rotation(word: Word) -> Word:
    if not word:
        return word
    return min(word[i:] + word[:i] for i in range(len(word)))


def canonical_cyclic(graph: Graph, word: Sequence[int], unoriented: bool = True) -> Word:
    """Canonical representative of the free homotopy class of a loop."""
    w = cyclic_reduce(graph, word)
    best = _least_rotation(w)
    if unoriented:
        best = min(best, _least_rotation(reverse_path(graph, w)))
    return best


@dataclass(frozen=True)
class CyclicWord:
    graph: Graph
    word: Word
    unoriented: bool = True

    @property
    def key(self) -> Word:
        return canonical_cyclic(self.graph, self.word, self.unoriented)

    def is_trivial(self) -> bool:
        return not cyclic_reduce(self.graph, self.word)


@dataclass(frozen=True)
class Strand:
    path: Word
    weight: float = 1.0
    closed: bool = True


@dataclass(frozen=True)
class WeightedMultiCurve:
    graph: Graph
    strands: tuple[Strand, ...]

    @classmethod
    def of(cls, graph: Graph, *paths: Sequence[int], weights: Iterable[float] | None = None, closed: bool = True):
        ws = list(weights) if weights is not None else [1.0] * len(paths)
        return cls(graph, tuple(Strand(tuple(p), w, closed) for p, w in zip(paths, ws)))

    @property
    def total_weight(self) -> float:
        return sum(s.weight for s in self.strands)

    def normalized(self) -> "WeightedMultiCurve":
        t = self.total_weight
        return WeightedMultiCurve(self.graph, tuple(Strand(s.path, s.weight / t, s.closed) for s in self.strands))

    def is_reduced(self) -> bool:
        for s in self.strands:
            if s.closed and not is_cyclically_reduced(self.graph, s.path):
                return False
            if not s.closed and has_backtrack(self.graph, s.path):
                return False
        return True

    def reduced(self) -> "WeightedMultiCurve":
        out = []
        for s in self.strands:
            p = cyclic_reduce(self.graph, s.path) if s.closed else reduce_path(self.graph, s.path)
            out.append(Strand(p, s.weight, s.closed))
        return WeightedMultiCurve(self.graph, tuple(out))

    def push(self, phi: EdgePathMap) -> "WeightedMultiCurve":
        """Image under an edge-path map, tightened (cyclically for loops)."""
        out = []
        for s in self.strands:
            p = phi.path_image(s.path)
            if s.closed:
                p = cyclic_reduce(phi.codomain, p)
            out.append(Strand(p, s.weight, s.closed))
        return WeightedMultiCurve(phi.codomain, tuple(out))

    def counts(self) -> list[float]:
        """Weighted traversal count of each edge."""
        n = [0.0] * self.graph.n_edges
        for s in self.strands:
            for h in s.path:
                n[self.graph.edge_of(h)] += s.weight
        return n

    def edge_sets(self) -> list[frozenset[int]]:
        return [frozenset(self.graph.edge_of(h) for h in s.path) for s in self.strands]
