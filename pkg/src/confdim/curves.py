"""Pulling back multicurves and Perron-Frobenius growth rates."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .endomorphism import VirtualEndomorphism
from .words import Word, canonical_cyclic, cyclic_reduce


@dataclass(frozen=True)
class Component:
    source: int  # index of the curve that was pulled back
    lift: Word  # closed path in G1
    degree: int
    image: Word  # cyclically reduced image in G0
    target: int | None  # index of the matching input class
    trivial: bool
    peripheral: bool


def pullback_multicurve(
    ve: VirtualEndomorphism,
    curves: Sequence[Sequence[int]],
    peripheral: Sequence[Sequence[int]] = (),
) -> list[Component]:
    """Lift each curve through pi, split into components, push forward by phi."""
    g0, g1 = ve.g0, ve.g1
    keys = {canonical_cyclic(g0, c): i for i, c in enumerate(curves)}
    pkeys = {canonical_cyclic(g0, c) for c in peripheral}
    lift = ve.pi.lift_table()
    out: list[Component] = []
    for j, c in enumerate(curves):
        word = cyclic_reduce(g0, c)
        if not word:
            for _ in range(ve.degree):
                out.append(Component(j, (), 1, (), None, True, False))
            continue
        start = g0.tail(word[0])
        seen: set[int] = set()
        for x0 in ve.pi.fiber(start):
            if x0 in seen:
                continue
            path: list[int] = []
            x, k = x0, 0
            while True:
                seen.add(x)
                for h in word:
                    y = lift[(x, h)]
                    path.append(y)
                    x = g1.head(y)
                k += 1
                if x == x0:
                    break
            image = cyclic_reduce(g0, ve.phi.path_image(path))
            key = canonical_cyclic(g0, image)
            out.append(
                Component(j, tuple(path), k, image, keys.get(key), not image, key in pkeys),
            )
    return out


@dataclass(frozen=True)
class TransitionMatrix:
    counts: np.ndarray
    degrees: tuple[tuple[tuple[int, ...], ...], ...]  # degrees[i][j] = covering degrees

    def discounted(self, Q: float) -> np.ndarray:
        n = len(self.degrees)
        return np.array(
            [[sum(float(d) ** (1 - Q) for d in self.degrees[i][j]) for j in range(n)] for i in range(n)]
        )


class UnclassifiedComponent(ValueError):
    pass


def transition_matrix(components: Sequence[Component], n: int) -> TransitionMatrix:
    """Entry (i, j) counts components over curve j homotopic to curve i."""
    counts = np.zeros((n, n))
    degs: list[list[list[int]]] = [[[] for _ in range(n)] for _ in range(n)]
    for c in components:
        if c.trivial or c.peripheral:
            continue
        if c.target is None:
            raise UnclassifiedComponent(f"component over curve {c.source} (degree {c.degree}) is not in the system")
        counts[c.target, c.source] += 1
        degs[c.target][c.source].append(c.degree)
    return TransitionMatrix(counts, tuple(tuple(tuple(sorted(x)) for x in row) for row in degs))


def _power(A: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray]:
    n = len(A)
    c = float(A.sum(axis=1).max())  # shift on the scale of A makes an irreducible block primitive
    B = A + c * np.eye(n)
    w = np.full(n, 1.0 / n)
    mu = 0.0
    for _ in range(max_iter):
        v = B @ w
        new = float(v.sum())
        v /= new
        if abs(new - mu) <= tol * max(abs(new), 1.0) and np.max(np.abs(v - w)) <= tol:
            mu, w = new, v
            break
        mu, w = new, v
    return mu - c, w


def perron_eigenvalue(A, tol: float = 1e-13, max_iter: int = 1_000_000) -> tuple[float, np.ndarray]:
    """Perron root and nonnegative eigenvector (sum 1) by power iteration.

    Reducible matrices are handled blockwise: the value is the largest
    Perron root over strongly connected blocks.
    """
    A = np.asarray(A, dtype=float)
    if (A < 0).any():
        raise ValueError("matrix must be nonnegative")
    n = len(A)
    if n == 0 or not A.any():
        return 0.0, np.full(n, 1.0 / max(n, 1))
    k, labels = connected_components(A > 0, directed=True, connection="strong")
    best, vec = -1.0, None
    for b in range(k):
        idx = np.flatnonzero(labels == b)
        block = A[np.ix_(idx, idx)]
        if not block.any():
            val, w = 0.0, np.full(len(idx), 1.0 / len(idx))
        else:
            val, w = _power(block, tol, max_iter)
        if val > best:
            best = val
            vec = np.zeros(n)
            vec[idx] = w
    assert vec is not None
    if best > 0 and k > 1:
        # refine the full eigenvector from the dominant block
        v = vec.copy()
        for _ in range(10_000):
            nxt = A @ v / best + v
            nxt /= nxt.sum()
            if np.max(np.abs(nxt - v)) < tol:
                v = nxt
                break
            v = nxt
        vec = v
    return best, vec / vec.sum()


def nbar_lower_from_curves(
    ve: VirtualEndomorphism,
    curves: Sequence[Sequence[int]],
    peripheral: Sequence[Sequence[int]] = (),
) -> float:
    """Perron root of the pullback transition matrix (a lower bound for Nbar)."""
    if not curves:
        return 1.0
    comps = pullback_multicurve(ve, curves, peripheral)
    A = transition_matrix(comps, len(curves))
    return max(1.0, perron_eigenvalue(A.counts)[0])


def curve_critical_exponent(
    T: TransitionMatrix, lo: float = 1.0, hi: float = 64.0, tol: float = 1e-12
) -> float:
    """Q at which the degree-discounted matrix has Perron root 1."""
    if any(d < 2 for row in T.degrees for cell in row for d in cell):
        raise ValueError("all covering degrees must be at least 2")

    def g(Q: float) -> float:
        return perron_eigenvalue(T.discounted(Q))[0] - 1.0

    a, b = g(lo), g(hi)
    if not (a >= 0 > b):
        raise ValueError("no crossing: Perron root does not pass through 1 on the interval")
    if a == 0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fat_polynomial_root(n: int, tol: float = 1e-15) -> float:
    """Largest root of x^(n+1) - 2 x^n + 1 by bisection (independent oracle)."""
    if n == 1:
        return 1.0

    def h(x: float) -> float:
        return x**n - sum(x**k for k in range(n))

    lo, hi = 1.0, 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def is_primitive_growth(value: float) -> bool:
    return math.isfinite(value) and value >= 1.0
