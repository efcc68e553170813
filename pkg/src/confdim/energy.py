"""Energies of graph maps.

Maps are combinatorial (``EdgePathMap``); a piecewise-linear representative
is obtained by choosing, for every domain vertex, either its combinatorial
image or a point dragged into the interior of an adjacent codomain edge
(the *cell*), together with how each domain edge is split among the
codomain edges it crosses.  For a fixed cell the best max-fill is a convex
problem: on each codomain edge the optimal positions are q-harmonic and
the fill is constant, equal to ``alpha^(q-1)`` times the q-capacity of the
network formed by the pieces over that edge.
"""

from __future__ import annotations

import functools
import logging
import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

from .endomorphism import EdgePathMap, has_backtrack, reduce_path
from .graph import ConformalStructure, Graph, holder_conjugate
from .words import WeightedMultiCurve, cyclic_reduce

log = logging.getLogger(__name__)

# Piece endpoints: TAIL / HEAD of the codomain edge, or a domain vertex id.
TAIL, HEAD = -1, -2
Piece = tuple[int, int, int]


# Tightening and multiplicity.


def _moved_paths(phi: EdgePathMap, v: int, d: int) -> dict[int, tuple[int, ...]]:
    g, h = phi.domain, phi.codomain
    out = {}
    for k in g.star[v]:
        e = g.edge_of(k)
        if e in out:
            continue
        p = list(phi.edge_image[e])
        t, hd = g.ends(e)
        if t == v:
            p = [h.rev(d)] + p
        if hd == v:
            p = p + [d]
        out[e] = reduce_path(h, p)
    return out


def tighten(phi: EdgePathMap) -> EdgePathMap:
    """Free reduction of every edge path, cancelling the leftmost backtrack first."""
    return phi.reduced()


def pull_tight(phi: EdgePathMap, max_rounds: int = 10_000) -> EdgePathMap:
    """Cancel backtracks, then pull vertex images while paths shorten."""
    phi = phi.reduced()
    g = phi.domain
    vimg = list(phi.vertex_image)
    paths = list(phi.edge_image)
    for _ in range(max_rounds):
        improved = False
        for v in range(g.n_vertices):
            cur = EdgePathMap(g, phi.codomain, tuple(vimg), tuple(paths))
            firsts = sorted({cur.image(k)[0] for k in g.star[v] if cur.image(k)})
            old = {g.edge_of(k): len(paths[g.edge_of(k)]) for k in g.star[v]}
            best = None
            for d in firsts:
                new = _moved_paths(cur, v, d)
                gain = sum(old.values()) - sum(len(p) for p in new.values())
                if gain > 0 and (best is None or gain > best[0]):
                    best = (gain, d, new)
            if best is not None:
                _, d, new = best
                vimg[v] = phi.codomain.head(d)
                for e, p in new.items():
                    paths[e] = p
                improved = True
        if not improved:
            break
    return EdgePathMap(g, phi.codomain, tuple(vimg), tuple(paths))


def traversals(phi: EdgePathMap, weights: Sequence[float] | None = None) -> list[float]:
    """Weighted number of preimages of a generic point of each codomain edge."""
    n = [0.0] * phi.codomain.n_edges
    for e, p in enumerate(phi.edge_image):
        w = 1.0 if weights is None else weights[e]
        for h in p:
            n[phi.codomain.edge_of(h)] += w
    return n


def multiplicity(
    phi: EdgePathMap,
    weights: Sequence[float] | None = None,
    codomain_weights: Sequence[float] | None = None,
) -> float:
    """Essential sup of weighted preimage count over codomain weight."""
    if not phi.is_reduced():
        raise ValueError("map has backtracks; tighten it first")
    n = traversals(phi, weights)
    cw = codomain_weights or [1.0] * len(n)
    return max((c / w for c, w in zip(n, cw)), default=0.0)


# Curve energies.


def energy_E1q(curve: WeightedMultiCurve, structure: ConformalStructure | Sequence[float], q: float) -> float:
    """q-counting energy of a reduced weighted curve."""
    if not curve.is_reduced():
        raise ValueError("curve is not reduced; tighten it first")
    alpha = structure.values if isinstance(structure, ConformalStructure) else structure
    n = curve.counts()
    if q == 1:
        return max((c / a for c, a in zip(n, alpha) if c), default=0.0)
    if math.isinf(q):
        return sum(a * c for a, c in zip(alpha, n))
    r = holder_conjugate(q)
    return sum(a * c**r for a, c in zip(alpha, n)) ** (1 / r)


def stretch_lower_bound(
    phi: EdgePathMap,
    q: float,
    curves: Sequence[WeightedMultiCurve],
    domain: ConformalStructure | Sequence[float],
    codomain: ConformalStructure | Sequence[float],
) -> float:
    """Largest ratio E1q[phi(c)] / E1q[c] over the supplied curves."""
    best = 0.0
    for c in curves:
        c = c.reduced()
        image = c.push(phi)
        bottom = energy_E1q(c, domain, q)
        if bottom == 0 or not any(s.path for s in image.strands):
            log.debug("skipping a curve that tightens to a point")
            continue
        best = max(best, energy_E1q(image, codomain, q) / bottom)
    return best


# Piecewise-linear representatives.


def edge_pieces(phi: EdgePathMap, cell: Sequence[int]) -> list[list[Piece]]:
    """Reduced pieces (codomain edge, start, end) for every domain edge."""
    g, h = phi.domain, phi.codomain

    def full(k: int) -> Piece:
        e = h.edge_of(k)
        return (e, TAIL, HEAD) if h.sign(k) > 0 else (e, HEAD, TAIL)

    def conn(v: int) -> list[Piece]:
        d = cell[v]
        if d < 0:
            return []
        return [(h.edge_of(d), TAIL if h.sign(d) > 0 else HEAD, v)]

    out = []
    for e in range(g.n_edges):
        t, hd = g.ends(e)
        seq = [(p[0], p[2], p[1]) for p in conn(t)] + [full(k) for k in phi.edge_image[e]] + conn(hd)
        stack: list[Piece] = []
        for p in seq:
            if stack and stack[-1][0] == p[0] and stack[-1][2] == p[1] and p[1] < 0:
                top = stack.pop()
                merged = (top[0], top[1], p[2])
                if merged[1] != merged[2]:
                    stack.append(merged)
            else:
                stack.append(p)
        out.append(stack)
    return out


@dataclass(frozen=True)
class FillProfile:
    """Piecewise-constant fill on each codomain edge (unit coordinates)."""

    breaks: tuple[tuple[float, ...], ...]
    values: tuple[tuple[float, ...], ...]

    def max(self) -> float:
        return max((max(v) for v in self.values if v), default=0.0)

    def edge_max(self, e: int) -> float:
        return max(self.values[e], default=0.0)

    def edge_min(self, e: int) -> float:
        return min(self.values[e], default=0.0)


@dataclass(frozen=True)
class PLRepresentative:
    base: EdgePathMap
    cell: tuple[int, ...]
    positions: tuple[float, ...]
    splits: tuple[tuple[float, ...], ...]
    codomain_lengths: tuple[float, ...]
    domain_lengths: tuple[float, ...]
    converged: bool = True
    pieces: tuple[tuple[Piece, ...], ...] = field(default=())

    def __post_init__(self):
        if not self.pieces:
            object.__setattr__(self, "pieces", tuple(map(tuple, edge_pieces(self.base, self.cell))))

    def coordinate(self, end: int) -> float:
        return 0.0 if end == TAIL else 1.0 if end == HEAD else self.positions[end]

    def derivatives(self) -> list[list[float]]:
        out = []
        for e, ps in enumerate(self.pieces):
            row = []
            for (E, a, b), s in zip(ps, self.splits[e]):
                t = self.codomain_lengths[E] * abs(self.coordinate(b) - self.coordinate(a))
                row.append(math.inf if s == 0 and t > 0 else (t / s if s else 0.0))
            out.append(row)
        return out


def fill_profile(rep: PLRepresentative, q: float) -> FillProfile:
    """Exact piecewise-constant fill function of a PL representative."""
    if not (1 < q < math.inf):
        raise ValueError("fill needs 1 < q < inf")
    m = rep.base.codomain.n_edges
    events: list[list[tuple[float, float]]] = [[] for _ in range(m)]
    for e, ps in enumerate(rep.pieces):
        for (E, a, b), s in zip(ps, rep.splits[e]):
            x0, x1 = sorted((rep.coordinate(a), rep.coordinate(b)))
            t = rep.codomain_lengths[E] * (x1 - x0)
            if t <= 0:
                continue
            if s <= 0:
                raise ValueError(f"domain edge {rep.base.domain.edge_names[e]}: zero-length piece with nonzero image")
            val = (t / s) ** (q - 1)
            events[E] += [(x0, val), (x1, -val)]
    breaks, values = [], []
    for ev in events:
        pts = sorted({0.0, 1.0} | {x for x, _ in ev})
        delta: dict[float, float] = {}
        for x, v in ev:
            delta[x] = delta.get(x, 0.0) + v
        cur, vals = 0.0, []
        for x in pts[:-1]:
            cur += delta.get(x, 0.0)
            vals.append(max(cur, 0.0))
        breaks.append(tuple(pts))
        values.append(tuple(vals))
    return FillProfile(tuple(breaks), tuple(values))


def energy_Eqq(rep: PLRepresentative, q: float) -> float:
    return fill_profile(rep, q).max() ** (1 / q)


# Cell-wise convex optimization.


@functools.lru_cache(maxsize=4096)
def _topology(n: int, edges: tuple[tuple[int, int], ...]):
    """Free nodes (reachable from the terminals 0 and 1) and flat Laplacian indices."""
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    live = {0, 1}
    stack = [0, 1]
    while stack:
        x = stack.pop()
        for y in adj.get(x, []):
            if y not in live:
                live.add(y)
                stack.append(y)
    free = np.array(sorted(live - {0, 1}), dtype=int)
    ea = np.array([a for a, _ in edges], dtype=int)
    eb = np.array([b for _, b in edges], dtype=int)
    rows = np.concatenate([ea, eb, ea, eb])
    cols = np.concatenate([ea, eb, eb, ea])
    return free, ea, eb, rows * n + cols


def _harmonic(n: int, edges: list[tuple[int, int]], s: np.ndarray, q: float) -> np.ndarray:
    """q-harmonic potentials with u[0] = 0, u[1] = 1 on a small network."""
    u = np.zeros(n)
    u[1] = 1.0
    free, ea, eb, flat = _topology(n, tuple(edges))
    if not len(free):
        return u

    def assemble(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        full = np.bincount(flat, weights=np.concatenate([w, w, -w, -w]), minlength=n * n).reshape(n, n)
        lap = full[np.ix_(free, free)]
        rhs = -full[free, 1]  # u[0] = 0, u[1] = 1
        return lap, rhs

    lap, rhs = assemble(1.0 / s)
    u[free] = np.linalg.solve(lap, rhs)
    if q == 2:
        return u

    w = s ** (1 - q)

    def energy(x: np.ndarray) -> float:
        return float(np.sum(w * np.abs(x[eb] - x[ea]) ** q))

    for _ in range(200):
        diff = u[eb] - u[ea]
        ad = np.maximum(np.abs(diff), 1e-12)
        flux = q * w * ad ** (q - 1) * np.sign(diff)
        grad = np.bincount(eb, weights=flux, minlength=n) - np.bincount(ea, weights=flux, minlength=n)
        g = grad[free]
        if np.max(np.abs(g)) < 1e-14:
            break
        hess, _ = assemble(q * (q - 1) * w * ad ** (q - 2))
        step = np.linalg.solve(hess + 1e-15 * np.eye(len(free)), g)
        base = energy(u)
        t = 1.0
        while t > 1e-12:
            trial = u.copy()
            trial[free] -= t * step
            new = energy(trial)
            if new <= base:
                u = trial
                break
            t /= 2
        else:
            break
        # stop once Newton steps no longer move the potentials or the energy
        if t * np.max(np.abs(step)) < 1e-13 or base - new <= 1e-15 * base:
            break
    return u


@dataclass
class _CellProblem:
    pieces: list[list[Piece]]
    networks: dict[int, tuple[list[int], list[tuple[int, int]], list[int]]]
    var_of: list[list[int]]
    n_vars: int


def _setup(pieces: list[list[Piece]]) -> _CellProblem:
    var_of = []
    k = 0
    nets: dict[int, tuple[list[int], list[tuple[int, int]], list[int]]] = {}
    for ps in pieces:
        row = []
        for E, a, b in ps:
            nodes, edges, vars_ = nets.setdefault(E, ([TAIL, HEAD], [], []))
            for x in (a, b):
                if x not in nodes:
                    nodes.append(x)
            edges.append((nodes.index(a), nodes.index(b)))
            vars_.append(k)
            row.append(k)
            k += 1
        var_of.append(row)
    return _CellProblem(pieces, nets, var_of, k)


def _edge_fill(prob: _CellProblem, E: int, s: np.ndarray, q: float, alpha: float):
    nodes, edges, vars_ = prob.networks[E]
    sv = s[vars_]
    u = _harmonic(len(nodes), edges, sv, q)
    diff = np.array([abs(u[b] - u[a]) for a, b in edges])
    scale = alpha ** (q - 1)
    cap = float(np.sum(diff**q * sv ** (1 - q)))
    grad = scale * (1 - q) * diff**q * sv ** (-q)
    return scale * cap, grad, u


def optimize_cell(
    phi: EdgePathMap,
    cell: Sequence[int],
    q: float,
    codomain: Sequence[float],
    domain: Sequence[float],
    max_iter: int = 500,
) -> PLRepresentative:
    """Best PL representative within one combinatorial cell."""
    pieces = edge_pieces(phi, cell)
    prob = _setup(pieces)
    alpha_dom = np.asarray(domain, float)
    s0 = np.zeros(prob.n_vars)
    for e, row in enumerate(prob.var_of):
        for k in row:
            s0[k] = alpha_dom[e] / len(row)
    edges_E = sorted(prob.networks)
    converged = True
    free_rows = [row for row in prob.var_of if len(row) > 1]
    if free_rows:
        cache: dict[bytes, dict[int, tuple]] = {}

        def fills(s: np.ndarray) -> dict[int, tuple]:
            key = s.tobytes()
            if key not in cache:
                cache.clear()
                cache[key] = {E: _edge_fill(prob, E, s, q, codomain[E]) for E in edges_E}
            return cache[key]

        n = prob.n_vars

        def cons_val(x: np.ndarray) -> np.ndarray:
            f = fills(x[:n])
            return np.array([x[n] - f[E][0] for E in edges_E])

        def cons_jac(x: np.ndarray) -> np.ndarray:
            f = fills(x[:n])
            jac = np.zeros((len(edges_E), n + 1))
            for i, E in enumerate(edges_E):
                jac[i, prob.networks[E][2]] = -f[E][1]
                jac[i, n] = 1.0
            return jac

        eq_rows = np.zeros((len(free_rows), n + 1))
        eq_rhs = np.zeros(len(free_rows))
        fixed = np.ones(n, bool)
        for i, row in enumerate(free_rows):
            eq_rows[i, row] = 1.0
            eq_rhs[i] = alpha_dom[prob.var_of.index(row)]
            fixed[row] = False
        bounds = [(v, v) if fixed[k] else (1e-9 * max(v, 1e-300), None) for k, v in enumerate(s0)]
        bounds.append((0, None))
        t0 = max((fills(s0)[E][0] for E in edges_E), default=0.0)
        with warnings.catch_warnings():
            # SLSQP clips trial points to the bounds; the result is rechecked below
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(
                lambda x: x[n],
                np.append(s0, t0 * 1.01 + 1e-12),
                jac=lambda x: np.eye(1, n + 1, n)[0],
                bounds=bounds,
                constraints=[
                    {"type": "ineq", "fun": cons_val, "jac": cons_jac},
                    {"type": "eq", "fun": lambda x: eq_rows @ x - eq_rhs, "jac": lambda x: eq_rows},
                ],
                method="SLSQP",
                options={"maxiter": max_iter, "ftol": 1e-15},
            )
        s = np.clip(res.x[:n], 0.0, None)
        for row in free_rows:
            s[row] *= alpha_dom[prob.var_of.index(row)] / s[row].sum()
        converged = bool(res.success) or res.status == 8
        if max((fills(s)[E][0] for E in edges_E), default=0.0) > t0:
            s = s0
    else:
        s = s0
    positions = [0.0] * phi.domain.n_vertices
    for E in edges_E:
        nodes, edges, vars_ = prob.networks[E]
        u = _harmonic(len(nodes), edges, s[vars_], q)
        for x, val in zip(nodes, u):
            if x >= 0:
                positions[x] = float(val)
    splits = tuple(tuple(float(s[k]) for k in row) for row in prob.var_of)
    return PLRepresentative(
        phi,
        tuple(cell),
        tuple(positions),
        splits,
        tuple(codomain),
        tuple(domain),
        converged,
        tuple(map(tuple, pieces)),
    )


def _neighbor_states(phi: EdgePathMap, cell: tuple[int, ...], v: int):
    h = phi.codomain
    a = phi.vertex_image[v]
    d = cell[v]
    for k in h.star[a]:
        if k != d:
            yield phi, cell[:v] + (k,) + cell[v + 1 :]
    if d >= 0:
        yield phi, cell[:v] + (-1,) + cell[v + 1 :]
        # push the anchor across the far end of the edge
        moved = _moved_paths(phi, v, d)
        paths = list(phi.edge_image)
        for e, p in moved.items():
            paths[e] = p
        vimg = list(phi.vertex_image)
        vimg[v] = h.head(d)
        nphi = EdgePathMap(phi.domain, h, tuple(vimg), tuple(paths))
        for k in h.star[h.head(d)]:
            if k != h.rev(d):
                yield nphi, cell[:v] + (k,) + cell[v + 1 :]


@dataclass(frozen=True)
class EnergyResult:
    rep: PLRepresentative
    max_fill: float
    energy: float
    converged: bool


def minimize_Eqq(
    phi: EdgePathMap,
    q: float,
    codomain: ConformalStructure | Sequence[float],
    domain: ConformalStructure | Sequence[float],
    cell: Sequence[int] | None = None,
    moves: bool = True,
    max_sweeps: int = 20,
    tol: float = 1e-10,
    move_iter: int = 40,
    max_evals: int | None = None,
) -> EnergyResult:
    """Certified upper bound on the optimal E^q_q in the homotopy class of phi.

    Local search: convex optimization inside a cell, then single-vertex
    cell moves accepted on strict decrease, until nothing improves.  Moves
    are scored with a short optimizer budget and the final cell is polished.
    """
    if not (1 < q < math.inf):
        raise ValueError("minimize_Eqq needs 1 < q < inf")
    alpha = codomain.values if isinstance(codomain, ConformalStructure) else tuple(codomain)
    beta = domain.values if isinstance(domain, ConformalStructure) else tuple(domain)
    if cell is None:
        phi = pull_tight(phi)
        cell = (-1,) * phi.domain.n_vertices
    else:
        phi = phi.reduced()
    state = (phi, tuple(cell))
    rep = optimize_cell(phi, state[1], q, alpha, beta)
    best = fill_profile(rep, q).max()
    converged = rep.converged
    sweeps = evals = 0
    while moves and sweeps < max_sweeps:
        sweeps += 1
        improved = False
        for v in range(phi.domain.n_vertices):
            for nphi, ncell in _neighbor_states(state[0], state[1], v):
                evals += 1
                if max_evals is not None and evals > max_evals:
                    break
                trial = optimize_cell(nphi, ncell, q, alpha, beta, max_iter=move_iter)
                val = fill_profile(trial, q).max()
                if val < best - tol * max(best, 1.0):
                    best, rep, state = val, trial, (nphi, ncell)
                    improved = True
        if max_evals is not None and evals > max_evals:
            converged = False
            break
        if not improved:
            break
    else:
        if moves:
            converged = False
    if state[1] != tuple(cell) or state[0] is not phi:
        polished = optimize_cell(state[0], state[1], q, alpha, beta)
        val = fill_profile(polished, q).max()
        if val <= best:
            best, rep = val, polished
        converged = converged and polished.converged
    return EnergyResult(rep, best, best ** (1 / q), converged)


def compose_cyclic(phi: EdgePathMap, loop: Sequence[int]) -> tuple[int, ...]:
    return cyclic_reduce(phi.codomain, phi.path_image(loop))


def is_reduced_path(graph: Graph, path: Sequence[int]) -> bool:
    return not has_backtrack(graph, path)


# Lipschitz constants (the q = infinity analogue), used for expansion certificates.


@dataclass(frozen=True)
class LipschitzResult:
    constant: float
    cell: tuple[int, ...]
    positions: tuple[float, ...]
    base: EdgePathMap
    total: float = 0.0

    def key(self) -> tuple[float, float]:
        return (round(self.constant, 12), self.total)


def _lipschitz_program(phi: EdgePathMap, cell: Sequence[int], codomain: Sequence[float], domain: Sequence[float]):
    """Rows of ``stretch_e * domain_e = image length of e`` as affine forms.

    Returns (forms, n_vars, bounds, col) where forms[e] = (coefficients, constant)
    over the position and absolute-value variables.
    """
    pieces = edge_pieces(phi, cell)
    dragged = sorted({x for ps in pieces for _, a, b in ps for x in (a, b) if x >= 0})
    col = {v: i for i, v in enumerate(dragged)}
    pairs = sorted({(E, min(a, b), max(a, b)) for ps in pieces for E, a, b in ps if a >= 0 and b >= 0})
    pcol = {p: len(dragged) + i for i, p in enumerate(pairs)}
    n = len(dragged) + len(pairs)
    forms = []
    for ps in pieces:
        row = np.zeros(n)
        const = 0.0
        for E, a, b in ps:
            w = codomain[E]
            if a >= 0 and b >= 0:
                row[pcol[(E, min(a, b), max(a, b))]] += w
            elif a < 0 and b < 0:
                const += w  # whole edge
            else:
                end, v = (a, b) if a < 0 else (b, a)
                row[col[v]] += w if end == TAIL else -w
                const += 0.0 if end == TAIL else w
        forms.append((row, const))
    abs_rows = []
    for (E, a, b), k in pcol.items():
        for sg in (1, -1):
            row = np.zeros(n)
            row[col[a]], row[col[b]], row[k] = sg, -sg, -1.0
            abs_rows.append(row)
    bounds = [(0.0, 1.0)] * len(dragged) + [(0.0, None)] * len(pairs)
    return forms, n, bounds, col, abs_rows


def lipschitz_cell(
    phi: EdgePathMap, cell: Sequence[int], codomain: Sequence[float], domain: Sequence[float]
) -> LipschitzResult:
    """Least Lipschitz constant over positions in one cell (a linear program).

    Every domain edge is parametrized proportionally to arc length, so its
    stretch is the length of its image path divided by its own length.  A
    second program at the optimal constant minimizes the total stretch,
    which breaks ties between cells.
    """
    forms, n, bounds, col, abs_rows = _lipschitz_program(phi, cell, codomain, domain)
    beta = np.asarray(domain, float)
    # stage 1: minimize L with image_e <= L * beta_e
    A = [np.append(row, -b) for (row, _), b in zip(forms, beta)] + [np.append(r, 0.0) for r in abs_rows]
    ub = [-c for _, c in forms] + [0.0] * len(abs_rows)
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=np.array(A), b_ub=np.array(ub), bounds=bounds + [(0.0, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"lipschitz program failed: {res.message}")
    L = float(res.x[-1])
    x = res.x[:n]
    # stage 2: minimize the total stretch keeping every stretch <= L
    if n:
        A2 = [row for row, _ in forms] + abs_rows
        ub2 = [L * b * (1 + 1e-12) + 1e-15 - c for (_, c), b in zip(forms, beta)] + [0.0] * len(abs_rows)
        cost2 = sum(row / b for (row, _), b in zip(forms, beta))
        res2 = linprog(cost2, A_ub=np.array(A2), b_ub=np.array(ub2), bounds=bounds, method="highs")
        if res2.success:
            x = res2.x
    stretch = [(row @ x + c) / b for (row, c), b in zip(forms, beta)]
    positions = [0.0] * phi.domain.n_vertices
    for v, i in col.items():
        positions[v] = float(x[i])
    return LipschitzResult(max(stretch, default=0.0), tuple(cell), tuple(positions), phi, float(sum(stretch)))


def majority_cell(phi: EdgePathMap) -> tuple[int, ...]:
    """Drag every vertex toward the most common first step of its edge images."""
    g = phi.domain
    cell = []
    for v in range(g.n_vertices):
        votes: dict[int, int] = {}
        for k in g.star[v]:
            img = phi.image(k)
            if img:
                votes[img[0]] = votes.get(img[0], 0) + 1
        cell.append(max(sorted(votes), key=votes.get) if votes else -1)
    return tuple(cell)


def minimize_lipschitz(
    phi: EdgePathMap,
    codomain: Sequence[float],
    domain: Sequence[float],
    cell: Sequence[int] | None = None,
    max_sweeps: int = 50,
) -> LipschitzResult:
    """Local search over cells for a small Lipschitz constant in the homotopy class."""
    if cell is None:
        phi = pull_tight(phi)
        cell = majority_cell(phi)
    state = (phi, tuple(cell))
    best = lipschitz_cell(phi, state[1], codomain, domain)
    for _ in range(max_sweeps):
        improved = False
        for v in range(phi.domain.n_vertices):
            for nphi, ncell in _neighbor_states(state[0], state[1], v):
                trial = lipschitz_cell(nphi, ncell, codomain, domain)
                if trial.key() < best.key() and trial.total < best.total - 1e-12 or trial.constant < best.constant - 1e-12:
                    best, state, improved = trial, (nphi, ncell), True
        if not improved:
            break
    return best


def contracting_metric(
    phi: EdgePathMap,
    cell: Sequence[int],
    lifts: Sequence[int],
    tol: float = 1e-9,
) -> tuple[float, tuple[float, ...]]:
    """Best Lipschitz constant over codomain metrics for one cell.

    ``lifts[e]`` is the codomain edge whose length domain edge ``e`` inherits
    (the covering image).  With drags measured as absolute distances the
    image lengths are linear in (metric, drags), so for fixed lambda the
    constraint "stretch <= lambda" is a linear feasibility problem; lambda
    is found by bisection.  Returns (lambda, metric normalized to min 1).
    """
    h = phi.codomain
    pieces = edge_pieces(phi, cell)
    m = h.n_edges
    dragged = sorted({x for ps in pieces for _, a, b in ps for x in (a, b) if x >= 0})
    col = {v: m + i for i, v in enumerate(dragged)}
    edge_of_drag = {v: h.edge_of(cell[v]) for v in dragged}
    pairs = sorted({(E, min(a, b), max(a, b)) for ps in pieces for E, a, b in ps if a >= 0 and b >= 0})
    pcol = {p: m + len(dragged) + i for i, p in enumerate(pairs)}
    n = m + len(dragged) + len(pairs)
    image = []
    for ps in pieces:
        row = np.zeros(n)
        for E, a, b in ps:
            if a >= 0 and b >= 0:
                row[pcol[(E, min(a, b), max(a, b))]] += 1.0
            elif a < 0 and b < 0:
                row[E] += 1.0
            else:
                end, v = (a, b) if a < 0 else (b, a)
                if end == TAIL:
                    row[col[v]] += 1.0
                else:
                    row[E] += 1.0
                    row[col[v]] -= 1.0
        image.append(row)
    fixed = []
    for v, c in col.items():  # drag distance at most the edge length
        row = np.zeros(n)
        row[c], row[edge_of_drag[v]] = 1.0, -1.0
        fixed.append(row)
    for (E, a, b), k in pcol.items():
        for sg in (1, -1):
            row = np.zeros(n)
            row[col[a]], row[col[b]], row[k] = sg, -sg, -1.0
            fixed.append(row)
    bounds = [(1.0, None)] * m + [(0.0, None)] * (n - m)

    def feasible(lam: float):
        rows = list(fixed)
        for e, row in enumerate(image):
            r = row.copy()
            r[lifts[e]] -= lam
            rows.append(r)
        res = linprog(np.r_[np.ones(m), np.zeros(n - m)], A_ub=np.array(rows), b_ub=np.zeros(len(rows)),
                      bounds=bounds, method="highs")
        return res.x[:m] if res.success else None

    lo, hi = 0.0, 1.0
    best = feasible(hi)
    if best is None:
        return math.inf, ()
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        x = feasible(mid)
        if x is None:
            lo = mid
        else:
            hi, best = mid, x
    return hi, tuple(float(a) / float(min(best)) for a in best)
