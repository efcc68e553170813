"""Conformal dimension brackets from fiber growth and energies."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field

from .curves import nbar_lower_from_curves
from .endomorphism import TowerLevel, VirtualEndomorphism, check_recurrent, iterate
from .energy import lipschitz_cell, minimize_Eqq, multiplicity, pull_tight, stretch_lower_bound, tighten
from .words import WeightedMultiCurve, canonical_cyclic, cyclic_reduce

DEFAULT_Q_GRID = (1.1, 1.25, 1.5, 2.0, 3.0, 4.0)


# Closed-form bounds.


def arc_lower_from_nbar(d: int, nbar_lb: float) -> float:
    """1 / (1 - log_d N) for a recurrent forward-expanding endomorphism of degree d."""
    if d < 2:
        raise ValueError("degree >= 2 required")
    if not 1 <= nbar_lb < d:
        raise ValueError(f"fiber growth {nbar_lb} must lie in [1, {d})")
    return 1.0 / (1.0 - math.log(nbar_lb, d))


def arc_upper_from_energy(d: int, q: float, e_ub: float) -> float:
    """q / (1 - q log_d E) when the asymptotic q-energy is below E < 1."""
    if d < 2:
        raise ValueError("degree >= 2 required")
    if q <= 1:
        raise ValueError("q must exceed 1")
    if not 0 < e_ub < 1:
        raise ValueError(f"energy bound {e_ub} carries no information (need 0 < E < 1)")
    return q / (1.0 - q * math.log(e_ub, d))


def arc_upper_direct(q: float, bound: float) -> float | None:
    """q itself when some iterate has q-energy below 1, else None."""
    return q if bound < 1 else None


# Expansion certificates.


@dataclass(frozen=True)
class ExpansionCertificate:
    """A metric and a cell making some iterate of phi a strict contraction."""

    level: int
    metric: tuple[float, ...]  # on G0
    cell: tuple[int, ...]  # per vertex of G_level, half-edge of G0 or -1

    def check(self, ve: VirtualEndomorphism, tower: Sequence[TowerLevel] | None = None) -> float:
        """The certified Lipschitz constant (must be < 1 to be valid)."""
        if self.level < 1:
            raise ValueError("certificate level must be at least 1")
        if len(self.metric) != ve.g0.n_edges or min(self.metric) <= 0:
            raise ValueError("certificate metric must be positive on every G0 edge")
        levels = tower if tower is not None and len(tower) >= self.level else iterate(ve, self.level)
        lv = levels[self.level - 1]
        phi = pull_tight(lv.phi)
        if len(self.cell) != lv.graph.n_vertices:
            raise ValueError("certificate cell does not match the tower level")
        for v, d in enumerate(self.cell):
            if d >= 0 and ve.g0.tail(d) != phi.vertex_image[v]:
                raise ValueError(f"certificate drags vertex {lv.graph.vertex_names[v]} along a non-incident edge")
        lifts = [self.metric[ve.g0.edge_of(lv.pi.half_edge_image[lv.graph.half(e)])] for e in range(lv.graph.n_edges)]
        return lipschitz_cell(phi, self.cell, self.metric, lifts).constant


class ExpansionError(ValueError):
    pass


def require_expansion(ve: VirtualEndomorphism, cert: ExpansionCertificate | None, tower=None) -> float:
    if cert is None:
        raise ExpansionError("expansion certificate invalid: none supplied")
    try:
        lam = cert.check(ve, tower)
    except (ValueError, KeyError, IndexError) as exc:
        raise ExpansionError(f"expansion certificate invalid: {exc}") from exc
    if not lam < 1:
        raise ExpansionError(f"expansion certificate invalid: Lipschitz constant {lam:.6g} is not below 1")
    return lam


# Fiber growth.


@dataclass(frozen=True)
class DisjointCurves:
    """Edge-disjoint closed paths in G_level all pushed to one loop of G0."""

    level: int
    curves: tuple[tuple[int, ...], ...]

    def check(self, lv: TowerLevel) -> float:
        """Returns the growth rate count^(1/level) or raises on a bad certificate."""
        g = lv.graph
        used: set[int] = set()
        keys = set()
        for c in self.curves:
            if not c or not lv.phi.domain.is_path(c) or g.tail(c[0]) != g.head(c[-1]):
                raise ValueError("certificate curve is not a closed path")
            edges = [g.edge_of(h) for h in c]
            if used & set(edges) or len(set(edges)) != len(edges):
                raise ValueError("certificate curves are not edge-disjoint")
            used |= set(edges)
            image = cyclic_reduce(lv.phi.codomain, lv.phi.path_image(c))
            if not image:
                raise ValueError("certificate curve maps to a trivial loop")
            keys.add(canonical_cyclic(lv.phi.codomain, image))
        if len(keys) != 1:
            raise ValueError("certificate curves are not all homotopic to one loop")
        return len(self.curves) ** (1.0 / self.level)


@dataclass(frozen=True)
class NbarBracket:
    lower: float
    upper: float
    multiplicities: tuple[float, ...]  # best witness N(phi^n) per level
    lower_source: str
    upper_level: int


def witness_multiplicities(tower: Sequence[TowerLevel], vertex_moves: bool = True) -> list[float]:
    """Multiplicity of each level's composite map, freely reduced, or with vertex images pulled tight."""
    out = []
    for lv in tower:
        phi = pull_tight(lv.phi) if vertex_moves else tighten(lv.phi)
        out.append(multiplicity(phi))
    return out


def nbar_bracket(
    ve: VirtualEndomorphism,
    max_level: int,
    curves: Sequence[Sequence[int]] = (),
    peripheral: Sequence[Sequence[int]] = (),
    disjoint: DisjointCurves | None = None,
    tower: Sequence[TowerLevel] | None = None,
) -> NbarBracket:
    tower = list(tower) if tower is not None else iterate(ve, max_level)
    tower = tower[:max_level]
    free = witness_multiplicities(tower, vertex_moves=False)
    tight = witness_multiplicities(tower, vertex_moves=True)
    best = [min(a, b) for a, b in zip(free, tight)]
    rates = [m ** (1.0 / (n + 1)) for n, m in enumerate(best)]
    k = min(range(len(rates)), key=rates.__getitem__)
    lower, source = 1.0, "trivial"
    if curves:
        r = nbar_lower_from_curves(ve, curves, peripheral)
        if r > lower:
            lower, source = r, "Perron root of the curve pullback matrix"
    if disjoint is not None:
        if disjoint.level > len(tower):
            tower += iterate(ve, disjoint.level)[len(tower):]
        c = disjoint.check(tower[disjoint.level - 1])
        if c > lower:
            lower, source = c, f"{len(disjoint.curves)} edge-disjoint curves at level {disjoint.level}"
    return NbarBracket(lower, rates[k], tuple(best), source, k + 1)


# Energies across levels.


@dataclass(frozen=True)
class EnergyEstimate:
    q: float
    upper: tuple[float, ...]  # best upper bound on E^q_q at each level
    lower: tuple[float, ...]  # stretch witnesses at each level
    raw: tuple[float, ...] = ()  # what the local search found, before closing under products

    @property
    def e_ub(self) -> float:
        return min(u ** (1.0 / (n + 1)) for n, u in enumerate(self.upper))

    @property
    def e_lb(self) -> float:
        return max((x ** (1.0 / (n + 1)) for n, x in enumerate(self.lower) if x > 0), default=0.0)


def seed_cell(lv: TowerLevel, ve: VirtualEndomorphism, hint: Mapping | None) -> tuple[int, ...] | None:
    """Cell from a fixture hint mapping level-1 vertices to G0 edges."""
    if not hint or hint.get("level") != lv.level:
        return None
    by_first = hint["by_first"]
    g0 = ve.g0
    phi = lv.phi
    cell = []
    for v in range(lv.graph.n_vertices):
        name = by_first.get(ve.g1.vertex_names[lv.first[v]])
        a = phi.vertex_image[v]
        if name is None:
            cell.append(-1)
            continue
        e = g0.edge_names.index(name)
        cell.append(g0.half(e, 1) if g0.tail(g0.half(e, 1)) == a else g0.half(e, -1))
    return tuple(cell)


def _lifted(lv: TowerLevel, alpha: Sequence[float]) -> list[float]:
    g0 = lv.pi.codomain
    return [alpha[g0.edge_of(lv.pi.half_edge_image[lv.graph.half(e)])] for e in range(lv.graph.n_edges)]


def stretch_curves(lv: TowerLevel) -> list[WeightedMultiCurve]:
    """Simple cycles of G_level of length at most 6 (a small witness family)."""
    g = lv.graph
    seen = set()
    out = []
    for start in range(g.n_vertices):
        stack = [(start, (), frozenset([start]))]
        while stack:
            v, path, vis = stack.pop()
            if len(path) >= 6:
                continue
            for h in g.star[v]:
                if path and h == g.rev(path[-1]):
                    continue
                w = g.head(h)
                p = path + (h,)
                if w == start:
                    key = canonical_cyclic(g, p)
                    if key and key not in seen:
                        seen.add(key)
                        out.append(WeightedMultiCurve.of(g, p))
                elif w not in vis and w > start:
                    stack.append((w, p, vis | {w}))
        if len(out) > 200:
            break
    return out


def estimate_energy(
    ve: VirtualEndomorphism,
    q: float,
    tower: Sequence[TowerLevel],
    alpha: Sequence[float],
    hint: Mapping | None = None,
    max_evals: int | None = 150,
) -> EnergyEstimate:
    ups, lows = [], []
    for lv in tower:
        beta = _lifted(lv, alpha)
        seed = seed_cell(lv, ve, hint)
        if seed is not None:
            res = minimize_Eqq(lv.phi, q, alpha, beta, cell=seed, moves=False)
        else:
            res = minimize_Eqq(lv.phi, q, alpha, beta, max_evals=max_evals)
        ups.append(res.energy)
        lows.append(stretch_lower_bound(lv.phi, q, stretch_curves(lv), beta, alpha))
    return EnergyEstimate(q, tuple(close_under_products(ups)), tuple(lows), tuple(ups))


def close_under_products(ups: Sequence[float]) -> list[float]:
    """u_n <- min(u_n, u_m * u_(n-m)): composing maps multiplies energies at most."""
    out = list(ups)
    for n in range(1, len(out)):
        for m in range(n):
            out[n] = min(out[n], out[m] * out[n - m - 1])
    return out


def energy_csv(estimates: Sequence[EnergyEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q", "E_lb", "E_ub"] + [f"u{n + 1}" for n in range(max((len(e.upper) for e in estimates), default=0))])
    for e in estimates:
        w.writerow([repr(e.q), repr(e.e_lb), repr(e.e_ub)] + [repr(u) for u in e.upper])
    return buf.getvalue()


# Certificates.


@dataclass(frozen=True)
class Bound:
    value: float
    source: str
    witness: str


@dataclass
class DimensionCertificate:
    degree: int
    lower: Bound
    upper: Bound | None
    nbar: tuple[float, float]
    expansion: float
    estimates: list[EnergyEstimate] = field(default_factory=list)
    inputs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = {
            "degree": self.degree,
            "lower": asdict(self.lower),
            "upper": asdict(self.upper) if self.upper else None,
            "nbar": list(self.nbar),
            "expansion_constant": self.expansion,
            "energy": [
                {"q": e.q, "E_lb": e.e_lb, "E_ub": e.e_ub, "per_level": list(e.upper)} for e in self.estimates
            ],
            "inputs": self.inputs,
        }
        return json.dumps(d, indent=2, sort_keys=True)

    def report(self) -> str:
        lines = [f"degree {self.degree}, expansion constant {self.expansion:.6g}"]
        lines.append(f"Nbar in [{self.nbar[0]:.6g}, {self.nbar[1]:.6g}]")
        lines.append(f"lower {self.lower.value:.6f}  ({self.lower.source}; {self.lower.witness})")
        if self.upper:
            lines.append(f"upper {self.upper.value:.6f}  ({self.upper.source}; {self.upper.witness})")
        else:
            lines.append("upper: none (no q on the grid had energy below 1)")
        return "\n".join(lines)


def certify(
    ve: VirtualEndomorphism,
    expansion: ExpansionCertificate | None,
    alpha: Sequence[float],
    levels: int = 2,
    q_grid: Sequence[float] = DEFAULT_Q_GRID,
    curves: Sequence[Sequence[int]] = (),
    peripheral: Sequence[Sequence[int]] = (),
    disjoint: DisjointCurves | None = None,
    hint: Mapping | None = None,
    nbar_levels: int | None = None,
    max_evals: int | None = 150,
) -> DimensionCertificate:
    """Bracket for the conformal dimension.

    The energy side uses the running minimum of E_ub over the increasing
    q-grid: the asymptotic energy is non-increasing in q, so a bound found
    at q0 also holds at every q >= q0.
    """
    if ve.degree < 2:
        raise ValueError("degree >= 2 required")
    if not check_recurrent(ve):
        raise ValueError("phi is not surjective on fundamental groups (not recurrent)")
    tower = iterate(ve, max(levels, nbar_levels or levels, expansion.level if expansion else 1))
    lam = require_expansion(ve, expansion, tower)
    nb = nbar_bracket(ve, nbar_levels or levels, curves, peripheral, disjoint, tower)
    lower = Bound(arc_lower_from_nbar(ve.degree, nb.lower), "fiber growth", nb.lower_source)
    estimates = []
    upper = None
    carried, source_q = math.inf, None
    for q in sorted(q_grid):
        est = estimate_energy(ve, q, tower[:levels], alpha, hint, max_evals)
        estimates.append(est)
        if est.e_ub < carried:
            carried, source_q = est.e_ub, q
        e = carried
        if e < 1:
            where = f"q={q:g}, E<={e:.9g}" + ("" if source_q == q else f" (carried from q={source_q:g})")
            cands = [
                Bound(arc_upper_from_energy(ve.degree, q, e), "energy decay", where),
                Bound(q, "energy below one", where),
            ]
            best = min(cands, key=lambda b: b.value)
            if upper is None or best.value < upper.value:
                upper = best
    inputs = {
        "levels": levels,
        "q_grid": sorted(q_grid),
        "metric": list(alpha),
        "nbar_level": nb.upper_level,
        "max_evals": max_evals,
    }
    return DimensionCertificate(ve.degree, lower, upper, (nb.lower, nb.upper), lam, estimates, inputs)


def envelope(estimates: Sequence[EnergyEstimate]) -> list[tuple[float, float]]:
    """(q, running minimum of E_ub) along increasing q."""
    out, best = [], math.inf
    for e in sorted(estimates, key=lambda e: e.q):
        best = min(best, e.e_ub)
        out.append((e.q, best))
    return out
