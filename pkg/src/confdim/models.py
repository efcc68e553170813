"""Builders for the shipped example endomorphisms.

Each builder returns a :class:`Model` holding the virtual endomorphism plus
the auxiliary data (metrics, curve systems, seeds) that the fixtures carry.
The JSON files under ``confdim/data`` are generated from these builders and
the test suite checks that they agree.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .endomorphism import CoveringMap, EdgePathMap, VirtualEndomorphism, check_covering
from .graph import ConformalStructure, Graph


@dataclass
class Model:
    name: str
    ve: VirtualEndomorphism
    description: str = ""
    metric: dict[str, float | str] = field(default_factory=dict)  # G0 edge -> length or symbol
    symbols: dict[str, float | str] = field(default_factory=dict)
    curves: dict[str, list[list[str]]] = field(default_factory=dict)
    peripheral: list[list[str]] = field(default_factory=list)
    hints: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    expansion: dict | None = None
    info: dict = field(default_factory=dict)


def _covering(g1: Graph, g0: Graph, vimg: list[int], eimg: list[int]) -> CoveringMap:
    """Covering from vertex images and signed edge images (half-edge ids)."""
    himg = [0] * g1.n_half_edges
    for e, h in enumerate(eimg):
        himg[g1.half(e, 1)] = h
        himg[g1.half(e, -1)] = g0.rev(h)
    return CoveringMap(g1, g0, tuple(vimg), tuple(himg))


def _finish(g1, g0, pi, vphi, ephi, structure=None) -> VirtualEndomorphism:
    d = check_covering(pi)
    if not isinstance(d, int):
        raise AssertionError(f"builder produced a non-covering: {d[:3]}")
    phi = EdgePathMap(g1, g0, tuple(vphi), tuple(tuple(p) for p in ephi))
    bad = phi.check()
    if bad:
        raise AssertionError(f"builder produced a bad map: {bad[:3]}")
    return VirtualEndomorphism(g1, g0, pi, phi, d, structure)


# Barycentric subdivision of the triangle.

_ABC = "ABC"
_PAIR = {"AB": 0, "BC": 1, "AC": 2}


def _pair(x: str, y: str) -> int:
    return _PAIR["".join(sorted(x + y, key=_ABC.index))]


def _cyc(x: str, y: str) -> bool:
    return (_ABC.index(y) - _ABC.index(x)) % 3 == 1


def barycentric() -> Model:
    """Pillowcase triangle subdivided barycentrically (degree 6).

    G0 is the theta graph dual to the triangle: vertices u, l (upper and
    lower face), edges eAB, eBC, eCA crossing the sides.  Small triangles
    are (face, corner, side-midpoint direction) = (F, X, Y).
    """
    tri = [(F, X, Y) for F in "UL" for X in _ABC for Y in _ABC if X != Y]
    idx = {t: i for i, t in enumerate(tri)}
    g0 = Graph.from_edges(2, [(0, 1)] * 3, ["u", "l"], ["eAB", "eBC", "eCA"])
    ends, names, kind = [], [], []
    for t in tri:
        F, X, Y = t
        if F == "U":  # crossing a big side
            ends.append((idx[t], idx[("L", X, Y)]))
            names.append(f"x{X}{Y}")
            kind.append(2)
        if _ABC.index(X) < _ABC.index(Y):  # side midpoint to barycenter
            ends.append((idx[t], idx[(F, Y, X)]))
            names.append(f"m{F}{X}{Y}")
            kind.append(1)
        Z = next(z for z in _ABC if z not in (X, Y))
        if _ABC.index(Y) < _ABC.index(Z):  # corner to barycenter
            ends.append((idx[t], idx[(F, X, Z)]))
            names.append(f"b{F}{X}{Y}{Z}")
            kind.append(0)
    g1 = Graph.from_edges(len(tri), ends, ["t" + "".join(t) for t in tri], names)
    parity = [(t[0] == "U") ^ _cyc(t[1], t[2]) for t in tri]
    vpi = [0 if p else 1 for p in parity]
    epi = [g0.half(k, 1 if vpi[a] == 0 else -1) for (a, _), k in zip(ends, kind)]
    pi = _covering(g1, g0, vpi, epi)
    vphi = [0 if t[0] == "U" else 1 for t in tri]
    ephi = []
    for (a, _), k in zip(ends, kind):
        if k == 2:
            _, X, Y = tri[a]
            ephi.append([g0.half(_pair(X, Y), 1)])
        else:
            ephi.append([])
    ve = _finish(g1, g0, pi, vphi, ephi, ConformalStructure.uniform(g0, 2.0))
    # Seed for the level-2 cell: drag each vertex into the G0 edge of the
    # big side that its first-level triangle points at.
    seed = {}
    for t in tri:
        e = g0.edge_names[_pair(t[1], t[2])]
        seed["t" + "".join(t)] = e
    c1 = ["tUBA", "tUBC", "tLBC", "tLBA"]
    c2 = ["tUAB", "tUAC", "tUCA", "tUCB", "tLCB", "tLCA", "tLAC", "tLAB"]
    return Model(
        "barycentric",
        ve,
        "barycentric subdivision of a triangle, degree 6",
        metric={e: 1.0 for e in g0.edge_names},
        hints={"seed_cell": {"level": 2, "by_first": seed}},
        certificates={
            "disjoint_curves": {
                "count": 2,
                "level": 1,
                "curves": [_cycle_path(g1, c1), _cycle_path(g1, c2)],
            }
        },
    )


def _cycle_path(g: Graph, verts: list[str]) -> list[str]:
    """Closed path through consecutive named vertices (unique edges)."""
    out = []
    ids = [g.vertex(v) for v in verts]
    for a, b in zip(ids, ids[1:] + ids[:1]):
        hs = [h for h in g.star[a] if g.head(h) == b]
        if len(hs) != 1:
            raise AssertionError("ambiguous or missing edge")
        out.append(g.half_name(hs[0]))
    return out


# Devaney family f(z) = z^2 + lam / z^2 with real lam < 0.

_AX = "ENWS"  # half-axes in counterclockwise order: R+, I+, R-, I-


def devaney_parameter(word: str) -> float:
    """Real lam < 0 whose free critical value has kneading ``word``.

    The orbit x_0 = 4 lam + 1/4, x_1, ... has x_i on the side word[i] of 0
    and lands on 0 after len(word) steps.  Solved by backward iteration.
    """

    def gap(s: float) -> float:
        a = math.exp(s)
        y = 0.0
        for ch in reversed(word):
            y = math.sqrt((y + math.sqrt(y * y + 4 * a)) / 2) * (1 if ch == "R" else -1)
        return y - (0.25 - 4 * a)

    roots = []
    s, prev = -705.0, None
    while s < 0:
        v = gap(s)
        if prev is not None and (prev[1] > 0) != (v > 0):
            roots.append(brentq(gap, prev[0], s, xtol=1e-15, rtol=1e-15))
        prev = (s, v)
        s += 0.01
    if len(roots) != 1:
        raise ValueError(f"kneading word {word!r}: {len(roots)} parameters found")
    return -math.exp(roots[0])


def _inv_sq(p: float, a: float, sign: int) -> float:
    """Positive t with sign*(t^2) - sign*a/t^2 ... solved stably.

    sign=+1: t^2 - a/t^2 = p.  sign=-1: -t^2 + a/t^2 = p.
    """
    p = sign * p
    r = math.sqrt(p * p + 4 * a)
    t2 = (p + r) / 2 if p >= 0 else 2 * a / (r - p)
    return math.sqrt(t2)


def devaney(word: str) -> Model:
    """Spine model for the Devaney map with kneading ``word``.

    G0 has one vertex per open quadrant and one edge per segment of a
    half-axis between consecutive postcritical points; edges are oriented
    counterclockwise.  G1 is the preimage graph: every domain quadrant is
    cut by the four arcs through its critical point into four sub-quadrants
    a, b, c, d (a, b on the start ray near 0 / far; c, d on the end ray
    far / near 0), each mapped onto one quadrant.
    """
    lam = devaney_parameter(word)
    a = -lam
    orbit = [0.25 - 4 * a]
    for _ in range(len(word) - 1):
        x = orbit[-1]
        orbit.append(x * x - a / (x * x))
    c = 2 * math.sqrt(a)
    rz = a**0.25
    # postcritical magnitudes on each half-axis (excluding 0 and infinity)
    marks = [
        sorted(x for x in orbit if x > 0),
        [c],
        sorted(-x for x in orbit if x < 0),
        [c],
    ]

    def segment(h: int, t: float) -> int:
        return sum(1 for m in marks[h] if m < t)

    g0_names = [f"{_AX[h]}{s}" for h in range(4) for s in range(len(marks[h]) + 1)]
    g0_ends = [((h - 1) % 4, h) for h in range(4) for _ in range(len(marks[h]) + 1)]
    g0 = Graph.from_edges(4, g0_ends, ["Q1", "Q2", "Q3", "Q4"], g0_names)

    def g0_edge(h: int, s: int) -> int:
        return g0.edge_names.index(f"{_AX[h]}{s}")

    def real_value(h: int, t: float) -> float:
        # f restricted to half-axis h, as a real number
        return (t * t - a / (t * t)) if h % 2 == 0 else (-t * t + a / (t * t))

    def image_quadrant(D: int, sub: int) -> int:
        # the real half-axis met by the sub-quadrant's axis side
        h = D if sub in (0, 1) else (D + 1) % 4
        near = sub in (0, 3)
        positive = (h % 2 == 0) != near  # f > 0 on that side
        hr = 0 if positive else 2
        hi = 1 if D in (0, 2) else 3
        return {frozenset((0, 1)): 0, frozenset((1, 2)): 1, frozenset((2, 3)): 2, frozenset((3, 0)): 3}[
            frozenset((hr, hi))
        ]

    vnames = [f"Q{D + 1}{'abcd'[s]}" for D in range(4) for s in range(4)]
    vpi = [image_quadrant(D, s) for D in range(4) for s in range(4)]
    vphi = [D for D in range(4) for _ in range(4)]
    ends, names, epi, ephi = [], [], [], []

    def add(tail: int, head: int, name: str, target: int, path: list[int]) -> None:
        ends.append((tail, head))
        names.append(name)
        hi = g0.half(target, 1) if g0.tail(g0.half(target, 1)) == vpi[tail] else g0.half(target, -1)
        if g0.tail(hi) != vpi[tail] or g0.head(hi) != vpi[head]:
            raise AssertionError(f"edge {name} does not lift {g0.edge_names[target]}")
        epi.append(hi)
        ephi.append(path)

    # arcs through the critical point of each quadrant
    for D in range(4):
        hi = 1 if D in (0, 2) else 3
        for s0, s1, seg, tag in ((0, 1, 0, "ab"), (1, 2, 1, "bc"), (2, 3, 0, "cd"), (3, 0, 1, "da")):
            add(4 * D + s0, 4 * D + s1, f"q{D + 1}{tag}", g0_edge(hi, seg), [])
    # segments of the half-axes cut by the preimage of the postcritical set
    for h in range(4):
        real = sorted(_inv_sq(p, a, 1 if h % 2 == 0 else -1) for p in [0.0] + orbit)
        cuts = [0.0] + real + [math.inf]
        before, after = (h - 1) % 4, h
        for j in range(len(cuts) - 1):
            lo, hi_ = cuts[j], cuts[j + 1]
            t = math.sqrt(lo * hi_) if lo > 0 and hi_ < math.inf else (hi_ / 2 if lo == 0 else 2 * lo)
            y = real_value(h, t)
            hr = 0 if y > 0 else 2
            target = g0_edge(hr, segment(hr, abs(y)))
            tail = 4 * before + (2 if t > rz else 3)
            head = 4 * after + (1 if t > rz else 0)
            add(tail, head, f"{_AX[h].lower()}{j}", target, [g0.half(g0_edge(h, segment(h, t)), 1)])

    g1 = Graph.from_edges(16, ends, vnames, names)
    pi = _covering(g1, g0, vpi, epi)
    ve = _finish(g1, g0, pi, vphi, ephi)

    def circle(rho: float) -> list[str]:
        return [f"{_AX[h]}{segment(h, rho)}" for h in range(4)]

    peripheral = [circle(0.0), circle(math.inf)]
    for h in range(4):
        for k in range(len(marks[h])):
            peripheral.append([f"{_AX[h]}{k + 1}", f"-{_AX[h]}{k}"])
    return Model(
        f"devaney-{word}",
        ve,
        f"z^2 + lam/z^2 with kneading {word}",
        peripheral=peripheral,
        info={"lambda": lam, "orbit": orbit, "marks": marks, "circle": circle},
    )


def fat_devaney(n: int) -> Model:
    """Kneading R^n; curves are circles around 0 separating the real orbit."""
    m = devaney("R" * n)
    pts = [0.0] + m.info["marks"][0]
    c = m.info["marks"][1][0]
    radii = [(max(pts[k], c) + pts[k + 1]) / 2 for k in range(n)]
    m.curves = {"invariant": [m.info["circle"](r) for r in radii]}
    m.name = f"fat-{n}"
    m.metric = {e: 1.0 for e in m.ve.g0.edge_names}
    return m


def skinny_devaney(n: int) -> Model:
    """Kneading L R^n with the tuned q-length template.

    Every G0 edge has length 1 except W1, N1 and S1, which have length
    x = n * 2^(1/(1-q)) at q = 1 + 1/log2(2n + 3).
    """
    m = devaney("L" + "R" * n)
    m.name = f"skinny-{n}"
    m.metric = {e: 1.0 for e in m.ve.g0.edge_names}
    for e in ("W1", "N1", "S1"):
        m.metric[e] = "x"
    m.symbols = {"n": n, "q": "1 + 1 / log2(2 * n + 3)", "x": "n * 2 ** (1 / (1 - q))"}
    return m


# Mating of the rabbit with the basilica.

_RABBIT = (Fraction(1, 7), Fraction(2, 7), Fraction(4, 7))
_BASILICA = (Fraction(1, 3), Fraction(2, 3))


def _angle(t: Fraction) -> str:
    return f"{t.numerator}/{t.denominator}"


def rabbit_basilica() -> Model:
    """Equator with the rays landing at the alpha points of both polynomials.

    G0 is the equator cut at the five ray angles, with a tripod R (rabbit)
    and a bipod B (basilica) attached.  G1 is its preimage under angle
    doubling; the extra tripod R' and bipod B' bound disks around non
    postcritical preimages, so phi pushes them onto the equator.
    """
    base = sorted(_RABBIT + _BASILICA)
    top = sorted({t / 2 for t in base} | {(t + 1) / 2 for t in base})

    def spine(angles, feet):
        names = [_angle(t) for t in angles] + list(feet)
        ends, enames = [], []
        k = len(angles)
        for i in range(k):
            ends.append((i, (i + 1) % k))
            enames.append(f"({_angle(angles[i])},{_angle(angles[(i + 1) % k])})")
        for c, legs in feet.items():
            for t in legs:
                ends.append((names.index(c), angles.index(t)))
                enames.append(f"{c}:{_angle(t)}")
        return Graph.from_edges(len(names), ends, names, enames)

    g0 = spine(base, {"R": _RABBIT, "B": _BASILICA})
    r2 = tuple(sorted((t + Fraction(1, 2)) % 1 for t in _RABBIT))
    b2 = tuple(sorted(({t / 2 for t in _BASILICA} | {(t + 1) / 2 for t in _BASILICA}) - set(_BASILICA)))
    g1 = spine(top, {"R": _RABBIT, "R'": r2, "B": _BASILICA, "B'": b2})

    def dbl(t: Fraction) -> Fraction:
        return (2 * t) % 1

    vpi = [g0.vertex(_angle(dbl(t))) for t in top] + [g0.vertex("R")] * 2 + [g0.vertex("B")] * 2
    epi = []
    for e, name in enumerate(g1.edge_names):
        t, h = g1.ends(e)
        if name.startswith("("):
            target = f"({_angle(dbl(top[t]))},{_angle(dbl(top[h]))})"
        else:
            c, a = name.split(":")
            target = f"{c.rstrip(chr(39))}:{_angle(dbl(Fraction(a)))}"
        epi.append(g0.half(g0.edge_names.index(target), 1))
    pi = _covering(g1, g0, vpi, epi)

    # equator points snap forward or back to the G0 ray angles
    snap = {
        Fraction(1, 14): Fraction(1, 7),
        Fraction(1, 6): Fraction(1, 7),
        Fraction(9, 14): Fraction(2, 3),
        Fraction(11, 14): Fraction(2, 3),
        Fraction(5, 6): Fraction(2, 3),
    }
    where = {t: snap.get(t, t) for t in top}
    vphi = [g0.vertex(_angle(where[t])) for t in top]
    vphi += [g0.vertex("R"), g0.vertex("2/3"), g0.vertex("B"), g0.vertex("1/7")]
    arcs = [g0.half(e, 1) for e in range(len(base))]

    def forward(a: Fraction, b: Fraction) -> list[int]:
        i, j = base.index(a), base.index(b)
        return [arcs[k % len(base)] for k in range(i, i + (j - i) % len(base))]

    ephi = []
    for e, name in enumerate(g1.edge_names):
        t, h = g1.ends(e)
        if name.startswith("("):
            ephi.append(forward(where[top[t]], where[top[h]]))
            continue
        c, a = name.split(":")
        a = Fraction(a)
        if c in ("R", "B"):
            ephi.append([g0.half(g0.edge_names.index(name), 1)])
        elif c == "R'":
            # R' sits at 2/3; its legs retract along the equator
            ephi.append(forward(Fraction(2, 3), where[a]))
        else:
            # B' sits at 1/7; the leg to 5/6 runs backwards
            path = forward(where[a], Fraction(1, 7))
            ephi.append([g0.rev(k) for k in reversed(path)])
    ve = _finish(g1, g0, pi, vphi, ephi)
    return Model(
        "rabbit-basilica",
        ve,
        "mating of the rabbit and the basilica",
        metric={e: 1.0 for e in g0.edge_names},
        info={"angles": [_angle(t) for t in base]},
    )
