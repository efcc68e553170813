"""JSON fixtures for virtual endomorphisms.

Edge paths are lists of signed edge names ("e3" forward, "-e3" backward).
Edge lengths on G0 may be numbers or arithmetic expressions in named
symbols, resolved at load (optionally with some symbols overridden).
"""

from __future__ import annotations

import ast
import json
import math
import operator
from collections.abc import Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .bounds import DisjointCurves, ExpansionCertificate
from .endomorphism import CoveringMap, EdgePathMap, VirtualEndomorphism, check_recurrent
from .graph import ConformalStructure, Graph, validate

SCHEMA = "confdim-fixture/1"


class FixtureError(ValueError):
    pass


# Symbol arithmetic.

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"log2": math.log2, "log": math.log, "sqrt": math.sqrt, "exp": math.exp}


def _eval(node: ast.AST, env: Mapping[str, float]) -> float:
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id not in env:
            raise KeyError(node.id)
        return env[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_eval(node.operand, env)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1:
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    raise FixtureError(f"unsupported expression: {ast.dump(node)}")


def evaluate(expr: float | str, env: Mapping[str, float]) -> float:
    if isinstance(expr, (int, float)):
        return float(expr)
    try:
        return _eval(ast.parse(expr, mode="eval"), env)
    except SyntaxError as exc:
        raise FixtureError(f"bad expression {expr!r}: {exc.msg}") from exc


def resolve_symbols(symbols: Mapping[str, float | str], overrides: Mapping[str, float] | None = None) -> dict[str, float]:
    env = {k: float(v) for k, v in (overrides or {}).items() if k in symbols}
    todo = [k for k in symbols if k not in env]
    while todo:
        left = []
        for k in todo:
            try:
                env[k] = evaluate(symbols[k], env)
            except KeyError:
                left.append(k)
        if len(left) == len(todo):
            raise FixtureError(f"symbols cannot be resolved: {', '.join(left)}")
        todo = left
    return env


# The fixture object.


@dataclass
class Fixture:
    name: str
    ve: VirtualEndomorphism
    description: str = ""
    lengths: dict[str, float | str] = field(default_factory=dict)
    symbols: dict[str, float | str] = field(default_factory=dict)
    curves: dict[str, list[list[str]]] = field(default_factory=dict)
    peripheral: list[list[str]] = field(default_factory=list)
    disjoint: dict | None = None
    expansion: dict | None = None
    hints: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return self.ve.degree

    def alpha(self, overrides: Mapping[str, float] | None = None) -> tuple[float, ...]:
        env = resolve_symbols(self.symbols, overrides)
        return tuple(evaluate(self.lengths.get(e, 1.0), env) for e in self.ve.g0.edge_names)

    def symbol(self, name: str, overrides: Mapping[str, float] | None = None) -> float:
        return resolve_symbols(self.symbols, overrides)[name]

    def curve_paths(self, system: str) -> list[tuple[int, ...]]:
        return [self.ve.g0.parse_path(c) for c in self.curves.get(system, [])]

    def peripheral_paths(self) -> list[tuple[int, ...]]:
        return [self.ve.g0.parse_path(c) for c in self.peripheral]

    def expansion_certificate(self, tower=None) -> ExpansionCertificate | None:
        if self.expansion is None:
            return None
        from .endomorphism import iterate

        x = self.expansion
        g0 = self.ve.g0
        level = int(x["level"])
        metric = tuple(float(x["metric"][e]) for e in g0.edge_names)
        lv = (tower if tower is not None and len(tower) >= level else iterate(self.ve, level))[level - 1]
        cell = [-1] * lv.graph.n_vertices
        for v, tok in x["cell"].items():
            cell[lv.graph.vertex(v)] = g0.parse_half(tok)
        return ExpansionCertificate(level, metric, tuple(cell))

    def disjoint_certificate(self) -> DisjointCurves | None:
        if not self.disjoint:
            return None
        from .endomorphism import iterate

        level = int(self.disjoint["level"])
        g = self.ve.g1 if level == 1 else iterate(self.ve, level)[level - 1].graph
        return DisjointCurves(level, tuple(g.parse_path(c) for c in self.disjoint["curves"]))

    def problems(self) -> list[str]:
        out = validate(self.ve.g0) + [f"G1: {p}" for p in validate(self.ve.g1)]
        if out:
            return out
        out += self.ve.problems()
        if out:
            return out
        try:
            alpha = self.alpha()
        except (FixtureError, KeyError, ZeroDivisionError, ValueError) as exc:
            return [f"graphs.G0.lengths: {exc}"]
        out += validate(self.ve.g0, ConformalStructure(2.0, alpha))
        if self.ve.degree < 2:
            out.append("degree >= 2 required")
        if not check_recurrent(self.ve):
            out.append("phi is not surjective on fundamental groups (not recurrent)")
        return out


# Reading.


def _graph(doc: Mapping, where: str) -> tuple[Graph, dict[str, float | str]]:
    try:
        vertices = list(doc["vertices"])
        vidx = {v: i for i, v in enumerate(vertices)}
        if len(vidx) != len(vertices):
            raise FixtureError(f"{where}.vertices: duplicate vertex names")
        ends, names, lengths = [], [], {}
        for k, e in enumerate(doc["edges"]):
            for key in ("name", "tail", "head"):
                if key not in e:
                    raise FixtureError(f"{where}.edges[{k}]: missing {key!r}")
            for key in ("tail", "head"):
                if e[key] not in vidx:
                    raise FixtureError(f"{where}.edges[{k}].{key}: unknown vertex {e[key]!r}")
            ends.append((vidx[e["tail"]], vidx[e["head"]]))
            names.append(e["name"])
            if "length" in e:
                lengths[e["name"]] = e["length"]
        if len(set(names)) != len(names):
            raise FixtureError(f"{where}.edges: duplicate edge names")
    except (KeyError, TypeError) as exc:
        raise FixtureError(f"{where}: malformed graph ({exc})") from exc
    return Graph.from_edges(len(vertices), ends, vertices, names), lengths


def _half(g: Graph, tok: str, where: str) -> int:
    try:
        return g.parse_half(tok)
    except (KeyError, AttributeError) as exc:
        raise FixtureError(f"{where}: unknown edge {tok!r}") from exc


def _vertex(g: Graph, name: str, where: str) -> int:
    try:
        return g.vertex(name)
    except KeyError as exc:
        raise FixtureError(f"{where}: unknown vertex {name!r}") from exc


def from_dict(doc: Mapping) -> Fixture:
    if doc.get("schema") != SCHEMA:
        raise FixtureError(f"schema: expected {SCHEMA!r}, found {doc.get('schema')!r}")
    for key in ("graphs", "covering", "phi", "degree"):
        if key not in doc:
            raise FixtureError(f"{key}: section missing")
    g0, lengths = _graph(doc["graphs"]["G0"], "graphs.G0")
    g1, _ = _graph(doc["graphs"]["G1"], "graphs.G1")
    cov = doc["covering"]
    vpi = [0] * g1.n_vertices
    for v in g1.vertex_names:
        if v not in cov["vertices"]:
            raise FixtureError(f"covering.vertices: no image for {v!r}")
        vpi[g1.vertex(v)] = _vertex(g0, cov["vertices"][v], f"covering.vertices.{v}")
    hpi = [0] * g1.n_half_edges
    for h in range(g1.n_half_edges):
        tok = g1.half_name(h)
        if tok not in cov["half_edges"]:
            raise FixtureError(f"covering.half_edges: no image for half-edge {tok!r}")
        hpi[h] = _half(g0, cov["half_edges"][tok], f"covering.half_edges.{tok}")
    pi = CoveringMap(g1, g0, tuple(vpi), tuple(hpi))
    ph = doc["phi"]
    vphi = [0] * g1.n_vertices
    for v in g1.vertex_names:
        if v not in ph["vertices"]:
            raise FixtureError(f"phi.vertices: no image for {v!r}")
        vphi[g1.vertex(v)] = _vertex(g0, ph["vertices"][v], f"phi.vertices.{v}")
    ephi = []
    for e in g1.edge_names:
        if e not in ph["edges"]:
            raise FixtureError(f"phi.edges: no image for {e!r}")
        ephi.append(tuple(_half(g0, t, f"phi.edges.{e}") for t in ph["edges"][e]))
    phi = EdgePathMap(g1, g0, tuple(vphi), tuple(ephi))
    degree = doc["degree"]
    if not isinstance(degree, int):
        raise FixtureError("degree: must be an integer")
    ve = VirtualEndomorphism(g1, g0, pi, phi, degree, ConformalStructure.uniform(g0))
    curves = doc.get("curves", {})
    fx = Fixture(
        name=doc.get("name", ""),
        ve=ve,
        description=doc.get("description", ""),
        lengths=lengths,
        symbols=dict(doc["graphs"]["G0"].get("symbols", {})),
        curves=dict(curves.get("systems", {})),
        peripheral=list(curves.get("peripheral", [])),
        disjoint=curves.get("disjoint"),
        expansion=doc.get("expansion_certificate"),
        hints=dict(doc.get("symmetry_hints", {})),
        metadata=dict(doc.get("metadata", {})),
    )
    for name, system in fx.curves.items():
        for k, c in enumerate(system):
            for t in c:
                _half(g0, t, f"curves.systems.{name}[{k}]")
    try:
        fx.alpha()
    except (FixtureError, ZeroDivisionError, ValueError) as exc:
        raise FixtureError(f"graphs.G0.lengths: {exc}") from exc
    ve = VirtualEndomorphism(g1, g0, pi, phi, degree, ConformalStructure(2.0, fx.alpha()))
    fx.ve = ve
    return fx


def loads(text: str) -> Fixture:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FixtureError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FixtureError("top level must be a JSON object")
    return from_dict(doc)


def load(path: str | Path) -> Fixture:
    p = Path(path)
    if not p.exists() and (resources.files("confdim") / "data" / f"{path}.json").is_file():
        return loads((resources.files("confdim") / "data" / f"{path}.json").read_text())
    try:
        text = p.read_text()
    except OSError as exc:
        raise FixtureError(f"{path}: {exc.strerror}") from exc
    try:
        return loads(text)
    except FixtureError as exc:
        raise FixtureError(f"{path}: {exc}") from exc


def shipped() -> list[str]:
    return sorted(p.name[:-5] for p in (resources.files("confdim") / "data").iterdir() if p.name.endswith(".json"))


# Writing.


def _graph_dict(g: Graph, lengths: Mapping[str, float | str] | None = None, symbols=None) -> dict:
    edges = []
    for e in range(g.n_edges):
        t, h = g.ends(e)
        d = {"name": g.edge_names[e], "tail": g.vertex_names[t], "head": g.vertex_names[h]}
        if lengths and g.edge_names[e] in lengths:
            d["length"] = lengths[g.edge_names[e]]
        edges.append(d)
    out = {"vertices": list(g.vertex_names), "edges": edges}
    if symbols:
        out["symbols"] = dict(symbols)
    return out


def to_dict(fx: Fixture) -> dict:
    ve = fx.ve
    g0, g1 = ve.g0, ve.g1
    doc = {
        "schema": SCHEMA,
        "name": fx.name,
        "description": fx.description,
        "metadata": fx.metadata,
        "degree": ve.degree,
        "graphs": {"G0": _graph_dict(g0, fx.lengths, fx.symbols), "G1": _graph_dict(g1)},
        "covering": {
            "vertices": {g1.vertex_names[v]: g0.vertex_names[ve.pi.vertex_image[v]] for v in range(g1.n_vertices)},
            "half_edges": {g1.half_name(h): g0.half_name(ve.pi.half_edge_image[h]) for h in range(g1.n_half_edges)},
        },
        "phi": {
            "vertices": {g1.vertex_names[v]: g0.vertex_names[ve.phi.vertex_image[v]] for v in range(g1.n_vertices)},
            "edges": {g1.edge_names[e]: g0.path_names(p) for e, p in enumerate(ve.phi.edge_image)},
        },
    }
    curves = {}
    if fx.curves:
        curves["systems"] = fx.curves
    if fx.peripheral:
        curves["peripheral"] = fx.peripheral
    if fx.disjoint:
        curves["disjoint"] = fx.disjoint
    if curves:
        doc["curves"] = curves
    if fx.expansion is not None:
        doc["expansion_certificate"] = fx.expansion
    if fx.hints:
        doc["symmetry_hints"] = fx.hints
    return doc


def dumps(fx: Fixture) -> str:
    return json.dumps(to_dict(fx), indent=1) + "\n"


def dump(fx: Fixture, path: str | Path) -> None:
    Path(path).write_text(dumps(fx))
