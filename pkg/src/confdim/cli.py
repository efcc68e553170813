"""Command-line entry point: validate, energy, certify, modulus, pullback."""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click

from . import bounds
from .curves import curve_critical_exponent, perron_eigenvalue, pullback_multicurve, transition_matrix
from .endomorphism import LevelCapError, check_recurrent, iterate
from .energy import minimize_Eqq, stretch_lower_bound
from .fixtures import FixtureError, load
from .graph import Graph
from .modulus import build_covers, modulus
from .words import WeightedMultiCurve


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _load(path: str):
    try:
        return load(path)
    except FixtureError as exc:
        raise click.ClickException(str(exc)) from exc


def _tower(ve, n: int):
    try:
        return iterate(ve, n)
    except LevelCapError as exc:
        raise click.ClickException(f"{exc}; raise CONFDIM_MAX_EDGES to allow it") from exc


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise click.BadParameter(f"not a comma-separated list of numbers: {text!r}") from exc


@click.group()
def main() -> None:
    """Conformal dimension bounds from graph endomorphisms."""


@main.command()
@click.argument("path")
def validate(path: str) -> None:
    """Check the covering, recurrence and expansion certificate of a fixture."""
    fx = _load(path)
    problems = fx.problems()
    if not problems:
        try:
            lam = bounds.require_expansion(fx.ve, fx.expansion_certificate())
            click.echo(f"{fx.name}: degree {fx.degree}, recurrent, expansion constant {lam:.6g} at level {fx.expansion['level']}")
        except (bounds.ExpansionError, FixtureError, KeyError) as exc:
            problems.append(str(exc) if isinstance(exc, bounds.ExpansionError) else f"expansion certificate invalid: {exc}")
    for p in problems:
        click.echo(f"error: {p}", err=True)
    sys.exit(1 if problems else 0)


@main.command()
@click.argument("path")
@click.option("--q", "q", type=float, required=True, help="Exponent q > 1.")
@click.option("--levels", type=int, default=1, show_default=True, help="Tower levels to optimize.")
@click.option("--curves", "system", default=None, help="Curve system for stretch witnesses at level 1.")
@click.option("--max-evals", type=int, default=150, show_default=True, help="Cell evaluations per level.")
@click.option("--out", default=None, help="Write the CSV here instead of stdout.")
def energy(path: str, q: float, levels: int, system: str | None, max_evals: int, out: str | None) -> None:
    """Per-level energy upper bounds, stretch lower bounds and the asymptotic bracket."""
    fx = _load(path)
    if fx.degree < 2:
        raise click.ClickException("degree >= 2 required")
    if q <= 1:
        raise click.BadParameter("q must exceed 1", param_hint="--q")
    ve = fx.ve
    alpha = fx.alpha({"q": q})
    tower = _tower(ve, levels)
    hint = fx.hints.get("seed_cell")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "q", "max_fill", "energy", "upper", "upper_root", "stretch_lb", "converged"])
    results, lows = [], []
    for lv in tower:
        beta = bounds._lifted(lv, alpha)
        seed = bounds.seed_cell(lv, ve, hint)
        if seed is not None:
            res = minimize_Eqq(lv.phi, q, alpha, beta, cell=seed, moves=False)
        else:
            res = minimize_Eqq(lv.phi, q, alpha, beta, max_evals=max_evals)
        curves = bounds.stretch_curves(lv)
        if system and lv.level == 1:
            curves += [WeightedMultiCurve.of(ve.g1, c) for c in _lift_closed(fx, system)]
        results.append(res)
        lows.append(stretch_lower_bound(lv.phi, q, curves, beta, alpha))
    ups = bounds.close_under_products([r.energy for r in results])
    for lv, res, u, low in zip(tower, results, ups, lows):
        w.writerow([lv.level, repr(q), repr(res.max_fill), repr(res.energy), repr(u), repr(u ** (1 / lv.level)),
                    repr(low), res.converged])
    est = bounds.EnergyEstimate(q, tuple(ups), tuple(lows))
    w.writerow(["asymptotic", repr(q), "E_lb", repr(est.e_lb), "E_ub", repr(est.e_ub), "", ""])
    _emit(buf.getvalue(), out)


def _lift_closed(fx, system: str) -> list[tuple[int, ...]]:
    """Closed lifts to G1 of the named G0 curves (used as stretch witnesses)."""
    paths = fx.curve_paths(system)
    if not paths:
        raise click.BadParameter(f"no curve system {system!r} in the fixture", param_hint="--curves")
    return [c.lift for c in pullback_multicurve(fx.ve, paths) if c.lift]


@main.command()
@click.argument("path")
@click.option("--config", "config_path", default=None, help="JSON with levels, q_grid, nbar_levels, max_evals, curves.")
@click.option("--levels", type=int, default=None, help="Energy levels (default 1, or 2 with a seed hint).")
@click.option("--q-grid", default=None, help="Comma-separated exponents.")
@click.option("--out", default=None, help="Write the certificate JSON here; the report goes to stdout.")
@click.option("--csv", "csv_out", default=None, help="Write the (q, E_lb, E_ub) table here.")
def certify(path: str, config_path: str | None, levels: int | None, q_grid: str | None, out: str | None,
            csv_out: str | None) -> None:
    """Certified lower and upper bounds on the conformal dimension."""
    fx = _load(path)
    cfg = {}
    if config_path:
        try:
            cfg = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"{config_path}: {exc}") from exc
    hint = fx.hints.get("seed_cell")
    if levels is None:
        levels = int(cfg.get("levels", hint["level"] if hint else 1))
    grid = _floats(q_grid) if q_grid else tuple(cfg.get("q_grid", bounds.DEFAULT_Q_GRID))
    system = cfg.get("curves", "invariant")
    if fx.degree < 2:
        raise click.ClickException("degree >= 2 required")
    try:
        disjoint = fx.disjoint_certificate()
        cert = bounds.certify(
            fx.ve,
            fx.expansion_certificate(),
            fx.alpha(),
            levels=levels,
            q_grid=grid,
            curves=fx.curve_paths(system),
            peripheral=fx.peripheral_paths(),
            disjoint=disjoint,
            hint=hint,
            nbar_levels=int(cfg.get("nbar_levels", max(levels, 3))),
            max_evals=cfg.get("max_evals", 150),
        )
    except bounds.ExpansionError as exc:
        raise click.ClickException(str(exc)) from exc
    except LevelCapError as exc:
        raise click.ClickException(f"{exc}; raise CONFDIM_MAX_EDGES to allow it") from exc
    cert.inputs["fixture"] = fx.name
    report = cert.report()
    if out:
        Path(out).write_text(cert.to_json() + "\n")
        click.echo(report)
    else:
        click.echo(report, err=True)
        click.echo(cert.to_json())
    if csv_out:
        Path(csv_out).write_text(bounds.energy_csv(cert.estimates))


def _cycle(k: int) -> Graph:
    return Graph.from_edges(k, [(i, (i + 1) % k) for i in range(k)], [f"v{i}" for i in range(k)],
                            [f"e{i}" for i in range(k)])


@main.command("modulus")
@click.argument("path", required=False)
@click.option("--family", default="invariant", show_default=True, help="Curve system of the fixture, or 'peripheral'.")
@click.option("--cycle", "cycle_k", type=int, default=None, help="Use one loop around a k-cycle instead of a fixture.")
@click.option("--cover", type=click.Choice(["edge", "open_edge", "star"]), default="edge", show_default=True)
@click.option("--q", "q", type=float, default=2.0, show_default=True)
@click.option("--out", default=None)
def modulus_cmd(path: str | None, family: str, cycle_k: int | None, cover: str, q: float, out: str | None) -> None:
    """Combinatorial q-modulus of a curve family on G0 and the optimal test metric."""
    if cycle_k is not None:
        if cycle_k < 1:
            raise click.BadParameter("cycle length must be positive", param_hint="--cycle")
        g = _cycle(cycle_k)
        curves = [tuple(g.half(e) for e in range(cycle_k))]
    elif path:
        fx = _load(path)
        g = fx.ve.g0
        curves = fx.peripheral_paths() if family == "peripheral" else fx.curve_paths(family)
        if not curves:
            raise click.BadParameter(f"no curve system {family!r} in the fixture", param_hint="--family")
    else:
        raise click.UsageError("give a fixture path or --cycle")
    try:
        res = modulus([WeightedMultiCurve.of(g, c) for c in curves], build_covers(g)[cover], q)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    doc = {
        "q": q,
        "cover": cover,
        "modulus": res.value,
        "dual_bound": res.lower,
        "extremal_length": res.extremal_length,
        "rho": {g.edge_names[i]: r for i, r in enumerate(res.rho)},
    }
    _emit(json.dumps(doc, indent=2) + "\n", out)


@main.command()
@click.argument("path")
@click.option("--family", default="invariant", show_default=True, help="Curve system to pull back.")
@click.option("--out", default=None)
def pullback(path: str, family: str, out: str | None) -> None:
    """Pull a curve system back once; report components, transition matrix and growth."""
    fx = _load(path)
    ve = fx.ve
    curves = fx.curve_paths(family)
    if not curves:
        raise click.BadParameter(f"no curve system {family!r} in the fixture", param_hint="--family")
    comps = pullback_multicurve(ve, curves, fx.peripheral_paths())
    lines = ["source,degree,target,trivial,peripheral,image"]
    for c in comps:
        target = "" if c.target is None else c.target
        lines.append(f"{c.source},{c.degree},{target},{c.trivial},{c.peripheral},{' '.join(ve.g0.path_names(c.image))}")
    try:
        T = transition_matrix(comps, len(curves))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    root = perron_eigenvalue(T.counts)[0]
    lines.append("")
    lines.append("matrix")
    lines += [",".join(f"{int(x)}" for x in row) for row in T.counts]
    lines.append(f"perron_root,{root!r}")
    try:
        lines.append(f"critical_exponent,{curve_critical_exponent(T)!r}")
    except ValueError as exc:
        lines.append(f"critical_exponent,none ({exc})")
    lines.append(f"recurrent,{check_recurrent(ve)}")
    _emit("\n".join(lines) + "\n", out)


if __name__ == "__main__":
    main()
