"""Regenerate the shipped fixtures from the model builders."""

from __future__ import annotations

import sys
from pathlib import Path

from confdim import models
from confdim.bounds import ExpansionCertificate
from confdim.endomorphism import iterate
from confdim.energy import contracting_metric, majority_cell, pull_tight
from confdim.fixtures import Fixture, dumps

OUT = Path(__file__).resolve().parent.parent / "src" / "confdim" / "data"

PROVENANCE = {
    "barycentric": "spine of the barycentric subdivision rule on the triangle pillowcase",
    "fat": "spines of the quadrant decomposition for z^2 + lam/z^2, real critical orbit on the right",
    "skinny": "spines of the quadrant decomposition for z^2 + lam/z^2, first orbit point on the left",
    "rabbit-basilica": "equator spine of the mating of the rabbit with the basilica",
}


def expansion(ve, max_level: int = 3) -> dict:
    for level in range(1, max_level + 1):
        lv = iterate(ve, level)[-1]
        phi = pull_tight(lv.phi)
        cell = majority_cell(phi)
        lifts = [ve.g0.edge_of(lv.pi.half_edge_image[lv.graph.half(e)]) for e in range(lv.graph.n_edges)]
        lam, metric = contracting_metric(phi, cell, lifts)
        if lam < 1 - 1e-6:
            metric = tuple(float(f"{a:.9g}") for a in metric)
            cert = ExpansionCertificate(level, metric, cell)
            check = cert.check(ve)
            assert check < 1, check
            return {
                "level": level,
                "metric": dict(zip(ve.g0.edge_names, metric)),
                "cell": {lv.graph.vertex_names[v]: ve.g0.half_name(d) for v, d in enumerate(cell) if d >= 0},
                "lambda": float(f"{check:.9g}"),
            }
    raise RuntimeError("no contracting metric found")


def to_fixture(m: models.Model, family: str) -> Fixture:
    disjoint = m.certificates.get("disjoint_curves")
    return Fixture(
        name=m.name,
        ve=m.ve,
        description=m.description,
        lengths=dict(m.metric),
        symbols=dict(m.symbols),
        curves=dict(m.curves),
        peripheral=list(m.peripheral),
        disjoint={"level": disjoint["level"], "curves": disjoint["curves"]} if disjoint else None,
        expansion=expansion(m.ve),
        hints=dict(m.hints),
        metadata={"provenance": PROVENANCE[family], "generator": "scripts/make_fixtures.py"},
    )


def main() -> None:
    builders = [(models.barycentric(), "barycentric"), (models.rabbit_basilica(), "rabbit-basilica")]
    builders += [(models.fat_devaney(n), "fat") for n in (1, 2, 3)]
    builders += [(models.skinny_devaney(n), "skinny") for n in (1, 2, 3)]
    for m, family in builders:
        fx = to_fixture(m, family)
        (OUT / f"{m.name}.json").write_text(dumps(fx))
        print(m.name, fx.expansion["level"], fx.expansion["lambda"], file=sys.stderr)


if __name__ == "__main__":
    main()
