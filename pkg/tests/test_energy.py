import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confdim.bounds import _lifted, seed_cell
from confdim.endomorphism import EdgePathMap
from confdim.energy import (
    contracting_metric,
    energy_E1q,
    energy_Eqq,
    fill_profile,
    lipschitz_cell,
    majority_cell,
    minimize_Eqq,
    minimize_lipschitz,
    multiplicity,
    stretch_lower_bound,
    pull_tight,
    tighten,
    traversals,
)
from confdim.graph import Graph, parallel_join, series_parallel_reduce, ConformalStructure
from confdim.words import WeightedMultiCurve

from conftest import FIXTURES, fixture, tower

ROSE = Graph.from_edges(1, [(0, 0)], ["v"], ["a"])
A = ROSE.half(0)


def power_map(k):
    """The loop wrapped k times around itself."""
    return EdgePathMap(ROSE, ROSE, (0,), ((A,) * k,))


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
def test_wrapping_map_fill(k, q):
    # k pieces of length 1/k, each stretched by k: fill = k * k^(q-1) = k^q
    res = minimize_Eqq(power_map(k), q, [1.0], [1.0])
    assert res.max_fill == pytest.approx(k**q, rel=1e-8)
    assert res.energy == pytest.approx(k, rel=1e-8)
    assert energy_Eqq(res.rep, q) == pytest.approx(res.energy)


@given(st.floats(0.2, 5), st.floats(1.1, 4))
@settings(max_examples=30, deadline=None)
def test_rescaled_identity_fill(length, q):
    # a loop of length L mapped onto a unit loop has derivative 1/L
    res = minimize_Eqq(power_map(1), q, [1.0], [length])
    assert res.max_fill == pytest.approx(length ** (1 - q), rel=1e-9)


@pytest.mark.parametrize("name", ["barycentric", "fat-2", "rabbit-basilica"])
@pytest.mark.parametrize("q", [1.5, 3.0])
def test_covering_map_has_fill_equal_to_degree(name, q):
    fx = fixture(name)
    ve = fx.ve
    pi = EdgePathMap.from_covering(ve.pi)
    alpha = fx.alpha()
    beta = [alpha[ve.g0.edge_of(ve.pi.half_edge_image[ve.g1.half(e)])] for e in range(ve.g1.n_edges)]
    res = minimize_Eqq(pi, q, alpha, beta, moves=False)
    assert res.max_fill == pytest.approx(ve.degree, rel=1e-9)


def test_barycentric_level_two_fill():
    fx = fixture("barycentric")
    lv = tower("barycentric", 2)[1]
    cell = seed_cell(lv, fx.ve, fx.hints["seed_cell"])
    res = minimize_Eqq(lv.phi, 2, fx.alpha(), _lifted(lv, fx.alpha()), cell=cell, moves=False)
    assert res.max_fill == pytest.approx(10 / 13, abs=1e-9)
    prof = fill_profile(res.rep, 2)
    for e in range(fx.ve.g0.n_edges):
        assert prof.edge_min(e) == pytest.approx(prof.edge_max(e), abs=1e-9)


def test_barycentric_level_one_fill_is_two():
    fx = fixture("barycentric")
    lv = tower("barycentric", 1)[0]
    res = minimize_Eqq(lv.phi, 2, fx.alpha(), _lifted(lv, fx.alpha()))
    assert res.max_fill == pytest.approx(2.0, abs=1e-9)


def test_fill_is_alpha_weighted_capacity():
    # one codomain edge covered by two parallel domain edges of lengths 1 and 3
    g1 = Graph.from_edges(1, [(0, 0), (0, 0)], ["v"], ["x", "y"])
    phi = EdgePathMap(g1, ROSE, (0,), ((A,), (A,)))
    q = 2.5
    res = minimize_Eqq(phi, q, [2.0], [1.0, 3.0], moves=False)
    # fill = alpha^(q-1) * sum s^(1-q)
    expect = 2.0 ** (q - 1) * (1.0 ** (1 - q) + 3.0 ** (1 - q))
    assert res.max_fill == pytest.approx(expect, rel=1e-9)
    assert expect == pytest.approx(2.0 ** (q - 1) * parallel_join(1.0, 3.0, q) ** (1 - q), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_tuned_exponent_makes_doubled_chain_unit_length(n):
    # 2n+3 doubled unit edges in series: each pair has length 2^(1/(1-q)), total 1 at the tuned q
    q = 1 + 1 / math.log2(2 * n + 3)
    k = 2 * n + 3
    ends = [(i, i + 1) for i in range(k) for _ in range(2)]
    g = Graph.from_edges(k + 1, ends)
    red, s = series_parallel_reduce(g, ConformalStructure(q, (1.0,) * len(ends)), protected=[0, k])
    assert red.n_edges == 1
    assert s.values[0] == pytest.approx(k * 2 ** (1 / (1 - q)), rel=1e-12)
    assert s.values[0] == pytest.approx(1.0, rel=1e-12)


def test_tighten_and_multiplicity():
    g = Graph.from_edges(2, [(0, 1), (1, 0)], ["u", "w"], ["p", "r"])
    back = EdgePathMap(g, ROSE, (0, 0), ((A, A, ROSE.rev(A)), ()))
    with pytest.raises(ValueError, match="backtracks"):
        multiplicity(back)
    t = pull_tight(back)
    assert t.is_reduced()
    assert multiplicity(t) <= 1
    assert traversals(t) == [1.0]


def test_tighten_is_free_reduction():
    g = Graph.from_edges(1, [(0, 0), (0, 0)], ["v"], ["a", "b"])
    a, b = g.half(0), g.half(1)
    phi = EdgePathMap(g, g, (0,), ((a, b, g.rev(b), g.rev(a), a), (b, b, g.rev(b))))
    assert tighten(phi).edge_image == ((a,), (b,))


def test_rabbit_multiplicities():
    for n, lv in enumerate(tower("rabbit-basilica", 3), start=1):
        assert multiplicity(tighten(lv.phi)) == 2 * n + 1
        # moving vertex images gives a sharper witness
        assert multiplicity(pull_tight(lv.phi)) <= 2 * n + 1


def test_curve_energy_conventions():
    c = WeightedMultiCurve.of(ROSE, (A, A), weights=[0.5])
    assert c.counts() == [1.0]
    assert energy_E1q(c, [3.0], 1) == pytest.approx(1 / 3)
    assert energy_E1q(c, [3.0], math.inf) == pytest.approx(3.0)
    assert energy_E1q(c, [3.0], 2) == pytest.approx(math.sqrt(3.0))
    with pytest.raises(ValueError):
        energy_E1q(WeightedMultiCurve.of(ROSE, (A, ROSE.rev(A))), [1.0], 2)


@pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
def test_stretch_of_wrapping_map_is_sharp(q):
    phi = power_map(2)
    curve = WeightedMultiCurve.of(ROSE, (A,))
    sf = stretch_lower_bound(phi, q, [curve], [1.0], [1.0])
    assert sf == pytest.approx(2.0)
    assert sf <= minimize_Eqq(phi, q, [1.0], [1.0]).energy + 1e-9


def test_lipschitz_constants():
    assert lipschitz_cell(power_map(1), (-1,), [1.0], [1.0]).constant == pytest.approx(1.0)
    assert lipschitz_cell(power_map(3), (-1,), [1.0], [2.0]).constant == pytest.approx(1.5)
    best = minimize_lipschitz(power_map(2), [1.0], [1.0])
    assert best.constant == pytest.approx(2.0)


@pytest.mark.parametrize("name", FIXTURES)
def test_contracting_metric_agrees_with_direct_check(name):
    fx = fixture(name)
    level = fx.expansion["level"]
    lv = tower(name, level)[level - 1]
    phi = pull_tight(lv.phi)
    cell = majority_cell(phi)
    lifts = [fx.ve.g0.edge_of(lv.pi.half_edge_image[lv.graph.half(e)]) for e in range(lv.graph.n_edges)]
    lam, metric = contracting_metric(phi, cell, lifts)
    assert lam < 1
    assert min(metric) == pytest.approx(1.0)
    direct = lipschitz_cell(phi, cell, metric, [metric[k] for k in lifts]).constant
    assert direct == pytest.approx(lam, abs=1e-6)
    assert lam == pytest.approx(fx.expansion["lambda"], abs=1e-6)
