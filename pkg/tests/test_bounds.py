import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confdim.bounds import (
    DisjointCurves,
    EnergyEstimate,
    ExpansionCertificate,
    ExpansionError,
    arc_lower_from_nbar,
    arc_upper_direct,
    arc_upper_from_energy,
    certify,
    close_under_products,
    envelope,
    nbar_bracket,
    require_expansion,
)
from confdim.endomorphism import CoveringMap, EdgePathMap, VirtualEndomorphism
from confdim.graph import Graph

from conftest import fixture, tower

PHI = (1 + math.sqrt(5)) / 2


# The closed forms, checked by inverting them: d^(1 - 1/Q) = N and d^(1/q - 1/Q) = E.


@pytest.mark.parametrize(
    "d, nbar, expect",
    [(6, 2, 1.630930), (4, PHI, 2 / (2 - math.log2(PHI))), (4, 1, 1.0), (2, 1, 1.0)],
)
def test_lower_formula(d, nbar, expect):
    Q = arc_lower_from_nbar(d, nbar)
    assert Q == pytest.approx(expect, abs=1e-6)
    assert d ** (1 - 1 / Q) == pytest.approx(nbar, rel=1e-12)


@pytest.mark.parametrize(
    "d, q, e, expect",
    [(6, 2, math.sqrt(10 / 13), 1.744549), (4, 2, 0.5, 1.0)],
)
def test_upper_formula(d, q, e, expect):
    Q = arc_upper_from_energy(d, q, e)
    assert Q == pytest.approx(expect, abs=1e-6)
    assert d ** (1 / q - 1 / Q) == pytest.approx(e, rel=1e-12)


def test_upper_formula_tends_to_q_as_energy_tends_to_one():
    for eps in (1e-3, 1e-6, 1e-9):
        assert arc_upper_from_energy(6, 2, 1 - eps) == pytest.approx(2, abs=10 * eps)


def test_direct_bound():
    assert arc_upper_direct(1.5, 0.99) == 1.5
    assert arc_upper_direct(1.5, 1.0) is None


@pytest.mark.parametrize(
    "call",
    [
        lambda: arc_lower_from_nbar(1, 1),
        lambda: arc_lower_from_nbar(4, 4),
        lambda: arc_lower_from_nbar(4, 0.5),
        lambda: arc_upper_from_energy(4, 1, 0.5),
        lambda: arc_upper_from_energy(4, 2, 1.0),
        lambda: arc_upper_from_energy(4, 2, 0.0),
        lambda: arc_upper_from_energy(1, 2, 0.5),
    ],
)
def test_formula_domain_errors(call):
    with pytest.raises(ValueError):
        call()


@given(st.integers(2, 12), st.floats(0, 0.999), st.floats(0, 0.999))
def test_lower_is_monotone_in_growth(d, s, t):
    a, b = sorted((d**s, d**t))
    assert 1 <= arc_lower_from_nbar(d, a) <= arc_lower_from_nbar(d, b) + 1e-12


@given(st.integers(2, 12), st.floats(1.01, 6), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_upper_is_monotone_in_energy_and_below_q(d, q, e, f):
    a, b = sorted((e, f))
    ua, ub = arc_upper_from_energy(d, q, a), arc_upper_from_energy(d, q, b)
    assert ua <= ub + 1e-12
    assert 1 <= ua or q * math.log(a, d) < 1 - q  # Q >= 1 exactly when E >= d^(1/q - 1)
    assert ub < q


# Fiber growth brackets.


def test_barycentric_growth_is_pinned():
    fx = fixture("barycentric")
    nb = nbar_bracket(fx.ve, 2, disjoint=fx.disjoint_certificate(), tower=tower("barycentric", 2))
    assert nb.lower == pytest.approx(2.0)
    assert nb.upper == pytest.approx(2.0)
    assert "edge-disjoint" in nb.lower_source


def test_fat_growth_bracket_contains_golden_ratio():
    fx = fixture("fat-2")
    nb = nbar_bracket(fx.ve, 3, fx.curve_paths("invariant"), fx.peripheral_paths(), tower=tower("fat-2", 3))
    assert nb.lower == pytest.approx(PHI, rel=1e-9)
    assert nb.lower <= nb.upper
    assert "Perron" in nb.lower_source


def test_rabbit_growth_uses_best_witness():
    fx = fixture("rabbit-basilica")
    nb = nbar_bracket(fx.ve, 3, tower=tower("rabbit-basilica", 3))
    assert nb.multiplicities == (2, 3, 5)
    assert nb.upper == pytest.approx(5 ** (1 / 3))
    assert 1 <= nb.lower <= nb.upper < fx.degree


def test_disjoint_certificate_rejects_shared_edges():
    fx = fixture("barycentric")
    cert = fx.disjoint_certificate()
    doubled = DisjointCurves(cert.level, (cert.curves[0], cert.curves[0]))
    with pytest.raises(ValueError):
        doubled.check(tower("barycentric", 1)[0])


# Expansion certificates.


def test_fixture_certificates_contract(fixture_name):
    fx = fixture(fixture_name)
    lam = require_expansion(fx.ve, fx.expansion_certificate())
    assert lam == pytest.approx(fx.expansion["lambda"], abs=1e-6)
    assert lam < 1


def test_missing_certificate_is_refused():
    with pytest.raises(ExpansionError, match="expansion certificate invalid"):
        require_expansion(fixture("barycentric").ve, None)


def test_flat_metric_is_not_a_certificate():
    fx = fixture("fat-2")
    cert = fx.expansion_certificate()
    flat = dataclasses.replace(cert, metric=(1.0,) * len(cert.metric))
    try:
        lam = flat.check(fx.ve)
    except ValueError:
        return
    if lam >= 1:
        with pytest.raises(ExpansionError, match="expansion certificate invalid"):
            require_expansion(fx.ve, flat)


def test_scaled_metric_gives_same_constant():
    fx = fixture("skinny-1")
    cert = fx.expansion_certificate()
    scaled = dataclasses.replace(cert, metric=tuple(3 * m for m in cert.metric))
    assert scaled.check(fx.ve) == pytest.approx(cert.check(fx.ve), abs=1e-6)


def test_certify_refusals():
    fx = fixture("barycentric")
    with pytest.raises(ExpansionError):
        certify(fx.ve, None, fx.alpha(), levels=1, q_grid=(2.0,))
    bad = dataclasses.replace(fx.expansion_certificate(), metric=(1.0,) * fx.ve.g0.n_edges, cell=(-1,) * 0)
    with pytest.raises(ValueError):
        certify(fx.ve, bad, fx.alpha(), levels=1, q_grid=(2.0,))
    rose = Graph.from_edges(1, [(0, 0)], ["v"], ["a"])
    ident = CoveringMap(rose, rose, (0,), (0, 1))
    one = VirtualEndomorphism(rose, rose, ident, EdgePathMap.identity(rose), 1)
    with pytest.raises(ValueError, match="degree >= 2"):
        certify(one, ExpansionCertificate(1, (1.0,), (-1,)), [1.0], levels=1, q_grid=(2.0,))


# Energy bookkeeping.


@given(st.lists(st.floats(0.05, 5), min_size=1, max_size=6))
def test_product_closure(ups):
    out = close_under_products(ups)
    assert out[0] == ups[0]
    for n in range(len(out)):
        assert out[n] <= ups[n]
        for m in range(n):
            assert out[n] <= out[m] * out[n - m - 1] * (1 + 1e-12)
    assert close_under_products(out) == out


def test_estimate_roots_and_envelope():
    a = EnergyEstimate(1.5, (2.0, 0.81), (1.0, 0.25))
    b = EnergyEstimate(3.0, (1.0, 1.0), (0.5, 0.5))
    assert a.e_ub == pytest.approx(0.9)
    assert a.e_lb == pytest.approx(1.0)
    assert b.e_ub == pytest.approx(1.0)
    assert envelope([b, a]) == [(1.5, pytest.approx(0.9)), (3.0, pytest.approx(0.9))]


def test_certify_barycentric_level_two():
    fx = fixture("barycentric")
    cert = certify(
        fx.ve, fx.expansion_certificate(), fx.alpha(), levels=2, q_grid=(2.0,),
        disjoint=fx.disjoint_certificate(), hint=fx.hints["seed_cell"], nbar_levels=2,
    )
    assert cert.lower.value == pytest.approx(arc_lower_from_nbar(6, 2))
    est = cert.estimates[0]
    # the level-2 fill is 10/13, so E^2_2(phi^2) = sqrt(10/13) and the asymptotic bound is its square root
    assert est.upper[1] == pytest.approx(math.sqrt(10 / 13), abs=1e-9)
    assert est.e_ub == pytest.approx((10 / 13) ** 0.25, abs=1e-9)
    assert cert.upper.value == pytest.approx(arc_upper_from_energy(6, 2, (10 / 13) ** 0.25), rel=1e-9)
    assert cert.lower.value <= cert.upper.value
    assert est.e_lb <= est.e_ub
