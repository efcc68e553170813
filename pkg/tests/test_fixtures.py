import json
import math
from importlib import resources

import pytest
from hypothesis import given
from hypothesis import strategies as st

from confdim.fixtures import FixtureError, dumps, evaluate, load, loads, resolve_symbols

from conftest import FIXTURES, fixture


def raw(name):
    return (resources.files("confdim") / "data" / f"{name}.json").read_text()


def test_expected_fixtures_are_shipped():
    assert set(FIXTURES) >= {"barycentric", "rabbit-basilica", "fat-1", "fat-2", "fat-3", "skinny-1", "skinny-2", "skinny-3"}


def test_round_trip_is_byte_identical(fixture_name):
    text = raw(fixture_name)
    assert dumps(loads(text)) == text


def test_shipped_fixtures_have_no_problems(fixture_name):
    assert fixture(fixture_name).problems() == []


def test_load_by_path(tmp_path):
    p = tmp_path / "b.json"
    p.write_text(raw("barycentric"))
    assert load(p).degree == 6
    with pytest.raises(FixtureError, match="missing.json"):
        load(tmp_path / "missing.json")


def test_skinny_symbols_and_overrides():
    fx = fixture("skinny-2")
    n = fx.symbol("n")
    q = fx.symbol("q")
    assert q == pytest.approx(1 + 1 / math.log2(2 * n + 3))
    alpha = dict(zip(fx.ve.g0.edge_names, fx.alpha()))
    assert alpha["N1"] == pytest.approx(n * 2 ** (1 / (1 - q)))
    assert alpha["N0"] == 1.0
    moved = dict(zip(fx.ve.g0.edge_names, fx.alpha({"q": 2.0})))
    assert moved["N1"] == pytest.approx(n / 2)


@given(st.floats(-50, 50), st.floats(0.1, 50))
def test_expression_evaluator_matches_python(a, b):
    env = {"a": a, "b": b}
    assert evaluate("a * b - a / b + -a", env) == pytest.approx(a * b - a / b - a)
    assert evaluate("sqrt(b) + log2(b) ** 2 + exp(log(b))", env) == pytest.approx(math.sqrt(b) + math.log2(b) ** 2 + b)


def test_expression_evaluator_refuses_code():
    with pytest.raises(FixtureError):
        evaluate("__import__('os').getcwd()", {})
    with pytest.raises(FixtureError):
        evaluate("a +", {})
    with pytest.raises(FixtureError, match="cannot be resolved"):
        resolve_symbols({"a": "b + 1", "b": "a + 1"})


def test_json_errors_carry_position():
    text = raw("barycentric").replace('"degree": 6,', '"degree": 6', 1)
    with pytest.raises(FixtureError, match=r"line \d+, column \d+"):
        loads(text)


def edit(name, change):
    doc = json.loads(raw(name))
    change(doc)
    return json.dumps(doc)


@pytest.mark.parametrize(
    "change, field",
    [
        (lambda d: d.pop("phi"), "phi: section missing"),
        (lambda d: d.update(schema="other"), "schema"),
        (lambda d: d.update(degree="six"), "degree"),
        (lambda d: d["phi"]["edges"].pop(next(iter(d["phi"]["edges"]))), "phi.edges"),
        (lambda d: d["covering"]["vertices"].update({next(iter(d["covering"]["vertices"])): "nowhere"}), "covering.vertices"),
        (lambda d: d["graphs"]["G0"]["edges"][0].update(length="1 / 0"), "graphs.G0.lengths"),
    ],
)
def test_schema_errors_name_the_field(change, field):
    with pytest.raises(FixtureError, match=field.replace(".", r"\.")):
        loads(edit("barycentric", change))


def test_broken_involution_is_reported():
    def change(d):
        halves = d["covering"]["half_edges"]
        back = next(k for k in halves if k.startswith("-"))
        other = next(v for v in halves.values() if v.lstrip("-") != halves[back].lstrip("-"))
        halves[back] = other

    fx = loads(edit("barycentric", change))
    problems = fx.problems()
    assert any("involution" in p for p in problems)


def test_wrong_degree_is_reported():
    fx = loads(edit("fat-2", lambda d: d.update(degree=3)))
    assert any("declared degree 3" in p for p in fx.problems())
