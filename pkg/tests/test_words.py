from hypothesis import given
from hypothesis import strategies as st

from confdim.endomorphism import reverse_path
from confdim.graph import Graph
from confdim.words import WeightedMultiCurve, canonical_cyclic, cyclic_reduce, is_cyclically_reduced

ROSE = Graph.from_edges(1, [(0, 0), (0, 0)], ["v"], ["a", "b"])
LETTERS = [ROSE.half(0), ROSE.half(0, -1), ROSE.half(1), ROSE.half(1, -1)]

words = st.lists(st.sampled_from(LETTERS), max_size=12)


def test_cyclic_reduction_examples():
    a, A, b, B = LETTERS
    assert cyclic_reduce(ROSE, (a, b, B, a)) == (a, a)
    assert cyclic_reduce(ROSE, (b, a, a, B)) == (a, a)
    assert cyclic_reduce(ROSE, (a, A)) == ()


@given(words)
def test_reduced_words_are_cyclically_reduced(w):
    assert is_cyclically_reduced(ROSE, cyclic_reduce(ROSE, w))


@given(words, st.integers(0, 11))
def test_canonical_form_ignores_rotation_and_direction(w, k):
    w = cyclic_reduce(ROSE, w)
    if w:
        k %= len(w)
        rotated = w[k:] + w[:k]
        assert canonical_cyclic(ROSE, rotated) == canonical_cyclic(ROSE, w)
    assert canonical_cyclic(ROSE, reverse_path(ROSE, w)) == canonical_cyclic(ROSE, w)


def test_oriented_form_keeps_direction():
    a, A, b, B = LETTERS
    assert canonical_cyclic(ROSE, (a, b), unoriented=False) != canonical_cyclic(ROSE, (B, A), unoriented=False)
    assert canonical_cyclic(ROSE, (a, b)) == canonical_cyclic(ROSE, (B, A))


def test_multicurve_counts_and_weights():
    a, A, b, B = LETTERS
    c = WeightedMultiCurve.of(ROSE, (a, a, b), (b,), weights=[0.5, 2.0])
    assert c.counts() == [1.0, 2.5]
    assert c.total_weight == 2.5
    assert c.normalized().total_weight == 1.0
