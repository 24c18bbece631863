import numpy as np
import pytest
from hypothesis import given, strategies as st

from expca.data import ExpressionMatrix, ReferenceVector, center
from expca.errors import StatsError
from expca.stats.ward import format_dendrogram, ward_cluster, ward_linkage
from oracles import ward_brute_force


def test_nearest_pair_first():
    merges = ward_linkage(np.array([[0.0], [1.0], [10.0]]))
    assert (merges[0].cluster_a, merges[0].cluster_b) == (0, 1)
    assert abs(merges[0].height - 0.5) < 1e-15
    assert len(merges) == 2


def test_identical_points():
    merges = ward_linkage(np.array([[2.0, 2.0], [2.0, 2.0]]))
    assert merges[0].height == 0.0


def test_tie_rule():
    # equally spaced: pairs (0,1) and (1,2) tie; smallest pair wins
    merges = ward_linkage(np.array([[0.0], [1.0], [2.0]]))
    assert (merges[0].cluster_a, merges[0].cluster_b) == (0, 1)


def test_too_few():
    with pytest.raises(StatsError):
        ward_linkage(np.zeros((1, 3)))


def _same(merges, oracle):
    assert [(m.cluster_a, m.cluster_b) for m in merges] == [(a, b) for a, b, _ in oracle]
    for m, (_, _, h) in zip(merges, oracle):
        assert abs(m.height - h) <= 1e-9 * max(1.0, abs(h))


def test_random_6x4_against_brute_force(rng):
    x = rng.normal(size=(6, 4))
    _same(ward_linkage(x), ward_brute_force(x))


@given(st.integers(2, 8), st.integers(1, 5), st.integers(0, 10 ** 6))
def test_brute_force_property(n, m, seed):
    x = np.random.default_rng(seed).normal(size=(n, m))
    _same(ward_linkage(x), ward_brute_force(x))


@given(st.integers(3, 8), st.integers(0, 10 ** 6))
def test_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    perm = rng.permutation(n)
    labels = [f"o{i}" for i in range(n)]

    def tree(rows):
        m = ExpressionMatrix.from_array(x[rows], observation_ids=[labels[i] for i in rows])
        return ward_cluster(center(m, ReferenceVector.zeros(m.variable_ids)))

    def as_sets(t):
        out = []
        for s, mg in enumerate(t.merges):
            leaves = frozenset(t.leaf_labels[i] for i in t.members(len(t.leaf_labels) + s))
            out.append((leaves, mg.height))
        return out

    a, b = as_sets(tree(list(range(n)))), as_sets(tree(list(perm)))
    assert [s for s, _ in a] == [s for s, _ in b]
    np.testing.assert_allclose([h for _, h in a], [h for _, h in b], rtol=1e-9, atol=1e-12)


def test_variable_filter_and_format():
    m = ExpressionMatrix.from_array([[0.0, 100.0], [1.0, -100.0], [10.0, 0.0]])
    c = center(m, ReferenceVector.zeros(m.variable_ids))
    tree = ward_cluster(c, {"v1"})
    assert (tree.merges[0].cluster_a, tree.merges[0].cluster_b) == (0, 1)
    text = format_dendrogram(tree).splitlines()
    assert text[0] == "step\tcluster_a\tcluster_b\theight\tsize"
    assert text[1].split("\t")[:3] == ["1", "o1", "o2"]
    assert text[2].split("\t")[1:3] == ["o3", "#1"] or text[2].split("\t")[1:3] == ["#1", "o3"]
