import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import binom

from expca.errors import StatsError
from expca.scores import ScoreSet
from expca.stats.enrichment import (AnnotationMap, binomial_lower, binomial_tail, enrich,
                                    format_enrichment, parse_annotations, select_top)
from oracles import binomial_tail_exact


def test_tail_trivial():
    assert binomial_tail(10, 0.3, 0) == 1.0
    assert binomial_tail(2, 0.5, 2) == 0.25
    assert binomial_tail(5, 0.0, 1) == 0.0
    assert binomial_tail(5, 1.0, 5) == 1.0
    assert binomial_tail(5, 0.5, 6) == 0.0


def test_cholesterol_keyword_p_value():
    p = binomial_tail(500, 33 / 12487, 10)
    assert abs(p / 1.3e-6 - 1) <= 0.25


@pytest.mark.parametrize("n, p, k", [(500, 33 / 12487, 10), (100, 0.3, 45), (1000, 0.001, 8),
                                     (20, 0.9, 3), (1000, 0.5, 500), (300, 1e-5, 4)])
def test_tail_relative_accuracy(n, p, k):
    exact = binomial_tail_exact(n, p, k)
    assert abs(binomial_tail(n, p, k) - exact) <= 1e-9 * exact


@given(st.integers(1, 1000), st.floats(0, 1), st.data())
def test_tails_sum_to_one(n, p, data):
    k = data.draw(st.integers(0, n))
    assert abs(binomial_tail(n, p, k) + binomial_lower(n, p, k - 1) - 1.0) <= 1e-12


@given(st.integers(1, 400), st.floats(1e-4, 1 - 1e-4), st.data())
def test_tail_against_scipy(n, p, data):
    k = data.draw(st.integers(0, n))
    ref = binom.sf(k - 1, n, p)
    if ref > 1e-250:
        assert math.isclose(binomial_tail(n, p, k), ref, rel_tol=1e-7, abs_tol=1e-300)


# --- enrichment ---------------------------------------------------------------

def _chip_selection(chip, hit, selected=500, universe=12487):
    ids = [f"g{i}" for i in range(universe)]
    sel = ids[:selected]
    annotated = sel[:hit] + ids[selected:selected + chip - hit]
    return AnnotationMap({"kw": annotated, "none": ids[selected:selected + 5]}, frozenset(ids)), sel


def test_enrich_sterol():
    amap, sel = _chip_selection(42, 10)
    table = enrich(amap, 12487, sel)
    top = table[0]
    assert (top.keyword, top.chip_count, top.selected_count) == ("kw", 42, 10)
    assert abs(top.p_value / 1.1e-5 - 1) <= 0.25
    assert table[-1].keyword == "none" and table[-1].p_value == 1.0


def test_enrich_g1s():
    amap, sel = _chip_selection(35, 7)
    assert abs(enrich(amap, None, sel)[0].p_value / 6.3e-4 - 1) <= 0.25


def test_enrich_invariant_to_relabeling():
    amap, sel = _chip_selection(20, 4, selected=50, universe=400)
    mapping = {v: f"x{i}" for i, v in enumerate(sorted(amap.universe, reverse=True))}
    amap2 = AnnotationMap({k: {mapping[v] for v in ids} for k, ids in amap.keywords.items()},
                          frozenset(mapping.values()))
    a = [(r.keyword, r.p_value) for r in enrich(amap, None, sel)]
    b = [(r.keyword, r.p_value) for r in enrich(amap2, None, [mapping[v] for v in sel])]
    assert a == b


def test_enrich_errors():
    with pytest.raises(StatsError):
        enrich(AnnotationMap({"k": ["a"]}), 0, [])
    with pytest.raises(StatsError):
        enrich(AnnotationMap({"k": ["a"]}, frozenset("ab")), None, ["z"])
    with pytest.raises(StatsError):
        AnnotationMap({"k": ["q"]}, frozenset("ab"))


def test_annotation_io():
    amap = parse_annotations("a\tsterol\nb\tsterol\na\tlipid\nzz\tlipid\n", universe=["a", "b"])
    assert amap.keywords == {"sterol": {"a", "b"}, "lipid": {"a"}}
    text = format_enrichment(enrich(amap, None, ["a"]))
    assert text.splitlines()[0] == "keyword\tchip\tselected\tp-value"


# --- select_top -----------------------------------------------------------------

def _vars(d):
    return ScoreSet(list(d), np.array([[v] for v in d.values()], float), "variable")


def test_select_top():
    s = _vars({"a": 3, "b": 1, "c": 2})
    assert set(select_top(s, 1, "largest", 2)) == {"a", "c"}
    assert select_top(s, 1, "smallest", 1) == ("b",)
    assert select_top(_vars({"b": 1, "a": 1}), 1, "largest", 1) == ("a",)


def test_select_top_errors():
    s = _vars({"a": 3})
    for args in [(1, "largest", 2), (2, "largest", 1), (1, "middle", 1), (1, "largest", 0)]:
        with pytest.raises(StatsError):
            select_top(s, *args)
