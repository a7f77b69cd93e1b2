import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_dataset
from folkstat.dataset import ACTIVITY_FIELDS, activity_table, build_dataset
from folkstat.metrics import (
    EmptyDataset, EmptyDistribution, EmptyRelation, InvalidKind, TooFewIds,
    DirectedRelation, derive_relation, functionality_stats, gini, id_coverage_bound,
    intensity_scores, lorenz, reciprocity_rate, segment_users, top_sample,
)
from oracles import gini_exact, gini_pairwise, intensity_bruteforce, lorenz_area

counts = st.lists(st.integers(0, 1000), min_size=1, max_size=60)


def test_lorenz_small():
    assert lorenz([1, 1, 2]).points[1:] == pytest.approx([(1 / 3, 0.25), (2 / 3, 0.5), (1.0, 1.0)])


@pytest.mark.parametrize("values", [[5, 5, 5, 5], [0, 0, 0]])
def test_lorenz_diagonal(values):
    for x, y in lorenz(values).points:
        assert y == pytest.approx(x)


def test_gini_examples():
    assert gini([4, 4, 4]) == 0.0
    assert gini([0, 1]) == 0.5
    assert gini([1, 2, 3]) == pytest.approx(float(Fraction(8, 36)), abs=1e-15)
    assert gini([0, 0]) == 0.0


def test_gini_rejects_bad_input():
    with pytest.raises(EmptyDistribution):
        gini([])
    with pytest.raises(Exception):
        gini([1, -1])


@settings(max_examples=200)
@given(counts)
def test_gini_matches_exact_pairwise(values):
    assert gini(values) == pytest.approx(float(gini_exact(values)), abs=1e-12)


@settings(max_examples=200)
@given(counts)
def test_gini_is_twice_area_between(values):
    if sum(values) == 0:
        return
    assert gini(values) == pytest.approx(1 - 2 * lorenz(values).area_below(), abs=1e-9)
    assert lorenz(values).area_below() == pytest.approx(lorenz_area(values), abs=1e-12)


@settings(max_examples=100)
@given(counts, st.integers(1, 50))
def test_gini_scale_invariant_and_bounded(values, k):
    g = gini(values)
    assert 0 <= g < 1
    assert gini([k * v for v in values]) == pytest.approx(g, abs=1e-12)


@settings(max_examples=100)
@given(counts)
def test_lorenz_monotone_convex(values):
    ys = lorenz(values).ys()
    steps = np.diff(ys)
    assert np.all(steps >= -1e-15)
    assert np.all(np.diff(steps) >= -1e-12)
    assert ys[0] == 0.0 and ys[-1] == 1.0


def _two_users():
    return build_dataset(users=[(1, True), (2, False)], photos=[(p, 1) for p in range(10, 14)])


def test_functionality_stats_photos():
    row = functionality_stats(_two_users()).row("photos")
    assert row.total == 4
    assert row.mean_all == 4
    assert (row.pct_zero_all, row.pct_zero_pro, row.pct_zero_nonpro) == (50, 0, 100)
    assert row.mean_nonpro is None


def test_functionality_stats_comments():
    d = build_dataset(users=[(1, 0), (2, 0)], photos=[(10, 2)],
                      comments=[(1, 1, 10), (2, 1, 10), (3, 1, 10)])
    row = functionality_stats(d).row("comments given")
    assert (row.mean_all, row.pct_zero_all) == (3, 50)


def test_functionality_stats_empty():
    stats = functionality_stats(build_dataset())
    assert all(r.total == 0 for r in stats.rows)
    assert len(stats.rows) == 8


def test_segments_single_inactive_user():
    assert segment_users(build_dataset(users=[(1, 0)])).fractions["inactive"] == 1.0


def test_segments_one_per_bucket():
    d = build_dataset(users=[(1, 0), (2, 0), (3, 0), (4, 0)], photos=[(10, 3), (11, 4)],
                      contacts=[(2, 1), (4, 1)])
    fr = segment_users(d).fractions
    assert list(fr.values()) == [0.25] * 4


def test_incoming_contacts_only_is_inactive():
    d = build_dataset(users=[(1, 0), (2, 0)], contacts=[(2, 1)])
    s = segment_users(d)
    assert s.counts["inactive"] == 1 and s.counts["communication_only"] == 1


def test_segments_empty():
    with pytest.raises(EmptyDataset):
        segment_users(build_dataset())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_segment_fractions_sum_to_one(seed):
    s = segment_users(random_dataset(seed))
    assert math.fsum(s.fractions.values()) == pytest.approx(1.0, abs=1e-12)
    assert sum(s.counts.values()) == s.n_users


def test_id_coverage_examples():
    assert id_coverage_bound({74, 76, 77}) == (0.75, 0.25)
    assert id_coverage_bound({10, 11, 12}) == (1.0, 0.0)
    _, bound = id_coverage_bound({222851183, 222851185})
    assert bound == pytest.approx(1 / 3, abs=1e-15)
    with pytest.raises(TooFewIds):
        id_coverage_bound({5})


def test_top_sample_single_and_dominant():
    assert top_sample(build_dataset(users=[(9, 0)]), 5) == [9]
    d = build_dataset(users=[(1, 0), (2, 0), (3, 0)], groups=[(1,)], photos=[(10, 2), (11, 2), (12, 3)],
                      contacts=[(2, 1), (2, 3), (3, 2)], comments=[(1, 2, 12), (2, 2, 12), (3, 3, 10)],
                      favorites=[(2, 12), (3, 10)], memberships=[(2, 1)])
    assert top_sample(d, 1) == [2]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_intensity_matches_bruteforce(seed):
    d = random_dataset(seed, n_users=8)
    table = activity_table(d)
    expected = intensity_bruteforce({f: table[f].tolist() for f in ACTIVITY_FIELDS})
    ids, score = intensity_scores(d)
    assert score.tolist() == pytest.approx(expected, abs=1e-12)
    order = sorted(range(len(ids)), key=lambda i: (-expected[i], ids[i]))
    assert top_sample(d, len(ids)) == [int(ids[i]) for i in order]


def test_relations():
    d = build_dataset(users=[(1, 0), (2, 0)], photos=[(p, 2) for p in range(10, 15)] + [(20, 1)],
                      comments=[(i, 1, 10 + i) for i in range(5)] + [(9, 1, 20)])
    assert derive_relation(d, "commented").pairs == {(1, 2)}
    assert len(derive_relation(d, "favorited")) == 0
    own = build_dataset(users=[(1, 0)], photos=[(10, 1)], comments=[(1, 1, 10)])
    assert len(derive_relation(own, "commented")) == 0
    with pytest.raises(InvalidKind):
        derive_relation(d, "likes")


def test_reciprocity_examples():
    assert reciprocity_rate([(1, 2), (2, 1)]) == 1.0
    assert reciprocity_rate([("a", "b"), ("b", "a"), ("a", "c")]) == 2 / 3
    assert reciprocity_rate([(1, 2), (2, 3)]) == 0.0
    with pytest.raises(EmptyRelation):
        reciprocity_rate(DirectedRelation("contacts", frozenset()))


@settings(max_examples=100)
@given(st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6)).filter(lambda p: p[0] != p[1]), min_size=1))
def test_reciprocity_symmetrised_is_one(pairs):
    r = reciprocity_rate(pairs)
    assert 0 <= r <= 1
    assert reciprocity_rate(pairs | {(b, a) for a, b in pairs}) == 1.0
