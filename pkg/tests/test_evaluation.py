from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from webdrift.core import Partition
from webdrift.evaluation import (DegenerateIndexError, ItemMismatchError, contingency,
                                 corrected_rand, cr_pair_counting_oracle, f_measure)


def P(labels, ids=None):
    return Partition.from_labels(labels, ids)


def f_by_sets(v_labels, u_labels):
    """F-measure from explicit member sets, in exact rationals."""
    items = range(len(v_labels))
    V = {c: {i for i in items if v_labels[i] == c} for c in set(v_labels)}
    U = {c: {i for i in items if u_labels[i] == c} for c in set(u_labels)}
    total = Fraction(0)
    per = {}
    for c, vi in V.items():
        best = Fraction(0)
        for uj in U.values():
            inter = len(vi & uj)
            if inter:
                r, p = Fraction(inter, len(vi)), Fraction(inter, len(uj))
                best = max(best, 2 * p * r / (p + r))
        per[c] = best
        total += Fraction(len(vi), len(v_labels)) * best
    return total, per


labelings = st.integers(2, 40).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 5), min_size=n, max_size=n),
                        st.lists(st.integers(0, 5), min_size=n, max_size=n)))


class TestContingency:
    def test_cross_counts(self):
        t = contingency(P([1, 1, 2, 2]), P([1, 2, 1, 2]))
        assert t.counts.tolist() == [[1, 1], [1, 1]]
        assert t.n == 4

    def test_refinement(self):
        t = contingency(P([0, 0, 0, 1, 1]), P([0, 0, 1, 2, 2]))
        assert t.counts.tolist() == [[2, 1, 0], [0, 0, 2]]
        assert t.row_sums.tolist() == [3, 2] and t.col_sums.tolist() == [2, 1, 2]

    def test_identical_is_a_matching(self):
        t = contingency(P([0, 1, 2, 1, 0]), P([7, 3, 5, 3, 7]))
        assert np.count_nonzero(t.counts) == 3

    def test_aligns_by_id(self):
        a = P([0, 0, 1], ids=[10, 11, 12])
        b = P([1, 0, 0], ids=[12, 10, 11])
        assert contingency(a, b).counts.tolist() == [[2, 0], [0, 1]]

    def test_mismatch_lists_ids(self):
        with pytest.raises(ItemMismatchError, match="99"):
            contingency(P([0, 1], ids=[1, 2]), P([0, 1], ids=[1, 99]))


class TestFMeasure:
    def test_identical(self):
        overall, per = f_measure(P([0, 0, 1, 2, 2]), P([4, 4, 3, 9, 9]))
        assert overall == 1.0
        assert [m.f for m in per] == [1.0, 1.0, 1.0]

    def test_worked_example(self):
        v, u = list("aabb"), list("aaab")
        exact, _ = f_by_sets(v, u)
        assert exact == Fraction(11, 15)
        overall, per = f_measure(P(v), P(u))
        assert overall == pytest.approx(11 / 15, abs=1e-15)
        assert [m.f for m in per] == pytest.approx([0.8, 2 / 3])
        assert [m.match for m in per] == [0, 1]

    def test_single_reached_cluster(self):
        _, per = f_measure(P([0] * 5 + [1] * 5), P([0] * 10))
        assert [m.f for m in per] == pytest.approx([2 / 3, 2 / 3])

    def test_asymmetric(self):
        a, b = P(list("aabb")), P(list("aaab"))
        assert f_measure(a, b)[0] == pytest.approx(11 / 15)
        assert f_measure(b, a)[0] == pytest.approx(23 / 30)

    def test_empty(self):
        with pytest.raises(ValueError):
            f_measure(P([]), P([]))

    @settings(max_examples=200, deadline=None)
    @given(labelings)
    def test_matches_set_oracle(self, pair):
        v, u = pair
        exact, per_exact = f_by_sets(v, u)
        overall, per = f_measure(P(v), P(u))
        assert overall == pytest.approx(float(exact), abs=1e-12)
        assert 0 <= overall <= 1
        # from_labels sorts labels, so clusters come out in sorted order
        assert [m.f for m in per] == pytest.approx([float(per_exact[c]) for c in sorted(per_exact)], abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(labelings, st.permutations(range(6)))
    def test_relabel_invariant(self, pair, perm):
        v, u = pair
        u2 = [perm[c] for c in u]
        assert f_measure(P(v), P(u))[0] == pytest.approx(f_measure(P(v), P(u2))[0], abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(labelings)
    def test_all_ones_iff_identical(self, pair):
        v, u = pair
        _, per = f_measure(P(v), P(u))
        identical = same_partition(v, u)
        assert all(m.f == 1.0 for m in per) == identical


def same_partition(v, u):
    """True when v and u are the same partition up to relabeling."""
    return len(set(v)) == len(set(u)) == len(set(zip(v, u)))


class TestCorrectedRand:
    def test_identical(self):
        assert corrected_rand(P([0, 0, 1, 2]), P([5, 5, 1, 0])) == 1.0

    def test_crossed(self):
        assert corrected_rand(P([1, 1, 2, 2]), P([1, 2, 1, 2])) == pytest.approx(-0.5, abs=1e-12)
        assert cr_pair_counting_oracle(P([1, 1, 2, 2]), P([1, 2, 1, 2])) == -0.5

    def test_degenerate_identical(self):
        assert corrected_rand(P([0, 0, 0]), P([1, 1, 1])) == 1.0
        assert corrected_rand(P([0, 1, 2]), P([2, 1, 0])) == 1.0
        assert cr_pair_counting_oracle(P([0, 0, 0]), P([1, 1, 1])) == 1.0

    def test_too_small(self):
        with pytest.raises(ValueError):
            corrected_rand(P([0]), P([0]))

    def test_one_cluster_vs_many_is_zero(self):
        assert corrected_rand(P([0] * 6), P([0, 0, 1, 1, 2, 2])) == 0.0

    @settings(max_examples=300, deadline=None)
    @given(labelings)
    def test_oracle_equivalence(self, pair):
        a, b = P(pair[0]), P(pair[1])
        try:
            cr = corrected_rand(a, b)
        except DegenerateIndexError:
            pytest.fail("degenerate denominator on non-identical partitions")
        assert cr == pytest.approx(cr_pair_counting_oracle(a, b), abs=1e-12)
        assert -1 <= cr <= 1
        assert cr == pytest.approx(corrected_rand(b, a), abs=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(labelings, st.permutations(range(6)))
    def test_relabel_invariant(self, pair, perm):
        a, b = pair
        assert corrected_rand(P(a), P(b)) == pytest.approx(corrected_rand(P([perm[c] for c in a]), P(b)), abs=1e-12)

    def test_chance_level(self):
        rng = np.random.default_rng(0)
        a, b = P(rng.integers(0, 10, 2000)), P(rng.integers(0, 10, 2000))
        assert abs(corrected_rand(a, b)) < 0.05

    def test_oracle_bound(self):
        with pytest.raises(ValueError):
            cr_pair_counting_oracle(P([0] * 20), P([0] * 20), max_items=10)


def test_oracle_counts_pairs_by_hand():
    a, b = [0, 0, 1, 1, 1], [0, 1, 1, 1, 0]
    n11 = n10 = n01 = n00 = 0
    for i, j in combinations(range(5), 2):
        sa, sb = a[i] == a[j], b[i] == b[j]
        n11 += sa and sb
        n10 += sa and not sb
        n01 += sb and not sa
        n00 += not sa and not sb
    expected = 2 * (n11 * n00 - n01 * n10) / ((n11 + n01) * (n01 + n00) + (n11 + n10) * (n10 + n00))
    assert cr_pair_counting_oracle(P(a), P(b)) == expected
