import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from cimbo.design_space import DesignPoint, ValidationError
from cimbo.pareto import (
    ParetoArchive,
    UnsupportedDimensionError,
    dominates,
    exclusive_hypervolume,
    hvi,
    hypervolume_exact,
    hypervolume_mc,
    nondominated_mask,
    reference_from_observations,
)

from oracles import brute_nondominated, hv_inclusion_exclusion

P = DesignPoint


def fronts(m_min=2, m_max=4, n_max=8):
    return st.integers(m_min, m_max).flatmap(
        lambda m: hnp.arrays(float, st.tuples(st.integers(1, n_max), st.just(m)), elements=st.floats(0, 1, width=32))
    )


class TestDominates:
    def test_examples(self):
        assert dominates((1, 1), (2, 2))
        assert not dominates((1, 2), (2, 1)) and not dominates((2, 1), (1, 2))
        assert not dominates((1, 2), (1, 2))
        assert dominates((1, 2), (1, 3))

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            dominates((1, 2), (1, 2, 3))

    @given(hnp.arrays(float, (3, 3), elements=st.integers(0, 3).map(float)))
    def test_strict_partial_order(self, T):
        a, b, c = T
        assert not dominates(a, a)
        assert not (dominates(a, b) and dominates(b, a))
        if dominates(a, b) and dominates(b, c):
            assert dominates(a, c)

    @given(hnp.arrays(float, st.tuples(st.integers(1, 25), st.integers(1, 4)), elements=st.integers(0, 4).map(float)))
    def test_mask_matches_brute_force(self, F):
        mask = nondominated_mask(F)
        keep = brute_nondominated(F)
        # brute force keeps every copy of a duplicate, the mask only the first
        firsts = [i for i in keep if not any(np.array_equal(F[i], F[j]) for j in keep if j < i)]
        assert np.flatnonzero(mask).tolist() == firsts


class TestExact:
    @pytest.mark.parametrize(
        "front,ref,expected",
        [
            ([(0, 0)], (1, 1), 1.0),
            ([(1, 2), (2, 1)], (3, 3), 3.0),
            ([(1, 2), (2, 1), (1.5, 1.5)], (3, 3), 3.25),
            ([], (3, 3), 0.0),
            ([(4, 0)], (3, 3), 0.0),
        ],
    )
    def test_examples(self, front, ref, expected):
        assert hypervolume_exact(front, ref) == pytest.approx(expected, abs=1e-12)

    def test_clipping(self):
        # (−1, 2) is clipped only in the first component, which the ref already bounds
        assert hypervolume_exact([(-1.0, 2.0)], (3, 3)) == pytest.approx(4.0)
        assert hypervolume_exact([(1.0, 5.0)], (3, 3)) == 0.0

    @given(fronts(2, 4, 8))
    def test_matches_inclusion_exclusion(self, F):
        ref = np.full(F.shape[1], 1.1)
        assert hypervolume_exact(F, ref) == pytest.approx(hv_inclusion_exclusion(F, ref), abs=1e-9)

    @given(fronts(2, 5, 10), st.randoms(use_true_random=False))
    def test_permutation_invariance(self, F, r):
        ref = np.full(F.shape[1], 1.2)
        base = hypervolume_exact(F, ref)
        rows = list(range(len(F)))
        cols = list(range(F.shape[1]))
        r.shuffle(rows)
        r.shuffle(cols)
        assert hypervolume_exact(F[rows][:, cols], ref[cols]) == pytest.approx(base, rel=1e-9, abs=1e-12)

    @given(fronts(2, 5, 10), hnp.arrays(float, 5, elements=st.floats(0, 1, width=32)))
    def test_monotone(self, F, extra):
        ref = np.full(F.shape[1], 1.1)
        more = np.vstack([F, extra[: F.shape[1]]])
        assert hypervolume_exact(more, ref) >= hypervolume_exact(F, ref) - 1e-12

    def test_too_many_objectives(self):
        with pytest.raises(UnsupportedDimensionError):
            hypervolume_exact(np.zeros((1, 7)), np.ones(7))

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            hypervolume_exact([(np.nan, 1.0)], (3, 3))


class TestMonteCarlo:
    def test_unit_box(self):
        est, se = hypervolume_mc([(0, 0)], (1, 1), 100_000, 0)
        assert est == 1.0 and se == 0.0

    def test_two_points(self):
        est, se = hypervolume_mc([(1, 2), (2, 1)], (3, 3), 1_000_000, 0)
        assert abs(est - 3.0) <= 3 * se

    def test_deterministic(self):
        assert hypervolume_mc([(1, 2), (2, 1)], (3, 3), 10_000, 5) == hypervolume_mc([(1, 2), (2, 1)], (3, 3), 10_000, 5)

    def test_agrees_with_exact(self):
        rng = np.random.default_rng(3)
        for trial in range(30):
            m = (2, 3, 5)[trial % 3]
            F = rng.random((rng.integers(1, 21), m))
            ref = np.full(m, 1.1)
            est, se = hypervolume_mc(F, ref, 100_000, trial)
            assert abs(est - hypervolume_exact(F, ref)) <= 4 * se + 1e-12


class TestArchive:
    def test_replacement(self):
        a = ParetoArchive(2)
        assert a.insert(P((0,)), (2, 2)) == "accepted"
        assert a.insert(P((1,)), (1, 1)) == "accepted"
        assert a.objectives.tolist() == [[1, 1]]

    def test_dominated(self):
        a = ParetoArchive(2)
        a.insert(P((0,)), (1, 1))
        assert a.insert(P((1,)), (3, 3)) == "dominated"
        assert len(a) == 1

    def test_incomparable_and_duplicate(self):
        a = ParetoArchive(2)
        a.insert(P((0,)), (1, 2))
        a.insert(P((1,)), (2, 1))
        assert len(a) == 2
        assert a.insert(P((2,)), (1, 2)) == "dominated"
        assert len(a) == 2

    def test_validation(self):
        a = ParetoArchive(2)
        with pytest.raises(ValidationError):
            a.insert(P((0,)), (1, 2, 3))
        with pytest.raises(ValidationError):
            a.insert(P((0,)), (1, np.inf))
        with pytest.raises(RuntimeError):
            a.hypervolume()
        a.freeze((3, 3))
        with pytest.raises(RuntimeError):
            a.freeze((4, 4))

    @given(hnp.arrays(float, st.tuples(st.integers(1, 30), st.integers(2, 3)), elements=st.integers(0, 5).map(float)))
    def test_mutual_nondomination_after_every_insert(self, Y):
        a = ParetoArchive(Y.shape[1])
        for i, y in enumerate(Y):
            a.insert(P((i,)), y)
            ys = a.objectives
            for u, v in itertools.permutations(range(len(ys)), 2):
                assert not dominates(ys[u], ys[v])
                assert not np.array_equal(ys[u], ys[v])
        # the archive is exactly the first copy of each non-dominated vector
        expected = {tuple(Y[i]) for i in brute_nondominated(Y)}
        assert {tuple(y) for y in a.objectives} == expected


class TestHvi:
    def make(self):
        a = ParetoArchive(2)
        a.freeze((3, 3))
        a.insert(P((0,)), (2, 2))
        return a

    def test_examples(self):
        a = self.make()
        assert a.hypervolume() == 1.0
        assert hvi(a, (1, 1)) == pytest.approx(3.0)
        assert hvi(a, (2.5, 2.5)) == 0.0
        assert hvi(a, (2, 2)) == 0.0

    @given(fronts(2, 4, 8), hnp.arrays(float, 4, elements=st.floats(0, 1, width=32)))
    def test_equals_hv_difference(self, F, c):
        c = c[: F.shape[1]]
        ref = np.full(F.shape[1], 1.1)
        expected = hv_inclusion_exclusion(np.vstack([F, c]), ref) - hv_inclusion_exclusion(F, ref)
        assert exclusive_hypervolume(c, F, ref) == pytest.approx(expected, abs=1e-9)


def test_reference_from_observations():
    ys = np.array([[0.0, 10.0], [1.0, 20.0]])
    assert reference_from_observations(ys, 0.1).tolist() == pytest.approx([1.1, 21.0])
    # a constant column still gets a margin
    assert np.all(reference_from_observations(np.array([[2.0, 1.0], [2.0, 3.0]]), 0.1) > [2.0, 3.0])
