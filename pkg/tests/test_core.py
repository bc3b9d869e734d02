import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadica import (
    DyadicInterval,
    GridError,
    HaarExpansion,
    StepFunction,
    average,
    build_grid,
    delta,
    haar_transform,
    inverse_haar,
    power_weight,
)
from dyadica.core import haar_coefficients, haar_synthesis, subtree_sums, tree_means

I0 = DyadicInterval(0, 0)


class TestGrid:
    def test_depth_one_intervals(self):
        g = build_grid(1)
        assert list(g.intervals()) == [I0, DyadicInterval(1, 0), DyadicInterval(1, 1)]
        assert g.n_intervals == 3

    def test_depth_two_count(self):
        assert len(list(build_grid(2).intervals())) == 7

    @pytest.mark.parametrize("depth", [0, -1, 25, 2.0, True])
    def test_bad_depth(self, depth):
        with pytest.raises(GridError):
            build_grid(depth)

    def test_flat_index_round_trip(self):
        g = build_grid(5)
        for i, interval in enumerate(g.intervals()):
            assert interval.index == i
            assert g.interval_at(i) == interval

    def test_children_parent(self):
        I = DyadicInterval(3, 5)
        lo, hi = I.children()
        assert lo.parent() == I and hi.parent() == I
        assert lo.right == hi.left == I.left + I.length / 2
        assert I.contains(lo) and not lo.contains(I)
        with pytest.raises(GridError):
            I0.parent()

    def test_interval_outside_grid(self):
        with pytest.raises(GridError):
            build_grid(2).check(DyadicInterval(3, 0))


class TestAverageDelta:
    f = StepFunction(build_grid(1), [1.0, 3.0])

    def test_average(self):
        assert average(self.f, I0) == 2.0
        assert average(self.f, DyadicInterval(1, 1)) == 3.0

    def test_average_of_power_weight(self):
        assert average(power_weight(1.0, build_grid(1)), DyadicInterval(1, 0)) == pytest.approx(0.25)

    def test_delta(self):
        assert delta(self.f, I0) == 2.0

    def test_delta_of_constant(self):
        f = StepFunction(build_grid(4), np.full(16, 7.0))
        assert np.all(f.deltas == 0)

    def test_delta_on_leaf(self):
        with pytest.raises(GridError):
            delta(self.f, DyadicInterval(1, 0))

    def test_tree_means_brute_force(self, rng):
        g = build_grid(4)
        vals = rng.normal(size=16)
        tree = tree_means(vals)
        for I in g.intervals():
            assert tree[I.index] == pytest.approx(vals[I.cell_slice(g)].mean(), abs=1e-14)

    def test_subtree_sums_brute_force(self, rng):
        g = build_grid(4)
        terms = rng.random(g.n_nonleaf)
        sums = subtree_sums(terms, g.depth)
        for I in g.intervals():
            expect = sum(terms[J.index] for J in g.intervals(leaves=False) if I.contains(J))
            assert sums[I.index] == pytest.approx(expect, abs=1e-13)


class TestHaar:
    def test_depth_one(self):
        e = haar_transform(StepFunction(build_grid(1), [1.0, 3.0]))
        assert e.mean == 2.0 and e.coefficient(I0) == pytest.approx(1.0)

    def test_constant(self):
        e = haar_transform(StepFunction(build_grid(3), np.full(8, 5.0)))
        assert e.mean == 5.0 and np.all(e.coefficients == 0)

    def test_haar_function_is_unit_vector(self):
        g = build_grid(3)
        e = haar_transform(StepFunction.haar(g, I0))
        expect = np.zeros(7)
        expect[0] = 1.0
        np.testing.assert_allclose(e.coefficients, expect, atol=1e-15)

    def test_inverse_depth_one(self):
        f = inverse_haar(HaarExpansion(build_grid(1), 2.0, [1.0]))
        np.testing.assert_allclose(f.values, [1.0, 3.0])

    def test_inverse_zero(self):
        assert np.all(inverse_haar(HaarExpansion(build_grid(2), 0.0, np.zeros(3))).values == 0)

    def test_round_trip_depth_12(self, rng):
        g = build_grid(12)
        for _ in range(100):
            f = StepFunction(g, rng.normal(size=g.n_cells))
            assert np.max(np.abs(inverse_haar(haar_transform(f)).values - f.values)) < 1e-10

    def test_batched_matches_rows(self, rng):
        F = rng.normal(size=(5, 64))
        mean, c = haar_coefficients(F)
        for i in range(5):
            m1, c1 = haar_coefficients(F[i])
            assert mean[i] == pytest.approx(m1)
            np.testing.assert_allclose(c[i], c1, atol=1e-14)
        np.testing.assert_allclose(haar_synthesis(mean, c), F, atol=1e-13)

    def test_coefficient_against_inner_product(self, rng):
        g = build_grid(5)
        f = StepFunction(g, rng.normal(size=32))
        e = haar_transform(f)
        for I in g.intervals(leaves=False):
            assert e.coefficient(I) == pytest.approx(f.inner(StepFunction.haar(g, I)), abs=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_plancherel(self, depth, seed):
        g = build_grid(depth)
        f = StepFunction(g, np.random.default_rng(seed).normal(size=g.n_cells))
        assert haar_transform(f).energy() == pytest.approx(f.norm() ** 2, rel=1e-12)


class TestStepFunction:
    def test_values_read_only(self):
        f = StepFunction(build_grid(2), np.arange(4.0))
        with pytest.raises(ValueError):
            f.values[0] = 1.0

    def test_shape_and_finite(self):
        with pytest.raises(GridError):
            StepFunction(build_grid(2), np.ones(3))
        with pytest.raises(ValueError):
            StepFunction(build_grid(1), [1.0, np.nan])

    def test_mixed_grids(self):
        with pytest.raises(GridError):
            StepFunction(build_grid(1), [1.0, 2.0]) + StepFunction(build_grid(2), np.ones(4))

    def test_weighted_norm(self):
        g = build_grid(1)
        f = StepFunction(g, [1.0, 2.0])
        assert f.norm(StepFunction(g, [2.0, 1.0])) == pytest.approx(np.sqrt(3.0))
