import math

import numpy as np
import pytest

from dyadica import (
    DyadicInterval,
    StepFunction,
    Weight,
    ap_constant,
    ap_packing,
    buckley_packing,
    build_grid,
    c2t_constant,
    cascade_weight,
    dual_ap_packing,
    packing_constant,
    power_weight,
    rh1_constant,
    rhp_constant,
    rhp_packing,
)
from dyadica.weights import ap_ratio_tree, rh1_ratio_tree

G1 = build_grid(1)
W13 = Weight(G1, [1.0, 3.0])
ROOT = DyadicInterval(0, 0)


class TestWeight:
    def test_floor(self):
        w = Weight(G1, [0.0, 2.0])
        assert w.values[0] == 1e-12

    def test_negative(self):
        with pytest.raises(ValueError):
            Weight(G1, [-1.0, 2.0])

    def test_derived_weights_not_refloored(self):
        w = Weight(G1, [1e-8, 1.0])
        assert w.power(4).values[0] == pytest.approx(1e-32)
        assert (w * w.power(3)).values[0] == pytest.approx(1e-32)
        assert w.reciprocal().power(-1).values[0] == pytest.approx(1e-8)

    def test_mass(self):
        assert W13.mass(ROOT) == 2.0
        assert W13.mass(DyadicInterval(1, 1)) == 1.5


class TestPowerWeight:
    def test_alpha_zero(self):
        assert np.all(power_weight(0.0, build_grid(4)).values == 1.0)

    def test_alpha_one(self):
        np.testing.assert_allclose(power_weight(1.0, G1).values, [0.25, 0.75])

    @pytest.mark.parametrize("alpha", [-1.0, -2.5])
    def test_non_integrable(self, alpha):
        with pytest.raises(ValueError):
            power_weight(alpha, G1)

    def test_total_mass(self):
        w = power_weight(-0.5, build_grid(10))
        assert w.integral() == pytest.approx(2.0, rel=1e-12)


class TestCascade:
    def test_zero_volatility(self):
        assert np.all(cascade_weight(build_grid(5), 0.0, 3).values == 1.0)

    def test_deterministic(self):
        g = build_grid(6)
        np.testing.assert_array_equal(cascade_weight(g, 0.4, 9).values, cascade_weight(g, 0.4, 9).values)

    def test_refinement_prefix(self):
        coarse = cascade_weight(build_grid(4), 0.5, 11)
        fine = cascade_weight(build_grid(7), 0.5, 11)
        np.testing.assert_allclose(fine.tree[: coarse.grid.n_intervals], coarse.tree, rtol=1e-12)

    def test_positive_and_a2_finite(self):
        g = build_grid(8)
        for seed in range(100):
            w = cascade_weight(g, 0.5, seed)
            assert w.values.min() > 0
            assert math.isfinite(ap_constant(w, 2).value)

    def test_mean_one(self):
        assert cascade_weight(build_grid(9), 0.7, 1).integral() == pytest.approx(1.0)

    @pytest.mark.parametrize("vol", [-0.1, 1.0])
    def test_bad_volatility(self, vol):
        with pytest.raises(ValueError):
            cascade_weight(G1, vol, 0)


class TestCharacteristics:
    def test_ap_constant_weight(self):
        for p in (1.5, 2.0, 4.0):
            assert ap_constant(Weight.constant(build_grid(3), 2.5), p).value == pytest.approx(1.0)

    def test_a2_example(self):
        c = ap_constant(W13, 2)
        assert c.value == pytest.approx(4 / 3) and c.witness == ROOT

    def test_rh2_example(self):
        c = rhp_constant(W13, 2)
        assert c.value == pytest.approx(math.sqrt(5) / 2) and c.witness == ROOT

    def test_rh1_example(self):
        # (1/2)[(1/2) log(1/2) + (3/2) log(3/2)]
        expect = 0.5 * (0.5 * math.log(0.5) + 1.5 * math.log(1.5))
        c = rh1_constant(W13)
        assert c.value == pytest.approx(expect, rel=1e-12)
        assert c.value == pytest.approx(0.130812, abs=1e-6)

    def test_rh1_constant_weight(self):
        assert rh1_constant(Weight.constant(build_grid(3))).value == pytest.approx(0.0, abs=1e-15)

    def test_c2t(self):
        assert c2t_constant(W13, 0).value == 1.0
        assert c2t_constant(W13, 1).value == pytest.approx(1.25)
        assert c2t_constant(W13, 0.25).value <= 1.0 + 1e-15

    def test_witness_is_shallowest_leftmost(self):
        # root and both halves tie at 1.5625
        assert ap_constant(Weight(build_grid(2), [1.0, 4.0, 1.0, 4.0]), 2).witness == ROOT
        c = ap_constant(Weight(build_grid(2), [1.0, 4.0, 2.0, 2.0]), 2)
        assert c.witness == DyadicInterval(1, 0) and c.value == pytest.approx(1.5625)

    def test_ap_brute_force(self, rng):
        g = build_grid(4)
        w = Weight(g, np.exp(rng.normal(size=16)))
        tree = ap_ratio_tree(w, 3.0)
        for I in g.intervals(leaves=False):
            cells = w.values[I.cell_slice(g)]
            expect = cells.mean() * np.mean(cells ** -0.5) ** 2
            assert tree[I.index] == pytest.approx(expect, rel=1e-12)

    def test_rh1_entropy_nonnegative(self, rng):
        w = Weight(build_grid(6), np.exp(rng.normal(size=64)))
        assert np.all(rh1_ratio_tree(w) >= -1e-14)


class TestPacking:
    def test_constant_g(self):
        g = build_grid(3)
        one = Weight.constant(g)
        assert packing_constant(one, one, 1.0, one).value == 0.0

    def test_buckley_example(self):
        c = buckley_packing(W13)
        assert c.value == pytest.approx(1.0) and c.witness == ROOT

    def test_brute_force(self, rng):
        g = build_grid(4)
        w = Weight(g, np.exp(rng.normal(size=16)))
        wp = w.power(2)
        c = rhp_packing(w, 2)
        best = 0.0
        for I in g.intervals():
            s = sum(J.length * (wp.tree[J.children()[1].index] - wp.tree[J.children()[0].index]) ** 2
                    / w.tree[J.index] ** 2 for J in g.intervals(leaves=False) if I.contains(J))
            best = max(best, s / (I.length * wp.tree[I.index]))
        assert c.value == pytest.approx(best, rel=1e-12)

    def test_power_sweeps(self):
        grow = [rhp_packing(power_weight(-0.6, build_grid(d)), 2).value for d in range(6, 13)]
        assert all(b > a for a, b in zip(grow, grow[1:]))

    def test_ap_variants_finite(self):
        w = power_weight(0.5, build_grid(8))
        assert ap_packing(w, 2).value > 0 and dual_ap_packing(w, 2).value > 0

    def test_nonpositive_base(self):
        g = build_grid(1)
        with pytest.raises(ValueError):
            packing_constant(StepFunction(g, [1.0, 2.0]), StepFunction(g, [0.0, 1.0]), 1.0, W13)
