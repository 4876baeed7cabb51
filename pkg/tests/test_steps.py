import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lacelab.steps import StepDistribution, ising_tau, verify_conditions
from lacelab.torus import TorusGrid


class TestEval:
    def test_nn_values(self):
        dist = StepDistribution("nn", 2)
        assert dist.eval_d((1, 0)) == 0.25
        assert dist.eval_d((0, -1)) == 0.25
        assert dist.eval_d((1, 1)) == 0.0
        assert dist.eval_d((0, 0)) == 0.0

    def test_uniform_values(self):
        dist = StepDistribution("uniform", 2, L=2)
        inside = 1.0 / (5 ** 2 - 1)
        assert dist.eval_d((2, -2)) == inside
        assert dist.eval_d((1, 0)) == inside
        assert dist.eval_d((3, 0)) == 0.0
        assert dist.eval_d((0, 0)) == 0.0

    def test_power_plateau_and_decay(self):
        dist = StepDistribution("power", 1, L=4, alpha=1.5,
                                support_radius=200)
        # |x/L| <= 1 sits on the plateau h = 1
        assert dist.eval_d((2,)) == dist.eval_d((4,))
        # beyond the plateau the ratio follows (x1/x2)^{d+alpha}
        r = dist.eval_d((8,)) / dist.eval_d((16,))
        assert abs(r - 2.0 ** 2.5) < 1e-12

    def test_exact_rationals(self):
        assert StepDistribution("nn", 3).eval_d_exact((0, 0, 1)) \
            == Fraction(1, 6)
        assert StepDistribution("uniform", 1, L=2).eval_d_exact((2,)) \
            == Fraction(1, 4)
        with pytest.raises(ValueError):
            StepDistribution("power", 1, alpha=1.0,
                             support_radius=50).eval_d_exact((1,))

    def test_constructor_validation(self):
        with pytest.raises(ValueError):
            StepDistribution("nn", 0)
        with pytest.raises(ValueError):
            StepDistribution("blah", 2)
        with pytest.raises(ValueError):
            StepDistribution("power", 2)  # alpha missing
        with pytest.raises(ValueError):
            StepDistribution("uniform", 2, L=0)


class TestNormalization:
    def test_nn_uniform_sum_to_one(self):
        for dist in (StepDistribution("nn", 3),
                     StepDistribution("uniform", 2, L=3)):
            offs, probs = dist.support()
            assert abs(float(np.sum(probs)) - 1.0) < 1e-12

    def test_power_sum_within_tail_bound(self):
        dist = StepDistribution("power", 2, L=1, alpha=1.2,
                                support_radius=64)
        total = 0.0
        for _, p in dist.support_chunks():
            total += float(np.sum(p))
        # support + analytic tail = 1 by construction
        assert 0.0 < 1.0 - total <= dist.tail_bound + 1e-15

    def test_power_default_radius_hits_target(self):
        dist = StepDistribution("power", 2, L=1, alpha=2.0)
        # the tail target is 1e-9 relative to the nearest-neighbor mass
        points = (2 * dist.support_radius + 1) ** dist.d
        assert dist.tail_bound <= 1e-9 * 2 * dist.d * 1.01 or points >= 1.9e7

    def test_sup_d(self):
        assert StepDistribution("nn", 4).sup_d == 1.0 / 8
        assert StepDistribution("uniform", 2, L=1).sup_d == 1.0 / 8


class TestFourier:
    def test_nn_closed_form_vs_support_sum(self):
        rng = np.random.default_rng(0)
        for d in (1, 2, 4):
            dist = StepDistribution("nn", d)
            ks = rng.uniform(-np.pi, np.pi, size=(200, d))
            a = dist.fourier_d(ks)
            b = dist.fourier_d_support_sum(ks)
            assert np.max(np.abs(a - b)) < 1e-13

    def test_uniform_closed_form_vs_support_sum(self):
        rng = np.random.default_rng(1)
        dist = StepDistribution("uniform", 2, L=3)
        ks = rng.uniform(-np.pi, np.pi, size=(200, 2))
        a = dist.fourier_d(ks)
        b = dist.fourier_d_support_sum(ks)
        assert np.max(np.abs(a - b)) < 1e-12

    def test_value_at_zero(self):
        for dist in (StepDistribution("nn", 3),
                     StepDistribution("uniform", 1, L=4)):
            assert abs(dist.fourier_d(np.zeros(dist.d)) - 1.0) < 1e-12

    @given(st.integers(1, 4), st.lists(st.floats(-math.pi, math.pi),
                                       min_size=4, max_size=4))
    @settings(max_examples=50, deadline=None)
    def test_transform_bounded_by_one(self, d, kvals):
        dist = StepDistribution("nn", d)
        k = np.asarray(kvals[:d])
        assert abs(dist.fourier_d(k)) <= 1.0 + 1e-12

    def test_fold_conserves_mass_and_symmetry(self):
        grid = TorusGrid(2, 6)
        for dist in (StepDistribution("nn", 2),
                     StepDistribution("uniform", 2, L=4)):
            dm = dist.fold(grid)
            assert abs(float(np.sum(dm.values)) - 1.0) < 1e-12
            rev = dm.values[::-1, ::-1]
            rev = np.roll(rev, 1, axis=(0, 1))
            assert np.max(np.abs(rev - dm.values)) < 1e-15

    def test_fold_matches_transform_on_dual_grid(self):
        # Dhat_M(2 pi m / M) equals the infinite-lattice transform there
        grid = TorusGrid(1, 8)
        dist = StepDistribution("uniform", 1, L=3)
        from lacelab.torus import real_dft
        dhat = real_dft(dist.fold(grid))
        ks = 2.0 * np.pi * np.arange(8)[:, None] / 8.0
        direct = dist.fourier_d(ks)
        assert np.max(np.abs(dhat - direct)) < 1e-12


class TestMoments:
    def test_nn_second_moment(self):
        assert abs(StepDistribution("nn", 5).moment(2.0) - 1.0) < 1e-12

    def test_power_moment_divergence(self):
        dist = StepDistribution("power", 1, L=1, alpha=1.5,
                                support_radius=10000)
        assert dist.moment(1.5) == "divergent"
        assert dist.moment(2.0) == "divergent"
        assert isinstance(dist.moment(1.0), float)
        assert dist.shell_ratio_divergent(1.6)

    def test_uniform_moment_monotone_in_L(self):
        m1 = StepDistribution("uniform", 2, L=1).moment(2.0)
        m2 = StepDistribution("uniform", 2, L=3).moment(2.0)
        assert m2 > m1


class TestConditions:
    def test_nn_small_k_constant(self):
        for d in (1, 2, 3):
            rep = verify_conditions(StepDistribution("nn", d), grid_res=16)
            assert rep.c1_hat >= 2.0 / (math.pi ** 2 * d) - 1e-9

    def test_nn_violates_antipodal_bound(self):
        # the bipartite mode Dhat(pi,...,pi) = -1 breaks 1 - Dhat < 2 - c2
        rep = verify_conditions(StepDistribution("nn", 2), grid_res=16)
        assert not rep.ok
        assert any(v["condition"] == "large-k bounds"
                   for v in rep.violations)

    def test_uniform_passes(self):
        rep = verify_conditions(StepDistribution("uniform", 2, L=2),
                                grid_res=16)
        assert rep.ok
        assert rep.c1_hat > 0 and rep.c2_hat > 0

    def test_grid_res_validation(self):
        with pytest.raises(ValueError):
            verify_conditions(StepDistribution("nn", 1), grid_res=2)


class TestIsingTau:
    def test_normalization_and_value(self):
        J = {(1,): 2.0, (-1,): 2.0}
        tau, dstep = ising_tau(J, 0.5)
        assert abs(tau - 2 * math.tanh(1.0)) < 1e-12
        assert abs(sum(dstep.values()) - 1.0) < 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            ising_tau({(1,): -1.0}, 0.5)
        with pytest.raises(ValueError):
            ising_tau({(1,): 1.0}, 0.0)


def test_spec_round_trip():
    for dist in (StepDistribution("nn", 3),
                 StepDistribution("uniform", 2, L=4),
                 StepDistribution("power", 2, L=2, alpha=1.5,
                                  support_radius=40)):
        again = StepDistribution.from_spec(dist.to_spec())
        assert again.family == dist.family
        assert again.d == dist.d
        assert again.sup_d == dist.sup_d
