import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lacelab.perc import (ClusterStats, ExactGraph, PercConfig,
                          batch_means_se, bond_offsets,
                          exact_graph_from_config, exact_pair_matrix,
                          exact_small, exact_triangle, magnetization,
                          magnetization_tail, range_tail, restricted_triangle,
                          russo_check, sample_cluster)
from lacelab.steps import StepDistribution
from lacelab.torus import TorusField, TorusGrid


def _ring_config(M=6, z=0.8, seed=0, replicas=2000):
    return PercConfig(TorusGrid(1, M), StepDistribution("nn", 1), z, 1.0,
                      seed=seed, replicas=replicas)


class TestConfig:
    def test_z_range_guard(self):
        with pytest.raises(ValueError):
            _ring_config(z=2.1)  # 1/sup_D = 2 for nn d=1
        with pytest.raises(ValueError):
            _ring_config(z=-0.1)

    def test_bond_offsets_half_convention(self):
        offs, probs = bond_offsets(_ring_config())
        assert offs.shape == (1, 1)  # only one of +-1 kept
        assert probs[0] == pytest.approx(0.8 * 0.5)

    def test_range_cut(self):
        cfg = PercConfig(TorusGrid(1, 8), StepDistribution("uniform", 1, L=2),
                         0.5, 1.0, seed=0)
        offs, _ = bond_offsets(cfg)
        assert np.max(np.abs(offs)) == 1  # distance-2 bond cut by R=1
        assert range_tail(cfg) == pytest.approx(0.5)

    def test_clip_warning(self):
        # folding aliases -4 onto +2 on the 6-torus, doubling the weight
        # there to 1/4, so z = 8 = 1/sup_D pushes z*D_M(2) to 2
        cfg = PercConfig(TorusGrid(1, 6), StepDistribution("uniform", 1, L=4),
                         8.0, 2.0, seed=0)
        with pytest.warns(RuntimeWarning, match="clipped"):
            bond_offsets(cfg)

    def test_half_period_offset_excluded_with_warning(self):
        # on M = 4 the offset -2 is its own negation mod 4; it is dropped
        # loudly rather than half-counted
        cfg = PercConfig(TorusGrid(1, 4), StepDistribution("uniform", 1, L=2),
                         0.5, 2.0, seed=0)
        with pytest.warns(RuntimeWarning, match="half the torus period"):
            offs, _ = bond_offsets(cfg)
        assert np.max(np.abs(offs)) == 1


class TestExactOracle:
    def test_single_bond_by_hand(self):
        graph = ExactGraph(2, [(0, 1, 1.0)])
        for z in (0.2, 0.7):
            rec = exact_small(graph, z)
            assert rec["chi"] == pytest.approx(1.0 + z)
            assert rec["dchi_dz"] == pytest.approx(1.0)
            assert rec["pivotal_sum"] == pytest.approx(1.0)
            assert rec["size_law"][1] == pytest.approx(1.0 - z)
            assert rec["size_law"][2] == pytest.approx(z)

    def test_two_bond_chain_by_hand(self):
        # 0-1 and 1-2, both probability z: |C(0)| law is explicit
        graph = ExactGraph(3, [(0, 1, 1.0), (1, 2, 1.0)])
        z = 0.4
        rec = exact_small(graph, z)
        chi = 1 * (1 - z) + 2 * z * (1 - z) + 3 * z * z
        assert rec["chi"] == pytest.approx(chi)

    def test_pair_matrix_symmetry_and_diag(self):
        cfg = _ring_config()
        graph = exact_graph_from_config(cfg)
        G = exact_pair_matrix(graph, 0.5)
        assert np.allclose(G, G.T)
        assert np.allclose(np.diag(G), 1.0)
        assert np.all(G >= 0) and np.all(G <= 1 + 1e-12)

    def test_bond_limit_guard(self):
        with pytest.raises(ValueError):
            ExactGraph(30, [(i, i + 1, 1.0) for i in range(25)])

    @given(st.floats(0.05, 0.95), st.integers(4, 8))
    @settings(max_examples=20, deadline=None)
    def test_russo_identity_property(self, z, M):
        if M % 2:
            M += 1
        cfg = PercConfig(TorusGrid(1, M), StepDistribution("nn", 1),
                         min(z * 2, 1.99), 1.0, seed=0)
        graph = exact_graph_from_config(cfg)
        rec = russo_check(graph, z)
        assert rec["match"]
        assert rec["upper_holds"]
        assert rec["lower_holds"]


class TestSampler:
    def test_matches_exact_within_errors(self):
        cfg = _ring_config(M=6, z=1.0, seed=3, replicas=20000)
        graph = exact_graph_from_config(cfg)
        exact = exact_small(graph, 1.0, pivotal=False)
        stats = sample_cluster(cfg, targets=[(2,), (3,)])
        assert abs(stats.chi_hat - exact["chi"]) <= 4 * stats.chi_se
        assert stats.pair_hits[(2,)] == pytest.approx(
            exact["pair_conn"][2], abs=0.02)
        assert sum(stats.histogram.values()) == cfg.replicas

    def test_deterministic_in_seed(self):
        a = sample_cluster(_ring_config(seed=5, replicas=500))
        b = sample_cluster(_ring_config(seed=5, replicas=500))
        c = sample_cluster(_ring_config(seed=6, replicas=500))
        assert np.array_equal(a.sizes, b.sizes)
        assert not np.array_equal(a.sizes, c.sizes)

    def test_extreme_probabilities(self):
        zero = sample_cluster(_ring_config(z=0.0, replicas=50))
        assert np.all(zero.sizes == 1)
        # z = 1/sup_D gives p = 1 exactly: every bond open, no clipping
        full = sample_cluster(_ring_config(z=2.0, replicas=50))
        assert np.all(full.sizes == 6)

    def test_uniform_family_instance(self):
        cfg = PercConfig(TorusGrid(1, 8), StepDistribution("uniform", 1, L=2),
                         0.6, 2.0, seed=1, replicas=20000)
        graph = exact_graph_from_config(cfg)
        exact = exact_small(graph, 0.6, pivotal=False)
        stats = sample_cluster(cfg)
        assert abs(stats.chi_hat - exact["chi"]) <= 4 * stats.chi_se


class TestTriangles:
    def test_exact_vs_restricted_convention(self):
        # exact_triangle weights each directed bond by q = dp/dz, the
        # convolution form by p = z q; they differ by exactly z
        cfg = _ring_config(z=0.5, replicas=1)
        graph = exact_graph_from_config(cfg)
        G = exact_pair_matrix(graph, 0.5)
        gv = np.array([G[0, x % 6] for x in range(6)])
        gf = TorusField(cfg.grid, gv, "x")
        a = exact_triangle(graph, 0.5)
        b = restricted_triangle(cfg, gf)
        assert b == pytest.approx(0.5 * a)


class TestMagnetization:
    def test_magnetization_limits(self):
        law = np.array([0.0, 0.3, 0.5, 0.2])
        assert magnetization(law, 0.0) == 0.0
        assert magnetization(law, 50.0) == pytest.approx(1.0)

    @given(st.floats(0.1, 1.5), st.integers(2, 4))
    @settings(max_examples=25, deadline=None)
    def test_sandwich_property(self, z, n):
        graph = ExactGraph(4, [(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5),
                               (3, 0, 0.5)])
        rec = exact_small(graph, min(z, 1.9), pivotal=False)
        m = magnetization_tail(rec["size_law"], n)
        assert m["upper_holds"] and m["lower_holds"]


def test_batch_means_se_iid_scale():
    rng = np.random.default_rng(0)
    x = rng.normal(size=10000)
    se = batch_means_se(x)
    assert 0.5 / math.sqrt(10000) < se < 2.0 / math.sqrt(10000)
