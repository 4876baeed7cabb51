from fractions import Fraction

import numpy as np
import pytest

from lacelab.saw import (BudgetExceeded, chi_series, check_diff_inequality,
                         bubble_saw, enumerate_walks, extract_lace,
                         reconstruct_c, two_point_series, zc_estimate)
from lacelab.steps import StepDistribution

SQUARE_COUNTS = [4, 12, 36, 100, 284, 780, 2172, 5916]


@pytest.fixture(scope="module")
def square_series():
    return enumerate_walks(StepDistribution("nn", 2), 8, mode="rational")


class TestEnumeration:
    def test_known_square_lattice_counts(self, square_series):
        for n, want in enumerate(SQUARE_COUNTS, start=1):
            got = square_series.mass(n) * Fraction(4) ** n
            assert got == want, n

    def test_d1_masses_closed_form(self):
        series = enumerate_walks(StepDistribution("nn", 1), 12)
        for n in range(1, 13):
            assert series.mass(n) == Fraction(2, 2 ** n)

    def test_double_mode_matches_rational(self):
        r = enumerate_walks(StepDistribution("nn", 2), 5, mode="rational")
        f = enumerate_walks(StepDistribution("nn", 2), 5, mode="double")
        for n in range(6):
            for x, v in r.c[n].items():
                assert float(v) == pytest.approx(f.c[n][x], abs=1e-12)

    def test_endpoint_symmetry(self, square_series):
        for n in range(1, 9):
            cn = square_series.c[n]
            for x, v in cn.items():
                assert cn[tuple(-a for a in x)] == v

    def test_budget_guard(self):
        with pytest.raises(BudgetExceeded):
            enumerate_walks(StepDistribution("nn", 3), 10, node_budget=100)

    def test_branching_guard(self):
        with pytest.raises(ValueError):
            enumerate_walks(StepDistribution("uniform", 2, L=4), 3)

    def test_support_radius_reduces_branching(self):
        series = enumerate_walks(StepDistribution("uniform", 2, L=4), 2,
                                 support_radius=2.0)
        assert series.weight_loss > 0.0
        assert series.mass(1) < 1

    def test_power_needs_double_mode(self):
        dist = StepDistribution("power", 2, alpha=1.5, support_radius=8)
        with pytest.raises(ValueError):
            enumerate_walks(dist, 2, mode="rational", support_radius=2.0)
        series = enumerate_walks(dist, 2, mode="double", support_radius=2.0)
        assert 0.0 < float(series.mass(2)) < 1.0


class TestLace:
    def test_pi2_is_minus_d_at_origin(self, square_series):
        lace = extract_lace(square_series)
        assert lace.pi[2] == {(0, 0): Fraction(-1, 4)}

    def test_reconstruction_exact(self, square_series):
        lace = extract_lace(square_series)
        for n in range(1, 8):
            rebuilt = reconstruct_c(square_series, lace, n)
            truth = {x: v for x, v in square_series.c[n + 1].items()
                     if v != 0}
            assert rebuilt == truth

    def test_pi_masses_alternate_in_sign(self, square_series):
        lace = extract_lace(square_series)
        # the first coefficients of the square lattice alternate: pi_2 < 0,
        # pi_3 > 0, ...
        assert lace.mass(2) < 0
        assert lace.mass(3) > 0
        assert lace.mass(4) < 0

    def test_abs_mass_decreases_with_z(self, square_series):
        lace = extract_lace(square_series)
        assert lace.abs_mass_at(0.2) < lace.abs_mass_at(0.4)


class TestSeriesFunctions:
    def test_chi_series_d1_closed_form(self):
        series = enumerate_walks(StepDistribution("nn", 1), 20)
        for z in (0.5, 1.0, 1.5):
            # chi(z) = 1 + sum_{n=1}^{20} 2^{1-n} z^n (truncated geometric)
            want = 1.0 + sum(2.0 ** (1 - n) * z ** n for n in range(1, 21))
            got = chi_series(series, z)
            assert got["chi"] == pytest.approx(want, rel=1e-12)
            # zc is estimated as exactly 2 here, so the geometric remainder
            # equals the true tail (2+z)/(2-z) - want
            assert got["remainder"] == pytest.approx(
                (2 + z) / (2 - z) - want, rel=1e-6)

    def test_chi_warns_beyond_radius(self):
        series = enumerate_walks(StepDistribution("nn", 1), 10)
        rec = chi_series(series, 2.5)
        assert rec["warning"] is not None

    def test_two_point_at_z_zero(self, square_series):
        g = two_point_series(square_series, 0.0)
        assert g[(0, 0)] == 1.0
        assert all(v == 0.0 for x, v in g.items() if x != (0, 0))

    def test_bubble_lower_bound(self, square_series):
        # B(z) >= G(0)^2 = 1
        assert bubble_saw(square_series, 0.3) >= 1.0

    def test_zc_estimate_square_lattice(self, square_series):
        rec = zc_estimate(square_series)
        # weighted convention: true value 2d/mu = 4/2.638 = 1.5163...
        assert 1.3 < rec["zc_est"] < 1.6

    def test_diff_inequality_holds(self, square_series):
        zc = zc_estimate(square_series)["zc_est"]
        b = bubble_saw(square_series, 0.5)
        rec = check_diff_inequality(square_series, 0.5, zc, b)
        assert rec["holds"]
        assert not rec["truncation_dominated"]

    def test_diff_inequality_validation(self, square_series):
        with pytest.raises(ValueError):
            check_diff_inequality(square_series, 2.0, 1.5, 1.0)
