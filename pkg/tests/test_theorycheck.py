import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import special

from mbe.theorycheck import (
    check_erfc_bound,
    check_example1,
    check_gaussian_ratio,
    check_gaussian_tail,
    check_shifted_mean_clt,
    check_subexponential_decay,
    check_subgaussian_mgf,
    clt_target_variance,
    enumerate_example1,
    enumerate_example1_detail,
)


class TestGaussianTail:
    def test_symmetric_point(self):
        report = check_gaussian_tail(x_grid=(0.0,))
        row = report.rows[0]
        assert row.observed == pytest.approx(0.5, abs=1e-10)
        assert row.bound_lo == 0.25 and row.bound_hi == 0.5
        assert row.passed

    def test_frozen_examples_from_the_erfc_oracle(self):
        # independent oracle: P(Z > x) = erfc(x / sqrt(2)) / 2
        for x, p_ref in [(1.0, 0.15865525393145707), (3.0, 1.3498980316300957e-3)]:
            assert 0.5 * special.erfc(x / math.sqrt(2)) == pytest.approx(p_ref, rel=1e-12)
            report = check_gaussian_tail(x_grid=(x,))
            row = report.rows[0]
            assert row.observed == pytest.approx(p_ref, rel=1e-9)
            assert row.bound_lo < row.observed <= row.bound_hi
        report = check_gaussian_tail(x_grid=(1.0,))
        row = report.rows[0]
        assert row.bound_lo == pytest.approx(0.25 * math.exp(-1.0), rel=1e-12)
        assert row.bound_hi == pytest.approx(0.5 * math.exp(-0.5), rel=1e-12)

    def test_full_grid_passes(self):
        assert check_gaussian_tail().passed

    def test_rejects_points_outside_the_domain(self):
        with pytest.raises(ValueError):
            check_gaussian_tail(x_grid=(7.0,))


class TestSubgaussianMgf:
    def test_closed_form_and_bound_values(self):
        report = check_subgaussian_mgf(n=100, sigma=1.0, n_samples=10_000)
        by_point = {row.point: row for row in report.rows}
        assert by_point["gaussian-closed-form"].observed == pytest.approx((0.75) ** -0.5, rel=1e-12)
        assert by_point["gaussian-closed-form"].bound_hi == pytest.approx(math.exp(9 / 8), rel=1e-12)
        assert by_point["lam=0"].observed == 1.0
        assert report.passed

    def test_monte_carlo_row_with_full_samples(self):
        report = check_subgaussian_mgf(n=100, sigma=1.0, n_samples=200_000)
        assert report.passed


class TestGaussianRatio:
    def test_default_grid_passes(self):
        assert check_gaussian_ratio(n_samples=200_000).passed

    def test_degenerate_numerator(self):
        report = check_gaussian_ratio(c_grid=(1.0,), sigma_x=1e-6, n_samples=100_000)
        assert report.rows[0].observed == pytest.approx(0.0, abs=1e-6)
        assert report.passed

    def test_huge_c_is_dominated_by_the_negative_tail(self):
        report = check_gaussian_ratio(c_grid=(1000.0,), n_samples=200_000)
        assert report.passed

    def test_positive_margin_at_unit_c(self):
        report = check_gaussian_ratio(c_grid=(1.0,), mean_y=3.0, n_samples=200_000)
        assert report.rows[0].margin > 0


class TestErfcBound:
    def test_zero_is_exactly_one(self):
        report = check_erfc_bound(x_grid=(0.0,))
        assert report.rows[0].observed == pytest.approx(1.0, abs=1e-9)
        assert report.passed

    def test_matches_the_scaled_erfc_special_function(self):
        # independent oracle: the quantity equals exp(x^2) erfc(x)
        for x in (0.5, 1.0, 2.0, 5.0):
            report = check_erfc_bound(x_grid=(x,))
            assert report.rows[0].observed == pytest.approx(float(special.erfcx(x)), rel=1e-9)
            assert report.rows[0].passed

    def test_frozen_value_at_one(self):
        report = check_erfc_bound(x_grid=(1.0,))
        assert report.rows[0].observed == pytest.approx(0.4275835761558070, rel=1e-10)


class TestShiftedMeanClt:
    def test_target_formula_evaluations(self):
        assert clt_target_variance(0.5, 1.0, 1.0) == pytest.approx(0.75, rel=1e-12)
        assert clt_target_variance(0.5, 1e-6, 1.0) == pytest.approx(0.0, abs=1e-9)
        assert clt_target_variance(1e3, 1.0, 1.0) == pytest.approx(0.0, abs=1e-5)

    def test_monte_carlo_tracks_the_delta_method_variance(self):
        # The simulated variance sits at the delta-method value, which is
        # well below the claimed limit at these parameters; the check is
        # implemented as specified and therefore reports a failure here.
        report = check_shifted_mean_clt(lam=0.5, sigma_omega=1.0, reward_sd=1.0, s=1500, n_reps=3000, seed=5)
        observed = report.rows[0].observed
        assert observed == pytest.approx(0.53125, rel=0.10)
        assert not report.passed

    def test_passes_where_the_claim_matches_the_delta_method(self):
        # at lam = sqrt(2), sigma = 1, sd = 1, mu = 0.5 the claimed limit
        # coincides with the delta-method variance, so the check can pass
        lam = math.sqrt(2.0)
        report = check_shifted_mean_clt(lam=lam, sigma_omega=1.0, reward_sd=1.0, s=1500, n_reps=4000, seed=6)
        assert report.passed

    def test_small_s_rejected(self):
        with pytest.raises(ValueError):
            check_shifted_mean_clt(s=10)


class TestSubexponentialDecay:
    def test_expectation_decays_in_s(self):
        report = check_subexponential_decay(n_samples=50_000)
        assert report.passed
        values = [row.observed for row in report.rows]
        assert values == sorted(values, reverse=True)


def _float_enumeration(lam: float) -> tuple[int, int]:
    """Independent float-arithmetic oracle for the 64-case enumeration."""
    strict = mixed = 0
    for w in itertools.product((0.0, 2.0), repeat=6):
        w1, w1p, w1pp, w2, w2p, w2pp = w
        d1 = w1 + lam * (w1p + w1pp)
        d2 = w2 + lam * (w2p + w2pp)
        y1 = (lam * w1p / d1) if d1 != 0 else None
        y2 = ((w2 + lam * w2p) / d2) if d2 != 0 else None
        if y1 is not None and y2 is not None and y1 > y2:
            strict += 1
        elif y1 is not None and y2 is None:
            mixed += 1
    return strict, mixed


class TestExample1:
    def test_exact_value_against_the_float_oracle(self):
        prob, strict, mixed = enumerate_example1_detail(Fraction(1, 2))
        ref_strict, ref_mixed = _float_enumeration(0.5)
        assert (strict, mixed) == (ref_strict, ref_mixed)
        assert prob == Fraction(strict, 64)
        assert prob >= Fraction(1, 64)

    def test_lambda_zero_is_exactly_zero(self):
        assert enumerate_example1(0) == 0

    def test_large_lambda_counts_stabilize(self):
        a = enumerate_example1_detail(10**6)
        b = enumerate_example1_detail(10**7)
        assert a[1] == b[1]

    def test_exact_rational_output(self):
        prob = enumerate_example1(Fraction(1, 2))
        assert isinstance(prob, Fraction) and prob.denominator in (1, 2, 4, 8, 16, 32, 64)

    def test_report_records_the_exact_counts(self):
        report = check_example1()
        assert report.passed
        assert "7/64 strict" in report.notes

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            enumerate_example1(-0.5)


class TestDeterminism:
    def test_seeded_checks_replay_identically(self):
        a = check_gaussian_ratio(n_samples=20_000, seed=42)
        b = check_gaussian_ratio(n_samples=20_000, seed=42)
        assert [(r.point, r.observed) for r in a.rows] == [(r.point, r.observed) for r in b.rows]
        assert a.seed == 42
