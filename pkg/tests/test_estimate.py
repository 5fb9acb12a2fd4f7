import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from agdolinar.agnostic import AgnosticConfig, agnostic_ode_solve
from agdolinar.bounds import QuadratureWarning, RicePrior, mec_optimal_error_with_prior
from agdolinar.estimate import (
    EstimatorKind,
    SplitConfig,
    apriori_m,
    apriori_m_is_reported,
    heterodyne_radial_pdf,
    photon_count_pmf,
    rice_averaged_error,
    rice_averaged_errors,
    split_performance,
    split_success,
    split_success_curve,
)

from .oracle_values import HETERODYNE_SPLIT, PHOTON_SPLIT

BOTH = [EstimatorKind.PHOTON_COUNTING, EstimatorKind.HETERODYNE]


def test_photon_pmf_examples():
    assert photon_count_pmf(0, 3, 0.25) == pytest.approx(math.exp(-0.75))
    assert photon_count_pmf(2, 4, 0.5) == pytest.approx(2 * math.exp(-2))
    k = np.arange(80)
    p = photon_count_pmf(k, 5, 0.6)
    assert p.sum() == pytest.approx(1, abs=1e-14)
    assert (k * p).sum() / 5 == pytest.approx(0.6, rel=1e-12)  # k/m is unbiased


@pytest.mark.parametrize("m,a2", [(1, 0.0), (3, 0.25), (10, 1.3)])
def test_heterodyne_density_moments(m, a2):
    norm, _ = quad(lambda s: heterodyne_radial_pdf(s, m, a2), 0, np.inf)
    mean, _ = quad(lambda s: s * heterodyne_radial_pdf(s, m, a2), 0, np.inf)
    assert norm == pytest.approx(1, abs=1e-9)
    assert mean == pytest.approx(1 + m * a2, abs=1e-8)
    with pytest.raises(ValueError):
        heterodyne_radial_pdf(-1.0, m, a2)


@pytest.mark.parametrize("key", sorted(PHOTON_SPLIT))
def test_photon_split_against_direct_sum(key):
    n, m, a = key
    assert split_performance(a, SplitConfig(n, m), "photon") == pytest.approx(PHOTON_SPLIT[key], abs=1e-9)


@pytest.mark.parametrize("key", sorted(HETERODYNE_SPLIT))
def test_heterodyne_split_against_adaptive_quadrature(key):
    n, m, a = key
    assert split_performance(a, SplitConfig(n, m), "heterodyne") == pytest.approx(HETERODYNE_SPLIT[key], abs=1e-8)


@pytest.mark.parametrize("est", BOTH)
def test_large_estimation_budget_approaches_calibration(est):
    a2 = 0.36
    cal = agnostic_ode_solve(AgnosticConfig(8, a2)).terminal
    assert abs(split_success(a2, SplitConfig(1008, 1000), est)[0] - cal) < 1e-3


@pytest.mark.parametrize("est", BOTH)
def test_zero_amplitude_and_zero_budget(est):
    assert split_success(0.0, SplitConfig(6, 2), est)[0] == 0.5
    blind = split_success(0.25, SplitConfig(6, 0), est)[0]
    assert blind == pytest.approx(_fixed_control(0.25, 0.0, 6), abs=1e-12)


def _fixed_control(a2, c2, n):
    from agdolinar.agnostic import terminal_success

    return terminal_success(a2, c2, n)[0, 0]


@pytest.mark.parametrize("est", BOTH)
@pytest.mark.parametrize("n,m", [(4, 1), (4, 2), (8, 3), (12, 6)])
def test_split_never_beats_calibrated_receiver(est, n, m):
    a2 = np.square(np.linspace(0.05, 1.5, 12))
    pc = split_success(a2, SplitConfig(n, m), est)
    cal = np.array([agnostic_ode_solve(AgnosticConfig(n - m, x)).terminal for x in a2])
    assert np.all(pc <= cal + 1e-12)
    assert np.all(pc >= 0.5)


@given(st.integers(0, 40), st.floats(0.0, 2.0), st.integers(1, 30))
def test_any_fixed_estimate_beats_guessing(k, a2, n):
    assert _fixed_control(a2, k / 3, n) >= 0.5 - 1e-15


def test_bias_correction_changes_heterodyne_only():
    s = SplitConfig(8, 3)
    plain = split_success(0.25, s, "heterodyne")[0]
    corrected = split_success(0.25, s, "heterodyne", bias_corrected=True)[0]
    assert abs(plain - corrected) > 1e-4
    assert split_success(0.25, s, "photon", bias_corrected=True)[0] == split_success(0.25, s, "photon")[0]


def test_split_config_validation():
    for n, m in [(4, 4), (4, -1), (1, 1)]:
        with pytest.raises(ValueError):
            SplitConfig(n, m)
    assert SplitConfig(9, 3).n_receiver == 6
    with pytest.raises(ValueError):
        split_success(0.1, SplitConfig(4, 1), "homodyne")


def test_apriori_split():
    assert apriori_m(4) == 2 and apriori_m(8) == 3
    assert apriori_m_is_reported(4) and not apriori_m_is_reported(16)
    assert apriori_m(2) == 1 and apriori_m(16) == 4 and apriori_m(100) == 10
    with pytest.raises(ValueError):
        apriori_m(1)


@given(st.integers(2, 10_000))
def test_apriori_split_is_valid(n):
    assert 1 <= apriori_m(n) <= n - 1


def test_success_curve_meets_its_tolerance():
    split = SplitConfig(8, 3)
    curve = split_success_curve(split, "photon", 1.5)
    assert curve.error_estimate <= 1e-9
    r = np.array([0.07, 0.33, 0.91, 1.44])
    assert np.max(np.abs(curve(r) - split_success(r * r, split, "photon"))) < 1e-8
    with pytest.raises(ValueError):
        curve(1.6)


def test_success_curve_warns_when_unreachable():
    with pytest.warns(QuadratureWarning):
        split_success_curve(SplitConfig(4, 2), "photon", 1.0, tol=1e-30)


@pytest.mark.parametrize("est", BOTH)
def test_narrow_prior_matches_point_value(est):
    x = 0.6
    pe = rice_averaged_error(8, RicePrior(1e-4, x), est)
    assert pe == pytest.approx(1 - split_success(x * x, SplitConfig(8, 3), est)[0], abs=1e-3)


def test_prior_at_origin_is_a_guess():
    assert rice_averaged_error(4, RicePrior(1e-4, 0.0), "photon") == pytest.approx(0.5, abs=1e-3)


@pytest.mark.parametrize("est", BOTH)
def test_prior_averaged_ordering_and_bound(est):
    priors = [RicePrior(0.1, x) for x in (0.2, 0.5, 0.9)]
    with warnings.catch_warnings():
        warnings.simplefilter("error", QuadratureWarning)
        four = rice_averaged_errors(4, priors, est)
        eight = rice_averaged_errors(8, priors, est)
    assert np.all(eight <= four)
    for n, row in ((4, four), (8, eight)):
        bound = [mec_optimal_error_with_prior(n, p) for p in priors]
        assert np.all(row >= np.array(bound))


def test_batched_priors_match_single_calls():
    priors = [RicePrior(0.1, 0.3), RicePrior(0.2, 1.0)]
    batch = rice_averaged_errors(8, priors, "heterodyne")
    single = [rice_averaged_error(8, p, "heterodyne") for p in priors]
    assert batch == pytest.approx(single, abs=1e-8)
