import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agdolinar.bounds import QuadratureWarning, helstrom_success
from agdolinar.dolinar import (
    dolinar_ode_solve,
    dolinar_rates,
    dolinar_success,
    eande_success,
    eande_success_radial,
    miscalibrated_success,
    miscalibrated_success_numeric,
    optimal_displacement,
)

from .oracle_values import EANDE_SUCCESS, HELSTROM_SUCCESS, MISCALIBRATED_DOLINAR


def test_closed_form_examples():
    assert dolinar_success(0.5, 0.5, 0.39, 0.0) == 0.5
    assert dolinar_success(0.5, 0.5, 0.0625, 1.0) == pytest.approx(HELSTROM_SUCCESS[0.25], abs=1e-15)
    for t in (0.0, 0.3, 1.0):
        assert dolinar_success(1.0, 0.0, 0.5, t) == 1.0
    with pytest.raises(ValueError):
        dolinar_success(0.5, 0.5, 0.1, 1.5)


@pytest.mark.parametrize("a2", [0.01, 0.0625, 0.39, 1.0])
def test_ode_terminal_matches_closed_form(a2):
    sol = dolinar_ode_solve(0.5, a2)
    assert abs(sol.terminal - dolinar_success(0.5, 0.5, a2)) < 1e-6
    assert sol.max_residual < 1e-6
    assert np.all(np.diff(sol.times) > 0)
    assert np.all(sol.pc >= 0.5 - 1e-12) and np.all(sol.pc <= 1)
    assert np.all(np.diff(sol.pc) >= -1e-12)


def test_ode_unequal_priors_starts_from_larger_prior():
    sol = dolinar_ode_solve(0.8, 0.39)
    assert sol.pc[0] == 0.8
    assert sol.terminal == pytest.approx(dolinar_success(0.8, 0.2, 0.39), abs=1e-6)


def test_ode_zero_amplitude_is_flat():
    sol = dolinar_ode_solve(0.3, 0.0)
    assert np.all(sol.pc == 0.7)


def test_ode_fourth_order_convergence():
    a2, exact = 0.39, dolinar_success(0.5, 0.5, 0.39)
    errs = [abs(dolinar_ode_solve(0.5, a2, steps, t0=1e-4).terminal - exact) for steps in (100, 200)]
    assert errs[0] / errs[1] >= 8


def test_rates_satisfy_success_equation():
    a2 = 0.39
    sol = dolinar_ode_solve(0.5, a2, 4000)
    t, pc = sol.times[1:], sol.pc[1:]
    rates = dolinar_rates(math.sqrt(a2), optimal_displacement(pc, math.sqrt(a2)))
    rhs = rates.mu_t - (rates.lambda_t + rates.mu_t) * pc
    e = np.exp(-4 * a2 * t)
    exact_slope = a2 * e / np.sqrt(1 - e)
    assert np.max(np.abs(rhs / exact_slope - 1)) < 1e-6
    assert np.all(rates.lambda_t >= 0) and np.all(rates.mu_t >= 0)


@pytest.mark.parametrize("key", sorted(MISCALIBRATED_DOLINAR))
def test_miscalibrated_against_high_precision(key):
    b, a = key
    assert miscalibrated_success(b, a) == pytest.approx(MISCALIBRATED_DOLINAR[key], abs=1e-15)
    assert miscalibrated_success_numeric(b, a) == pytest.approx(MISCALIBRATED_DOLINAR[key], abs=1e-9)


def test_miscalibrated_identities():
    a = 0.4 + 0.3j
    h = helstrom_success(0.5, 0.5, a, -a)
    assert miscalibrated_success(a, a) == pytest.approx(h, abs=1e-15)
    assert miscalibrated_success(-a, a) == pytest.approx(1 - h, abs=1e-15)
    assert miscalibrated_success(1j * a, a) == pytest.approx(0.5, abs=1e-15)
    assert miscalibrated_success(0, a) == 0.5


def test_paper_literal_miscalibration_can_exceed_helstrom():
    a, b = 0.25, 0.5
    assert miscalibrated_success(b, a, paper_literal=True) > helstrom_success(0.5, 0.5, a, -a)
    with pytest.raises(ValueError):
        miscalibrated_success(0.3, 0.0, paper_literal=True)


@given(
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
    st.complex_numbers(min_magnitude=0.01, max_magnitude=3, allow_nan=False, allow_infinity=False),
)
def test_miscalibrated_never_beats_helstrom(beta, alpha):
    h = helstrom_success(0.5, 0.5, alpha, -alpha)
    p = miscalibrated_success(beta, alpha)
    assert 1 - h - 1e-12 <= p <= h + 1e-12


@pytest.mark.parametrize("key", sorted(EANDE_SUCCESS))
def test_eande_against_direct_integral(key):
    n, a = key
    assert eande_success(a, n) == pytest.approx(EANDE_SUCCESS[key], abs=1e-10)


def test_eande_hermite_route_and_warning():
    with pytest.warns(QuadratureWarning):
        v = eande_success(0.5, 4, method="hermite")
    assert v == pytest.approx(EANDE_SUCCESS[(4, 0.5)], abs=2e-3)
    with warnings.catch_warnings():
        warnings.simplefilter("error", QuadratureWarning)
        v = eande_success(1.0, 10_000, method="hermite")
    assert v == pytest.approx(eande_success_radial(1.0, 10_000), abs=1e-8)
    with pytest.raises(ValueError):
        eande_success(0.5, 4, method="other")


def test_eande_limits():
    h = helstrom_success(0.5, 0.5, 0.625, -0.625)
    assert abs(eande_success(0.625, 1_000_000) - h) < 1e-4
    assert eande_success(0.0, 5) == 0.5
    assert eande_success(1e-4, 5) == pytest.approx(0.5, abs=1e-4)
    with pytest.raises(ValueError):
        eande_success(0.5, 0)


def test_eande_phase_invariant():
    assert eande_success(0.5j, 3) == pytest.approx(eande_success(0.5, 3), abs=1e-14)


@pytest.mark.parametrize("a", [0.25, 0.625, 1.0])
def test_eande_monotone_in_n(a):
    vals = [eande_success(a, n) for n in range(1, 65)]
    assert all(b >= v - 1e-12 for v, b in zip(vals, vals[1:]))
