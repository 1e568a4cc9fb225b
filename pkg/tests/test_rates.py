import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from grandrate.experiments import bsc_grid_oracle
from grandrate.llr_channel import BpskAwgn, BpskRayleigh, Bsc, EmpiricalChannel, ReliabilityCdf, ReliabilityTransformed, draw_llrs
from grandrate.optimize import golden_section
from grandrate.rates import (
    LN2,
    GmiConfig,
    GmiObjective,
    delta_log_mgf_estimator,
    error_budget,
    logistic_integral,
    logistic_integral_dilog,
    minimize_objective,
    mutual_information,
    orbgrand_gmi,
    orbgrand_linear_term,
    rate_report,
    sgrand_gmi,
    sgrand_objective,
)

FAST = GmiConfig(n_samples=100_000)


def test_logistic_integral_endpoints():
    assert logistic_integral(0.0) == pytest.approx(LN2, abs=1e-15)
    assert logistic_integral(-1e9) < 1e-8
    assert logistic_integral(-np.inf) == 0.0
    with pytest.raises(ValueError):
        logistic_integral(0.5)


def test_logistic_integral_against_midpoint_oracle():
    assert abs(logistic_integral(-10.0) - oracles.logistic_midpoint(-10.0)) < 1e-8


@settings(max_examples=60, deadline=None)
@given(st.floats(-1e4, -1e-2))
def test_logistic_integral_matches_dilog(theta):
    # the closed form cancels catastrophically closer to 0
    assert abs(logistic_integral(theta) - float(logistic_integral_dilog(theta))) < 1e-10


@pytest.mark.parametrize("theta", [-1e-6, -1e-3, -0.7, -13.0, -400.0])
def test_logistic_integral_high_precision(theta):
    mpmath.mp.dps = 30
    ref = mpmath.quad(lambda t: mpmath.log1p(mpmath.exp(theta * t)), [0, 1])
    assert abs(logistic_integral(theta) - float(ref)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-200, -1e-3), st.floats(-200, -1e-3), st.floats(0, 1))
def test_logistic_integral_convex(a, b, lam):
    mid = lam * a + (1 - lam) * b
    assert logistic_integral(mid) <= lam * logistic_integral(a) + (1 - lam) * logistic_integral(b) + 1e-12


def test_golden_section_quadratic():
    r = golden_section(lambda x: (x - 1.3) ** 2, -5, 5, tol=1e-10)
    assert r.converged and abs(r.x - 1.3) < 1e-8


def test_golden_section_monotone_edge():
    # minimum at the left endpoint
    r = golden_section(lambda x: x, 2.0, 3.0)
    assert r.x == pytest.approx(2.0, abs=1e-7)


def test_linear_term_noiseless_and_bsc():
    c, _ = orbgrand_linear_term(BpskAwgn(40.0))
    assert c < 1e-12
    for p in (0.01, 0.2):
        c, _ = orbgrand_linear_term(Bsc(p))
        assert c == pytest.approx(p, abs=1e-14)


def test_linear_term_awgn_against_quadrature_oracle():
    ref = oracles.awgn_linear_term(3.0)
    c, se = orbgrand_linear_term(BpskAwgn(3.0), n_samples=10**6, seed=21, method="mc")
    assert abs(c - ref) <= 3 * se
    cq, _ = orbgrand_linear_term(BpskAwgn(3.0))
    assert abs(cq - ref) < 1e-7


@pytest.mark.parametrize("p", [0.01, 0.11, 0.3])
def test_bsc_mi_entropy_oracle(p):
    assert abs(mutual_information(Bsc(p)) - (LN2 - oracles.binary_entropy(p))) < 1e-12
    # the Monte Carlo path agrees within its own noise
    r = rate_report(Bsc(p), GmiConfig(n_samples=200_000, method="mc"))
    assert abs(r.i_mi - (LN2 - oracles.binary_entropy(p))) <= 4 * r.std_error_mi + 1e-9


def test_bsc_orbgrand_matches_grid_oracle():
    ref, theta_ref = bsc_grid_oracle(0.11)
    res = orbgrand_gmi(Bsc(0.11))
    assert abs(res.rate - ref) < 1e-5
    assert abs(res.theta_star - theta_ref) < 1e-2 * abs(theta_ref)


def test_bsc_sgrand_entropy_and_argmin():
    p = 0.11
    res = sgrand_gmi(Bsc(p))
    assert abs(res.rate - (LN2 - oracles.binary_entropy(p))) < 1e-4
    # grid oracle of the same objective over theta
    mag = math.log((1 - p) / p)
    grid = np.linspace(-20, -1e-4, 10**5)
    obj = np.logaddexp(0, grid * mag) - grid * p * mag
    th_grid = grid[np.argmin(obj)]
    assert abs(res.theta_star - th_grid) <= 2 * (grid[1] - grid[0])
    assert res.theta_star == pytest.approx(-1.0, abs=1e-4)


def test_rayleigh_mi_against_nested_quadrature():
    ref = oracles.rayleigh_mi(3.0)
    assert abs(mutual_information(BpskRayleigh(3.0)) - ref) < 1e-6
    assert abs(mutual_information(BpskRayleigh(3.0), n_samples=10**6, method="mc") - ref) < 5e-3


@pytest.mark.parametrize("snr", [-5.0, 0.0, 6.0])
def test_awgn_mi_against_quadrature(snr):
    ref = oracles.awgn_mi(10 ** (-snr / 10))
    assert abs(mutual_information(BpskAwgn(snr)) - ref) < 1e-7


def test_limits():
    assert mutual_information(BpskAwgn(40.0)) == pytest.approx(LN2, abs=1e-9)
    assert orbgrand_gmi(BpskAwgn(40.0)).rate == pytest.approx(LN2, abs=1e-6)
    low = rate_report(BpskAwgn(-40.0))
    assert low.i_mi < 1e-4 and low.i_orbgrand < 1e-4
    # T identically zero: a useless channel
    zero = EmpiricalChannel(np.zeros(10), np.zeros(10))
    r = rate_report(zero, GmiConfig(n_samples=20_000))
    assert r.i_mi == pytest.approx(0.0, abs=1e-12)
    assert r.i_orbgrand == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("ch", [BpskAwgn(0.0), BpskAwgn(6.0), BpskRayleigh(3.0), Bsc(0.11)], ids=str)
def test_rate_chain(ch):
    r = rate_report(ch, FAST)
    for v in (r.i_orbgrand, r.i_mi, r.i_sgrand):
        assert 0 <= v <= LN2 + 1e-12
    assert r.i_orbgrand <= r.i_mi + r.error_budget
    assert abs(r.i_sgrand - r.i_mi) <= r.error_budget
    assert r.theta_star_orb < 0 and r.theta_star_sgrand < 0
    assert not r.bracket_edge


def test_mc_rate_chain_rayleigh():
    r = rate_report(BpskRayleigh(3.0), GmiConfig(n_samples=200_000, method="mc"))
    assert abs(r.i_sgrand - r.i_mi) <= r.error_budget
    assert r.i_orbgrand <= r.i_mi + r.error_budget
    assert r.mc_std_error > 0


def test_awgn_gap_small_at_3db():
    r = rate_report(BpskAwgn(3.0))
    assert r.i_mi - r.i_orbgrand < 0.01


def test_bracket_widens_at_high_snr():
    # optimum lies beyond the default bracket of 500 here
    r = orbgrand_gmi(BpskAwgn(10.0))
    assert r.theta_star < -500 and not r.bracket_edge
    capped = orbgrand_gmi(BpskAwgn(10.0), GmiConfig(widen=False))
    assert capped.bracket_edge


def test_rates_monotone_in_snr():
    grid = np.arange(-5.0, 11.0)
    mi = [mutual_information(BpskAwgn(s)) for s in grid]
    orb = [orbgrand_gmi(BpskAwgn(s)).rate for s in grid]
    assert np.all(np.diff(mi) > 0)
    assert np.all(np.diff(orb) > 0)


def test_objective_convex_in_theta():
    llrs = draw_llrs(BpskAwgn(3.0), 0)
    obj = sgrand_objective(llrs)
    th = np.linspace(-30, -0.01, 200)
    vals = np.array([obj(t) for t in th])
    assert np.all(np.diff(vals, 2) >= -1e-12)


def test_minimize_objective_zero_linear_term():
    res = minimize_objective(GmiObjective(0.0, logistic_integral))
    assert res.rate == pytest.approx(LN2, abs=1e-6)


def test_substitution_identity():
    # feeding psi(|T|) with the original signs gives the same linear term
    base = BpskAwgn(2.0)
    c_base, se = orbgrand_linear_term(base, n_samples=400_000, seed=3, method="mc")
    transformed = ReliabilityTransformed(base, base.psi())
    identity = ReliabilityCdf.analytic(lambda t: np.asarray(t, dtype=float))
    c_sub, _ = orbgrand_linear_term(transformed, identity, n_samples=400_000, seed=3, method="mc")
    assert c_sub == pytest.approx(c_base, abs=1e-12)


def test_delta_estimator():
    n = 4096
    perm = np.random.default_rng(0).permutation(n) + 1
    for th in (-1.0, -5.0, -20.0):
        assert abs(delta_log_mgf_estimator(perm, th) - (logistic_integral(th) - LN2)) < 1e-3
    with pytest.raises(ValueError):
        delta_log_mgf_estimator(np.array([1, 1, 2]), -1.0)


def test_error_budget_formula():
    assert error_budget(1e-3, 2e-4) == pytest.approx(3e-3 + 2e-4 + 1e-6)


def test_rate_report_seeded_reproducible():
    a = rate_report(BpskRayleigh(3.0), GmiConfig(n_samples=50_000, method="mc", seed=5))
    b = rate_report(BpskRayleigh(3.0), GmiConfig(n_samples=50_000, method="mc", seed=5, workers=2))
    assert a.to_dict() == b.to_dict()
