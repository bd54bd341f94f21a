from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatsob import CorrectionProfile, Dimension, GuardError, build_metric, generate_family, nu, zeta
from heatsob.corrections import (
    Flags, counting_corrections, counting_kappa, counting_log_Phi, counting_theta, exponent_p, floor_half_log2, log_A_counting,
    log_phi_prime, r_prime, variable_dimension_counting,
)

LN2 = math.log(2)


def _zeta_mp(r, t, S):
    mpmath.mp.dps = 400  # r << t cancels about 2 log10(t/r) digits
    r, t, S = mpmath.mpf(r), mpmath.mpf(t), mpmath.mpf(S)
    return (r * S * mpmath.asinh(r * S / t) + t - mpmath.sqrt(t * t + r * r * S * S)) / S**2


def test_zeta_examples():
    assert zeta(0.0, 3.0) == 0.0
    exact = mpmath.log(1 + mpmath.sqrt(2)) + 1 - mpmath.sqrt(2)
    assert abs(zeta(1.0, 1.0, 1.0) - float(exact)) <= 1e-15
    assert abs(float(exact) - 0.4671600) < 1e-7
    for t in (1e2, 1e4, 1e6):
        assert 2 * t * zeta(1.0, t) / 1.0 == pytest.approx(1.0, abs=1 / t)
    with pytest.raises(GuardError):
        zeta(1.0, 0.0)
    with pytest.raises(GuardError):
        zeta(1.0, 1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e4), st.floats(1e-3, 1e6), st.floats(0.05, 20))
def test_zeta_against_high_precision(r, t, S):
    exact = float(_zeta_mp(r, t, S))
    assert zeta(r, t, S) >= 0
    assert zeta(r, t, S) == pytest.approx(exact, rel=1e-10, abs=1e-300)


def test_nu_examples():
    assert nu(0.0, 2.0) == 0.0
    assert nu(1.0, 1.0) == pytest.approx(2 * (math.sqrt(2) - 1), rel=1e-15)
    with pytest.raises(GuardError):
        nu(1.0, -1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(1e-2, 1e3), st.floats(0.1, 5))
def test_nu_monotone_in_distance(a, b, t, S):
    lo, hi = sorted((a, b))
    assert 0 <= nu(lo, t, S) <= nu(hi, t, S)


def test_counting_examples():
    assert counting_kappa(8.0, 1.0) == 1
    assert counting_theta(8.0, 4.0, 1.0) == 0.75
    assert counting_corrections(64.0, 0.0, 3.0, 1.0).log_Phi == 0.0
    with pytest.raises(GuardError, match="r >= 2S"):
        counting_kappa(1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(32, 1e8), st.floats(0.1, 10), st.floats(2.1, 12))
def test_counting_psi_is_phi_at_sixteenth(r, deg, n):
    c = counting_corrections(r, deg, n, 1.0)
    assert c.log_Psi == counting_log_Phi(r / 16, deg, n, 1.0)
    assert c.log_Phi >= 0 and 0 < c.theta <= 1


def test_floor_exact_at_powers_of_four():
    for k in range(0, 30):
        assert floor_half_log2(4.0**k) == k
        assert floor_half_log2(4.0**k * (1 - 1e-9)) == k - 1
    flags = Flags()
    floor_half_log2(16.0 * (1 + 1e-11), flags)
    assert any("within" in f for f in flags.items)


@settings(max_examples=100, deadline=None)
@given(st.floats(2, 1e12), st.floats(2, 1e12))
def test_kappa_monotone(a, b):
    lo, hi = sorted((a, b))
    assert counting_kappa(lo, 1.0) <= counting_kappa(hi, 1.0)


def test_log_space_constants():
    # log2 A' = 41 N^3 at N = 3, phi = 1: far beyond double range
    g = generate_family("path_8")
    prof = CorrectionProfile(build_metric(g, "combinatorial"), 3.0, 1.0)
    assert prof.log_A_prime("0", 4.0) / LN2 == pytest.approx(1107.0, rel=1e-15)
    assert log_A_counting(3.0, 2.0) == pytest.approx(43 * 27 * LN2 + 72 * LN2, rel=1e-15)
    assert log_phi_prime(3.0, 1.0) / LN2 == pytest.approx(796 * 9 + 6, rel=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(2.1, 8), st.floats(1, 50), st.floats(0.5, 10))
def test_logs_match_direct_evaluation(n, phi, deg):
    try:
        direct = 2.0 ** (43 * n**3) * phi ** (8 * n * n)
    except OverflowError:
        direct = math.inf
    if direct < 1e300:
        assert math.exp(log_A_counting(n, phi)) == pytest.approx(direct, rel=1e-10)
    r = 64.0
    c = counting_corrections(r, deg, n, 1.0)
    try:
        direct = (1 + r * r * deg) ** (3 * n * n * c.theta)
    except OverflowError:
        direct = math.inf
    if direct < 1e300:
        assert math.exp(c.log_Phi) == pytest.approx(direct, rel=1e-10)


def test_general_block_examples():
    g = generate_family("path_40")
    metric = build_metric(g, "combinatorial")
    prof = CorrectionProfile(metric, 3.0, 1.0)
    assert prof.N("5", 7.0) == 3.0
    assert metric.annulus_jump_sup("20", 4.0, 8.0) == 1.0
    assert prof.eta("20", 8.0) == 1
    for r in (32.0, 64.0, 128.0):
        assert prof.log_Psi("20", r) == prof.log_Phi("20", r / 16, r)
    assert 0 < prof.theta_N("20", 8.0, 8.0) <= 1
    with pytest.raises(GuardError):
        prof.eta("20", 1.0)
    relaxed = CorrectionProfile(metric, 3.0, 1.0, relaxed=True)
    relaxed.eta("20", 1.0)
    assert any(f.startswith("guard:") for f in relaxed.flags.items)


def test_dimension_functions():
    d = Dimension.steps([0, 10, 20], [3, 5, 4])
    assert d(5) == 3 and d(10) == 5 and d(25) == 4
    assert d.sup(2, 12) == 5 and d.sup(21, 30) == 4
    assert Dimension(3.5).sup(0, 1e9) == 3.5
    with pytest.raises(GuardError):
        Dimension(2.0)


def test_variable_dimension_pieces():
    assert r_prime(200.0, 30.0, 5.0) == 50.0
    with pytest.raises(GuardError):
        r_prime(10.0, 30.0, 5.0)
    assert exponent_p(3.0) == pytest.approx(2 / math.log(7 / 5), rel=1e-15)
    with pytest.raises(GuardError):
        exponent_p(2.0)
    vd = variable_dimension_counting(1e4, 1e3, 3.0, 1.0, 0.0)
    assert vd.n_prime == 3.0  # degree zero switches the log factor off


@settings(max_examples=60, deadline=None)
@given(st.floats(8, 1e12), st.floats(2.1, 10), st.floats(0, 10))
def test_n_prime_dominates_input(r, n, deg):
    R1 = r / 8
    vd = variable_dimension_counting(r, R1, n, 1.0, deg)
    assert vd.n_prime >= n
