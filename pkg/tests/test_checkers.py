from __future__ import annotations

import math

import numpy as np
import pytest

from heatsob import (
    Budget, CorrectionProfile, build_graph, build_metric, check_ball_comparison,
    check_chi_hypothesis, check_gaussian, check_local_regularity, check_mean_value,
    check_noncollapsing, check_on_diagonal, check_semigroup_regularization, check_sobolev,
    check_volume_doubling, check_weak_sobolev, decompose, generate_family,
)
from heatsob.checkers import CheckError, davies_window, geometric_grid, weak_level_sup
from heatsob.corrections import GuardError, log_A_counting, log_offdiag_factor, zeta

from conftest import random_connected_graph

LN2 = math.log(2)


def _single(c: float = 1.0):
    return build_graph([], "custom", measure={"a": c}, vertices=["a"])


# -- grids -------------------------------------------------------------------


def test_geometric_grid_nested():
    coarse = geometric_grid(1.0, 1e3, 4)
    fine = geometric_grid(1.0, 1e3, 8)
    assert coarse[0] == 1.0 and coarse[-1] == 1e3 and len(coarse) == 13
    assert set(coarse) <= set(fine)
    with pytest.raises(CheckError):
        geometric_grid(0.0, 1.0, 4)


# -- (V) ---------------------------------------------------------------------


def test_volume_doubling_equal_radii():
    metric = build_metric(generate_family("path_5"), "combinatorial")
    cert = check_volume_doubling(metric, None, 3.0, lambda i, a, b: 0.0, 2.0, 2.0)
    assert cert.passed and cert.min_log_margin == 0.0


def test_volume_doubling_singleton_balls():
    metric = build_metric(generate_family("path_5"), "combinatorial")
    cert = check_volume_doubling(metric, None, 3.0, lambda i, a, b: 0.7, 0.3, 0.9)
    again = cert.reevaluate({"x": "2", "r1": 0.3, "r2": 0.9})
    assert again == pytest.approx(0.7 + 3 * math.log(3), rel=1e-15)


def test_volume_doubling_path8_sobolev_constants():
    g = generate_family("path_8")
    metric = build_metric(g)
    R1, R2 = 1.0, metric.diameter / 2
    radii = [b for b in metric.breakpoints("0") if 0 < b <= R2]
    S = check_sobolev(metric, None, radii, 3.0, 1e9, Budget(restarts=16))
    phi = max(1.0, math.ceil(max(r["phi_star"] for r in S.rows)))
    prof = CorrectionProfile(metric, 3.0, phi, relaxed=True)

    def log_Phi(i, r1, r2):
        return prof.log_A_doubling(i, r2) + prof.log_Phi_doubling(i, r1, r2)

    cert = check_volume_doubling(metric, None, 3.0, log_Phi, R1, R2)
    assert cert.passed
    assert cert.witness_error() <= 1e-12


def test_volume_doubling_violation_has_witness():
    metric = build_metric(generate_family("star_8"))
    cert = check_volume_doubling(metric, None, 3.0, lambda i, a, b: 0.0, 0.1, 10.0)
    assert not cert.passed
    w = cert.witness
    assert w["r1"] < w["r2"] and cert.witness_error() <= 1e-12


def test_no_overflow_for_large_constants():
    metric = build_metric(generate_family("grid_5x5"))
    prof = CorrectionProfile(metric, 10.0, 1e6, relaxed=True)
    cert = check_volume_doubling(
        metric, None, 10.0, lambda i, a, b: prof.log_A(i, b) + prof.log_Phi(i, a, b), 1.0, 3.0)
    assert cert.passed and math.isfinite(cert.min_log_margin)


# -- (L) ---------------------------------------------------------------------


def test_local_regularity_examples(two_vertex):
    single = build_metric(_single(2.0))
    assert check_local_regularity(single, None, 3.0, 1.0, 1.0, 1.0).passed
    cert = check_local_regularity(build_metric(two_vertex), None, 4.0, 1.0, 1.0, 1.0)
    assert cert.min_log_margin == pytest.approx(math.log(16) - math.log(2), rel=1e-15)


def test_sobolev_implies_local_regularity():
    rng = np.random.default_rng(31)
    for _ in range(5):
        g = random_connected_graph(rng, 9)
        metric = build_metric(g)
        for x in (0, 4):
            for r in metric.breakpoints(x)[1:4]:
                S = check_sobolev(metric, [x], [float(r)], 3.0, 1e9, Budget(restarts=16))
                phi = S.rows[0]["phi_star"]
                assert check_sobolev(metric, [x], [float(r)], 3.0, phi, Budget(restarts=16)).passed
                L = check_local_regularity(metric, [x], 3.0, phi, float(r), float(r))
                assert L.passed


# -- (G) and (O) -------------------------------------------------------------------


def test_gaussian_diagonal_terms_vanish():
    for t in (0.5, 3.0, 1e4):
        assert zeta(0.0, t) == 0.0 and log_offdiag_factor(0.0, t) == 0.0


def test_gaussian_two_vertex_counting_constant(two_vertex):
    metric = build_metric(two_vertex)
    dec = decompose(two_vertex)
    psi = log_A_counting(3.0, 1.0)
    cert = check_gaussian(dec, metric, None, 3.0, lambda i, tau: psi, 1.0, 1.0,
                          geometric_grid(1.0, 1e3, 16))
    assert cert.passed and cert.witness_error() <= 1e-12
    assert any("sampled" in f for f in cert.flags)
    late = check_gaussian(dec, metric, None, 3.0, lambda i, tau: psi, 1.0, 1.0, [1e6])
    assert late.passed
    # p -> 1/m(X) = 1/2 on the diagonal, bound -> Psi^2 / m(X)
    diag = [r for r in late.rows if r["x"] == r["y"]] or late.rows
    assert all(r["margin"] >= 0 for r in diag)


def test_gaussian_grid_refinement_never_raises_minimum():
    g = generate_family("path_12")
    metric = build_metric(g)
    dec = decompose(g)
    psi = lambda i, tau: 0.05  # noqa: E731 - tight enough to fail somewhere
    mins = []
    for density in (2, 4, 8, 16):
        c = check_gaussian(dec, metric, None, 3.0, psi, 1.0, 4.0, geometric_grid(1.0, 64.0, density))
        mins.append(c.min_log_margin)
    assert all(b <= a for a, b in zip(mins, mins[1:]))


def test_gaussian_implies_on_diagonal():
    g = generate_family("cycle_16", "normalizing")
    metric = build_metric(g, "combinatorial")
    dec = decompose(g)
    psi = lambda i, tau: 0.6 + 0.01 * tau  # noqa: E731
    grid = geometric_grid(1.0, 36.0, 8)
    G = check_gaussian(dec, metric, None, 3.0, psi, 1.0, 6.0, grid)
    assert G.passed
    O = check_on_diagonal(dec, metric, None, psi, np.sqrt(grid))
    assert O.passed and O.witness_error() <= 1e-12


def test_on_diagonal_single_vertex():
    g = _single(4.0)
    metric, dec = build_metric(g), decompose(g)
    assert check_on_diagonal(dec, metric, None, lambda i, r: 0.0, [1.0, 2.0]).passed
    bad = check_on_diagonal(dec, metric, None, lambda i, r: -0.1, [1.0])
    assert not bad.passed and bad.min_log_margin == pytest.approx(-0.2, rel=1e-12)


def test_gaussian_underflow_flagged():
    g = generate_family("path_2000")
    metric = build_metric(g)
    dec = decompose(g)
    c = check_gaussian(dec, metric, None, 3.0, lambda i, tau: 5.0, 1.0, 1.0, [1.0], centers=["0"])
    assert any("underflow" in f or "resolution" in f for f in c.flags)


# -- lemma-level checks ---------------------------------------------------------


def _noncollapse(fam, mode, metric_choice):
    g = generate_family(fam, mode)
    metric = build_metric(g, metric_choice)
    x = g.ids[len(g.ids) // 2]
    R = metric.diameter / 2
    radii = [b for b in metric.breakpoints(x) if 0 < b <= R]
    S = check_sobolev(metric, [x], radii, 3.0, 1e9, Budget(restarts=16))
    phi = max(r["phi_star"] for r in S.rows)
    C = phi * R * R / metric.ball_measure(x, R) ** (2 / 3)
    return check_noncollapsing(metric, x, R, 3.0, C, relaxed=True)


def test_noncollapsing_examples():
    for fam, mode, choice in (("path_16", "counting", "default"),
                              ("cycle_32", "normalizing", "combinatorial")):
        cert = _noncollapse(fam, mode, choice)
        assert cert.passed and cert.witness_error() <= 1e-12
    metric = build_metric(generate_family("path_16"), "combinatorial")
    with pytest.raises(GuardError):
        check_noncollapsing(metric, "8", 100.0, 3.0, 1.0)


def test_ball_comparison():
    g = generate_family("cycle_24", "normalizing")
    metric = build_metric(g, "combinatorial")
    V = check_volume_doubling(metric, None, 3.0, lambda i, a, b: LN2, 2.0, 8.0)
    assert V.passed
    cert = check_ball_comparison(metric, "0", 8.0, 3.0, LN2, V, relaxed=True)
    full = 18 * 3 * LN2 + 9 * LN2
    assert cert.passed and all(r["margin"] == pytest.approx(full, rel=1e-15) for r in cert.rows)
    with pytest.raises(CheckError):
        check_ball_comparison(metric, "0", 8.0, 3.0, 0.0, None)
    rng = np.random.default_rng(2)
    g = random_connected_graph(rng, 14, extra=0.2)
    metric = build_metric(g)
    r = 2.0
    V = check_volume_doubling(metric, None, 3.0, lambda i, a, b: 2.0, r / 4, r)
    if V.passed:
        assert check_ball_comparison(metric, "0", r, 3.0, 2.0, V, relaxed=True).passed


def test_mean_value_constant_solution():
    g = generate_family("path_6")
    metric, dec = build_metric(g), decompose(g)
    r, T, tau, n = 2.0, 8.0, 0.5, 3.0
    base = check_mean_value(dec, metric, "2", r, n, 1.0, 0.0, tau, T, np.zeros(6),
                            samples=0, extra=[np.full(6, 3.0)], relaxed=True)
    log_chi = base.params["log_chi"]
    expected = -2 * log_chi + math.log(2 * tau * r * r * metric.ball_measure("2", r))
    assert base.rows[0]["margin"] == pytest.approx(expected, abs=1e-9)
    shifted = check_mean_value(dec, metric, "2", r, n, 1.0, 0.0, tau, T, np.full(6, 1.7),
                               samples=0, extra=[np.full(6, 3.0)], relaxed=True)
    assert shifted.rows[0]["margin"] == pytest.approx(base.rows[0]["margin"], abs=1e-9)


def test_mean_value_two_vertex_delta(two_vertex):
    metric, dec = build_metric(two_vertex), decompose(two_vertex)
    cert = check_mean_value(dec, metric, "x", 128.0, 3.0, 1.0, 0.0, 1.0, 128.0**2,
                            [0.0, math.log(2)], samples=100, extra=[[1.0, 0.0]])
    assert cert.passed and cert.n_points == 101 and cert.witness_error() <= 1e-12


def test_chi_hypothesis_examples():
    g = _single(2.0)
    dec = decompose(g)
    zero = check_chi_hypothesis(dec, ["a"], 1.0, 2.0, 0.0, 1.5, [[0.0]], samples=0,
                                extra=[[0.0]])
    assert zero.passed
    cert = check_chi_hypothesis(dec, ["a"], 1.0, 3.0, -0.25, 2.0, [[0.0]], samples=0,
                                extra=[[1.5]])
    assert cert.rows[0]["margin"] == pytest.approx(math.log(2.0 * 2.0) + 0.5, abs=1e-10)
    with pytest.raises(CheckError, match="inverted"):
        check_chi_hypothesis(dec, ["a"], 3.0, 1.0, 0.0, 2.0, [[0.0]])


def test_semigroup_regularization_examples():
    g = generate_family("path_16")
    metric, dec = build_metric(g), decompose(g)
    radii = [1.0, 2.0, 4.0]
    C = max(dec.kernel_matrix(r * r).max() * r**3 for r in radii)
    cert = check_semigroup_regularization(dec, metric, None, C, 3.0, radii, samples=100,
                                          extra=[np.ones(16)])
    assert cert.passed and cert.witness_error() <= 1e-12
    const_rows = [r for r in cert.rows if r["sample"] == 0]
    assert all(r["margin"] == math.inf for r in const_rows)
    single = _single(3.0)
    c1 = check_semigroup_regularization(decompose(single), build_metric(single), None,
                                        1 / 3.0, 3.0, [1.0], samples=3)
    assert c1.passed


def test_weak_level_sup():
    m = np.array([1.0, 2.0, 0.5])
    n = 3.0
    val, level = weak_level_sup(m, np.array([0.0, 1.0, 0.0]), n)
    assert val == pytest.approx(math.log(2.0)) and level == 1.0
    val, _ = weak_level_sup(m, np.full(3, 2.0), n)
    assert val == pytest.approx((2 + 2 / n) * math.log(2.0) + math.log(3.5))
    # brute force over a dense lambda grid
    f = np.array([0.3, 1.2, 0.7])
    lam = np.linspace(1e-6, 1.2, 200001, endpoint=False)
    brute = max(l ** (2 + 2 / n) * m[f > l].sum() for l in lam[::50])
    assert math.exp(weak_level_sup(m, f, n)[0]) >= brute


def test_weak_sobolev_cycle():
    g = generate_family("cycle_32", "normalizing")
    metric, dec = build_metric(g, "combinatorial"), decompose(g)
    radii = [1.0, 2.0, 4.0, 8.0]
    C = max(dec.kernel_matrix(r * r).max() * r**3 for r in radii)
    assert check_semigroup_regularization(dec, metric, metric.ball("0", 8.0), C, 3.0,
                                          radii, samples=20).passed
    ind = np.zeros(32)
    ind[0] = 1.0
    cert = check_weak_sobolev(metric, "0", 3.0, C, 1.0, 1.0, 8.0, samples=100, extra=[ind])
    assert cert.passed and cert.witness_error() <= 1e-12


def test_chi_hypothesis_path8_windows():
    g = generate_family("path_8")
    metric, dec = build_metric(g), decompose(g)
    prof = CorrectionProfile(metric, 3.0, relaxed=True)
    rng = np.random.default_rng(1)
    omegas = [0.3 * rng.normal(size=8) for _ in range(3)]
    from heatsob.spectral import h_omega
    h = max(h_omega(g, o) for o in omegas)
    wins = [davies_window(prof, x, 2.0, 0.5, 10.0, 3.0, 0.0, h) for x in g.ids]
    a, b, lc = (np.array(v) for v in zip(*wins))
    cert = check_chi_hypothesis(dec, g.ids, a, b, lc, 10.0, omegas, samples=100)
    assert cert.passed and cert.witness_error() <= 1e-12
