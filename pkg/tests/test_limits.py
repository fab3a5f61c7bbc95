"""Limit targets, the beta0 constant, the death chain, and lattice-sum audits."""

from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from toruswalk.kernels import uniform_kernel
from toruswalk.limits import (
    DEATH_EXACT_MAX,
    RING_LOG2_LIMIT,
    AuditError,
    Beta0Result,
    QuadratureSpec,
    RegimeParams,
    alpha_prime,
    beta,
    beta0,
    death_process_dist,
    exponential_sum_audit,
    lemma21_audit,
    t_scale,
    target_laplace,
    target_mean,
)
from toruswalk.kernels import QuadratureError


def test_t_scale_frozen_value():
    assert t_scale(8, 2) == pytest.approx(0.5198603854199589, rel=1e-15)
    assert t_scale(8, 2) == math.log(8) / 4


def test_t_scale_validation():
    for bad in ((7, 2), (8, 3), (0, 2), (8, 0)):
        with pytest.raises(ValueError):
            t_scale(*bad)


def test_regime_params_validation():
    RegimeParams(rho=math.inf, sigma2=1 / 12, alpha=1.0)
    RegimeParams(rho=0.0, sigma2=0.1875, alpha=0.0)
    with pytest.raises(ValueError):
        RegimeParams(rho=-1.0, sigma2=1.0)
    with pytest.raises(ValueError):
        RegimeParams(rho=1.0, sigma2=0.0)
    with pytest.raises(ValueError):
        RegimeParams(rho=1.0, sigma2=1.0, alpha=1.5)


def test_beta_and_alpha_prime_formulas():
    p = RegimeParams(rho=2.0, sigma2=1 / 12, alpha=0.5)
    assert beta(p) == pytest.approx(2.0 + 12 / math.pi, rel=1e-15)
    r = 2.0 * math.pi / 12
    assert alpha_prime(p) == pytest.approx((0.5 + r) / (1 + r), rel=1e-15)
    inf_p = RegimeParams(rho=math.inf, sigma2=1 / 12)
    with pytest.raises(ValueError):
        beta(inf_p)
    with pytest.raises(ValueError):
        alpha_prime(inf_p)


def test_target_laplace_cases():
    # infinite rho: meanfield transform, independent of alpha and sigma2
    p_inf = RegimeParams(rho=math.inf, sigma2=0.3, alpha=0.2)
    assert target_laplace(p_inf, 3.0) == pytest.approx(0.25, rel=1e-15)
    assert target_mean(p_inf) == 1.0
    # rho = 0, alpha = 1: pure exponential part with beta = 1/(pi sigma2)
    p0 = RegimeParams(rho=0.0, sigma2=1 / 12, alpha=1.0)
    b = 12 / math.pi
    assert target_laplace(p0, 2.0) == pytest.approx(1 / (1 + 2 * b), rel=1e-14)
    assert target_mean(p0) == pytest.approx(b, rel=1e-14)
    # rho = 0, general alpha: an atom of weight 1 - alpha at zero
    pa = RegimeParams(rho=0.0, sigma2=0.1875, alpha=0.5)
    bb = 1 / (math.pi * 0.1875)
    assert target_laplace(pa, 1.0) == pytest.approx(0.5 + 0.5 / (1 + bb), rel=1e-14)
    assert target_laplace(pa, 0.0) == 1.0
    with pytest.raises(ValueError):
        target_laplace(pa, -0.1)


@given(
    rho=st.floats(min_value=0.0, max_value=50.0),
    sigma2=st.floats(min_value=1e-3, max_value=10.0),
    alpha=st.floats(min_value=0.0, max_value=1.0),
    lam=st.floats(min_value=0.0, max_value=100.0),
)
def test_target_laplace_is_a_laplace_transform_value(rho, sigma2, alpha, lam):
    p = RegimeParams(rho=rho, sigma2=sigma2, alpha=alpha)
    v = target_laplace(p, lam)
    assert 0.0 < v <= 1.0
    assert target_laplace(p, 0.0) == pytest.approx(1.0, abs=1e-12)
    # decreasing in lam
    assert target_laplace(p, lam + 1.0) <= v + 1e-12


def test_beta0_at_c_one_is_exact():
    res = beta0(1.0, uniform_kernel(2))
    assert res.value == pytest.approx(12 / math.pi + 1.0, abs=1e-12)
    assert res.c == 1.0
    assert res.levels[-1][1] == res.value


def test_beta0_midrange_against_fine_reference():
    q0 = uniform_kernel(2)
    quick = beta0(0.5, q0, QuadratureSpec(base=64, max_axis=4096, tol=1e-6))
    fine = beta0(0.5, q0, QuadratureSpec(base=1024, max_axis=8192, tol=1e-9))
    assert quick.value == pytest.approx(fine.value, abs=1e-6)
    # levels are recorded in refinement order
    ns = [n for n, _ in quick.levels]
    assert ns == sorted(ns) and ns[0] == 64


def test_beta0_strict_cap_raises():
    with pytest.raises(QuadratureError) as exc:
        beta0(0.01, uniform_kernel(2), QuadratureSpec(base=2, max_axis=4, tol=1e-12))
    assert np.isfinite(exc.value.last)


def test_beta0_rejects_bad_weight():
    for c in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            beta0(c, uniform_kernel(2))


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(base=3)
    with pytest.raises(ValueError):
        QuadratureSpec(base=64, max_axis=32)
    with pytest.raises(ValueError):
        QuadratureSpec(tol=0.0)


def test_death_dist_two_lineages_closed_form():
    for t in (0.0, 0.4, 2.0):
        p = death_process_dist(2, t)
        assert p[0] == pytest.approx(1 - math.exp(-t), rel=1e-14, abs=1e-14)
        assert p[1] == pytest.approx(math.exp(-t), rel=1e-14)


def test_death_dist_time_zero_is_point_mass():
    p = death_process_dist(7, 0.0)
    assert p[6] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(p[:6])) < 1e-12


def test_death_dist_single_lineage():
    assert death_process_dist(1, 5.0).tolist() == [1.0]


def test_death_dist_matches_matrix_exponential():
    # the mixture coefficients alternate in sign and grow with n, so the
    # worst-case cancellation at n = 30 costs a few digits; still far
    # below anything a Monte Carlo comparison can resolve
    for n, t, tol in ((4, 0.7, 1e-12), (9, 0.15, 1e-11), (30, 0.02, 1e-7)):
        Q = np.zeros((n, n))
        for k in range(2, n + 1):
            r = k * (k - 1) / 2.0
            Q[k - 1, k - 1] = -r
            Q[k - 1, k - 2] = r
        ref = scipy.linalg.expm(t * Q)[n - 1]
        assert np.max(np.abs(death_process_dist(n, t) - ref)) < tol


def test_death_dist_large_n_path():
    p = death_process_dist(DEATH_EXACT_MAX + 5, 0.05)
    assert p.shape == (35,)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(p > -1e-12)


@given(
    n=st.integers(min_value=1, max_value=30),
    t=st.floats(min_value=0.0, max_value=50.0),
)
@settings(max_examples=60, deadline=None)
def test_death_dist_is_a_distribution(n, t):
    p = death_process_dist(n, t)
    assert p.shape == (n,)
    # mixture-coefficient cancellation leaves residue ~1e-8 near n = 30
    assert np.all(p > -1e-7)
    # the telescoping construction makes the total exact
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_death_dist_count_decreases_stochastically_in_time():
    # P(D_t <= k) grows with t for every k
    n = 6
    cdf_early = np.cumsum(death_process_dist(n, 0.3))
    cdf_late = np.cumsum(death_process_dist(n, 1.1))
    assert np.all(cdf_late >= cdf_early - 1e-12)


def test_death_dist_validation():
    with pytest.raises(ValueError):
        death_process_dist(0, 1.0)
    with pytest.raises(ValueError):
        death_process_dist(3, -0.1)


def _brute_square_sum(K: int, theta) -> complex:
    lo, hi = -(K // 2) + 1, K // 2
    total = 0.0 + 0.0j
    for x1 in range(lo, hi + 1):
        for x2 in range(lo, hi + 1):
            total += complex(
                math.cos(theta[0] * x1 + theta[1] * x2),
                math.sin(theta[0] * x1 + theta[1] * x2),
            )
    return total


def _brute_disc_sum(K: int, theta) -> complex:
    half = K // 2
    total = 0.0 + 0.0j
    for x1 in range(-half, half + 1):
        for x2 in range(-half, half + 1):
            if x1 * x1 + x2 * x2 <= (K / 2.0) ** 2:
                total += complex(
                    math.cos(theta[0] * x1 + theta[1] * x2),
                    math.sin(theta[0] * x1 + theta[1] * x2),
                )
    return total


def test_exponential_sums_match_brute_force():
    rng = np.random.default_rng(3)
    for K in (2, 8, 10, 64):
        for _ in range(4):
            th = rng.uniform(-math.pi, math.pi, size=2)
            if max(abs(th[0]), abs(th[1])) < 1e-3:
                th = np.array([1.0, -0.5])
            audit = exponential_sum_audit(K, th)
            assert audit.box_abs == pytest.approx(
                abs(_brute_square_sum(K, th)), rel=1e-8, abs=1e-8
            )
            assert audit.disc_abs == pytest.approx(
                abs(_brute_disc_sum(K, th)), rel=1e-8, abs=1e-8
            )


def test_exponential_sum_bounds_hold_on_random_draws():
    rng = np.random.default_rng(11)
    for _ in range(100):
        K = 2 * int(rng.integers(1, 200))
        th = rng.uniform(-math.pi, math.pi, size=2)
        if max(abs(th[0]), abs(th[1])) == 0.0:
            continue
        audit = exponential_sum_audit(K, th)
        assert audit.box_abs <= audit.box_bound * (1 + 1e-12) + 1e-9
        assert audit.disc_abs <= audit.disc_bound * (1 + 1e-12) + 1e-9


def test_exponential_sum_audit_validation():
    with pytest.raises(ValueError):
        exponential_sum_audit(1, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        exponential_sum_audit(8, np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        exponential_sum_audit(8, np.array([4.0, 0.0]))


def _brute_ring_sum(K: int, J: int, theta) -> complex:
    half = K // 2
    total = 0.0 + 0.0j
    for x1 in range(-half, half + 1):
        for x2 in range(-half, half + 1):
            r2 = x1 * x1 + x2 * x2
            if (J / 2.0) ** 2 < r2 <= (K / 2.0) ** 2:
                ph = theta[0] * x1 + theta[1] * x2
                total += complex(math.cos(ph) / r2, math.sin(ph) / r2)
    return total


def test_lemma21_audit_small_sizes_brute_force():
    thetas = np.array([[1.0, 0.3], [-2.0, 2.5]])
    audit = lemma21_audit(16, 4, thetas)
    assert audit.K == 16 and audit.J == 4
    assert len(audit.exp_rows) == 2 and len(audit.ring_rows) == 2
    for row, th in zip(audit.ring_rows, thetas):
        assert row.ring_abs == pytest.approx(
            abs(_brute_ring_sum(16, 4, th)), rel=1e-10, abs=1e-10
        )
        sup = max(abs(th[0]), abs(th[1]))
        assert row.implied_constant == pytest.approx(
            row.ring_abs * min(1.0, 4 * sup), rel=1e-12
        )
    # brute-force the inverse-square scalars
    def brute_torus(K):
        tot = 0.0
        for x1 in range(-(K // 2) + 1, K // 2 + 1):
            for x2 in range(-(K // 2) + 1, K // 2 + 1):
                if x1 or x2:
                    tot += 1.0 / (x1 * x1 + x2 * x2)
        return tot

    def brute_disc(K):
        tot = 0.0
        half = K // 2
        for x1 in range(-half, half + 1):
            for x2 in range(-half, half + 1):
                r2 = x1 * x1 + x2 * x2
                if 0 < r2 <= (K / 2.0) ** 2:
                    tot += 1.0 / r2
        return tot

    assert audit.torus_log_ratio == pytest.approx(
        brute_torus(16) / math.log(16), rel=1e-10
    )
    assert audit.disc_log_ratio == pytest.approx(
        brute_disc(16) / math.log(16), rel=1e-10
    )
    assert audit.ring_dyadic_sum == pytest.approx(
        brute_disc(32) - brute_disc(16), rel=1e-10
    )


def test_lemma21_log_ratios_approach_their_limits():
    audit = lemma21_audit(2000, 10, np.array([[1.0, 1.0]]))
    assert abs(audit.torus_log_ratio - 2 * math.pi) < 0.2
    assert abs(audit.disc_log_ratio - 2 * math.pi) < 0.3
    assert abs(audit.ring_dyadic_sum - RING_LOG2_LIMIT) < 0.02


def test_lemma21_audit_validation():
    with pytest.raises(ValueError):
        lemma21_audit(4, 4, np.array([[1.0, 0.0]]))
    with pytest.raises(ValueError):
        lemma21_audit(4, 8, np.array([[1.0, 0.0]]))
