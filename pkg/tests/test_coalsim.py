import math

import numpy as np
import pytest
from scipy.stats import kstest

from sweepcoal.coalsim import TimeChange, sample_holding_time, simulate_lambda, simulate_xi
from sweepcoal.offspring import replicate_rng
from sweepcoal.rates import LambdaRateTable, delta0_pd_rates, kingman_rates


def test_time_change_form():
    tc = TimeChange(rho=2.0)
    assert tc.g(0.0) == 0.0
    ts = np.linspace(0.1, 3.0, 7)
    assert all(tc.g(b) > tc.g(a) for a, b in zip(ts, ts[1:]))
    small = TimeChange(rho=1e-8)
    flat = TimeChange(rho=0.0)
    for t in ts:
        assert abs(small.g(t) - flat.g(t)) <= 1e-6


def test_holding_time_examples():
    t = sample_holding_time(2, 1.0, 0.0, TimeChange(rho=1.0), 1 - math.exp(-1))
    assert t == pytest.approx(math.log(2), abs=1e-12)
    for rho in (0.0, 1.0, 100.0):
        assert sample_holding_time(3, 2.5, 0.4, TimeChange(rho=rho), 1e-14) <= 1e-10


def test_holding_time_inversion_identity():
    rng = replicate_rng(31, 0)
    for rho in (0.0, 0.5, 1.0, 100.0):
        tc = TimeChange(rho=rho)
        for _ in range(200):
            lam = 0.1 + 10 * rng.random()
            tau = rng.random()
            u = rng.random()
            t = sample_holding_time(4, lam, tau, tc, u)
            # G(tau+t) - G(tau) = e^{rho tau} expm1(rho t)/rho, free of the
            # cancellation that a naive difference of G values suffers
            gap = t if rho == 0.0 else math.exp(rho * tau) * math.expm1(rho * t) / rho
            resid = lam * gap + math.log1p(-u)
            assert abs(resid) <= 1e-10


def test_holding_time_distribution_ks():
    # survival P(T > t) = exp(-lam (G(tau+t) - G(tau)))
    rho, lam, tau = 1.0, 2.0, 0.3
    tc = TimeChange(rho=rho)
    rng = replicate_rng(32, 0)
    ts = np.array([sample_holding_time(5, lam, tau, tc, rng.random()) for _ in range(10**5)])
    z = np.array([math.exp(-lam * (tc.g(tau + t) - tc.g(tau))) for t in ts])
    assert kstest(z, "uniform").pvalue > 1e-3


def test_kingman_two_leaves_mean_total():
    kr = kingman_rates(2)
    rng = replicate_rng(33, 0)
    tots = np.array([simulate_lambda(2, kr, rng=rng).total for _ in range(10**5)])
    se = tots.std(ddof=1) / math.sqrt(len(tots))
    assert abs(tots.mean() - 2.0) <= 3 * se
    rel = simulate_lambda(2, kr, rng=rng).relative()
    assert rel == pytest.approx([1.0])


def test_star_table_gives_star_genealogy():
    n = 10
    total = np.zeros((n + 1, n + 1))
    for b in range(2, n + 1):
        total[b, b] = 1e12
        total[b, 2] = 1e-12
    t = LambdaRateTable(n=n, total=total)
    s = simulate_lambda(n, t, rng=replicate_rng(34, 0))
    assert s.relative()[0] == pytest.approx(1.0, abs=1e-9)


def test_lambda_seed_determinism_and_normalization():
    t = kingman_rates(20)
    a = simulate_lambda(20, t, rng=replicate_rng(35, 7))
    b = simulate_lambda(20, t, rng=replicate_rng(35, 7))
    assert np.array_equal(a.lengths, b.lengths)
    assert a.relative().sum() == pytest.approx(1.0, abs=1e-12)


def test_lambda_kernel_matches_python_path():
    # the user-clock path replays the same stream through the reference loop
    t = kingman_rates(12)
    a = simulate_lambda(12, t, rng=replicate_rng(36, 1))
    b = simulate_lambda(
        12, t, tc=TimeChange(rho=0.0, custom_g=lambda x: x), rng=replicate_rng(36, 1)
    )
    assert np.allclose(a.lengths, b.lengths, rtol=1e-9, atol=1e-12)


def test_lambda_validate_flag():
    t = kingman_rates(10)
    s = simulate_lambda(10, t, tc=TimeChange(rho=5.0), rng=replicate_rng(37, 0), validate=True)
    assert s.relative().sum() == pytest.approx(1.0, abs=1e-12)


def test_xi_two_blocks_unit_rate():
    t = delta0_pd_rates(2, alpha=0.5, kappa=2.0, c=1.0)
    rng = replicate_rng(38, 0)
    tots = np.array([simulate_xi(2, t, rng=rng).total for _ in range(10**5)])
    se = tots.std(ddof=1) / math.sqrt(len(tots))
    assert abs(tots.mean() - 2.0) <= 3 * se


def test_xi_seed_determinism():
    t = delta0_pd_rates(15, alpha=0.4, kappa=2.0, c=2.0)
    a = simulate_xi(15, t, rng=replicate_rng(39, 3))
    b = simulate_xi(15, t, rng=replicate_rng(39, 3))
    assert np.array_equal(a.lengths, b.lengths)
    assert a.relative().sum() == pytest.approx(1.0, abs=1e-12)


def test_xi_small_alpha_large_c_mass_merger():
    # nearly all mass on the everyone-merges configuration
    t = delta0_pd_rates(12, alpha=0.01, kappa=2.0, c=10**6)
    rng = replicate_rng(40, 0)
    r1 = np.mean([simulate_xi(12, t, rng=rng).relative()[0] for _ in range(200)])
    assert r1 > 0.9


def test_xi_validate_growth():
    t = delta0_pd_rates(10, alpha=0.5, kappa=2.0, c=1.0)
    s = simulate_xi(10, t, tc=TimeChange(rho=100.0), rng=replicate_rng(41, 0), validate=True)
    assert s.relative().sum() == pytest.approx(1.0, abs=1e-12)


def test_growth_increases_singleton_share_paired():
    t = kingman_rates(30)
    diffs = []
    for r in range(400):
        a = simulate_lambda(30, t, tc=TimeChange(rho=0.0), rng=replicate_rng(42, r)).relative()[0]
        b = simulate_lambda(30, t, tc=TimeChange(rho=5.0), rng=replicate_rng(42, r)).relative()[0]
        diffs.append(b - a)
    diffs = np.array(diffs)
    se = diffs.std(ddof=1) / math.sqrt(len(diffs))
    assert diffs.mean() > 3 * se
