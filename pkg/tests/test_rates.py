import math

import numpy as np
import pytest
from scipy.integrate import quad

from sweepcoal.offspring import mean_approx
from sweepcoal.rates import (
    LambdaRateTable,
    beta_pd_rates,
    config_multiplicity,
    delta0_beta_rates,
    delta0_pd_rates,
    enumerate_configurations,
    falling_factorial,
    incomplete_beta,
    kingman_coefficient,
    kingman_rates,
    pd_transition_probability,
)

ALPHA_GRID = [0.01, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 1.95]
GAMMA_GRID = [0.1, 0.5, 1.0]


def test_falling_factorial():
    assert falling_factorial(3.7, 0) == 1.0
    assert falling_factorial(5, 2) == 20.0
    assert falling_factorial(2.5, 3) == pytest.approx(1.875, abs=1e-15)


def test_incomplete_beta_closed_forms():
    assert incomplete_beta(1.0, 2.0, 3.0) == pytest.approx(1 / 12, abs=1e-14)
    for g in (0.2, 0.7, 1.0):
        assert incomplete_beta(g, 1.0, 1.0) == pytest.approx(g, abs=1e-14)
    assert incomplete_beta(0.5, 1.0, 2.0) == pytest.approx(0.375, abs=1e-14)
    with pytest.raises(ValueError):
        incomplete_beta(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        incomplete_beta(0.5, -1.0, 1.0)


def test_incomplete_beta_quadrature_oracle():
    # independent adaptive-quadrature route
    for p in (0.05, 0.36, 1.0):
        for a in (0.05, 0.9, 2.5, 17.0):
            for b in (0.05, 1.0, 3.7):
                val, err = quad(
                    lambda t: t ** (a - 1) * (1 - t) ** (b - 1), 0.0, p, points=[0.0, p]
                )
                assert abs(incomplete_beta(p, a, b) - val) <= max(1e-12, 10 * err)


def test_kingman_rates():
    t = kingman_rates(5)
    assert t.total_rate(2, 2) == 1.0
    assert t.total_rate(5, 2) == 10.0
    assert t.total_rate(5, 3) == 0.0
    assert t.per_group_rate(5, 2) == 1.0


def test_delta0_beta_pair_normalization_grid():
    for alpha in ALPHA_GRID:
        for gamma in GAMMA_GRID:
            for kappa in (2.0, 3.0):
                for c in (1.0, 100.0):
                    t = delta0_beta_rates(4, alpha=alpha, gamma=gamma, kappa=kappa, c=c)
                    assert abs(t.total_rate(2, 2) - 1.0) <= 1e-12


def test_delta0_beta_kingman_limit():
    t = delta0_beta_rates(6, alpha=1.0, gamma=1e-9, kappa=2.0, c=1.0)
    for b in range(2, 7):
        assert t.total_rate(b, 2) == pytest.approx(math.comb(b, 2), rel=1e-6)
        for k in range(3, b + 1):
            assert t.total_rate(b, k) <= 1e-6


def test_delta0_beta_example_against_quadrature():
    # n=3, k=3, alpha=1, gamma=1, kappa=2, c=1: rate = (a c / m) B(1,2,1) / C
    m = mean_approx(2.0)
    b_21, _ = quad(lambda t: t ** (3 - 1 - 1) * (1 - t) ** (3 - 3 + 1 - 1), 0, 1)
    b_norm, _ = quad(lambda t: t ** (2 - 1 - 1) * (1 - t) ** (1 - 1), 0, 1)
    C = 2 / m**2 + (1.0 / m) * b_norm
    expected = (1.0 / m) * b_21 / C
    t = delta0_beta_rates(3, alpha=1.0, gamma=1.0, kappa=2.0, c=1.0)
    assert t.total_rate(3, 3) == pytest.approx(expected, abs=1e-12)


def test_delta0_beta_per_group_consistency():
    t = delta0_beta_rates(7, alpha=0.75, gamma=0.5, kappa=2.0, c=3.0)
    for b in range(2, 8):
        for k in range(2, b + 1):
            assert t.total_rate(b, k) == pytest.approx(
                math.comb(b, k) * t.per_group_rate(b, k), rel=1e-14
            )


def test_kingman_coefficient_kappa_gt2():
    # bracketed constant sits strictly inside (kappa+2, kappa**2)
    with pytest.raises(ValueError):
        kingman_coefficient(3.0, c_kappa=100.0)
    m = mean_approx(3.0)
    expected = (2.0 / m**2) * 5.5 / (2**3 * 1 * 2)
    assert kingman_coefficient(3.0, c_kappa=5.5) == pytest.approx(expected, rel=1e-14)


def test_pd_transition_probability_examples():
    for alpha in (0.1, 0.5, 0.9):
        assert pd_transition_probability((2,), 2, alpha) == pytest.approx(1 - alpha, abs=1e-12)
    assert pd_transition_probability((3,), 3, 0.5) == pytest.approx(0.375, abs=1e-14)
    assert pd_transition_probability((2,), 3, 0.5) == pytest.approx(0.125, abs=1e-14)
    assert 0.375 + 3 * 0.125 <= 1.0


def test_pd_transition_probability_falling_factorial_oracle():
    # direct product-form evaluation, no log-gamma
    def direct(parts, b, alpha):
        r = len(parts)
        s = b - sum(parts)
        out = alpha ** (r + s - 1) * math.factorial(r + s - 1) / math.factorial(b - 1)
        for k in parts:
            out *= falling_factorial(k - 1 - alpha, k - 1)
        return out

    for alpha in (0.05, 0.5, 0.95):
        for b, parts in [(2, (2,)), (5, (3,)), (7, (2, 2)), (9, (2, 3, 4)), (12, (2, 2, 2))]:
            assert pd_transition_probability(parts, b, alpha) == pytest.approx(
                direct(parts, b, alpha), rel=1e-11
            )


def test_pd_substochastic():
    for b in range(2, 9):
        for alpha in (0.05, 0.3, 0.6, 0.95):
            total = sum(
                config_multiplicity(parts, b) * pd_transition_probability(parts, b, alpha)
                for parts in enumerate_configurations(b)
            )
            assert total <= 1.0 + 1e-12
            if b == 2:
                assert total == pytest.approx(1 - alpha, abs=1e-12)


def _partition_count_min2(j: int) -> int:
    # independent DP: partitions of j into parts >= 2
    table = np.zeros(j + 1, dtype=np.int64)
    table[0] = 1
    for part in range(2, j + 1):
        for v in range(part, j + 1):
            table[v] += table[v - part]
    return int(table[j])


def test_configuration_enumeration_counts():
    assert enumerate_configurations(4) == [(2,), (3,), (4,), (2, 2)]
    assert len(enumerate_configurations(5)) == 6
    for b in range(2, 13):
        want = sum(_partition_count_min2(j) for j in range(2, b + 1))
        assert len(enumerate_configurations(b)) == want


def test_delta0_pd_normalization_and_scalar_oracle():
    for alpha in (0.05, 0.5, 0.95):
        for c in (1.0, 100.0):
            t = delta0_pd_rates(8, alpha=alpha, kappa=2.0, c=c)
            assert t.exit_rate(2) == pytest.approx(1.0, abs=1e-12)
            ck = kingman_coefficient(2.0)
            denom = ck + c * (1 - alpha)
            for b, parts in [(4, (2,)), (6, (2, 2)), (8, (3, 5))]:
                want = (
                    config_multiplicity(parts, b)
                    * c
                    * pd_transition_probability(parts, b, alpha)
                    / denom
                )
                if parts == (2,):
                    want += math.comb(b, 2) * ck / denom
                assert t.config_rate(b, parts) == pytest.approx(want, rel=1e-11)


def test_delta0_pd_rejects_large_n_without_override():
    with pytest.raises(ValueError):
        delta0_pd_rates(80, alpha=0.5)


def test_beta_pd_rates():
    m = (2.0 + (1.0 + 2.0**-0.5) / 0.5) / 2.0
    c_beta = 1.5 * (math.pi / 2) / m**1.5
    t = beta_pd_rates(10, alpha=0.5, beta=1.5, c=1.0)
    denom = c_beta + 0.5
    for b, parts in [(5, (3,)), (7, (2, 2))]:
        want = (
            config_multiplicity(parts, b)
            * pd_transition_probability(parts, b, 0.5)
            / denom
        )
        if len(parts) == 1:
            k = parts[0]
            want += (
                math.comb(b, k)
                * c_beta
                * incomplete_beta(1.0, k - 1.5, b - k + 1.5)
                / denom
            )
        assert t.config_rate(b, parts) == pytest.approx(want, rel=1e-10)
    # rates nonnegative across a parameter grid
    for alpha in (0.1, 0.9):
        for beta in (1.01, 1.5, 1.99):
            tt = beta_pd_rates(8, alpha=alpha, beta=beta, c=10.0)
            for b in range(2, 9):
                assert np.all(tt.rates[b] >= 0)
    # the printed form does not normalize the two-block rate; the flag does
    assert t.exit_rate(2) != pytest.approx(1.0, abs=1e-3)
    tn = beta_pd_rates(10, alpha=0.5, beta=1.5, c=1.0, normalize=True)
    assert tn.exit_rate(2) == pytest.approx(1.0, abs=1e-12)


def test_tables_are_pure():
    a = delta0_beta_rates(6, alpha=1.2, gamma=0.7, kappa=2.0, c=2.0)
    b = delta0_beta_rates(6, alpha=1.2, gamma=0.7, kappa=2.0, c=2.0)
    assert np.array_equal(a.total, b.total)
    x = delta0_pd_rates(7, alpha=0.3, kappa=2.0, c=5.0)
    y = delta0_pd_rates(7, alpha=0.3, kappa=2.0, c=5.0)
    for m in range(2, 8):
        assert np.array_equal(x.rates[m], y.rates[m])
        assert x.configs[m] == y.configs[m]
