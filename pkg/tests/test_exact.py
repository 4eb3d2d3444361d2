import math

import numpy as np
import pytest

from sweepcoal.exact import (
    brute_force_spectrum,
    expected_branch_lengths,
    kingman_phi,
    leafset_expected_branch_lengths,
    lumped_expected_branch_lengths,
    phi,
)
from sweepcoal.rates import LambdaRateTable, delta0_beta_rates, kingman_rates


def _random_table(n: int, rng: np.random.Generator) -> LambdaRateTable:
    total = np.zeros((n + 1, n + 1))
    for b in range(2, n + 1):
        total[b, 2 : b + 1] = rng.random(b - 1) + 0.05
    return LambdaRateTable(n=n, total=total)


def test_kingman_hand_values():
    kr = kingman_rates(4)
    assert brute_force_spectrum(3, kr) == pytest.approx([2.0, 1.0], abs=1e-12)
    assert lumped_expected_branch_lengths(3, kr) == pytest.approx([2.0, 1.0], abs=1e-12)
    assert leafset_expected_branch_lengths(3, kr) == pytest.approx([2.0, 1.0], abs=1e-12)
    assert phi(4, kr) == pytest.approx([6 / 11, 3 / 11, 2 / 11], abs=1e-12)


def test_two_leaves_any_table():
    t = delta0_beta_rates(4, alpha=0.5, gamma=0.7, kappa=2.0, c=4.0)
    assert brute_force_spectrum(2, t) == pytest.approx([2.0], abs=1e-12)
    assert expected_branch_lengths(2, t) == pytest.approx([2.0], abs=1e-12)


def test_oracle_equivalence_delta0_beta_grid():
    for gamma in (0.1, 0.5, 1.0):
        for alpha in (0.5, 1.0, 1.5):
            t = delta0_beta_rates(8, alpha=alpha, gamma=gamma, kappa=2.0, c=1.0)
            for n in range(3, 9):
                b = brute_force_spectrum(n, t)
                l = lumped_expected_branch_lengths(n, t)
                f = leafset_expected_branch_lengths(n, t)
                assert np.max(np.abs(b - l)) <= 1e-10
                assert np.max(np.abs(b - f)) <= 1e-10


def test_oracle_equivalence_random_tables():
    rng = np.random.default_rng(902)
    for trial in range(20):
        n = int(rng.integers(3, 9))
        t = _random_table(n, rng)
        b = brute_force_spectrum(n, t)
        assert np.max(np.abs(b - expected_branch_lengths(n, t))) <= 1e-10
        assert np.max(np.abs(b - leafset_expected_branch_lengths(n, t))) <= 1e-10


def test_lumped_vs_leafset_moderate_n():
    t = delta0_beta_rates(20, alpha=1.25, gamma=0.5, kappa=2.0, c=2.0)
    for n in (12, 16, 20):
        a = lumped_expected_branch_lengths(n, t)
        b = leafset_expected_branch_lengths(n, t)
        assert np.max(np.abs(a - b)) <= 1e-10


def test_kingman_closed_form():
    worst = 0.0
    for n in range(2, 51):
        p = phi(n, kingman_rates(n))
        worst = max(worst, float(np.max(np.abs(p - kingman_phi(n)))))
    assert worst <= 1e-12


def test_phi_normalization_and_range():
    t = delta0_beta_rates(30, alpha=0.75, gamma=0.3, kappa=2.0, c=10.0)
    p = phi(30, t)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all((p > 0) & (p < 1))


def test_star_dominant_table():
    n = 12
    total = np.zeros((n + 1, n + 1))
    for b in range(2, n + 1):
        total[b, 2] = 1e-9 * math.comb(b, 2)
        total[b, b] = 1e9
    t = LambdaRateTable(n=n, total=total)
    p = phi(n, t)
    assert p[0] > 0.999


def test_caps_and_errors():
    t = kingman_rates(10)
    with pytest.raises(ValueError):
        expected_branch_lengths(11, t)
    with pytest.raises(ValueError):
        expected_branch_lengths(9, t, n_cap=8)
    with pytest.raises(ValueError):
        brute_force_spectrum(9, kingman_rates(9))
    with pytest.raises(ValueError):
        lumped_expected_branch_lengths(40, kingman_rates(40))
