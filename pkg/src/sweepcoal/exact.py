"""Exact expected branch-length spectra for single-merger coalescents.

Three independent routes to E[L_i(n)], the expected total length of branches
subtending exactly i leaves:

* ``brute_force_spectrum``: the full labeled chain on set partitions of [n]
  (Bell-number states, n <= 8).  Slow, unarguable.
* ``lumped_expected_branch_lengths``: the same chain lumped by exchangeability
  to integer partitions of n.  Exact for any n, but the state space is the
  partition number p(n), so it is capped (p(36) is about 1.8e4 while p(100)
  is about 1.9e8 -- far beyond reach).
* ``leafset_expected_branch_lengths``: an O(n^3)-sized recursion over
  (block count, number of blocks making up a fixed leaf set), which scales
  comfortably to n in the hundreds.

The public entry point ``expected_branch_lengths`` dispatches by n and the
three agree to ~1e-12, which the test suite enforces.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .rates import LambdaRateTable

__all__ = [
    "expected_branch_lengths",
    "brute_force_spectrum",
    "lumped_expected_branch_lengths",
    "leafset_expected_branch_lengths",
    "phi",
    "kingman_phi",
]

LUMPED_DEFAULT_CAP = 32


def expected_branch_lengths(n: int, rates: LambdaRateTable, n_cap: int = 100) -> np.ndarray:
    """E[L_1..L_{n-1}] for the coalescent started from n singleton blocks.

    Uses the lumped integer-partition chain for small n and the leaf-set
    recursion beyond that; both compute the identical quantity.
    """
    if n > n_cap:
        raise ValueError(f"n={n} exceeds the configured cap {n_cap}")
    if n > rates.n:
        raise ValueError("rate table not defined up to n")
    if n <= 20:
        return lumped_expected_branch_lengths(n, rates)
    return leafset_expected_branch_lengths(n, rates)


def phi(n: int, rates: LambdaRateTable, n_cap: int = 100) -> np.ndarray:
    """Normalized spectrum phi_i = E[L_i] / sum_j E[L_j]; sums to one."""
    e = expected_branch_lengths(n, rates, n_cap=n_cap)
    return e / e.sum()


def kingman_phi(n: int) -> np.ndarray:
    """Closed form i**-1 / sum_j j**-1 for the pairwise-merger coalescent."""
    inv = 1.0 / np.arange(1, n, dtype=np.float64)
    return inv / inv.sum()


def brute_force_spectrum(n: int, rates: LambdaRateTable) -> np.ndarray:
    """E[L_1..L_{n-1}] on the full labeled partition lattice of [n] (n <= 8)."""
    if n > 8:
        raise ValueError("brute force is limited to n <= 8")
    if n < 2:
        raise ValueError("n must be >= 2")

    start = frozenset(frozenset([i]) for i in range(n))
    visit = {start: 1.0}
    expected = np.zeros(n + 1)
    # process by decreasing block count; every merger strictly reduces it
    by_count: dict[int, dict] = {}
    by_count.setdefault(n, {})[start] = 1.0
    for m in range(n, 1, -1):
        states = by_count.get(m, {})
        lam = rates.exit_rate(m)
        for state, p in states.items():
            for block in state:
                expected[len(block)] += p * (1.0 / lam)
            for k in range(2, m + 1):
                per_group = rates.per_group_rate(m, k)
                if per_group == 0.0:
                    continue
                jump = per_group / lam
                for subset in itertools.combinations(state, k):
                    merged = frozenset.union(*subset)
                    succ = (state - frozenset(subset)) | {merged}
                    tgt = by_count.setdefault(len(succ), {})
                    tgt[succ] = tgt.get(succ, 0.0) + p * jump
    return expected[1:n]


@lru_cache(maxsize=None)
def _integer_partitions(n: int) -> tuple[tuple[int, ...], ...]:
    """All partitions of n as nonincreasing tuples."""
    out = []

    def rec(remaining, largest, prefix):
        if remaining == 0:
            out.append(prefix)
            return
        for part in range(min(largest, remaining), 0, -1):
            rec(remaining - part, part, prefix + (part,))

    rec(n, n, ())
    return tuple(out)


def _sub_multisets(counts: list[tuple[int, int]], k: int):
    """Yield (sub-multiset counts, number of ways) for k-part selections.

    counts is [(value, multiplicity), ...]; ways is the product of binomials
    over distinct values.
    """

    def rec(idx, remaining, chosen, ways):
        if remaining == 0:
            yield chosen, ways
            return
        if idx == len(counts):
            return
        value, mult = counts[idx]
        for take in range(0, min(mult, remaining) + 1):
            yield from rec(
                idx + 1,
                remaining - take,
                chosen + ((value, take),) if take else chosen,
                ways * math.comb(mult, take),
            )

    yield from rec(0, k, (), 1)


def lumped_expected_branch_lengths(
    n: int, rates: LambdaRateTable, cap: int = LUMPED_DEFAULT_CAP
) -> np.ndarray:
    """E[L_1..L_{n-1}] on the exchangeability-lumped chain over integer
    partitions of n.

    From a partition with m parts, a k-merger of one specific group has rate
    totalRate[m][k] / binom(m, k); the rate into a successor partition is that
    times the number of k-sub-multisets of parts realizing it.  Visiting
    probabilities flow forward through the DAG ordered by part count.
    """
    if n > cap:
        raise ValueError(
            f"n={n} exceeds the lumped-chain cap {cap} "
            f"(the state space is the partition number of n)"
        )
    if n < 2:
        raise ValueError("n must be >= 2")

    singletons = tuple([1] * n)
    visit: dict[tuple[int, ...], float] = {singletons: 1.0}
    by_count: dict[int, dict] = {n: {singletons: 1.0}}
    expected = np.zeros(n + 1)
    for m in range(n, 1, -1):
        states = by_count.get(m, {})
        lam = rates.exit_rate(m)
        for state, p in states.items():
            for part in state:
                expected[part] += p * (1.0 / lam)
            counts = [(v, len(list(g))) for v, g in itertools.groupby(state)]
            for k in range(2, m + 1):
                per_group = rates.per_group_rate(m, k)
                if per_group == 0.0:
                    continue
                for chosen, ways in _sub_multisets(counts, k):
                    newpart = sum(v * t for v, t in chosen)
                    remaining = list(state)
                    for v, t in chosen:
                        for _ in range(t):
                            remaining.remove(v)
                    remaining.append(newpart)
                    succ = tuple(sorted(remaining, reverse=True))
                    flow = p * per_group * ways / lam
                    tgt = by_count.setdefault(m - k + 1, {})
                    tgt[succ] = tgt.get(succ, 0.0) + flow
    return expected[1:n]


def leafset_expected_branch_lengths(n: int, rates: LambdaRateTable) -> np.ndarray:
    """E[L_1..L_{n-1}] via a recursion over a fixed leaf set.

    Fix a set A of i leaves.  Track g[b][j] = P(at the time the process has b
    blocks, A is the disjoint union of exactly j of them).  A k-merger picked
    uniformly among binom(b, k) groups either avoids A's blocks entirely
    (probability binom(b-j, k)/binom(b, k); j unchanged), merges only within
    them (binom(j, k)/binom(b, k); j -> j-k+1), or straddles and kills the
    event.  By leaf exchangeability

        E[#blocks of size i at level b] = binom(n, i) * g[b][1],

    and E[L_i] = sum_b binom(n, i) * g[b][1] / lambda_b with lambda_b the
    exit rate at b blocks.  The initial condition is g[n][i] = 1.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    lam = rates.exit_rates()
    # comb[x, k]; float64 is exact to ~1e-16 relative, plenty here
    comb = np.zeros((n + 1, n + 1))
    comb[:, 0] = 1.0
    for x in range(1, n + 1):
        for k in range(1, x + 1):
            comb[x, k] = comb[x - 1, k - 1] + comb[x - 1, k]

    # G[b, j, i]: i indexes the leaf-set size, columns 1..n-1 used
    G = np.zeros((n + 1, n, n))
    for i in range(1, n):
        G[n, i, i] = 1.0
    expected = np.zeros(n)
    for b in range(n, 1, -1):
        # accrual at level b: E[#size-i blocks] / lambda_b
        expected += G[b, 1, :] * (1.0 / lam[b])
        jmax = min(b - 1, n - 1)
        if jmax < 1:
            continue
        js = np.arange(1, jmax + 1)
        row = G[b, 1 : jmax + 1, :]
        for k in range(2, b + 1):
            w = rates.total_rate(b, k) / lam[b]
            if w == 0.0:
                continue
            b2 = b - k + 1
            if b2 < 2:
                continue
            denom = comb[b, k]
            stay = comb[b - js, k] / denom
            G[b2, 1 : jmax + 1, :] += (w * stay)[:, None] * row
            if k <= jmax:
                form = comb[js[k - 1 :], k] / denom
                G[b2, 1 : jmax - k + 2, :] += (w * form)[:, None] * row[k - 1 :, :]
    scale = np.array([comb[n, i] for i in range(n)])
    out = expected * scale
    return out[1:n]
