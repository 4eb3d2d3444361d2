"""Closed-form transition rates for the limiting coalescents.

Families covered: Kingman; the pairwise-plus-incomplete-Beta(gamma, 2-alpha,
alpha) coalescent; the pairwise-plus-Poisson-Dirichlet(alpha, 0) coalescent
with simultaneous mergers; and the Beta(2-beta, beta)-Poisson-Dirichlet
(alpha, 0) coalescent without a pairwise atom.

Lambda tables store TOTAL rates: totalRate[b][k] is binom(b, k) times the
per-group rate of a k-merger among b blocks.  Xi tables store one total rate
per merger configuration (k_1 <= ... <= k_r; s), with the count of distinct
block assignments baked in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betainc, betaln, gammaln

from .offspring import mean_approx

__all__ = [
    "falling_factorial",
    "incomplete_beta",
    "LambdaRateTable",
    "XiRateTable",
    "MergerConfiguration",
    "enumerate_configurations",
    "kingman_rates",
    "delta0_beta_rates",
    "pd_transition_probability",
    "delta0_pd_rates",
    "beta_pd_rates",
    "default_c_kappa",
    "kingman_coefficient",
]


def falling_factorial(x: float, m: int) -> float:
    """x*(x-1)*...*(x-m+1), with the empty product equal to 1."""
    if m < 0:
        raise ValueError("m must be a nonnegative integer")
    out = 1.0
    for j in range(m):
        out *= x - j
    return out


def incomplete_beta(p: float, a: float, b: float) -> float:
    """Lower incomplete beta integral of t**(a-1) * (1-t)**(b-1) over (0, p].

    Evaluated through the regularized continued-fraction form; absolute error
    well below 1e-12 over the parameter ranges used here.
    """
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    return float(betainc(a, b, p) * math.exp(betaln(a, b)))


def default_c_kappa(kappa: float) -> float:
    """Midpoint of the admissible interval (kappa+2, kappa**2); only used for kappa > 2."""
    return (kappa + 2.0 + kappa * kappa) / 2.0


def kingman_coefficient(kappa: float, c_kappa: float | None = None) -> float:
    """Weight of the pairwise-merger atom before normalization.

    2/m**2 at kappa == 2; for kappa > 2 scaled by c_kappa / (2**kappa *
    (kappa-2) * (kappa-1)) with the bracketed constant c_kappa defaulting to
    the interval midpoint.
    """
    if kappa < 2:
        raise ValueError("kappa must be >= 2")
    m = mean_approx(kappa)
    base = 2.0 / (m * m)
    if kappa == 2:
        return base
    if c_kappa is None:
        c_kappa = default_c_kappa(kappa)
    if not kappa + 2 < c_kappa < kappa * kappa:
        raise ValueError("c_kappa must lie strictly inside (kappa+2, kappa**2)")
    return base * c_kappa / (2.0**kappa * (kappa - 2.0) * (kappa - 1.0))


@dataclass(frozen=True)
class LambdaRateTable:
    """Total k-merger rates for an exchangeable single-merger coalescent.

    total[b, k] is the rate of *some* k-merger when b blocks are present,
    for 2 <= k <= b <= n; zero elsewhere.
    """

    n: int
    total: np.ndarray  # shape (n+1, n+1)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.total.shape != (self.n + 1, self.n + 1):
            raise ValueError("rate array has wrong shape")

    def total_rate(self, b: int, k: int) -> float:
        return float(self.total[b, k])

    def per_group_rate(self, b: int, k: int) -> float:
        """Rate at which one specific group of k blocks merges, among b."""
        return float(self.total[b, k] / math.comb(b, k))

    def exit_rate(self, b: int) -> float:
        """Total rate out of a state with b blocks."""
        return float(self.total[b, 2 : b + 1].sum())

    def exit_rates(self) -> np.ndarray:
        """Vector of exit rates indexed by block count (entries 0, 1 are zero)."""
        out = np.zeros(self.n + 1)
        for b in range(2, self.n + 1):
            out[b] = self.exit_rate(b)
        return out


def kingman_rates(n: int) -> LambdaRateTable:
    """Pairwise mergers only: total rate binom(b, 2) for k == 2."""
    total = np.zeros((n + 1, n + 1))
    for b in range(2, n + 1):
        total[b, 2] = math.comb(b, 2)
    return LambdaRateTable(n=n, total=total)


def delta0_beta_rates(
    n: int,
    alpha: float,
    gamma: float,
    kappa: float = 2.0,
    c: float = 1.0,
    c_kappa: float | None = None,
) -> LambdaRateTable:
    """Pairwise atom plus incomplete-Beta multiple mergers, normalized so
    totalRate[2][2] == 1.

    Per-group rate of a k-merger among b blocks:

        ( 1{k==2} * C_kingman + (alpha*c/m**alpha) * B(gamma, k-alpha, b-k+alpha) )
          / ( C_kingman + (alpha*c/m**alpha) * B(gamma, 2-alpha, alpha) )

    with m = mean_approx(kappa).
    """
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if c <= 0:
        raise ValueError("c must be positive")
    m = mean_approx(kappa)
    ck = kingman_coefficient(kappa, c_kappa)
    beta_weight = alpha * c / m**alpha
    norm = ck + beta_weight * incomplete_beta(gamma, 2.0 - alpha, alpha)
    total = np.zeros((n + 1, n + 1))
    for b in range(2, n + 1):
        for k in range(2, b + 1):
            rate = beta_weight * incomplete_beta(gamma, k - alpha, b - k + alpha)
            if k == 2:
                rate += ck
            total[b, k] = math.comb(b, k) * rate / norm
    return LambdaRateTable(n=n, total=total)


@dataclass(frozen=True)
class MergerConfiguration:
    """Simultaneous mergers of r groups, part j of size k_j, with s spectators."""

    parts: tuple[int, ...]  # nondecreasing, each >= 2
    b: int

    def __post_init__(self):
        if not self.parts or any(k < 2 for k in self.parts):
            raise ValueError("every merger part must be >= 2")
        if list(self.parts) != sorted(self.parts):
            raise ValueError("parts must be nondecreasing")
        if sum(self.parts) > self.b:
            raise ValueError("parts cannot exceed the block count")

    @property
    def r(self) -> int:
        return len(self.parts)

    @property
    def s(self) -> int:
        return self.b - sum(self.parts)


@lru_cache(maxsize=None)
def _partitions_min2(j: int) -> tuple[tuple[int, ...], ...]:
    """All nondecreasing partitions of j into parts >= 2."""
    out: list[tuple[int, ...]] = []

    def rec(remaining: int, smallest: int, prefix: tuple[int, ...]):
        if remaining == 0:
            out.append(prefix)
            return
        for part in range(smallest, remaining + 1):
            if remaining - part != 0 and remaining - part < part:
                continue
            rec(remaining - part, part, prefix + (part,))

    rec(j, 2, ())
    return tuple(out)


def enumerate_configurations(b: int) -> list[tuple[int, ...]]:
    """All merger configurations with b blocks: partitions of j into parts
    >= 2 for every j in {2..b}, in lexicographic (r, parts) order."""
    out: list[tuple[int, ...]] = []
    for j in range(2, b + 1):
        out.extend(_partitions_min2(j))
    out.sort(key=lambda p: (len(p), p))
    return out


def pd_transition_probability(parts, b: int, alpha: float) -> float:
    """Probability that r specific groups of sizes k_1..k_r merge at once
    among b blocks, under the Poisson-Dirichlet(alpha, 0) paintbox.

        alpha**(r+s-1) * (r+s-1)! / (b-1)! * prod_i (k_i - 1 - alpha)_(k_i - 1)

    No multiplicity factors; p for the single pair among two blocks is 1-alpha.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    cfg = MergerConfiguration(parts=tuple(sorted(parts)), b=b)
    r, s = cfg.r, cfg.s
    log_p = (r + s - 1) * math.log(alpha) + gammaln(r + s) - gammaln(b)
    for k in cfg.parts:
        # (k-1-alpha)_(k-1) = Gamma(k-alpha) / Gamma(1-alpha)
        log_p += gammaln(k - alpha) - gammaln(1.0 - alpha)
    return math.exp(log_p)


def config_multiplicity(parts, b: int) -> int:
    """Number of distinct ways to split b labeled blocks into unordered
    groups of sizes k_1..k_r plus spectators."""
    s = b - sum(parts)
    m = math.factorial(b) // math.factorial(s)
    for k in parts:
        m //= math.factorial(k)
    counts: dict[int, int] = {}
    for k in parts:
        counts[k] = counts.get(k, 0) + 1
    for cnt in counts.values():
        m //= math.factorial(cnt)
    return m


@dataclass(frozen=True)
class XiRateTable:
    """Total rates per merger configuration for a simultaneous-merger coalescent.

    configs[b] lists the configurations available from b blocks; rates[b]
    holds the matching total rates (multiplicities included), sorted in
    descending rate order for efficient sampling.
    """

    n: int
    configs: dict[int, list[tuple[int, ...]]]
    rates: dict[int, np.ndarray]

    def exit_rate(self, b: int) -> float:
        return float(self.rates[b].sum())

    def exit_rates(self) -> np.ndarray:
        out = np.zeros(self.n + 1)
        for b in range(2, self.n + 1):
            out[b] = self.exit_rate(b)
        return out

    def config_rate(self, b: int, parts) -> float:
        key = tuple(sorted(parts))
        idx = self.configs[b].index(key)
        return float(self.rates[b][idx])


@lru_cache(maxsize=8)
def _partition_registry(n: int):
    """Partitions of 2..n into parts >= 2, sorted by total then (r, parts).

    Returns (partitions, j_arr, r_arr, logfac_arr) where logfac_arr carries
    the alpha-independent log factorials: sum_i log(k_i!) + sum log(cnt!)
    over multiplicities of equal parts.  Configurations available from b
    blocks are exactly the prefix with j <= b.
    """
    partitions: list[tuple[int, ...]] = []
    for j in range(2, n + 1):
        parts_j = sorted(_partitions_min2(j), key=lambda p: (len(p), p))
        partitions.extend(parts_j)
    j_arr = np.array([sum(p) for p in partitions], dtype=np.int64)
    r_arr = np.array([len(p) for p in partitions], dtype=np.int64)
    logfac = np.empty(len(partitions))
    for idx, p in enumerate(partitions):
        v = sum(math.lgamma(k + 1) for k in p)
        counts: dict[int, int] = {}
        for k in p:
            counts[k] = counts.get(k, 0) + 1
        v += sum(math.lgamma(cnt + 1) for cnt in counts.values())
        logfac[idx] = v
    return tuple(partitions), j_arr, r_arr, logfac


def _build_xi_table(n: int, batch_rates) -> XiRateTable:
    """Assemble an XiRateTable from a vectorized per-block rate evaluator.

    batch_rates(b, partitions, j_arr, r_arr, logfac) must return total rates
    for every configuration valid at b blocks (a prefix of the registry).
    """
    partitions, j_arr, r_arr, logfac = _partition_registry(n)
    configs: dict[int, list[tuple[int, ...]]] = {}
    rates: dict[int, np.ndarray] = {}
    for b in range(2, n + 1):
        hi = int(np.searchsorted(j_arr, b, side="right"))
        vals = batch_rates(b, partitions[:hi], j_arr[:hi], r_arr[:hi], logfac[:hi])
        order = np.argsort(-vals, kind="stable")
        configs[b] = [partitions[i] for i in order]
        rates[b] = vals[order]
    return XiRateTable(n=n, configs=configs, rates=rates)


def delta0_pd_rates(
    n: int,
    alpha: float,
    kappa: float = 2.0,
    c: float = 1.0,
    c_kappa: float | None = None,
    max_n: int = 64,
) -> XiRateTable:
    """Pairwise atom plus Poisson-Dirichlet(alpha, 0) simultaneous mergers,
    normalized so the rate of the single pair merger among two blocks is 1.

    Total rate of configuration (k_1..k_r; s) among b blocks:

        1{config == (2)} * binom(b,2) * C_kingman / D
          + multiplicity * c * p_{b;k;s} / D,     D = C_kingman + c*(1-alpha)
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if c <= 0:
        raise ValueError("c must be positive")
    if n > max_n:
        raise ValueError(
            f"n={n} exceeds the configuration-enumeration cap {max_n}; "
            "raise max_n explicitly if you accept the cost"
        )
    ck = kingman_coefficient(kappa, c_kappa)
    denom = ck + c * (1.0 - alpha)
    partitions_all, _, _, _ = _partition_registry(n)
    # sum_i [log Gamma(k_i - alpha) - log Gamma(1 - alpha)], per partition
    lg_parts = np.array(
        [sum(math.lgamma(k - alpha) - math.lgamma(1.0 - alpha) for k in p) for p in partitions_all]
    )

    def batch_rates(b, partitions, j_arr, r_arr, logfac):
        s = b - j_arr
        rs = r_arr + s
        log_mult = gammaln(b + 1) - gammaln(s + 1) - logfac
        log_p = (rs - 1) * math.log(alpha) + gammaln(rs) - math.lgamma(b) + lg_parts[: len(j_arr)]
        vals = np.exp(log_mult + log_p + math.log(c / denom))
        vals[0] += math.comb(b, 2) * ck / denom  # registry starts with the single pair
        return vals

    return _build_xi_table(n, batch_rates)


def beta_pd_rates(
    n: int,
    alpha: float,
    beta: float,
    c: float = 1.0,
    normalize: bool = False,
    max_n: int = 64,
) -> XiRateTable:
    """Beta(2-beta, beta) single mergers plus Poisson-Dirichlet(alpha, 0)
    simultaneous mergers, without a pairwise atom.

    Per specific group(s):

        1{r==1} * C_beta * B(k-beta, b-k+beta) / D + c * p_{b;k;s} / D

    with D = C_beta + c*(1-alpha), C_beta = beta * B(2-beta, beta) / m**beta,
    and m = (2 + (1 + 2**(1-beta))/(beta-1)) / 2.  As printed this does not
    make the two-block pair rate equal 1 (C_beta already carries
    B(2-beta, beta)); pass normalize=True to divide every rate by it.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not 1 < beta < 2:
        raise ValueError("beta must lie in (1, 2)")
    if c <= 0:
        raise ValueError("c must be positive")
    if n > max_n:
        raise ValueError(
            f"n={n} exceeds the configuration-enumeration cap {max_n}; "
            "raise max_n explicitly if you accept the cost"
        )
    m = (2.0 + (1.0 + 2.0 ** (1.0 - beta)) / (beta - 1.0)) / 2.0
    c_beta = beta * incomplete_beta(1.0, 2.0 - beta, beta) / m**beta
    denom = c_beta + c * (1.0 - alpha)
    partitions_all, _, _, _ = _partition_registry(n)
    lg_parts = np.array(
        [sum(math.lgamma(k - alpha) - math.lgamma(1.0 - alpha) for k in p) for p in partitions_all]
    )

    def batch_rates(b, partitions, j_arr, r_arr, logfac):
        s = b - j_arr
        rs = r_arr + s
        log_mult = gammaln(b + 1) - gammaln(s + 1) - logfac
        log_p = (rs - 1) * math.log(alpha) + gammaln(rs) - math.lgamma(b) + lg_parts[: len(j_arr)]
        vals = np.exp(log_mult + log_p + math.log(c / denom))
        single = r_arr == 1
        k = j_arr[single].astype(np.float64)
        lam_beta = np.exp(
            gammaln(b + 1) - gammaln(k + 1) - gammaln(b - k + 1)
            + betaln(k - beta, b - k + beta)
        )
        vals[single] += c_beta * lam_beta / denom
        return vals

    table = _build_xi_table(n, batch_rates)
    if normalize:
        pair = table.exit_rate(2)
        rates = {b: r / pair for b, r in table.rates.items()}
        table = XiRateTable(n=n, configs=table.configs, rates=rates)
    return table
