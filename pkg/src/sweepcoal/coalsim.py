"""Continuous-time simulation of the limiting coalescents.

Holding times are exponential in the internal clock G(t); the jump chain is
untouched by the time change, so paired runs at different growth rates share
their merger sequences when given identical streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .rates import LambdaRateTable, XiRateTable
from .spectra import BranchLengthSpectrum

__all__ = [
    "TimeChange",
    "sample_holding_time",
    "simulate_lambda",
    "simulate_xi",
]


@dataclass(frozen=True)
class TimeChange:
    """Deterministic clock transform G for varying population size.

    The shipped family is exponential growth at rate rho: G(t) =
    (e^{rho t} - 1)/rho, reducing to G(t) = t at rho = 0.  Any other strictly
    increasing G with G(0) = 0 can be supplied as a callable; holding times
    are then found by numerical inversion.
    """

    rho: float = 0.0
    custom_g: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")

    def g(self, t: float) -> float:
        if self.custom_g is not None:
            return self.custom_g(t)
        if self.rho == 0.0:
            return t
        return math.expm1(self.rho * t) / self.rho


def sample_holding_time(m: int, lambda_m: float, tau_m: float, tc: TimeChange, u: float) -> float:
    """Time spent at m blocks given total rate lambda_m, entered at time tau_m.

    Solves lambda_m * (G(tau_m + t) - G(tau_m)) = -log(1 - u); closed form
    for the exponential-growth family.
    """
    if lambda_m <= 0:
        raise ValueError("total rate must be positive")
    if tc.custom_g is not None:
        target = -math.log1p(-u)
        g0 = tc.g(tau_m)

        def f(t):
            return lambda_m * (tc.g(tau_m + t) - g0) - target

        hi = 1.0
        while f(hi) < 0:
            hi *= 2.0
            if hi > 1e12:
                raise RuntimeError("time-change inversion failed to bracket")
        return float(brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-14))
    return float(_kernels._holding_time(lambda_m, tau_m, tc.rho, u))


def _lambda_cum_rates(rates: LambdaRateTable):
    cum = np.cumsum(rates.total, axis=1)
    exits = cum[:, -1].copy()
    return cum, exits


def simulate_lambda(
    n: int,
    rates: LambdaRateTable,
    tc: TimeChange | None = None,
    rng: np.random.Generator | None = None,
    validate: bool = False,
    identity_tol: float = 1e-10,
    _packed=None,
) -> BranchLengthSpectrum:
    """One branch-length spectrum from a single-merger coalescent.

    From b blocks, the next event time is drawn through the time change at
    total rate sum_k totalRate[b][k]; the merger size is proportional to
    totalRate[b][k]; the k merging blocks are uniform without replacement.
    """
    if tc is None:
        tc = TimeChange()
    if rng is None:
        rng = np.random.default_rng()
    if n < 2 or n > rates.n:
        raise ValueError("need 2 <= n <= rates.n")
    if tc.custom_g is not None:
        return _simulate_lambda_python(n, rates, tc, rng)
    cum, exits = _packed if _packed is not None else _lambda_cum_rates(rates)
    lengths = np.zeros(n + 1)
    worst = _kernels.lambda_replicate(n, cum, exits, tc.rho, rng, lengths, validate)
    if validate and worst > identity_tol:
        raise AssertionError(f"holding-time inversion identity violated: {worst:.3e}")
    return BranchLengthSpectrum(lengths[1:n])


def _simulate_lambda_python(n, rates, tc, rng):
    """Reference event loop; also the path for user-supplied clocks."""
    sizes = [1] * n
    lengths = np.zeros(n + 1)
    tau = 0.0
    cum, exits = _lambda_cum_rates(rates)
    while len(sizes) >= 2:
        m = len(sizes)
        lam = exits[m]
        t = sample_holding_time(m, lam, tau, tc, rng.random())
        for s in sizes:
            lengths[s] += t
        tau += t
        target = rng.random() * lam
        k = 2 + int(np.searchsorted(cum[m, 2:m], target, side="left"))
        for j in range(k):
            pick = j + int(rng.random() * (m - j))
            sizes[j], sizes[pick] = sizes[pick], sizes[j]
        # merged block takes the front slot, matching the jitted loop
        sizes = [sum(sizes[:k])] + sizes[k:]
    return BranchLengthSpectrum(lengths[1:n])


def _pack_xi_table(table: XiRateTable):
    """Flatten per-block configuration lists for the jitted loop."""
    n = table.n
    cfg_start = np.zeros(n + 2, dtype=np.int64)
    cums = []
    parts_chunks = []
    parts_off = [0]
    pos = 0
    for b in range(2, n + 1):
        cfg_start[b] = pos
        cums.append(np.cumsum(table.rates[b]))
        for parts in table.configs[b]:
            parts_chunks.append(parts)
            parts_off.append(parts_off[-1] + len(parts))
        pos += len(table.rates[b])
    cfg_start[n + 1] = pos
    cfg_start[:2] = 0
    cum_flat = np.concatenate(cums) if cums else np.zeros(0)
    parts_flat = np.array(
        [p for chunk in parts_chunks for p in chunk], dtype=np.int64
    )
    parts_off = np.array(parts_off, dtype=np.int64)
    exits = table.exit_rates()
    return cfg_start, cum_flat, parts_off, parts_flat, exits


def simulate_xi(
    n: int,
    table: XiRateTable,
    tc: TimeChange | None = None,
    rng: np.random.Generator | None = None,
    validate: bool = False,
    identity_tol: float = 1e-10,
    _packed=None,
) -> BranchLengthSpectrum:
    """One branch-length spectrum from a simultaneous-merger coalescent.

    The merger configuration is sampled proportionally to its total rate from
    the descending-order list; blocks are dealt to the groups uniformly at
    random without replacement.
    """
    if tc is None:
        tc = TimeChange()
    if rng is None:
        rng = np.random.default_rng()
    if n < 2 or n > table.n:
        raise ValueError("need 2 <= n <= table.n")
    if tc.custom_g is not None:
        raise NotImplementedError("custom clocks are only wired for the single-merger simulator")
    packed = _packed if _packed is not None else _pack_xi_table(table)
    cfg_start, cum_flat, parts_off, parts_flat, exits = packed
    lengths = np.zeros(n + 1)
    worst = _kernels.xi_replicate(
        n, cfg_start, cum_flat, parts_off, parts_flat, exits, tc.rho, rng, lengths, validate
    )
    if validate and worst > identity_tol:
        raise AssertionError(f"holding-time inversion identity violated: {worst:.3e}")
    return BranchLengthSpectrum(lengths[1:n])
