"""Discrete-generation ancestral process for the sweepstakes population model.

Each generation the N individuals independently produce potential offspring;
if at least N arrive, N survivors are drawn uniformly without replacement and
replace the population, otherwise the generation fails and the population is
carried over unchanged.  Running the sample genealogy backwards, the m
ancestral blocks are m of the survivors, so the number of blocks landing in
each family is a multivariate hypergeometric draw; blocks in one family merge.

Branch lengths are recorded in integer generations (no 1/c_N rescaling): the
relative spectrum R_i is scale-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .offspring import EnvironmentModel
from .spectra import BranchLengthSpectrum

__all__ = [
    "BlockPartitionState",
    "FailedGeneration",
    "SimulationCapError",
    "reproduce_one_generation",
    "assign_blocks_to_families",
    "ancestral_step",
    "simulate_annealed",
    "estimate_coalescence_probability",
]


class FailedGeneration(RuntimeError):
    """Fewer potential offspring than the population size."""


class SimulationCapError(RuntimeError):
    """The generation cap was hit before the genealogy absorbed."""


@dataclass
class BlockPartitionState:
    """Multiset of block sizes of the current genealogy; sizes sum to n."""

    sizes: np.ndarray
    n: int

    def __post_init__(self):
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        if self.sizes.sum() != self.n or np.any(self.sizes < 1):
            raise ValueError("block sizes must be positive and sum to n")

    @classmethod
    def singletons(cls, n: int) -> "BlockPartitionState":
        return cls(sizes=np.ones(n, dtype=np.int64), n=n)

    @property
    def m(self) -> int:
        return self.sizes.size


def reproduce_one_generation(env: EnvironmentModel, N: int, rng: np.random.Generator):
    """Potential-offspring numbers x_1..x_N and their total for one generation."""
    if N < 2:
        raise ValueError("N must be >= 2")
    return env.sample_generation(N, rng)


def _distinct_positions(S, m: int, rng: np.random.Generator) -> np.ndarray:
    """m distinct uniform juvenile positions among S, as (float) integers.

    Rejection on collisions; falls back to a partial shuffle when S is small
    relative to m**2.  Positions beyond 2**53 lose exactness, which only
    happens under an unbounded offspring law where a single mega-family
    dominates every merger anyway.
    """
    if S <= 4 * m * m and S <= 2**62:
        return rng.permutation(int(S))[:m].astype(np.float64)
    out = np.minimum(np.floor(rng.random(m) * S), S - 1.0)
    while np.unique(out).size < m:
        out = np.minimum(np.floor(rng.random(m) * S), S - 1.0)
    return out


def assign_blocks_to_families(m: int, x: np.ndarray, S, rng: np.random.Generator) -> np.ndarray:
    """Number of ancestral blocks landing in each family; sums to m.

    The m blocks are m of the N survivors, themselves a uniform
    without-replacement sample of the S potential offspring; equivalently a
    multivariate hypergeometric draw with parameters (m; x_1..x_N).
    """
    N = len(x)
    if S < N:
        raise FailedGeneration(f"S={S} < N={N}")
    if not 1 <= m <= N:
        raise ValueError("need 1 <= m <= N")
    positions = _distinct_positions(S, m, rng)
    cum = np.cumsum(np.asarray(x, dtype=np.float64))
    parents = np.searchsorted(cum, positions, side="right")
    return np.bincount(parents, minlength=N).astype(np.int64)


def _merge_by_parent(sizes: np.ndarray, parents: np.ndarray) -> np.ndarray:
    """Merge blocks assigned to one family into single blocks."""
    uniq, inv = np.unique(parents, return_inverse=True)
    if uniq.size == sizes.size:
        return sizes
    return np.bincount(inv, weights=sizes).astype(np.int64)


def ancestral_step(
    state: BlockPartitionState,
    env: EnvironmentModel,
    N: int,
    rng: np.random.Generator,
    lengths: np.ndarray | None = None,
) -> BlockPartitionState:
    """One generation backwards: accrue one generation of length per block,
    then merge blocks that land in the same family.

    A failed generation (S < N) leaves the block structure unchanged but the
    time step still accrues.
    """
    if state.m < 2:
        raise ValueError("need at least two blocks")
    if lengths is not None:
        np.add.at(lengths, state.sizes, 1.0)
    x, S = reproduce_one_generation(env, N, rng)
    if S < N:
        return state
    positions = _distinct_positions(S, state.m, rng)
    cum = np.cumsum(x, dtype=np.float64)
    parents = np.searchsorted(cum, positions, side="right")
    return BlockPartitionState(sizes=_merge_by_parent(state.sizes, parents), n=state.n)


def _batch_generations(env: EnvironmentModel, N: int, G: int, rng: np.random.Generator):
    """G i.i.d. generations at once: offspring matrix, row totals, row cumsums.

    Stream layout per batch: G environment uniforms, then the G x N offspring
    uniforms (plus the type-B lucky indices), identical regardless of how the
    rows get consumed.
    """
    law_n, law_f = env.law_normal, env.law_favorable
    if env.regime == "typeA":
        fav = rng.random(G) < env.eps
        u = rng.random((G, N))
        x = law_n._from_uniform(u)
        if np.any(fav):
            x[fav] = law_f._from_uniform(u[fav])
    elif env.regime == "typeB":
        fav = rng.random(G) < env.eps
        u = rng.random((G, N))
        x = law_n._from_uniform(u)
        rows = np.flatnonzero(fav)
        if rows.size:
            cols = rng.integers(N, size=rows.size)
            x[rows, cols] = law_f._from_uniform(u[rows, cols])
    else:
        u = rng.random((G, N))
        x = law_n._from_uniform(u)
    xf = x.astype(np.float64, copy=False)
    cums = np.cumsum(xf, axis=1)
    return cums, cums[:, -1]


_REGIME_CODE = {"fixed": 0, "typeA": 1, "typeB": 2}


def _pack_law(law) -> tuple:
    """(a, -1/a, h, boundary term, clip) for the jitted inverse-CDF draw."""
    zterm = 0.0 if law.zeta == math.inf else (1.0 + law.zeta) ** (-law.a)
    clip_hi = min(law.zeta, float(2**53))
    return (law.a, -1.0 / law.a, law.normalizer, zterm, clip_hi)


def simulate_annealed(
    n: int,
    N: int,
    env: EnvironmentModel,
    rng: np.random.Generator,
    max_generations: int = 10**7,
) -> BranchLengthSpectrum:
    """Branch-length spectrum of a size-n sample from the N-individual model.

    Runs the ancestral process from n singletons to one block; lengths are in
    generations.  Fixed seeds give identical spectra.
    """
    if not 2 <= n <= N:
        raise ValueError("need 2 <= n <= N")
    lengths = np.zeros(n + 1)
    gens = _kernels.annealed_replicate(
        n,
        N,
        _REGIME_CODE[env.regime],
        env.eps,
        _pack_law(env.law_normal),
        _pack_law(env.law_favorable),
        rng,
        lengths,
        max_generations,
    )
    if gens < 0:
        raise SimulationCapError(f"no absorption after {max_generations} generations")
    return BranchLengthSpectrum(lengths[1:n])


def estimate_coalescence_probability(
    env: EnvironmentModel,
    N: int,
    reps: int,
    rng: np.random.Generator,
    batch: int | None = None,
):
    """Monte Carlo pair-coalescence probability c_N with binomial stderr.

    Counts the fraction of replicate generations in which two sampled
    surviving offspring share a parent; failed generations count as no
    coalescence.
    """
    if N < 2 or reps < 1:
        raise ValueError("need N >= 2 and reps >= 1")
    if batch is None:
        batch = max(1, min(reps, 4_000_000 // N))
    hits = 0
    done = 0
    while done < reps:
        G = min(batch, reps - done)
        cums, totals = _batch_generations(env, N, G, rng)
        ok = totals >= N
        j1 = np.minimum(np.floor(rng.random(G) * totals), totals - 1.0)
        j2 = np.minimum(np.floor(rng.random(G) * (totals - 1.0)), totals - 2.0)
        j2 += j2 >= j1
        base = np.concatenate(([0.0], np.cumsum(totals)[:-1]))
        flat = (cums + base[:, None]).ravel()
        p1 = np.searchsorted(flat, j1 + base, side="right") - np.arange(G) * N
        p2 = np.searchsorted(flat, j2 + base, side="right") - np.arange(G) * N
        hits += int(np.count_nonzero((p1 == p2) & ok))
        done += G
    p = hits / reps
    se = math.sqrt(p * (1.0 - p) / reps)
    return p, se
