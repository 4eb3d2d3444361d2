"""Quenched genealogies: sample trees read off a fixed population ancestry.

The forward population ancestry is a sequence of pointer arrays; entry i of
the array for generation g is the level of the immediate ancestor, one
generation older, of the individual on level i.  Conditioning on the ancestry
fixes the complete genealogy of any sample, so relative branch lengths are
read off the tree rather than averaged over reproduction randomness.

The ancestry evolves on its own random stream; sample selection uses a
separate one, so the ancestry realized under a seed does not depend on which
samples are drawn from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cannings import (
    SimulationCapError,
    _REGIME_CODE,
    _distinct_positions,
    _pack_law,
)
from .offspring import EnvironmentModel
from .spectra import BranchLengthSpectrum

__all__ = [
    "PopulationAncestry",
    "extend_ancestry",
    "sample_quenched_tree",
    "quenched_spectrum",
]

_MVH_TOTAL_LIMIT = 10**9  # numpy's marginals method caps sum(colors)


@dataclass
class PopulationAncestry:
    """Append-only record of parent pointers, newest generation last.

    pointers[g][i] (g >= 1) is the level of the parent, at generation g-1,
    of the individual on level i at generation g; generation 0 is the
    identity boundary.  roots caches the generation-0 ancestor of every
    level at the newest generation, so completeness checks are O(n).
    """

    N: int
    env: EnvironmentModel
    rng: np.random.Generator
    pointers: list[np.ndarray] = field(default_factory=list)
    roots: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.env.zeta != math.inf and self.env.zeta > 2**53:
            raise ValueError("quenched ancestries need an integer-safe offspring bound")
        if self.env.zeta == math.inf:
            raise ValueError("quenched ancestries require a finite offspring bound")
        if self.roots is None:
            self.roots = np.arange(self.N, dtype=np.int64)

    @property
    def generations(self) -> int:
        return len(self.pointers)

    def extend(self) -> None:
        """Append one forward generation.

        Survivors are a uniform without-replacement sample of the potential
        offspring, placed on levels in uniform random order; a failed
        generation records the identity map.
        """
        N = self.N
        x, S = self.env.sample_generation(N, self.rng)
        if S < N:
            ptr = np.arange(N, dtype=np.int64)
        else:
            if S < _MVH_TOTAL_LIMIT:
                nu = self.rng.multivariate_hypergeometric(x, N, method="marginals")
            else:
                positions = _distinct_positions(float(S), N, self.rng)
                cum = np.cumsum(x, dtype=np.float64)
                fam = np.searchsorted(cum, positions, side="right")
                nu = np.bincount(fam, minlength=N)
            ptr = np.repeat(np.arange(N, dtype=np.int64), nu)
            self.rng.shuffle(ptr)
        self.pointers.append(ptr)
        self.roots = self.roots[ptr]

    def surviving_family_sizes(self, g: int) -> np.ndarray:
        """Realized surviving offspring counts nu_1..nu_N at generation g."""
        return np.bincount(self.pointers[g - 1], minlength=self.N)


def extend_ancestry(anc: PopulationAncestry, env=None, rng=None) -> PopulationAncestry:
    """Append one generation to the ancestry (its own env and stream)."""
    anc.extend()
    return anc


def sample_quenched_tree(
    anc: PopulationAncestry,
    n: int,
    rng: np.random.Generator,
    max_generations: int = 10**6,
) -> BranchLengthSpectrum:
    """Branch-length spectrum of one complete sample tree on the ancestry.

    Draws n distinct levels at the newest generation; if their genealogy does
    not reach a common ancestor within recorded history the sample is
    discarded, the ancestry grows by one generation, and a fresh sample is
    drawn.  The walk then adds one generation of length per block per step,
    merging blocks whose ancestor levels coincide.
    """
    N = anc.N
    if not 2 <= n <= N:
        raise ValueError("need 2 <= n <= N")
    while True:
        levels = rng.choice(N, size=n, replace=False)
        if np.all(anc.roots[levels] == anc.roots[levels[0]]):
            break
        if anc.generations >= max_generations:
            raise SimulationCapError(
                f"no complete sample tree within {anc.generations} generations"
            )
        anc.extend()

    lengths = np.zeros(n + 1)
    sizes = np.ones(n, dtype=np.int64)
    cur = np.asarray(levels, dtype=np.int64)
    for g in range(anc.generations, 0, -1):
        np.add.at(lengths, sizes, 1.0)
        parents = anc.pointers[g - 1][cur]
        uniq, inv = np.unique(parents, return_inverse=True)
        # bincount keeps sizes aligned with the (sorted) surviving ancestors
        sizes = np.bincount(inv, weights=sizes).astype(np.int64)
        cur = uniq
        if cur.size == 1:
            break
    return BranchLengthSpectrum(lengths[1:n])


def quenched_spectrum(
    n: int,
    N: int,
    env: EnvironmentModel,
    rng_ancestry: np.random.Generator,
    rng_sampling: np.random.Generator,
    max_generations: int = 10**6,
    chunk: int = 2048,
) -> BranchLengthSpectrum:
    """One quenched spectrum on a fresh ancestry (jitted growth loop).

    Same estimator as building a PopulationAncestry and calling
    sample_quenched_tree, with the grow-check-extend loop compiled; meant for
    large replicate counts.
    """
    if not 2 <= n <= N:
        raise ValueError("need 2 <= n <= N")
    if env.zeta == math.inf or env.zeta > 2**53:
        raise ValueError("quenched ancestries need an integer-safe offspring bound")
    regime = _REGIME_CODE[env.regime]
    law_n = _pack_law(env.law_normal)
    law_f = _pack_law(env.law_favorable)
    roots = np.arange(N, dtype=np.int64)
    levels = np.empty(n, dtype=np.int64)
    chunks: list[tuple[np.ndarray, int]] = []
    gens_done = 0
    while True:
        ptr_chunk = np.empty((chunk, N), dtype=np.int32)
        rows, status = _kernels.quenched_advance(
            N,
            n,
            regime,
            env.eps,
            law_n,
            law_f,
            rng_ancestry,
            rng_sampling,
            roots,
            ptr_chunk,
            gens_done,
            max_generations,
            levels,
        )
        chunks.append((ptr_chunk, rows))
        gens_done += rows
        if status == 1:
            break
        if status == 2:
            raise SimulationCapError(
                f"no complete sample tree within {gens_done} generations"
            )

    lengths = np.zeros(n + 1)
    sizes = np.ones(n, dtype=np.int64)
    cur = levels.copy()
    for ptr_chunk, rows in reversed(chunks):
        for g in range(rows - 1, -1, -1):
            np.add.at(lengths, sizes, 1.0)
            parents = ptr_chunk[g][cur]
            uniq, inv = np.unique(parents, return_inverse=True)
            sizes = np.bincount(inv, weights=sizes).astype(np.int64)
            cur = uniq.astype(np.int64)
            if cur.size == 1:
                return BranchLengthSpectrum(lengths[1:n])
    if cur.size != 1:
        raise RuntimeError("complete sample failed to coalesce during the walk")
    return BranchLengthSpectrum(lengths[1:n])
