"""Branch-length spectra indexed by family size."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BranchLengthSpectrum"]


@dataclass(frozen=True)
class BranchLengthSpectrum:
    """Vector (l_1, ..., l_{n-1}): total branch length subtending i leaves.

    Units are generations for discrete ancestral processes and coalescent
    time units for the limiting processes; the normalized form is unit-free.
    """

    lengths: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.lengths, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("lengths must be a 1-d vector of size n-1")
        if np.any(arr < 0):
            raise ValueError("branch lengths must be nonnegative")
        object.__setattr__(self, "lengths", arr)

    @property
    def n(self) -> int:
        return self.lengths.size + 1

    @property
    def total(self) -> float:
        return float(self.lengths.sum())

    def relative(self) -> np.ndarray:
        """R_i = l_i / sum_j l_j; sums to one."""
        tot = self.lengths.sum()
        if tot <= 0:
            raise ValueError("total branch length is zero")
        return self.lengths / tot
