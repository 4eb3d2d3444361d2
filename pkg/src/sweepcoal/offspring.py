"""Truncated heavy-tailed offspring laws and random-environment regimes.

The number of potential offspring produced by one individual follows a
power-law-like pmf on {1, ..., zeta} with tail exponent ``a``:

    p_k = h_a(zeta) * (k**-a - (1+k)**-a),   h_a(zeta) = 1 / (1 - (1+zeta)**-a)

so the tail telescopes, P(X >= k) = h * (k**-a - (1+zeta)**-a), and sampling
is a closed-form inverse-CDF transform of one uniform.  zeta may be infinite
(h = 1).  The environment switches the exponent between a "normal" value
kappa >= 2 and a "favorable" heavy tail alpha, either for everyone at once
(type A) or for a single uniformly chosen individual (type B).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "OffspringLaw",
    "EnvironmentModel",
    "SUBSTREAM_MAIN",
    "SUBSTREAM_SAMPLING",
    "mean_approx",
    "epsilon_schedule",
    "resolve_zeta",
    "make_environment",
    "replicate_rng",
]

# substream tags for per-replicate counter-based streams
SUBSTREAM_MAIN = 0
SUBSTREAM_SAMPLING = 1

# Largest offspring count representable exactly in float64; draws from an
# unbounded law are clipped here.  A family this size swallows the whole
# population either way.
_X_CLIP = float(2**53)


def replicate_rng(seed: int, replicate: int, substream: int = SUBSTREAM_MAIN) -> np.random.Generator:
    """Counter-based random stream for one replicate.

    The 128-bit Philox key is (seed << 64) | (replicate * 4 + substream), so
    streams are independent across replicates and substreams by construction
    and reproducible from (seed, replicate) alone.
    """
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    key = (seed << 64) | (replicate * 4 + substream)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class OffspringLaw:
    """Potential-offspring distribution with tail exponent ``a`` and bound ``zeta``."""

    a: float
    zeta: float  # positive integer or math.inf
    normalizer: float = field(init=False)

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("tail exponent a must be positive")
        if self.zeta != math.inf:
            if self.zeta < 1 or self.zeta != int(self.zeta):
                raise ValueError("zeta must be a positive integer or infinity")
            object.__setattr__(self, "zeta", float(int(self.zeta)))
            h = 1.0 / (1.0 - (1.0 + self.zeta) ** (-self.a))
        else:
            h = 1.0
        object.__setattr__(self, "normalizer", h)

    def pmf(self, k):
        """P(X = k); zero outside {1, ..., zeta}. Accepts scalars or arrays."""
        k = np.asarray(k, dtype=np.float64)
        inside = (k >= 1) & (k <= self.zeta)
        kk = np.where(inside, k, 1.0)
        p = self.normalizer * (kk**-self.a - (1.0 + kk) ** -self.a)
        out = np.where(inside, p, 0.0)
        return float(out) if out.ndim == 0 else out

    def tail(self, k):
        """P(X >= k), by the telescoping closed form."""
        k = np.asarray(k, dtype=np.float64)
        zterm = 0.0 if self.zeta == math.inf else (1.0 + self.zeta) ** (-self.a)
        t = self.normalizer * (np.minimum(k, self.zeta + 1.0) ** -self.a - zterm)
        t = np.where(k <= 1, 1.0, t)
        return float(t) if t.ndim == 0 else t

    def mean(self) -> float:
        """E[X] by direct summation (finite zeta only)."""
        if self.zeta == math.inf:
            if self.a <= 1:
                return math.inf
            k = np.arange(1, 10**7 + 1, dtype=np.float64)
            # telescoped tail sum: E[X] = sum_{k>=1} P(X >= k)
            return float(1.0 + np.sum(self.normalizer * (k[1:] ** -self.a)))
        k = np.arange(1, int(self.zeta) + 1, dtype=np.float64)
        return float(np.sum(k * self.pmf(k)))

    def sample(self, rng: np.random.Generator, size=None):
        """Draw from the law by inverting the closed-form tail.

        One uniform per variate; O(1) per draw.  Draws are int64 when zeta
        fits, float64 (integer-valued, clipped at 2**53) when unbounded.
        """
        u = rng.random(size)
        return self._from_uniform(u)

    def _from_uniform(self, u):
        """Map uniforms in [0,1) to offspring counts (inverse CDF)."""
        zterm = 0.0 if self.zeta == math.inf else (1.0 + self.zeta) ** (-self.a)
        w = (1.0 - np.asarray(u)) / self.normalizer + zterm
        x = np.ceil(_inv_pow(w, self.a)) - 1.0
        hi = _X_CLIP if self.zeta == math.inf else self.zeta
        x = np.clip(x, 1.0, hi)
        if self.zeta != math.inf and self.zeta <= 2**62:
            x = x.astype(np.int64) if x.ndim else int(x)
        return x


def _inv_pow(w, a: float):
    """w ** (-1/a) with fast paths for the common exponents."""
    if a == 1.0:
        return 1.0 / w
    if a == 2.0:
        return 1.0 / np.sqrt(w)
    if a == 0.5:
        return 1.0 / (w * w)
    return w ** (-1.0 / a)


def mean_approx(kappa: float) -> float:
    """Limiting mean number of potential offspring under the kappa-law.

    m = 1 + (1 + 2**(1-kappa)) / (2*(kappa-1)), the midpoint of the
    bracketing interval (1 + 2**(1-kappa)/(kappa-1), 1 + 1/(kappa-1)).
    """
    if kappa < 2:
        raise ValueError("kappa must be >= 2")
    return 1.0 + (1.0 + 2.0 ** (1.0 - kappa)) / (2.0 * (kappa - 1.0))


def epsilon_schedule(regime: str, alpha: float, kappa: float, c: float, N: int) -> float:
    """Per-generation probability of a favorable environment, as a function of N.

    Type A with 1 <= alpha < 2:  c * N**(alpha-2) * (log N if kappa == 2 else 1).
    Type A with 0 < alpha < 1 (the simultaneous-merger regime):  c / C_kappa^N,
    i.e. c/N for kappa > 2 and c*log(N)/N for kappa == 2.
    Type B with 0 < alpha < 1:  c * N**(alpha-1) * (log N if kappa == 2 else 1).
    Type B with alpha == 1 and kappa > 2:  the constant c itself.

    Raises ScheduleInvalidError when the value reaches 1 (N too small for c).
    """
    if regime not in ("typeA", "typeB"):
        raise ValueError(f"unknown regime {regime!r}")
    if kappa < 2:
        raise ValueError("kappa must be >= 2")
    if c <= 0:
        raise ValueError("c must be positive")
    logN = math.log(N)
    kfac = logN if kappa == 2 else 1.0
    if regime == "typeA":
        if 1 <= alpha < 2:
            eps = c * N ** (alpha - 2.0) * kfac
        elif 0 < alpha < 1:
            eps = c * kfac / N
        else:
            raise ValueError("type A schedule requires 0 < alpha < 2")
    else:
        if 0 < alpha < 1:
            eps = c * N ** (alpha - 1.0) * kfac
        elif alpha == 1 and kappa > 2:
            eps = c
        else:
            raise ValueError("type B schedule requires 0 < alpha < 1, or alpha == 1 with kappa > 2")
    if not 0 < eps < 1:
        raise ScheduleInvalidError(
            f"epsilon schedule gives {eps:.6g} >= 1 at N={N}; increase N or decrease c"
        )
    return eps


class ScheduleInvalidError(ValueError):
    pass


def resolve_zeta(policy: str, N: int, alpha: float | None = None) -> float:
    """Bound on potential offspring as a function of N.

    Policies: ``const:<K>`` (floor(K*N)), ``NlogN``, ``N_pow_inv_alpha_logN``,
    ``sqrtN``, ``infinite``.  Natural log throughout.
    """
    if policy.startswith("const:"):
        K = float(policy.split(":", 1)[1])
        if K <= 0:
            raise ValueError("const zeta policy needs K > 0")
        return float(max(1, math.floor(K * N)))
    if policy == "NlogN":
        return float(max(1, math.floor(N * math.log(N))))
    if policy == "N_pow_inv_alpha_logN":
        if alpha is None or alpha <= 0:
            raise ValueError("N_pow_inv_alpha_logN needs alpha > 0")
        return float(max(1, math.floor(N ** (1.0 / alpha) * math.log(N))))
    if policy == "sqrtN":
        return float(max(1, math.floor(math.sqrt(N))))
    if policy == "infinite":
        return math.inf
    raise ValueError(f"unknown zeta policy {policy!r}")


@dataclass(frozen=True)
class EnvironmentModel:
    """Regime selector: who draws from the favorable alpha-law, and how often.

    ``typeA``: with probability eps every individual uses the alpha-law this
    generation.  ``typeB``: with probability eps exactly one uniformly chosen
    individual does.  ``fixed``: nobody ever does.  Both laws share zeta.
    """

    regime: str
    alpha: float
    kappa: float
    eps: float
    law_favorable: OffspringLaw
    law_normal: OffspringLaw

    def __post_init__(self):
        if self.regime not in ("typeA", "typeB", "fixed"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.law_favorable.zeta != self.law_normal.zeta:
            raise ValueError("favorable and normal laws must share the same zeta")
        if self.regime != "fixed" and not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")

    @property
    def zeta(self) -> float:
        return self.law_normal.zeta

    def draw_generation_laws(self, N: int, rng: np.random.Generator) -> np.ndarray:
        """Per-individual law flags for one generation (1 = favorable alpha-law)."""
        flags = np.zeros(N, dtype=np.uint8)
        if self.regime == "typeA":
            if rng.random() < self.eps:
                flags[:] = 1
        elif self.regime == "typeB":
            if rng.random() < self.eps:
                flags[rng.integers(N)] = 1
        return flags

    def sample_generation(self, N: int, rng: np.random.Generator):
        """Potential-offspring numbers X_1..X_N for one generation.

        Returns (x, total).  x is int64 for finite zeta, float64 otherwise.
        Consumes one uniform for the environment, then N for the draws
        (plus one for the type-B lucky index), in that order.
        """
        if self.regime == "typeA":
            law = self.law_favorable if rng.random() < self.eps else self.law_normal
            x = law.sample(rng, N)
        elif self.regime == "typeB":
            favorable = rng.random() < self.eps
            x = self.law_normal.sample(rng, N)
            if favorable:
                x[rng.integers(N)] = self.law_favorable.sample(rng)
        else:
            x = self.law_normal.sample(rng, N)
        return x, x.sum()

    def mixture_mean(self, N: int) -> float:
        """Per-individual E[X] under the environment mixture (finite zeta)."""
        mf, mn = self.law_favorable.mean(), self.law_normal.mean()
        if self.regime == "typeA":
            return self.eps * mf + (1 - self.eps) * mn
        if self.regime == "typeB":
            return self.eps * (mf / N + (N - 1) / N * mn) + (1 - self.eps) * mn
        return mn


def make_environment(
    regime: str,
    alpha: float,
    kappa: float,
    N: int,
    zeta_policy: str,
    eps: float | str = "auto",
    c: float = 1.0,
) -> EnvironmentModel:
    """Build an EnvironmentModel, resolving the zeta policy and eps schedule."""
    zeta = resolve_zeta(zeta_policy, N, alpha=alpha)
    if eps == "auto":
        if regime == "fixed":
            eps_val = 0.0
        else:
            eps_val = epsilon_schedule(regime, alpha, kappa, c, N)
    else:
        eps_val = float(eps)
    return EnvironmentModel(
        regime=regime,
        alpha=alpha,
        kappa=kappa,
        eps=eps_val,
        law_favorable=OffspringLaw(alpha, zeta),
        law_normal=OffspringLaw(kappa, zeta),
    )
