"""Configuration, seeded parallel replication, estimator aggregation, CSV.

A replicate's random streams are a pure function of (seed, replicate index),
so results are reproducible and independent of the worker count; replicate
partial sums are reduced in fixed chunk order to keep the reduction
bit-exact.  The spectrum estimator is the mean over replicates of the
per-replicate relative lengths R_i (mean of ratios, not ratio of means).
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .cannings import estimate_coalescence_probability, simulate_annealed
from .coalsim import TimeChange, _lambda_cum_rates, _pack_xi_table, simulate_lambda, simulate_xi
from .exact import expected_branch_lengths, phi
from .offspring import (
    SUBSTREAM_MAIN,
    SUBSTREAM_SAMPLING,
    EnvironmentModel,
    make_environment,
    replicate_rng,
)
from .quenched import quenched_spectrum
from .rates import (
    LambdaRateTable,
    XiRateTable,
    beta_pd_rates,
    delta0_beta_rates,
    delta0_pd_rates,
    kingman_rates,
)

__all__ = [
    "ConfigError",
    "AbortThresholdExceeded",
    "ExperimentConfig",
    "EstimateRecord",
    "RunResult",
    "parse_config_file",
    "config_from_mapping",
    "build_rate_table",
    "run_experiment",
    "run_exact",
    "cn_scaling_report",
    "run_compare",
    "write_spectrum_csv",
    "write_scaling_csv",
    "write_exact_csv",
    "write_rates_csv",
    "write_compare_csv",
]

CHUNK = 1024
ABORT_FRACTION_LIMIT = 1e-3

SPECTRUM_KINDS = ("annealed", "quenched", "coalescent-lambda", "coalescent-xi")
LAMBDA_MODELS = ("kingman", "delta0-beta")
XI_MODELS = ("delta0-pd", "beta-pd")


class ConfigError(ValueError):
    pass


class AbortThresholdExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    n: int = 2
    N: int = 0
    model: str = ""
    regime: str = "typeA"
    alpha: float = 1.0
    kappa: float = 2.0
    gamma: float = 1.0
    c: float = 1.0
    beta: float = 1.5
    rho: float = 0.0
    eps: str = "auto"  # float-like string or "auto"
    zeta: str = "NlogN"
    reps: int = 1
    seed: int = 0
    out: str = ""
    threads: int = 1
    max_generations: int = 10**6
    N_list: tuple[int, ...] = ()
    normalize_beta_pd: bool = False
    validate: bool = False

    def validated(self) -> "ExperimentConfig":
        if self.kind not in SPECTRUM_KINDS + ("exact", "cn-scaling"):
            raise ConfigError(f"unknown kind {self.kind!r}")
        if self.kind in SPECTRUM_KINDS + ("exact",):
            if self.n < 2:
                raise ConfigError("n must be >= 2")
        if self.kind in ("annealed", "quenched"):
            if self.N < self.n:
                raise ConfigError("need 2 <= n <= N")
            if self.regime not in ("typeA", "typeB", "fixed"):
                raise ConfigError(f"unknown regime {self.regime!r}")
        if self.kind in ("coalescent-lambda", "exact") and self.model not in LAMBDA_MODELS:
            raise ConfigError(f"kind {self.kind} needs model in {LAMBDA_MODELS}")
        if self.kind == "coalescent-xi" and self.model not in XI_MODELS:
            raise ConfigError(f"kind coalescent-xi needs model in {XI_MODELS}")
        if self.kind == "cn-scaling" and not self.N_list:
            raise ConfigError("cn-scaling needs N_list")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.eps != "auto":
            try:
                float(self.eps)
            except ValueError:
                raise ConfigError(f"eps must be a number or 'auto', got {self.eps!r}")
        return self


@dataclass(frozen=True)
class EstimateRecord:
    i: int
    mean: float
    stderr: float
    M: int


@dataclass(frozen=True)
class RunResult:
    """Both spectrum estimators from one replicated run.

    records: mean over replicates of the per-replicate ratios R_i = l_i / L
    (the estimator of E[R_i]).  ratio_records: ratio of means
    sum(l_i) / sum(L) with a delta-method standard error; this one is
    consistent for phi_i = E[L_i]/E[L] and is what exact-spectrum
    comparisons should use.  The two differ by a real finite-n bias.
    """

    records: list
    ratio_records: list
    aborts: int


_BOOL_KEYS = {"normalize_beta_pd", "validate"}
_INT_KEYS = {"n", "N", "reps", "threads", "max_generations"}
_FLOAT_KEYS = {"alpha", "kappa", "gamma", "c", "beta", "rho"}


def parse_config_file(path: str) -> dict:
    """Read a plain-text key=value file; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key] = value
    return out


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, value in mapping.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if key in _INT_KEYS:
            kwargs[key] = int(value)
        elif key in _FLOAT_KEYS:
            kwargs[key] = float(value)
        elif key == "seed":
            kwargs[key] = int(value, 0) if isinstance(value, str) else int(value)
        elif key in _BOOL_KEYS:
            kwargs[key] = str(value).lower() in ("1", "true", "yes", "on")
        elif key == "N_list":
            items = str(value).replace(",", " ").split()
            kwargs[key] = tuple(int(v) for v in items)
        else:
            kwargs[key] = str(value)
    if "kind" not in kwargs:
        raise ConfigError("config needs a kind")
    return ExperimentConfig(**kwargs).validated()


def build_environment(cfg: ExperimentConfig) -> EnvironmentModel:
    return make_environment(
        cfg.regime,
        alpha=cfg.alpha,
        kappa=cfg.kappa,
        N=cfg.N,
        zeta_policy=cfg.zeta,
        eps=cfg.eps if cfg.eps == "auto" else float(cfg.eps),
        c=cfg.c,
    )


def build_rate_table(cfg: ExperimentConfig):
    if cfg.model == "kingman":
        return kingman_rates(cfg.n)
    if cfg.model == "delta0-beta":
        return delta0_beta_rates(cfg.n, alpha=cfg.alpha, gamma=cfg.gamma, kappa=cfg.kappa, c=cfg.c)
    if cfg.model == "delta0-pd":
        return delta0_pd_rates(cfg.n, alpha=cfg.alpha, kappa=cfg.kappa, c=cfg.c)
    if cfg.model == "beta-pd":
        return beta_pd_rates(
            cfg.n, alpha=cfg.alpha, beta=cfg.beta, c=cfg.c, normalize=cfg.normalize_beta_pd
        )
    raise ConfigError(f"unknown model {cfg.model!r}")


class _ReplicateRunner:
    """Per-process context: environment or packed rate tables built once."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.env = None
        self.lambda_packed = None
        self.xi_packed = None
        self.table = None
        if cfg.kind in ("annealed", "quenched"):
            self.env = build_environment(cfg)
        elif cfg.kind == "coalescent-lambda":
            self.table = build_rate_table(cfg)
            self.lambda_packed = _lambda_cum_rates(self.table)
        elif cfg.kind == "coalescent-xi":
            self.table = build_rate_table(cfg)
            self.xi_packed = _pack_xi_table(self.table)

    def spectrum(self, r: int) -> np.ndarray | None:
        """Branch lengths l_1..l_{n-1} for replicate r, or None if aborted."""
        cfg = self.cfg
        from .cannings import SimulationCapError

        try:
            if cfg.kind == "annealed":
                rng = replicate_rng(cfg.seed, r, SUBSTREAM_MAIN)
                spec = simulate_annealed(cfg.n, cfg.N, self.env, rng, cfg.max_generations)
            elif cfg.kind == "quenched":
                spec = quenched_spectrum(
                    cfg.n,
                    cfg.N,
                    self.env,
                    replicate_rng(cfg.seed, r, SUBSTREAM_MAIN),
                    replicate_rng(cfg.seed, r, SUBSTREAM_SAMPLING),
                    cfg.max_generations,
                )
            elif cfg.kind == "coalescent-lambda":
                rng = replicate_rng(cfg.seed, r, SUBSTREAM_MAIN)
                spec = simulate_lambda(
                    cfg.n,
                    self.table,
                    TimeChange(rho=cfg.rho),
                    rng,
                    validate=cfg.validate,
                    _packed=self.lambda_packed,
                )
            else:
                rng = replicate_rng(cfg.seed, r, SUBSTREAM_MAIN)
                spec = simulate_xi(
                    cfg.n,
                    self.table,
                    TimeChange(rho=cfg.rho),
                    rng,
                    validate=cfg.validate,
                    _packed=self.xi_packed,
                )
        except SimulationCapError:
            return None
        return spec.lengths

    def chunk(self, start: int, stop: int):
        """Ordered partial sums over replicates [start, stop)."""
        width = self.cfg.n - 1
        sums = _ChunkSums(width)
        for r in range(start, stop):
            lengths = self.spectrum(r)
            if lengths is None:
                sums.aborts += 1
                continue
            sums.add(lengths)
        return sums


class _ChunkSums:
    """Running sums for both spectrum estimators; merged in chunk order."""

    def __init__(self, width: int):
        self.rel = np.zeros(width)
        self.rel2 = np.zeros(width)
        self.len = np.zeros(width)
        self.len2 = np.zeros(width)
        self.len_tot = np.zeros(width)
        self.tot = 0.0
        self.tot2 = 0.0
        self.count = 0
        self.aborts = 0

    def add(self, lengths: np.ndarray) -> None:
        total = lengths.sum()
        rel = lengths / total
        self.rel += rel
        self.rel2 += rel * rel
        self.len += lengths
        self.len2 += lengths * lengths
        self.len_tot += lengths * total
        self.tot += total
        self.tot2 += total * total
        self.count += 1

    def merge(self, other: "_ChunkSums") -> None:
        self.rel += other.rel
        self.rel2 += other.rel2
        self.len += other.len
        self.len2 += other.len2
        self.len_tot += other.len_tot
        self.tot += other.tot
        self.tot2 += other.tot2
        self.count += other.count
        self.aborts += other.aborts


_WORKER_RUNNER: _ReplicateRunner | None = None


def _worker_init(cfg: ExperimentConfig):
    global _WORKER_RUNNER
    _WORKER_RUNNER = _ReplicateRunner(cfg)


def _worker_chunk(bounds):
    return _WORKER_RUNNER.chunk(*bounds)


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Dispatch cfg.reps replicates, reduce in order, return both estimators.

    Raises AbortThresholdExceeded when more than 0.1% of replicates abort
    (quenched generation cap).  Writes the E[R_i] records as CSV when
    cfg.out is set.
    """
    cfg = cfg.validated()
    if cfg.kind not in SPECTRUM_KINDS:
        raise ConfigError(f"run_experiment handles spectrum kinds, not {cfg.kind!r}")
    bounds = [(s, min(s + CHUNK, cfg.reps)) for s in range(0, cfg.reps, CHUNK)]
    total = _ChunkSums(cfg.n - 1)
    if cfg.threads > 1 and len(bounds) > 1:
        with multiprocessing.get_context("fork").Pool(
            processes=cfg.threads, initializer=_worker_init, initargs=(cfg,)
        ) as pool:
            for sums in pool.imap(_worker_chunk, bounds):
                total.merge(sums)
    else:
        runner = _ReplicateRunner(cfg)
        for b in bounds:
            total.merge(runner.chunk(*b))
    if total.aborts > ABORT_FRACTION_LIMIT * cfg.reps:
        raise AbortThresholdExceeded(
            f"{total.aborts} of {cfg.reps} replicates aborted at the generation cap"
        )
    if total.count == 0:
        raise AbortThresholdExceeded("every replicate aborted")
    result = _assemble_records(cfg.n, total)
    if cfg.out:
        write_spectrum_csv(cfg.out, result.records)
    return result


def _assemble_records(n: int, sums: _ChunkSums) -> RunResult:
    M = sums.count
    width = n - 1
    mean = sums.rel / M
    if M > 1:
        var = np.maximum(sums.rel2 - M * mean * mean, 0.0) / (M - 1)
        stderr = np.sqrt(var / M)
        mean_len = sums.len / M
        mean_tot = sums.tot / M
        ratio = mean_len / mean_tot
        s_xx = (sums.len2 - M * mean_len**2) / (M - 1)
        s_yy = (sums.tot2 - M * mean_tot**2) / (M - 1)
        s_xy = (sums.len_tot - M * mean_len * mean_tot) / (M - 1)
        var_r = np.maximum(s_xx - 2 * ratio * s_xy + ratio * ratio * s_yy, 0.0)
        stderr_r = np.sqrt(var_r / M) / mean_tot
    else:
        stderr = np.zeros(width)
        ratio = sums.len / sums.tot
        stderr_r = np.zeros(width)
    records = [
        EstimateRecord(i=i, mean=float(mean[i - 1]), stderr=float(stderr[i - 1]), M=M)
        for i in range(1, n)
    ]
    ratio_records = [
        EstimateRecord(i=i, mean=float(ratio[i - 1]), stderr=float(stderr_r[i - 1]), M=M)
        for i in range(1, n)
    ]
    return RunResult(records=records, ratio_records=ratio_records, aborts=sums.aborts)


def run_exact(cfg: ExperimentConfig):
    """Exact E[L_i] and phi_i for the configured rate table."""
    cfg = cfg.validated()
    table = build_rate_table(cfg)
    e = expected_branch_lengths(cfg.n, table, n_cap=max(100, cfg.n))
    ph = e / e.sum()
    rows = [(i, float(e[i - 1]), float(ph[i - 1])) for i in range(1, cfg.n)]
    if cfg.out:
        write_exact_csv(cfg.out, rows)
    return rows


def cn_scaling_report(cfg: ExperimentConfig):
    """Monte Carlo pair-coalescence probability and its compensated product
    per population size: (N, c_hat, c_hat_se, C_kappa^N * c_hat)."""
    cfg = cfg.validated()
    rows = []
    for idx, N in enumerate(cfg.N_list):
        env = make_environment(
            cfg.regime,
            alpha=cfg.alpha,
            kappa=cfg.kappa,
            N=N,
            zeta_policy=cfg.zeta,
            eps=cfg.eps if cfg.eps == "auto" else float(cfg.eps),
            c=cfg.c,
        )
        rng = replicate_rng(cfg.seed, idx, SUBSTREAM_MAIN)
        c_hat, se = estimate_coalescence_probability(env, N, cfg.reps, rng)
        ckn = N / math.log(N) if cfg.kappa == 2 else float(N)
        rows.append((N, c_hat, se, ckn * c_hat))
    if cfg.out:
        write_scaling_csv(cfg.out, rows)
    return rows


def run_compare(cfg: ExperimentConfig):
    """Monte Carlo spectrum next to the exact phi on the same rate table.

    Uses the ratio-of-means records, the estimator that is consistent for
    phi_i; the mean-of-ratios records carry a finite-n bias against phi.
    """
    cfg = cfg.validated()
    if cfg.kind != "coalescent-lambda":
        raise ConfigError("compare needs kind=coalescent-lambda")
    result = run_experiment(replace(cfg, out=""))
    table = build_rate_table(cfg)
    ph = phi(cfg.n, table, n_cap=max(100, cfg.n))
    rows = [
        (rec.i, rec.mean, rec.stderr, rec.M, float(ph[rec.i - 1]))
        for rec in result.ratio_records
    ]
    if cfg.out:
        write_compare_csv(cfg.out, rows)
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def write_spectrum_csv(path: str, records) -> None:
    with open(path, "w") as fh:
        fh.write("i,mean,stderr,M\n")
        for rec in records:
            fh.write(f"{rec.i},{_fmt(rec.mean)},{_fmt(rec.stderr)},{rec.M}\n")


def read_spectrum_csv(path: str):
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "i,mean,stderr,M":
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            i, mean, stderr, M = line.strip().split(",")
            records.append(EstimateRecord(int(i), float(mean), float(stderr), int(M)))
    return records


def write_scaling_csv(path: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write("N,c_hat,c_hat_se,compensated\n")
        for N, c_hat, se, comp in rows:
            fh.write(f"{N},{_fmt(c_hat)},{_fmt(se)},{_fmt(comp)}\n")


def write_exact_csv(path: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write("i,E_Li,phi_i\n")
        for i, e, p in rows:
            fh.write(f"{i},{_fmt(e)},{_fmt(p)}\n")


def write_compare_csv(path: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write("i,mean,stderr,M,phi_i\n")
        for i, mean, stderr, M, p in rows:
            fh.write(f"{i},{_fmt(mean)},{_fmt(stderr)},{M},{_fmt(p)}\n")


def write_rates_csv(path: str, table) -> None:
    with open(path, "w") as fh:
        fh.write("b,config,total_rate\n")
        if isinstance(table, LambdaRateTable):
            for b in range(2, table.n + 1):
                for k in range(2, b + 1):
                    fh.write(f"{b},{k},{_fmt(table.total_rate(b, k))}\n")
        elif isinstance(table, XiRateTable):
            for b in range(2, table.n + 1):
                for parts, rate in zip(table.configs[b], table.rates[b]):
                    label = "+".join(str(k) for k in parts)
                    fh.write(f"{b},{label},{_fmt(rate)}\n")
        else:
            raise TypeError("expected a rate table")
