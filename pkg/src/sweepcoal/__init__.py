"""Gene genealogies under sweepstakes reproduction.

Simulates pre-limiting Cannings ancestral processes in random environments,
their limiting multiple-merger coalescents with deterministic time changes,
and computes exact relative-branch-length spectra to validate the Monte
Carlo output.
"""

from .offspring import (
    EnvironmentModel,
    OffspringLaw,
    epsilon_schedule,
    make_environment,
    mean_approx,
    replicate_rng,
    resolve_zeta,
)
from .rates import (
    LambdaRateTable,
    MergerConfiguration,
    XiRateTable,
    beta_pd_rates,
    delta0_beta_rates,
    delta0_pd_rates,
    enumerate_configurations,
    falling_factorial,
    incomplete_beta,
    kingman_rates,
    pd_transition_probability,
)
from .exact import (
    brute_force_spectrum,
    expected_branch_lengths,
    kingman_phi,
    leafset_expected_branch_lengths,
    lumped_expected_branch_lengths,
    phi,
)
from .spectra import BranchLengthSpectrum
from .cannings import (
    BlockPartitionState,
    ancestral_step,
    assign_blocks_to_families,
    estimate_coalescence_probability,
    reproduce_one_generation,
    simulate_annealed,
)
from .quenched import PopulationAncestry, extend_ancestry, quenched_spectrum, sample_quenched_tree
from .coalsim import TimeChange, sample_holding_time, simulate_lambda, simulate_xi
from .experiments import (
    EstimateRecord,
    ExperimentConfig,
    RunResult,
    cn_scaling_report,
    run_compare,
    run_exact,
    run_experiment,
)

__version__ = "0.1.0"
