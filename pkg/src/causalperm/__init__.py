"""Permutation discovery for causal DAGs via removal, fill, and degree scores."""

__version__ = "0.1.0"

from .benchgen import (
    GenConfig,
    Metrics,
    dense_bk,
    erdos_renyi_dag,
    evaluate,
    parse_rho,
    sample_data,
    sem_from_dag,
)
from .gaussian import (
    CiTestConfig,
    DegenerateMarginalError,
    GaussianSem,
    InsufficientSamplesError,
    PrecisionState,
    fisher_z,
    fisher_z_cutoff,
    gaussian_exact_ci,
    gaussian_sample_ci,
    marginal_precision_update,
    partial_correlations,
    sample_covariance,
    sem_covariance,
    sem_precision,
)
from .graph_core import (
    CycleError,
    Dag,
    EdgeDelta,
    Permutation,
    UGraph,
    d_separated,
    d_separated_sets,
    dsep_ci,
    eliminate,
    elimination_graph,
    fill_score_local,
    marginalize,
    maximal_nodes,
    minimal_imap,
    moral_graph,
    moral_subgraph,
    read_dag,
    read_ugraph,
    write_dag,
    write_ugraph,
)
from .harness import (
    ALGORITHMS,
    ExperimentSpec,
    ResultRow,
    attach_timings,
    derive_seed,
    emit_plots,
    parse_n_rule,
    read_results_csv,
    run_algorithm,
    run_bench,
    run_noiseless,
    run_noisy,
    run_scaling,
    scaling_fits,
    write_results_csv,
    write_timings_json,
)
from .oracles import (
    DSeparationOracle,
    GaussianMoralOracle,
    MoralOracle,
    OpCounter,
    moral_oracle,
)
from .rfd import (
    OrderingResult,
    SearchPath,
    StepRecord,
    baseline_perm,
    rfd,
    rfd_step,
)

__all__ = [
    "ALGORITHMS",
    "CiTestConfig",
    "CycleError",
    "DSeparationOracle",
    "Dag",
    "DegenerateMarginalError",
    "EdgeDelta",
    "ExperimentSpec",
    "GaussianMoralOracle",
    "GaussianSem",
    "GenConfig",
    "InsufficientSamplesError",
    "Metrics",
    "MoralOracle",
    "OpCounter",
    "OrderingResult",
    "Permutation",
    "PrecisionState",
    "ResultRow",
    "SearchPath",
    "StepRecord",
    "UGraph",
    "attach_timings",
    "baseline_perm",
    "d_separated",
    "d_separated_sets",
    "dense_bk",
    "derive_seed",
    "dsep_ci",
    "eliminate",
    "elimination_graph",
    "emit_plots",
    "erdos_renyi_dag",
    "evaluate",
    "fill_score_local",
    "fisher_z",
    "fisher_z_cutoff",
    "gaussian_exact_ci",
    "gaussian_sample_ci",
    "marginal_precision_update",
    "marginalize",
    "maximal_nodes",
    "minimal_imap",
    "moral_graph",
    "moral_oracle",
    "moral_subgraph",
    "parse_n_rule",
    "parse_rho",
    "partial_correlations",
    "read_dag",
    "read_results_csv",
    "read_ugraph",
    "rfd",
    "rfd_step",
    "run_algorithm",
    "run_bench",
    "run_noiseless",
    "run_noisy",
    "run_scaling",
    "sample_covariance",
    "sample_data",
    "scaling_fits",
    "sem_covariance",
    "sem_from_dag",
    "sem_precision",
    "write_dag",
    "write_results_csv",
    "write_timings_json",
    "write_ugraph",
]
