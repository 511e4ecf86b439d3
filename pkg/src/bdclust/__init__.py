"""Bayesian clustering of pairwise distance matrices.

A Gamma partial likelihood over within-cluster distances replaces the data
likelihood of a mixture model; assignments are sampled by lift-and-project
Hamiltonian Monte Carlo and summarized through label-invariant co-assignment
probabilities.
"""

__version__ = "0.1.0"

from . import distmat, evalgen, experiments, likelihood, priors, sampler, summaries
from .distmat import (
    compute_arccos_distances,
    compute_minkowski_distances,
    compute_subspace_distances,
    load_distance_matrix,
    save_distance_matrix,
    solve_self_expression,
)
from .errors import (
    BdclustError,
    DegenerateDataError,
    NumericalError,
    ParameterError,
    ValidationError,
)
from .experiments import BdcResult, cluster_distance_matrix
from .likelihood import (
    Assignment,
    ClusterParams,
    MixtureWeights,
    gamma_log_density,
    matrix_form_log_likelihood,
    total_log_likelihood,
)
from .priors import Ellipsoid, PriorConfig, elicit_beta_sigma, mvee
from .sampler import HMCConfig, Trace, run_chain, run_chains
from .summaries import (
    coassignment_from_trace,
    point_estimate_vi,
    simplex_factorize,
    uncertainty,
    vi_distance,
)
