"""End-to-end pipeline helpers and desk-scale replication experiments.

The replication grids mirror the accuracy tables of the reference study at a
size that runs in minutes: a skewed two-component mixture across dimensions,
a two-component spherical mixture across separations, and a two-subspace
problem clustered through self-expression distances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import distmat, evalgen, priors, sampler, summaries
from .errors import ParameterError
from .likelihood import Assignment

__all__ = [
    "BdcResult",
    "cluster_distance_matrix",
    "default_beta_sigma",
    "table1_experiment",
    "table4_experiment",
    "subspace_experiment",
    "emptying_experiment",
    "VMF_TABLE_CHORDS",
]

# chord lengths between the two mean directions used in the spherical table
VMF_TABLE_CHORDS = (2.0, 1.70, 0.76, 0.61)

# The spherical table's printed concentration values are only consistent with
# its reported accuracies when read as angular dispersions; the sampler uses
# the equivalent concentration 1/value^2.
VMF_TABLE_DISPERSIONS = (0.25, 0.3)


@dataclass(eq=False)
class BdcResult:
    """Outputs of one clustering run."""

    point: summaries.PointEstimate
    coassign: np.ndarray
    assign_probs: np.ndarray
    factorization: summaries.FactorizationResult
    trace: sampler.Trace
    traces: list
    prior_cfg: priors.PriorConfig
    hmc_cfg: sampler.HMCConfig


def default_beta_sigma(D) -> float:
    """Scale prior mean when only distances are available: a quarter of the
    median off-diagonal distance (a cluster diameter spans roughly four
    scale units)."""
    D = np.asarray(D, dtype=float)
    off = ~np.eye(D.shape[0], dtype=bool)
    med = float(np.median(D[off]))
    if med <= 0:
        raise ParameterError("median off-diagonal distance must be positive")
    return med / 4.0


def cluster_distance_matrix(
    D,
    k: int,
    hmc_cfg: sampler.HMCConfig | None = None,
    beta_sigma: float | None = None,
    dirichlet_conc: float | None = None,
    n_chains: int = 1,
    threads: int = 1,
    init: Assignment | None = None,
) -> BdcResult:
    """Sample the posterior over partitions of a distance matrix and compute
    all label-invariant summaries."""
    D = distmat.validate_distance_matrix(D)
    hmc_cfg = hmc_cfg or sampler.HMCConfig()
    if beta_sigma is None:
        beta_sigma = default_beta_sigma(D)
    prior_cfg = priors.PriorConfig(k=k, beta_sigma=beta_sigma, dirichlet_conc=dirichlet_conc)

    traces = sampler.run_chains(D, hmc_cfg, prior_cfg, n_chains=n_chains, threads=threads, init=init)
    merged = sampler.merge_traces(traces)

    coassign = summaries.coassignment_from_trace(merged)
    point = summaries.point_estimate_vi(merged)
    point.uncertainty = summaries.uncertainty(point.labels, merged)
    factorization = summaries.simplex_factorize(
        coassign, k, rng=np.random.default_rng(hmc_cfg.seed)
    )
    return BdcResult(
        point=point,
        coassign=coassign,
        assign_probs=factorization.probs,
        factorization=factorization,
        trace=merged,
        traces=traces,
        prior_cfg=prior_cfg,
        hmc_cfg=hmc_cfg,
    )


def _summarize(column: np.ndarray) -> dict:
    mean = float(np.mean(column))
    half = 1.96 * float(np.std(column, ddof=1)) / np.sqrt(len(column)) if len(column) > 1 else 0.0
    return {"mean": mean, "lo": mean - half, "hi": mean + half}


def table1_experiment(
    p_values=(1, 10),
    n_reps: int = 10,
    n: int = 200,
    seed: int = 0,
    iterations: int = 400,
    stepsize: float = 0.02,
) -> dict:
    """Skewed two-component mixture: accuracy of the distance model versus a
    diagonal Gaussian mixture across data dimensions.

    The two locations differ in the first coordinate only; the remaining
    coordinates are shared skewed noise, so accuracy degrades as the
    dimension grows (matching the trend of the reference table; with every
    coordinate shifted the problem becomes trivially easy at large p).
    """
    rows = []
    for p in p_values:
        bdc_scores, gmm_scores = [], []
        for rep in range(n_reps):
            rep_seed = seed + 1000 * rep + p
            locations = np.zeros((2, p))
            locations[1, 0] = 2.0
            spec = evalgen.GeneratorSpec(
                family="skew_normal_mixture",
                n=n,
                p=p,
                weights=(0.5, 0.5),
                locations=locations,
                scales=(1.0, 1.0),
                skews=(8.0, 10.0),
                seed=rep_seed,
            )
            X, truth = evalgen.generate(spec)
            D = distmat.compute_minkowski_distances(X, q=2.0)

            ell = priors.mvee(X, tol=1e-6)
            beta_sigma = priors.elicit_beta_sigma(ell.volume, k=2, p=p)
            cfg = sampler.HMCConfig(n_iterations=iterations, seed=rep_seed, stepsize=stepsize)
            result = cluster_distance_matrix(D, k=2, hmc_cfg=cfg, beta_sigma=beta_sigma)
            bdc_scores.append(evalgen.ari(result.point.labels, truth))

            gmm_labels = evalgen.gmm_em_diag(X, 2, np.random.default_rng(rep_seed))
            gmm_scores.append(evalgen.ari(gmm_labels, truth))
        rows.append(
            {
                "p": p,
                "bdc": _summarize(np.asarray(bdc_scores)),
                "gmm": _summarize(np.asarray(gmm_scores)),
                "bdc_scores": bdc_scores,
                "gmm_scores": gmm_scores,
            }
        )
    return {"table": "table1", "rows": rows}


def _vmf_directions(chord: float) -> tuple:
    """Unit vectors in the plane separated by the requested chord length."""
    if not 0 < chord <= 2:
        raise ParameterError("chord length must lie in (0, 2]")
    angle = 2.0 * np.arcsin(chord / 2.0)
    return ((1.0, 0.0), (float(np.cos(angle)), float(np.sin(angle))))


def table4_experiment(
    chords=VMF_TABLE_CHORDS,
    n_reps: int = 5,
    n: int = 400,
    seed: int = 0,
    iterations: int = 400,
) -> dict:
    """Spherical two-component mixture at several separations, clustered with
    the absolute arccos distance, versus a diagonal Gaussian mixture on the
    raw coordinates."""
    kappas = tuple(1.0 / d**2 for d in VMF_TABLE_DISPERSIONS)
    rows = []
    for chord in chords:
        bdc_scores, gmm_scores = [], []
        for rep in range(n_reps):
            rep_seed = seed + 1000 * rep + int(100 * chord)
            spec = evalgen.GeneratorSpec(
                family="vmf_mixture",
                n=n,
                p=2,
                weights=(0.5, 0.5),
                directions=_vmf_directions(chord),
                concentrations=kappas,
                seed=rep_seed,
            )
            X, truth = evalgen.generate(spec)
            D = distmat.compute_arccos_distances(X)
            cfg = sampler.HMCConfig(n_iterations=iterations, seed=rep_seed)
            result = cluster_distance_matrix(D, k=2, hmc_cfg=cfg)
            bdc_scores.append(evalgen.ari(result.point.labels, truth))

            gmm_labels = evalgen.gmm_em_diag(X, 2, np.random.default_rng(rep_seed))
            gmm_scores.append(evalgen.ari(gmm_labels, truth))
        rows.append(
            {
                "chord": chord,
                "bdc": _summarize(np.asarray(bdc_scores)),
                "gmm": _summarize(np.asarray(gmm_scores)),
                "bdc_scores": bdc_scores,
                "gmm_scores": gmm_scores,
            }
        )
    return {"table": "table4", "rows": rows}


def subspace_experiment(
    n_reps: int = 5,
    n_per_subspace: int = 100,
    ambient_dim: int = 20,
    subspace_dim: int = 3,
    noise_sd: float = 0.05,
    seed: int = 0,
    iterations: int = 400,
) -> dict:
    """Two random linear subspaces: the distance model on self-expression
    distances versus spectral clustering on raw Euclidean distances."""
    bdc_scores, spectral_scores = [], []
    for rep in range(n_reps):
        rep_seed = seed + 1000 * rep
        spec = evalgen.GeneratorSpec(
            family="subspace_mixture",
            n=2 * n_per_subspace,
            p=ambient_dim,
            weights=(0.5, 0.5),
            subspace_dim=subspace_dim,
            noise_sd=noise_sd,
            seed=rep_seed,
        )
        X, truth = evalgen.generate(spec)
        W = distmat.solve_self_expression(X, distmat.SubspaceEmbeddingConfig())
        D = distmat.compute_subspace_distances(W)
        cfg = sampler.HMCConfig(n_iterations=iterations, seed=rep_seed)
        result = cluster_distance_matrix(D, k=2, hmc_cfg=cfg)
        bdc_scores.append(evalgen.ari(result.point.labels, truth))

        D_euclid = distmat.compute_minkowski_distances(X, q=2.0)
        spec_labels = evalgen.spectral_clustering(D_euclid, 2, np.random.default_rng(rep_seed))
        spectral_scores.append(evalgen.ari(spec_labels, truth))
    return {
        "table": "subspace",
        "bdc": _summarize(np.asarray(bdc_scores)),
        "spectral": _summarize(np.asarray(spectral_scores)),
        "bdc_scores": bdc_scores,
        "spectral_scores": spectral_scores,
    }


def emptying_experiment(
    k: int = 5,
    n: int = 60,
    separation: float = 6.0,
    seed: int = 0,
    iterations: int = 600,
    size_threshold: int = 2,
) -> dict:
    """Two well-separated blobs fit with an over-provisioned mixture and a
    small Dirichlet concentration; reports the share of retained draws whose
    number of clusters larger than size_threshold is exactly two."""
    spec = evalgen.GeneratorSpec(
        family="skew_normal_mixture",
        n=n,
        p=2,
        weights=(0.5, 0.5),
        locations=(0.0, separation),
        scales=(1.0, 1.0),
        skews=(0.0, 0.0),
        seed=seed,
    )
    X, truth = evalgen.generate(spec)
    D = distmat.compute_minkowski_distances(X, q=2.0)
    ell = priors.mvee(X)
    beta_sigma = priors.elicit_beta_sigma(ell.volume, k=k, p=2)
    cfg = sampler.HMCConfig(n_iterations=iterations, seed=seed)
    result = cluster_distance_matrix(
        D, k=k, hmc_cfg=cfg, beta_sigma=beta_sigma, dirichlet_conc=1.0 / k
    )
    big_counts = [
        int(np.sum(np.bincount(d - 1, minlength=k) > size_threshold))
        for d in result.trace.labels_draws
    ]
    frac_two = float(np.mean([c == 2 for c in big_counts]))
    return {
        "table": "emptying",
        "fraction_two_big_clusters": frac_two,
        "big_cluster_counts": big_counts,
        "point_ari_vs_truth": evalgen.ari(result.point.labels, truth),
    }
