"""Posterior sampling over assignments and Gamma parameters.

Assignment rows are lifted from simplex vertices into the interior through a
tempered softmax over logits, evolved by leapfrog dynamics, projected back to
the nearest vertex, and accepted by a Metropolis test on the vertex
potential.  Scales and mixture weights have conjugate updates; shapes use a
random-walk Metropolis step on a log transform.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import evalgen
from .errors import ParameterError, ValidationError
from .likelihood import (
    Assignment,
    ClusterParams,
    MixtureWeights,
    masked_log,
    total_log_likelihood,
)
from .priors import (
    PriorConfig,
    alpha_log_prior,
    prior_log_densities,
    sample_alpha_prior,
    sample_sigma_prior,
)

__all__ = [
    "HMCConfig",
    "ChainState",
    "Trace",
    "lift",
    "project_to_vertex",
    "canonical_logits",
    "potential_u",
    "grad_u",
    "potential_at_assignment",
    "hmc_step",
    "gibbs_sigma",
    "gibbs_pi",
    "mh_alpha",
    "run_chain",
    "run_chains",
    "merge_traces",
]

logger = logging.getLogger(__name__)

# mass the canonical logits put on the assigned label after lifting
VERTEX_MASS_GAP = 1e-4


@dataclass
class HMCConfig:
    """Sampler settings; see the README for the config-file key names."""

    n_iterations: int = 500
    burn_in: int | None = None  # defaults to 20% of n_iterations
    thin: int = 1
    leapfrog_steps: int = 10
    stepsize: float = 0.05
    momentum_sd: float = 1.0
    temperature: float = 0.1
    rw_sd: float = 0.3
    seed: int = 0
    include_label_prior: bool = True

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ParameterError("n_iterations must be positive")
        if self.burn_in is None:
            self.burn_in = self.n_iterations // 5
        if not 0 <= self.burn_in < self.n_iterations:
            raise ParameterError("burn_in must lie in [0, n_iterations)")
        if self.thin < 1:
            raise ParameterError("thin must be at least 1")
        if self.leapfrog_steps < 1:
            raise ParameterError("leapfrog_steps must be at least 1")
        if self.stepsize <= 0:
            raise ParameterError("stepsize must be positive")
        if self.momentum_sd <= 0:
            raise ParameterError("momentum_sd must be positive")
        if self.temperature <= 0:
            raise ParameterError("temperature must be positive")
        if self.rw_sd <= 0:
            raise ParameterError("rw_sd must be positive")


@dataclass(eq=False)
class ChainState:
    """Current sampler state: logits (with their lifted view), the projected
    assignment, cluster parameters, weights, and the last momentum draw."""

    logits: np.ndarray
    assignment: Assignment
    params: ClusterParams
    weights: MixtureWeights
    momentum: np.ndarray | None = None


@dataclass(eq=False)
class Trace:
    """Retained draws plus acceptance bookkeeping.

    Co-assignment structure is stored as the per-draw label vectors (each
    draw's binary co-assignment matrix is labels[i] == labels[j]) together
    with the running sum of those matrices.
    """

    n: int
    k: int
    labels_draws: list = field(default_factory=list)
    sigma_draws: list = field(default_factory=list)
    alpha_draws: list = field(default_factory=list)
    pi_draws: list = field(default_factory=list)
    logtarget_draws: list = field(default_factory=list)
    coassign_sum: np.ndarray | None = None
    hmc_proposed: int = 0
    hmc_accepted: int = 0
    hmc_nonfinite: int = 0
    alpha_proposed: int = 0
    alpha_accepted: int = 0
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.coassign_sum is None:
            self.coassign_sum = np.zeros((self.n, self.n))

    @property
    def n_retained(self) -> int:
        return len(self.labels_draws)

    def record(self, state: ChainState) -> None:
        labels = state.assignment.labels.copy()
        self.labels_draws.append(labels)
        self.sigma_draws.append(state.params.sigma.copy())
        self.alpha_draws.append(state.params.alpha.copy())
        self.pi_draws.append(state.weights.pi.copy())
        self.coassign_sum += (labels[:, None] == labels[None, :]).astype(float)

    def coassign_draw(self, idx: int) -> np.ndarray:
        labels = self.labels_draws[idx]
        return (labels[:, None] == labels[None, :]).astype(float)

    def coassign_mean(self) -> np.ndarray:
        if self.n_retained == 0:
            raise ValidationError("trace holds no retained draws")
        return self.coassign_sum / self.n_retained

    def acceptance_rates(self) -> dict:
        return {
            "hmc": self.hmc_accepted / max(self.hmc_proposed, 1),
            "alpha": self.alpha_accepted / max(self.alpha_proposed, 1),
            "hmc_nonfinite": self.hmc_nonfinite,
        }


# ---------------------------------------------------------------------------
# simplex geometry


def lift(V, temperature: float) -> np.ndarray:
    """Tempered softmax rows: w = exp(v/t) / sum exp(v/t), overflow-safe."""
    if temperature <= 0:
        raise ParameterError("temperature must be positive")
    V = np.asarray(V, dtype=float)
    Z = V / temperature
    Z = Z - Z.max(axis=1, keepdims=True)
    W = np.exp(Z)
    W /= W.sum(axis=1, keepdims=True)
    return W


def project_to_vertex(W) -> Assignment:
    """Per-row argmax of the relaxed assignment; ties take the lowest index."""
    W = np.asarray(W, dtype=float)
    return Assignment(W.argmax(axis=1) + 1, W.shape[1])


def canonical_logits(
    assignment: Assignment, temperature: float, vertex_gap: float = VERTEX_MASS_GAP
) -> np.ndarray:
    """Logits that lift to at least 1 - vertex_gap mass on the assigned label:
    a fixed positive margin at the assigned column, zero elsewhere."""
    k = assignment.k
    if k == 1:
        return np.ones((assignment.n, 1))
    margin = temperature * np.log((k - 1) * (1.0 - vertex_gap) / vertex_gap)
    return margin * assignment.matrix


# ---------------------------------------------------------------------------
# potential and gradient


class LikelihoodCache:
    """Distance matrix with its masked element-wise log, shared by every
    potential evaluation of a chain."""

    def __init__(self, D):
        D = np.asarray(D, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValidationError("distance matrix must be square")
        self.D = D
        self.logD = masked_log(D)
        self.n = D.shape[0]


def _gram_inverse(W: np.ndarray) -> np.ndarray:
    G = W.T @ W
    try:
        Ginv = np.linalg.inv(G)
        if not np.all(np.isfinite(Ginv)):
            raise np.linalg.LinAlgError("non-finite inverse")
    except np.linalg.LinAlgError:
        logger.warning("near-singular relaxed Gram matrix; adding 1e-12 ridge")
        Ginv = np.linalg.inv(G + 1e-12 * np.eye(G.shape[0]))
    return Ginv


def potential_u(
    W,
    cache: LikelihoodCache,
    params: ClusterParams,
    weights: MixtureWeights | None = None,
    include_label_prior: bool = True,
) -> float:
    """Potential of a relaxed assignment:
    -tr{W'(log D)W L (W'W)^-1} + tr{W'DW (S W'W)^-1}, plus
    -sum_ih w_ih log pi_h when the label prior is part of the target."""
    W = np.asarray(W, dtype=float)
    Ginv = _gram_inverse(W)
    lam = params.alpha - 1.0
    P_log = W.T @ cache.logD @ W
    P_dist = W.T @ cache.D @ W
    t_log = float(np.trace((P_log * lam[None, :]) @ Ginv))
    t_scale = float(np.trace((P_dist @ Ginv) / params.sigma[None, :]))
    u = -t_log + t_scale
    if include_label_prior:
        if weights is None:
            raise ParameterError("weights required when the label prior is included")
        with np.errstate(divide="ignore"):
            log_pi = np.log(weights.pi)
        u -= float(np.sum(W * log_pi[None, :]))
    return u


def grad_u(
    V,
    cache: LikelihoodCache,
    params: ClusterParams,
    temperature: float,
    weights: MixtureWeights | None = None,
    include_label_prior: bool = True,
) -> np.ndarray:
    """Exact gradient of the potential with respect to the logits, chaining
    the matrix-calculus gradient in W through the tempered softmax."""
    V = np.asarray(V, dtype=float)
    W = lift(V, temperature)
    Ginv = _gram_inverse(W)
    lam = np.diag(params.alpha - 1.0)
    R = np.diag(1.0 / params.sigma)

    P_log = W.T @ cache.logD @ W
    P_dist = W.T @ cache.D @ W

    # d/dW tr{W'MW L (W'W)^-1} = MW(L Ginv + Ginv L) - W Ginv (P L + L P) Ginv
    grad_log = cache.logD @ W @ (lam @ Ginv + Ginv @ lam) - W @ Ginv @ (
        P_log @ lam + lam @ P_log
    ) @ Ginv
    grad_dist = cache.D @ W @ (Ginv @ R + R @ Ginv) - W @ Ginv @ (
        R @ P_dist + P_dist @ R
    ) @ Ginv

    gW = -grad_log + grad_dist
    if include_label_prior:
        if weights is None:
            raise ParameterError("weights required when the label prior is included")
        with np.errstate(divide="ignore"):
            gW = gW - np.log(weights.pi)[None, :]

    inner = (gW * W).sum(axis=1, keepdims=True)
    return (W * (gW - inner)) / temperature


def potential_at_assignment(
    cache: LikelihoodCache,
    assignment: Assignment,
    params: ClusterParams,
    weights: MixtureWeights | None = None,
    include_label_prior: bool = True,
) -> float:
    """Negated log density of an assignment under the current parameters:
    the trace terms plus the shape/scale normalizer of every ordered pair,
    and the label prior when it is part of the target.

    The normalizer must be kept here even though the relaxed flow potential
    drops it: it varies with the cluster sizes, and without it the chain can
    hide arbitrarily poor merges behind an inflated scale parameter.  Empty
    clusters contribute zero, matching the generalized-inverse convention.
    """
    u = 0.0
    for h in range(1, assignment.k + 1):
        members = assignment.members(h)
        n_h = members.size
        if n_h <= 1:
            continue
        sub_idx = np.ix_(members, members)
        alpha_h = params.alpha[h - 1]
        sigma_h = params.sigma[h - 1]
        lam_h = alpha_h - 1.0
        if lam_h != 0.0:
            u -= lam_h * cache.logD[sub_idx].sum() / n_h
        u += cache.D[sub_idx].sum() / (sigma_h * n_h)
        u += (n_h - 1.0) * (gammaln(alpha_h) + alpha_h * np.log(sigma_h))
    if include_label_prior:
        if weights is None:
            raise ParameterError("weights required when the label prior is included")
        counts = assignment.counts
        occ = counts > 0
        with np.errstate(divide="ignore"):
            u -= float(np.dot(counts[occ], np.log(weights.pi[occ])))
    return float(u)


# ---------------------------------------------------------------------------
# Markov kernels


def _kinetic(Q: np.ndarray, momentum_sd: float) -> float:
    return float((Q * Q).sum() / (2.0 * momentum_sd**2))


def hmc_step(
    state: ChainState,
    cache: LikelihoodCache,
    cfg: HMCConfig,
    rng: np.random.Generator,
    trace: Trace | None = None,
) -> tuple[ChainState, bool]:
    """One lift-leapfrog-project proposal with a Metropolis test on the
    vertex potentials.  On acceptance the logits are reset to the canonical
    near-vertex configuration of the new assignment.

    The kinetic energy drives the trajectory but stays out of the acceptance
    ratio: along a well-integrated trajectory the kinetic change cancels the
    interior potential change, so a ratio of full Hamiltonians would be blind
    to partition quality once the endpoint is projected; the plain potential
    ratio keeps exp(-U) at the vertices as the target.
    """
    t = cfg.temperature
    sd = cfg.momentum_sd
    lp = cfg.include_label_prior

    V = state.logits.copy()
    Q = rng.normal(0.0, sd, size=V.shape)
    q0 = Q.copy()

    u_cur = potential_at_assignment(cache, state.assignment, state.params, state.weights, lp)

    grad = grad_u(V, cache, state.params, t, state.weights, lp)
    Q = Q - 0.5 * cfg.stepsize * grad
    for step in range(cfg.leapfrog_steps):
        V = V + cfg.stepsize * Q / sd**2
        grad = grad_u(V, cache, state.params, t, state.weights, lp)
        if step < cfg.leapfrog_steps - 1:
            Q = Q - cfg.stepsize * grad
    Q = Q - 0.5 * cfg.stepsize * grad

    proposal = project_to_vertex(lift(V, t))
    u_prop = potential_at_assignment(cache, proposal, state.params, state.weights, lp)

    log_ratio = u_cur - u_prop
    if trace is not None:
        trace.hmc_proposed += 1
    if not np.isfinite(log_ratio):
        if trace is not None:
            trace.hmc_nonfinite += 1
        state.momentum = q0
        return state, False

    if np.log(rng.uniform()) < min(0.0, log_ratio):
        state.assignment = proposal
        state.logits = canonical_logits(proposal, t)
        state.momentum = Q
        if trace is not None:
            trace.hmc_accepted += 1
        return state, True
    state.momentum = q0
    return state, False


def gibbs_sigma(
    D,
    assignment: Assignment,
    alpha: np.ndarray,
    beta_sigma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Conjugate scale update.  For n_h > 1 the full conditional of the
    ordered-pair likelihood is Inverse-Gamma with shape 2 + alpha_h (n_h - 1)
    and scale beta_sigma + (ordered pair distance sum)/n_h; smaller clusters
    draw from the prior."""
    D = np.asarray(D, dtype=float)
    sigma = np.empty(assignment.k)
    for h in range(1, assignment.k + 1):
        members = assignment.members(h)
        n_h = members.size
        if n_h <= 1:
            sigma[h - 1] = sample_sigma_prior(beta_sigma, rng)
            continue
        pair_sum = D[np.ix_(members, members)].sum()  # ordered pairs
        shape = 2.0 + alpha[h - 1] * (n_h - 1.0)
        scale = beta_sigma + pair_sum / n_h
        sigma[h - 1] = scale / rng.gamma(shape, 1.0)
    return sigma


def gibbs_pi(assignment: Assignment, dirichlet_conc: float, rng: np.random.Generator):
    """Dirichlet full conditional on the mixture weights."""
    if dirichlet_conc <= 0:
        raise ParameterError("dirichlet_conc must be positive")
    return rng.dirichlet(dirichlet_conc + assignment.counts.astype(float))


def _cluster_pair_sums(D, logD, members) -> tuple[float, float, int]:
    sub = np.ix_(members, members)
    return float(D[sub].sum()), float(logD[sub].sum()), members.size


def _cluster_ll_from_sums(alpha, sigma, dist_sum, log_sum, n_h) -> float:
    """Ordered-pair cluster log likelihood from precomputed pair sums."""
    if n_h <= 1:
        return 0.0
    n_pairs = n_h * (n_h - 1.0)
    out = n_pairs * (-gammaln(alpha) - alpha * np.log(sigma)) - dist_sum / sigma
    if alpha != 1.0:
        out += (alpha - 1.0) * log_sum
    return float(out / n_h)


def mh_alpha(
    D,
    assignment: Assignment,
    alpha: np.ndarray,
    sigma: np.ndarray,
    rw_sd: float,
    rng: np.random.Generator,
    trace: Trace | None = None,
    logD: np.ndarray | None = None,
) -> np.ndarray:
    """Per-cluster random-walk Metropolis on log(alpha_h - 1 + 1e-10); the
    transform keeps proposals inside the support and its Jacobian enters the
    ratio.  Empty and singleton clusters draw from the prior directly."""
    D = np.asarray(D, dtype=float)
    if logD is None:
        logD = masked_log(D)
    eps = 1e-10
    out = alpha.copy()
    for h in range(1, assignment.k + 1):
        members = assignment.members(h)
        if members.size <= 1:
            out[h - 1] = sample_alpha_prior(rng)
            continue
        dist_sum, log_sum, n_h = _cluster_pair_sums(D, logD, members)
        a_cur = out[h - 1]
        theta = np.log(a_cur - 1.0 + eps)
        theta_new = theta + rw_sd * rng.normal()
        a_new = np.exp(theta_new) + 1.0 - eps
        if trace is not None:
            trace.alpha_proposed += 1
        if a_new < 1.0:
            continue
        s_h = sigma[h - 1]
        log_num = (
            _cluster_ll_from_sums(a_new, s_h, dist_sum, log_sum, n_h)
            + alpha_log_prior(a_new)
            + theta_new
        )
        log_den = (
            _cluster_ll_from_sums(a_cur, s_h, dist_sum, log_sum, n_h)
            + alpha_log_prior(a_cur)
            + theta
        )
        if np.log(rng.uniform()) < min(0.0, log_num - log_den):
            out[h - 1] = a_new
            if trace is not None:
                trace.alpha_accepted += 1
    return out


# ---------------------------------------------------------------------------
# chain driver


def _clamp_zero_distances(D: np.ndarray, trace: Trace) -> np.ndarray:
    """Zero off-diagonal distances have zero density under any shape > 1 and
    would freeze the chain; clamp them to half the smallest positive distance
    and record a note."""
    off = ~np.eye(D.shape[0], dtype=bool)
    zeros = (D == 0.0) & off
    if not zeros.any():
        return D
    positive = D[off & (D > 0.0)]
    if positive.size == 0:
        raise ValidationError("all off-diagonal distances are zero")
    clamp = 0.5 * positive.min()
    note = f"clamped {int(zeros.sum())} zero off-diagonal distances to {clamp:.3g}"
    warnings.warn(note, RuntimeWarning)
    trace.notes.append(note)
    D = D.copy()
    D[zeros] = clamp
    return D


def run_chain(
    D,
    cfg: HMCConfig,
    prior_cfg: PriorConfig,
    init: Assignment | None = None,
) -> Trace:
    """Run one chain: spectral initialization (unless an assignment is
    given), then cycles of assignment HMC, conjugate scale and weight
    updates, and shape Metropolis.  Retains draws after burn-in at the
    thinning interval; fully deterministic given cfg.seed."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    k = prior_cfg.k
    rng = np.random.default_rng(cfg.seed)
    trace = Trace(n=n, k=k)

    if n < k:
        warnings.warn(f"fewer observations ({n}) than clusters ({k})", RuntimeWarning)

    D = _clamp_zero_distances(D, trace)
    cache = LikelihoodCache(D)

    if init is None:
        labels = evalgen.spectral_clustering(D, min(k, n), rng)
        init = Assignment(labels, k)
    elif init.n != n:
        raise ValidationError("initial assignment length differs from the data")

    params = ClusterParams(alpha=np.full(k, 1.5), sigma=np.full(k, prior_cfg.beta_sigma))
    weights = MixtureWeights(
        pi=np.full(k, 1.0 / k), dirichlet_conc=prior_cfg.dirichlet_conc
    )
    state = ChainState(
        logits=canonical_logits(init, cfg.temperature),
        assignment=init,
        params=params,
        weights=weights,
    )

    for it in range(cfg.n_iterations):
        state, _ = hmc_step(state, cache, cfg, rng, trace)
        sigma = gibbs_sigma(cache.D, state.assignment, state.params.alpha, prior_cfg.beta_sigma, rng)
        state.params = ClusterParams(alpha=state.params.alpha, sigma=sigma)
        pi = gibbs_pi(state.assignment, prior_cfg.dirichlet_conc, rng)
        state.weights = MixtureWeights(pi=pi, dirichlet_conc=prior_cfg.dirichlet_conc)
        alpha = mh_alpha(
            cache.D,
            state.assignment,
            state.params.alpha,
            state.params.sigma,
            cfg.rw_sd,
            rng,
            trace,
            logD=cache.logD,
        )
        state.params = ClusterParams(alpha=alpha, sigma=state.params.sigma)

        logtarget = total_log_likelihood(
            cache.D,
            state.assignment,
            state.params,
            state.weights,
            include_label_prior=cfg.include_label_prior,
        ) + prior_log_densities(state.params, prior_cfg)
        trace.logtarget_draws.append(logtarget)

        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            trace.record(state)

    return trace


def run_chains(
    D,
    cfg: HMCConfig,
    prior_cfg: PriorConfig,
    n_chains: int = 1,
    threads: int = 1,
    init: Assignment | None = None,
) -> list:
    """Run independent chains with per-chain seeds spawned from cfg.seed.
    Thread-level parallelism only; each chain owns its generator."""
    from concurrent.futures import ThreadPoolExecutor
    from dataclasses import replace

    seeds = np.random.SeedSequence(cfg.seed).generate_state(n_chains)
    configs = [replace(cfg, seed=int(s)) for s in seeds]
    if threads <= 1 or n_chains == 1:
        return [run_chain(D, c, prior_cfg, init) for c in configs]
    with ThreadPoolExecutor(max_workers=min(threads, n_chains)) as pool:
        futures = [pool.submit(run_chain, D, c, prior_cfg, init) for c in configs]
        return [f.result() for f in futures]


def merge_traces(traces: list) -> Trace:
    """Concatenate retained draws of several chains (chain order preserved)."""
    if not traces:
        raise ValidationError("no traces to merge")
    first = traces[0]
    merged = Trace(n=first.n, k=first.k)
    for tr in traces:
        if tr.n != first.n or tr.k != first.k:
            raise ValidationError("traces have inconsistent shapes")
        merged.labels_draws.extend(tr.labels_draws)
        merged.sigma_draws.extend(tr.sigma_draws)
        merged.alpha_draws.extend(tr.alpha_draws)
        merged.pi_draws.extend(tr.pi_draws)
        merged.logtarget_draws.extend(tr.logtarget_draws)
        merged.coassign_sum += tr.coassign_sum
        merged.hmc_proposed += tr.hmc_proposed
        merged.hmc_accepted += tr.hmc_accepted
        merged.hmc_nonfinite += tr.hmc_nonfinite
        merged.alpha_proposed += tr.alpha_proposed
        merged.alpha_accepted += tr.alpha_accepted
        merged.notes.extend(tr.notes)
    return merged
