"""Gamma partial likelihood over pairwise distances.

Within a cluster of size n_h every ordered pair (i, i') contributes the
Gamma(alpha_h, sigma_h) log-density of d_{i,i'} with weight 1/n_h.  The same
quantity is exposed in two forms: an element-wise per-cluster sum and a
matrix-trace form on the binary assignment matrix.  The trace form also
bridges to graph affinities and the normalized-cut loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError, ValidationError

__all__ = [
    "Assignment",
    "ClusterParams",
    "MixtureWeights",
    "GraphAffinity",
    "BregmanSpec",
    "gamma_log_density",
    "cluster_log_likelihood",
    "total_log_likelihood",
    "matrix_form_log_likelihood",
    "trace_form_terms",
    "masked_log",
    "affinity_from_distance",
    "ncut_loss",
    "theorem4_residual",
    "bregman_divergence",
    "model_divergence",
    "distance_divergence",
]


@dataclass(eq=False)
class Assignment:
    """Cluster labels with a binary-matrix view.

    labels take values in 1..k; column h-1 of the matrix view corresponds to
    cluster h.
    """

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValidationError("labels must be a 1-D vector")
        if not np.issubdtype(labels.dtype, np.integer):
            as_int = labels.astype(int)
            if np.any(as_int != labels):
                raise ValidationError("labels must be integers")
            labels = as_int
        if self.k < 1:
            raise ParameterError("k must be at least 1")
        if labels.size and (labels.min() < 1 or labels.max() > self.k):
            raise ValidationError(f"labels must lie in 1..{self.k}")
        self.labels = labels.astype(np.int64)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def counts(self) -> np.ndarray:
        """Cluster sizes n_1..n_k."""
        return np.bincount(self.labels - 1, minlength=self.k)

    @property
    def matrix(self) -> np.ndarray:
        """n x k binary matrix C with C[i, h-1] = 1 iff labels[i] = h."""
        C = np.zeros((self.n, self.k))
        C[np.arange(self.n), self.labels - 1] = 1.0
        return C

    def members(self, h: int) -> np.ndarray:
        """Indices of the observations in cluster h (1-based h)."""
        return np.nonzero(self.labels == h)[0]

    @classmethod
    def from_labels(cls, labels, k: int | None = None) -> "Assignment":
        labels = np.asarray(labels, dtype=np.int64)
        return cls(labels, int(labels.max()) if k is None else k)


@dataclass(eq=False)
class ClusterParams:
    """Per-cluster Gamma shape alpha_h >= 1 and scale sigma_h > 0."""

    alpha: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if self.alpha.shape != self.sigma.shape:
            raise ValidationError("alpha and sigma must have equal length")
        if np.any(self.alpha < 1.0):
            raise ParameterError("every shape alpha_h must be >= 1")
        if np.any(self.sigma <= 0.0):
            raise ParameterError("every scale sigma_h must be > 0")

    @property
    def k(self) -> int:
        return self.alpha.size

    @property
    def shape_matrix(self) -> np.ndarray:
        """diag(alpha_1 - 1, ..., alpha_k - 1)."""
        return np.diag(self.alpha - 1.0)

    @property
    def scale_matrix(self) -> np.ndarray:
        """diag(sigma_1, ..., sigma_k)."""
        return np.diag(self.sigma)


@dataclass(eq=False)
class MixtureWeights:
    """Mixture weights on the simplex plus the symmetric Dirichlet concentration."""

    pi: np.ndarray
    dirichlet_conc: float = 1.0

    def __post_init__(self):
        self.pi = np.atleast_1d(np.asarray(self.pi, dtype=float))
        if np.any(self.pi < 0):
            raise ParameterError("mixture weights must be nonnegative")
        if abs(self.pi.sum() - 1.0) > 1e-8:
            raise ValidationError("mixture weights must sum to 1")
        if self.dirichlet_conc <= 0:
            raise ParameterError("Dirichlet concentration must be positive")

    @property
    def k(self) -> int:
        return self.pi.size


@dataclass(eq=False)
class GraphAffinity:
    """Symmetric affinity matrix derived from a distance kernel, plus its offset."""

    A: np.ndarray
    kappa: float


@dataclass(eq=False)
class BregmanSpec:
    """Divergence generator specification; only the squared Euclidean norm is
    supported, with the identity statistic."""

    phi_id: str = "squared_euclidean"

    def __post_init__(self):
        if self.phi_id != "squared_euclidean":
            raise ParameterError(f"unsupported generator: {self.phi_id!r}")


def gamma_log_density(d: float, alpha: float, sigma: float) -> float:
    """log Gamma(alpha, sigma) density at d:
    -log G(alpha) - alpha log sigma + (alpha - 1) log d - d / sigma.

    d = 0 returns -log sigma under alpha = 1 and -inf under alpha > 1.
    """
    if alpha < 1.0:
        raise ParameterError(f"shape must be >= 1, got {alpha}")
    if sigma <= 0.0:
        raise ParameterError(f"scale must be > 0, got {sigma}")
    if d < 0.0:
        raise ParameterError(f"distance must be nonnegative, got {d}")
    const = -gammaln(alpha) - alpha * np.log(sigma)
    if d == 0.0:
        return float(const) if alpha == 1.0 else -np.inf
    shape_term = 0.0 if alpha == 1.0 else (alpha - 1.0) * np.log(d)
    return float(const + shape_term - d / sigma)


def _pair_values(D: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Unordered within-cluster pair distances, sorted so that the subsequent
    sum does not depend on the observation ordering."""
    sub = D[np.ix_(members, members)]
    iu = np.triu_indices(len(members), k=1)
    return np.sort(sub[iu])


def cluster_log_likelihood(D, members, alpha_h: float, sigma_h: float) -> float:
    """Ordered-pair Gamma log likelihood of one cluster, each term to power
    1/n_h.  Singleton and empty clusters contribute 0 (empty product)."""
    D = np.asarray(D, dtype=float)
    members = np.asarray(members, dtype=np.int64)
    n = D.shape[0]
    if members.size and (members.min() < 0 or members.max() >= n):
        raise ValidationError("cluster member index out of range")
    n_h = members.size
    if n_h <= 1:
        return 0.0
    vals = _pair_values(D, members)
    n_pairs = 2.0 * vals.size  # ordered pairs
    const = -gammaln(alpha_h) - alpha_h * np.log(sigma_h)
    total = n_pairs * const - 2.0 * np.sum(vals) / sigma_h
    if alpha_h != 1.0:
        if np.any(vals == 0.0):
            return -np.inf
        total += (alpha_h - 1.0) * 2.0 * np.sum(np.log(vals))
    return float(total / n_h)


def total_log_likelihood(
    D,
    assignment: Assignment,
    params: ClusterParams,
    weights: MixtureWeights | None = None,
    include_label_prior: bool = True,
) -> float:
    """Sum of per-cluster distance log likelihoods, plus sum_h n_h log pi_h
    when the label prior is included (the default)."""
    D = np.asarray(D, dtype=float)
    if D.shape[0] != assignment.n:
        raise ValidationError("distance matrix and assignment sizes differ")
    if params.k != assignment.k:
        raise ValidationError("parameter vectors and assignment k differ")
    total = 0.0
    for h in range(1, assignment.k + 1):
        total += cluster_log_likelihood(
            D, assignment.members(h), params.alpha[h - 1], params.sigma[h - 1]
        )
    if include_label_prior:
        if weights is None:
            raise ParameterError("weights are required when the label prior is included")
        counts = assignment.counts
        occupied = counts > 0
        with np.errstate(divide="ignore"):
            log_pi = np.log(weights.pi[occupied])
        total += float(np.dot(counts[occupied], log_pi))
    return float(total)


def masked_log(D: np.ndarray) -> np.ndarray:
    """Element-wise log of a distance matrix with the diagonal forced to 0;
    off-diagonal zeros map to -inf (Gamma density zero under alpha > 1)."""
    D = np.asarray(D, dtype=float)
    with np.errstate(divide="ignore"):
        M = np.log(D)
    np.fill_diagonal(M, 0.0)
    return M


def trace_form_terms(D, C, params: ClusterParams) -> tuple[float, float, float]:
    """The two trace terms of the matrix-form likelihood and the additive
    alpha/sigma normalizer, evaluated with generalized-inverse semantics for
    empty clusters.

    Returns (t_log, t_scale, normalizer) with the full log likelihood equal
    to t_log - t_scale + normalizer.
    """
    D = np.asarray(D, dtype=float)
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != D.shape[0]:
        raise ValidationError("assignment matrix must be n x k")
    if np.any(C.sum(axis=1) != 1.0):
        raise ValidationError("each row of C must contain exactly one 1")
    counts = C.sum(axis=0)
    if params.k != C.shape[1]:
        raise ValidationError("parameter vectors and C have different k")

    M = masked_log(D)
    # diagonals of C^T M C and C^T D C; the trace against diagonal
    # Lambda (C^T C)^{-1} only consumes these entries
    diag_logs = np.einsum("ih,ij,jh->h", C, M, C)
    diag_dist = np.einsum("ih,ij,jh->h", C, D, C)

    lam = params.alpha - 1.0
    inv_counts = np.zeros_like(counts)
    nonempty = counts > 0
    inv_counts[nonempty] = 1.0 / counts[nonempty]

    with np.errstate(invalid="ignore"):
        log_contrib = lam * diag_logs * inv_counts
    # alpha_h = 1 zeroes the shape term even when diag_logs is -inf
    log_contrib = np.where(lam == 0.0, 0.0, log_contrib)
    t_log = float(np.sum(log_contrib))
    t_scale = float(np.sum(diag_dist * inv_counts / params.sigma))

    norm = -np.sum(
        np.maximum(counts - 1.0, 0.0)
        * (gammaln(params.alpha) + params.alpha * np.log(params.sigma))
    )
    return t_log, t_scale, float(norm)


def matrix_form_log_likelihood(D, C, params: ClusterParams) -> float:
    """Distance log likelihood in matrix form:
    tr{C'(log D)C L (C'C)^-1} - tr{C'DC (S C'C)^-1} plus the normalizer that
    aligns it with the element-wise per-cluster sum.  Empty columns of C
    contribute zero (generalized inverse)."""
    t_log, t_scale, norm = trace_form_terms(D, C, params)
    return t_log - t_scale + norm


def affinity_from_distance(D, sigma0: float, alpha0: float = 1.0) -> GraphAffinity:
    """Log-Gamma distance kernel affinity A = kappa - D/sigma0 + (alpha0-1) log D
    off-diagonal, with kappa the smallest offset making every off-diagonal
    entry strictly positive (plus a 1e-9 margin); diagonal set to 0."""
    D = np.asarray(D, dtype=float)
    if sigma0 <= 0:
        raise ParameterError("sigma0 must be positive")
    if alpha0 < 1:
        raise ParameterError("alpha0 must be >= 1")
    n = D.shape[0]
    off = ~np.eye(n, dtype=bool)
    B = -D / sigma0
    if alpha0 > 1.0:
        if np.any(D[off] == 0.0):
            i, j = np.argwhere((D == 0.0) & off)[0]
            raise ValidationError(
                f"zero off-diagonal distance at ({i}, {j}) not allowed with alpha0 > 1"
            )
        B = B + (alpha0 - 1.0) * masked_log(D)
    kappa = float(-B[off].min() + 1e-9)
    A = np.where(off, B + kappa, 0.0)
    return GraphAffinity(A=A, kappa=kappa)


def _affinity_array(A) -> np.ndarray:
    return np.asarray(A.A if isinstance(A, GraphAffinity) else A, dtype=float)


def ncut_loss(A, assignment_or_C) -> float:
    """Normalized graph-cut loss: cross-cluster affinity mass, each cluster's
    cut weighted by 1/(2 n_h)."""
    A = _affinity_array(A)
    C = (
        assignment_or_C.matrix
        if isinstance(assignment_or_C, Assignment)
        else np.asarray(assignment_or_C, dtype=float)
    )
    counts = C.sum(axis=0)
    total = 0.0
    for h in range(C.shape[1]):
        inside = C[:, h] > 0
        if not inside.any():
            continue
        total += A[np.ix_(inside, ~inside)].sum() / (2.0 * counts[h])
    return float(total)


def theorem4_residual(A, assignment_or_C) -> float:
    """Residual of the identity linking the normalized cut to the trace form:
    2 NCut + tr{C'AC (C'C)^-1} - sum_i deg_i / n_{c_i}.  Zero in exact
    arithmetic for any symmetric A and valid C."""
    A = _affinity_array(A)
    C = (
        assignment_or_C.matrix
        if isinstance(assignment_or_C, Assignment)
        else np.asarray(assignment_or_C, dtype=float)
    )
    counts = C.sum(axis=0)
    inv_counts = np.divide(1.0, counts, out=np.zeros_like(counts), where=counts > 0)
    trace_term = float(np.einsum("ih,ij,jh,h->", C, A, C, inv_counts))
    degrees = A.sum(axis=1)
    labels_idx = C.argmax(axis=1)
    degree_term = float(np.sum(degrees * inv_counts[labels_idx]))
    return 2.0 * ncut_loss(A, C) + trace_term - degree_term


def bregman_divergence(spec: BregmanSpec, x, y) -> float:
    """B_phi(x, y) = phi(x) - phi(y) - (x - y) . grad phi(y); equals the
    squared Euclidean distance for the squared-norm generator."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    phi_x = float(x @ x)
    phi_y = float(y @ y)
    return phi_x - phi_y - float((x - y) @ (2.0 * y))


def model_divergence(X, assignment: Assignment, spec: BregmanSpec | None = None) -> float:
    """Within-cluster divergence of each point from its cluster mean of the
    identity statistic."""
    spec = spec or BregmanSpec()
    X = np.asarray(X, dtype=float)
    total = 0.0
    for h in range(1, assignment.k + 1):
        members = assignment.members(h)
        if members.size == 0:
            continue
        mu = X[members].mean(axis=0)
        for i in members:
            total += bregman_divergence(spec, X[i], mu)
    return float(total)


def distance_divergence(X, assignment: Assignment, spec: BregmanSpec | None = None) -> float:
    """Pairwise within-cluster divergence with the calibrating power 1/n_h."""
    spec = spec or BregmanSpec()
    X = np.asarray(X, dtype=float)
    total = 0.0
    for h in range(1, assignment.k + 1):
        members = assignment.members(h)
        n_h = members.size
        if n_h == 0:
            continue
        acc = 0.0
        for i in members:
            for j in members:
                acc += 0.5 * bregman_divergence(spec, X[i], X[j])
        total += acc / n_h
    return float(total)
