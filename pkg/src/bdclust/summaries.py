"""Label-invariant posterior summaries.

Everything here is computed from co-assignment structure (which is blind to
cluster relabeling): mean co-assignment probabilities, a point-estimate
partition minimizing posterior-expected variation of information, per-point
assignment probabilities via symmetric simplex factorization, and a
per-point misassignment probability.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ValidationError

__all__ = [
    "PointEstimate",
    "FactorizationResult",
    "coassignment_from_trace",
    "vi_distance",
    "point_estimate_vi",
    "simplex_factorize",
    "uncertainty",
]


@dataclass(eq=False)
class PointEstimate:
    """Selected partition with its posterior-expected VI and per-point
    misassignment probability."""

    labels: np.ndarray
    expected_vi: float
    uncertainty: np.ndarray | None = None


@dataclass(eq=False)
class FactorizationResult:
    probs: np.ndarray  # n x k row-simplex matrix
    objective: float  # squared Frobenius reconstruction error
    n_iters: int
    restart: int
    converged: bool
    history: list | None = None  # accepted objective values of the winning restart


def coassignment_from_trace(trace) -> np.ndarray:
    """Element-wise mean of the per-draw binary co-assignment matrices."""
    return trace.coassign_mean()


def _partition_counts(labels: np.ndarray):
    _, inv = np.unique(labels, return_inverse=True)
    return np.bincount(inv), inv


def vi_distance(labels_a, labels_b) -> float:
    """Variation of information between two partitions (natural log):
    H(a) + H(b) - 2 I(a, b)."""
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.size != b.size:
        raise ValidationError("partitions must have equal length")
    n = a.size
    ca, ia = _partition_counts(a)
    cb, ib = _partition_counts(b)
    joint = np.bincount(ia * cb.size + ib, minlength=ca.size * cb.size).reshape(
        ca.size, cb.size
    )
    pa = ca / n
    pb = cb / n
    h_a = float(-np.sum(pa * np.log(pa)))
    h_b = float(-np.sum(pb * np.log(pb)))
    nz = joint > 0
    pij = joint[nz] / n
    mi = float(np.sum(pij * np.log(pij * n * n / np.outer(ca, cb)[nz])))
    return max(h_a + h_b - 2.0 * mi, 0.0)


def _canonical(labels: np.ndarray) -> tuple:
    """Relabel by order of first appearance so that label permutations of the
    same partition collapse to one key."""
    _, first_idx, inv = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first_idx))
    return tuple(order[inv])


def point_estimate_vi(trace, coassign=None) -> PointEstimate:
    """Among the distinct sampled partitions, pick the one minimizing the
    mean VI to the retained draws; ties go to the earliest draw."""
    draws = trace.labels_draws
    if not draws:
        raise ValidationError("trace holds no retained draws")
    candidates = {}
    for idx, labels in enumerate(draws):
        key = _canonical(labels)
        if key not in candidates:
            candidates[key] = idx
    # candidates iterate in first-appearance order, so a strict comparison
    # breaks ties in favor of the earliest draw
    best_idx, best_evi = None, np.inf
    for key, idx in candidates.items():
        cand = np.asarray(key)
        evi = float(np.mean([vi_distance(cand, d) for d in draws]))
        if evi < best_evi:
            best_idx, best_evi = idx, evi
    labels = draws[best_idx].copy()
    return PointEstimate(labels=labels, expected_vi=best_evi)


def _project_rows_to_simplex(P: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    n, k = P.shape
    sorted_P = np.sort(P, axis=1)[:, ::-1]
    cumsum = np.cumsum(sorted_P, axis=1)
    js = np.arange(1, k + 1)
    cond = sorted_P - (cumsum - 1.0) / js > 0
    rho = k - np.argmax(cond[:, ::-1], axis=1) - 1
    rho = np.where(cond.any(axis=1), rho, 0)
    theta = (cumsum[np.arange(n), rho] - 1.0) / (rho + 1.0)
    return np.maximum(P - theta[:, None], 0.0)


def simplex_factorize(
    coassign,
    k: int,
    tol: float = 1e-10,
    max_iters: int = 500,
    n_restarts: int = 5,
    rng: np.random.Generator | None = None,
) -> FactorizationResult:
    """Factor the co-assignment matrix as P P' with row-simplex P by
    projected gradient descent with backtracking (so the objective never
    increases), keeping the best of several restarts."""
    S = np.asarray(coassign, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError("co-assignment matrix must be square")
    if k < 1:
        raise ParameterError("k must be at least 1")
    rng = rng or np.random.default_rng(0)
    n = S.shape[0]

    def objective(P):
        R = S - P @ P.T
        return float((R * R).sum())

    def spectral_init():
        vals, vecs = np.linalg.eigh(S)
        comp = vecs[:, -k:] * np.sqrt(np.maximum(vals[-k:], 0.0))[None, :]
        return _project_rows_to_simplex(np.abs(comp))

    best = None
    for restart in range(n_restarts):
        P = spectral_init() if restart == 0 else rng.dirichlet(np.ones(k), size=n)
        obj = objective(P)
        history = [obj]
        eta = 1.0 / max(n, 1)
        converged = False
        it = 0
        for it in range(1, max_iters + 1):
            grad = -4.0 * (S - P @ P.T) @ P
            step = eta
            improved = False
            for _ in range(40):
                P_new = _project_rows_to_simplex(P - step * grad)
                obj_new = objective(P_new)
                if obj_new <= obj:
                    improved = True
                    break
                step /= 2.0
            if not improved:
                converged = True
                break
            moved = obj - obj_new
            P, obj = P_new, obj_new
            history.append(obj)
            eta = min(step * 2.0, 1.0)
            if moved <= tol * max(1.0, obj):
                converged = True
                break
        if best is None or obj < best.objective:
            best = FactorizationResult(
                probs=P,
                objective=obj,
                n_iters=it,
                restart=restart,
                converged=converged,
                history=history,
            )
    if not best.converged:
        warnings.warn(
            "simplex factorization did not converge; returning best iterate",
            RuntimeWarning,
        )
    return best


def uncertainty(point_labels, trace, majority: float = 0.5) -> np.ndarray:
    """Per-point misassignment probability pr(c_i != chat_i): one minus the
    fraction of retained draws in which point i co-clusters with at least
    the `majority` share of its point-estimate cluster peers.  Points whose
    cluster has no peers get uncertainty 0."""
    labels = np.asarray(point_labels).ravel()
    draws = trace.labels_draws
    if not draws:
        raise ValidationError("trace holds no retained draws")
    n = labels.size
    peers = (labels[:, None] == labels[None, :]) & ~np.eye(n, dtype=bool)
    peer_counts = peers.sum(axis=1)
    agree = np.zeros(n)
    for d in draws:
        same = d[:, None] == d[None, :]
        co = (same & peers).sum(axis=1)
        with np.errstate(invalid="ignore"):
            frac = np.where(peer_counts > 0, co / np.maximum(peer_counts, 1), 1.0)
        agree += frac >= majority
    return 1.0 - agree / len(draws)
