"""Pairwise distance matrices: construction, validation and CSV round-trips.

The distance matrix is the only interface between raw data and the
clustering model, so every constructor here returns a symmetric,
nonnegative matrix with an exactly-zero diagonal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, ParameterError, ValidationError

__all__ = [
    "SubspaceEmbeddingConfig",
    "validate_data_matrix",
    "validate_distance_matrix",
    "compute_minkowski_distances",
    "compute_arccos_distances",
    "solve_self_expression",
    "compute_subspace_distances",
    "load_distance_matrix",
    "save_distance_matrix",
    "load_data_matrix",
    "pca_project",
    "add_jitter",
]


@dataclass
class SubspaceEmbeddingConfig:
    """Settings for the sparse self-expression solve.

    sparsity_weight is the coefficient of the absolute-value penalty on the
    coefficient matrix; its useful range is data dependent (see module docs).
    """

    sparsity_weight: float = 1.0
    max_iters: int = 200
    tol: float = 1e-6

    def __post_init__(self):
        if self.sparsity_weight <= 0:
            raise ParameterError("sparsity_weight must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be at least 1")
        if self.tol <= 0:
            raise ParameterError("tol must be positive")


def validate_data_matrix(X) -> np.ndarray:
    """Check an n x p data matrix (rows = observations) and return it as float64."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError(f"data matrix must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if n < 2:
        raise ValidationError(f"need at least 2 observations, got {n}")
    if p < 1:
        raise ValidationError("need at least 1 feature column")
    if not np.all(np.isfinite(X)):
        i, j = np.argwhere(~np.isfinite(X))[0]
        raise ValidationError(f"non-finite entry at ({i}, {j})")
    return X


def validate_distance_matrix(D, check: bool = True) -> np.ndarray:
    """Check symmetry, nonnegativity and zero diagonal of a distance matrix.

    With check=False only the shape is verified (escape hatch for files
    produced by other tools).
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {D.shape}")
    if not check:
        return D
    if not np.all(np.isfinite(D)):
        i, j = np.argwhere(~np.isfinite(D))[0]
        raise ValidationError(f"non-finite distance at ({i}, {j})")
    neg = np.argwhere(D < 0)
    if neg.size:
        i, j = neg[0]
        raise ValidationError(f"negative distance at ({i}, {j})")
    asym = np.argwhere(D != D.T)
    if asym.size:
        i, j = asym[0]
        raise ValidationError(f"asymmetric entries at ({i}, {j}) and ({j}, {i})")
    bad_diag = np.nonzero(np.diag(D) != 0.0)[0]
    if bad_diag.size:
        raise ValidationError(f"nonzero diagonal at ({bad_diag[0]}, {bad_diag[0]})")
    return D


def compute_minkowski_distances(X, q: float = 2.0) -> np.ndarray:
    """Pairwise q-norm distances d_ij = (sum_l |x_il - x_jl|^q)^(1/q), q >= 1."""
    X = validate_data_matrix(X)
    if q < 1:
        raise ParameterError(f"Minkowski order must satisfy q >= 1, got {q}")
    # each entry is an independent reduction over the feature axis, so the
    # result is bitwise symmetric by construction
    diff = np.abs(X[:, None, :] - X[None, :, :])
    if q == 1:
        D = diff.sum(axis=2)
    elif q == 2:
        D = np.sqrt((diff * diff).sum(axis=2))
    else:
        D = (diff**q).sum(axis=2) ** (1.0 / q)
    np.fill_diagonal(D, 0.0)
    return D


def compute_arccos_distances(X) -> np.ndarray:
    """Absolute arccos distance |acos(y_i . y_j)| for unit-norm rows."""
    X = validate_data_matrix(X)
    norms = np.linalg.norm(X, axis=1)
    bad = np.nonzero(np.abs(norms - 1.0) > 1e-8)[0]
    if bad.size:
        raise ValidationError(
            f"row {bad[0]} has norm {norms[bad[0]]:.12g}, expected unit norm"
        )
    G = X @ X.T
    G = (G + G.T) / 2.0  # force exact symmetry after BLAS
    # clamp absorbs rounding at numerically (anti)parallel pairs
    D = np.abs(np.arccos(np.clip(G, -1.0, 1.0)))
    np.fill_diagonal(D, 0.0)
    return D


def _project_rows_affine(W: np.ndarray) -> np.ndarray:
    """Project each row of W onto {w : sum(w) = 1, w_ii = 0} (Euclidean)."""
    n = W.shape[0]
    np.fill_diagonal(W, 0.0)
    W += ((1.0 - W.sum(axis=1)) / (n - 1))[:, None]
    np.fill_diagonal(W, 0.0)
    # the diagonal reset removes 1/(n-1) from each row sum; restore exactly
    W += ((1.0 - W.sum(axis=1)) / (n - 1))[:, None]
    np.fill_diagonal(W, 0.0)
    return W


def _self_expression_objective(X, W, lam) -> float:
    resid = X - W @ X
    return float((resid * resid).sum() + lam * np.abs(W).sum())


def solve_self_expression(X, cfg: SubspaceEmbeddingConfig | None = None) -> np.ndarray:
    """Sparse locally linear embedding: find W with zero diagonal and unit row
    sums such that each point is approximated by a combination of the others.

    Minimizes sum_i ||y_i - W y_i||^2 + lam ||W||_1 by proximal gradient
    steps (gradient of the quadratic part, soft threshold, projection onto
    the affine constraint set) with backtracking so the objective never
    increases.  Returns the best feasible iterate seen; a warning (not an
    error) is issued if the objective never improved on the uniform start.
    """
    X = validate_data_matrix(X)
    cfg = cfg or SubspaceEmbeddingConfig()
    n = X.shape[0]
    if n < 3:
        raise ValidationError(f"self-expression needs at least 3 points, got {n}")
    lam = cfg.sparsity_weight

    # feasible start: uniform weights over the other points
    W = np.full((n, n), 1.0 / (n - 1))
    np.fill_diagonal(W, 0.0)

    lipschitz = 2.0 * max(float(np.linalg.norm(X @ X.T, 2)), 1e-12)
    step = 1.0 / lipschitz
    obj = _self_expression_objective(X, W, lam)
    best_W, best_obj = W.copy(), obj
    improved = False

    for _ in range(cfg.max_iters):
        grad = -2.0 * (X - W @ X) @ X.T
        accepted = False
        for _ in range(40):
            Z = W - step * grad
            Z = np.sign(Z) * np.maximum(np.abs(Z) - step * lam, 0.0)
            W_new = _project_rows_affine(Z)
            obj_new = _self_expression_objective(X, W_new, lam)
            if obj_new <= obj:
                accepted = True
                break
            step /= 2.0
        if not accepted:
            break
        delta = np.max(np.abs(W_new - W))
        W, obj = W_new, obj_new
        if obj < best_obj:
            best_obj, best_W = obj, W.copy()
            improved = True
        step *= 1.5
        if delta < cfg.tol:
            break

    if not improved:
        warnings.warn(
            "self-expression objective did not improve within max_iters; "
            "returning best feasible iterate",
            RuntimeWarning,
        )
    return best_W


def compute_subspace_distances(W) -> np.ndarray:
    """Distance 2 - (|w_ij|/max_j'|w_ij'| + |w_ji|/max_i'|w_ji'|) from a
    self-expression matrix, each row normalized by its absolute maximum."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValidationError(f"coefficient matrix must be square, got {W.shape}")
    absW = np.abs(W)
    row_max = absW.max(axis=1)
    dead = np.nonzero(row_max <= 0.0)[0]
    if dead.size:
        raise DegenerateDataError(
            f"row {dead[0]} of the coefficient matrix is all zero; no normalizer exists"
        )
    R = absW / row_max[:, None]
    D = 2.0 - (R + R.T)
    np.fill_diagonal(D, 0.0)
    return D


def save_distance_matrix(D, path) -> None:
    """Write a dense CSV that round-trips through load_distance_matrix exactly."""
    D = np.asarray(D, dtype=float)
    np.savetxt(path, D, delimiter=",", fmt="%.17g")


def load_distance_matrix(path, validate: bool = True) -> np.ndarray:
    """Read a dense square CSV distance matrix; validation can be disabled."""
    try:
        D = np.loadtxt(path, delimiter=",", ndmin=2)
    except FileNotFoundError:
        raise
    except Exception as exc:  # malformed CSV
        raise ValidationError(f"could not parse {path}: {exc}") from exc
    if D.shape[0] != D.shape[1]:
        raise ValidationError(
            f"distance matrix must be square, got shape {D.shape} from {path}"
        )
    return validate_distance_matrix(D, check=validate)


def load_data_matrix(path, header: bool = False) -> np.ndarray:
    """Read an n x p data CSV (rows = observations); header row optional."""
    try:
        X = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise ValidationError(f"could not parse {path}: {exc}") from exc
    return validate_data_matrix(X)


def pca_project(X, d: int) -> np.ndarray:
    """Project centered data onto its top-d principal components
    (covariance eigendecomposition)."""
    X = validate_data_matrix(X)
    n, p = X.shape
    if not 1 <= d <= p:
        raise ParameterError(f"PCA dimension must be in [1, {p}], got {d}")
    Xc = X - X.mean(axis=0)
    cov = (Xc.T @ Xc) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    components = eigvecs[:, ::-1][:, :d]
    return Xc @ components


def add_jitter(X, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Add isotropic Gaussian noise; used to break exact degeneracies."""
    X = validate_data_matrix(X)
    if scale < 0:
        raise ParameterError("jitter scale must be nonnegative")
    return X + rng.normal(0.0, scale, size=X.shape)
