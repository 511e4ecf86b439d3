"""Hyperparameter elicitation from the data's minimum-volume enclosing
ellipsoid, and prior densities for the Gamma shape/scale parameters.

The scale prior is Inverse-Gamma(2, beta_sigma) so its mean is beta_sigma;
beta_sigma is chosen by treating the requested cluster count as a packing
number of balls inside the enclosing ellipsoid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .distmat import validate_data_matrix
from .errors import DegenerateDataError, ParameterError

__all__ = [
    "Ellipsoid",
    "PriorConfig",
    "unit_ball_volume",
    "mvee",
    "elicit_beta_sigma",
    "alpha_log_prior",
    "sigma_log_prior",
    "prior_log_densities",
    "sample_alpha_prior",
    "sample_sigma_prior",
]

ALPHA_PRIOR_SHAPE = 0.5
ALPHA_PRIOR_RATE = 1.0
SIGMA_PRIOR_SHAPE = 2.0
# boundary convention: the shifted-Gamma density diverges at alpha = 1, so the
# log prior is capped at the value taken at alpha - 1 = ALPHA_EDGE
ALPHA_EDGE = 1e-12


@dataclass(eq=False)
class Ellipsoid:
    """Enclosing ellipsoid {y : (y - center)' shape (y - center) <= 1}."""

    center: np.ndarray
    shape: np.ndarray
    volume: float
    n_iters: int = 0
    converged: bool = True


@dataclass
class PriorConfig:
    """Hyperparameters of the clustering prior."""

    k: int
    beta_sigma: float
    dirichlet_conc: float | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("k must be at least 1")
        if self.beta_sigma <= 0:
            raise ParameterError("beta_sigma must be positive")
        if self.dirichlet_conc is None:
            # over-fitted mixture default: concentration 1/k empties spare clusters
            self.dirichlet_conc = 1.0 / self.k
        if self.dirichlet_conc <= 0:
            raise ParameterError("dirichlet_conc must be positive")


def unit_ball_volume(p: int) -> float:
    """Volume of the unit ball in R^p: pi^(p/2) / Gamma(p/2 + 1)."""
    return float(np.exp(0.5 * p * np.log(np.pi) - gammaln(0.5 * p + 1.0)))


def mvee(X, tol: float = 1e-7, max_iters: int | None = None) -> Ellipsoid:
    """Minimum-volume enclosing ellipsoid by Khachiyan's iterative reweighting.

    Runs the dual ascent on point weights until the maximum lifted leverage is
    within tol of its optimum, then inflates the shape matrix minimally so
    every point is inside.  Rank-deficient point sets raise
    DegenerateDataError (jitter the data or reduce the dimension).
    """
    X = validate_data_matrix(X)
    n, p = X.shape
    if max_iters is None:
        max_iters = max(1000, 10 * n)

    Q = np.hstack([X, np.ones((n, 1))])  # lifted points, n x (p+1)
    u = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        V = Q.T @ (u[:, None] * Q)
        try:
            lev = np.einsum("ij,jk,ik->i", Q, np.linalg.inv(V), Q)
        except np.linalg.LinAlgError:
            raise DegenerateDataError(
                "points do not affinely span the space; jitter the data or "
                "reduce the dimension"
            )
        j = int(np.argmax(lev))
        m = lev[j]
        if m <= (p + 1) * (1.0 + tol):
            converged = True
            break
        step = (m - p - 1.0) / ((p + 1.0) * (m - 1.0))
        u *= 1.0 - step
        u[j] += step

    center = X.T @ u
    cov = X.T @ (u[:, None] * X) - np.outer(center, center)
    try:
        shape = np.linalg.inv(cov) / p
    except np.linalg.LinAlgError:
        raise DegenerateDataError(
            "points do not affinely span the space; jitter the data or "
            "reduce the dimension"
        )
    if not np.all(np.isfinite(shape)):
        raise DegenerateDataError(
            "points do not affinely span the space; jitter the data or "
            "reduce the dimension"
        )
    # guarantee containment regardless of where the iteration stopped
    resid = X - center
    smax = float(np.einsum("ij,jk,ik->i", resid, shape, resid).max())
    if smax > 1.0:
        shape = shape / smax

    sign, logdet = np.linalg.slogdet(shape)
    if sign <= 0:
        raise DegenerateDataError("enclosing ellipsoid is not positive definite")
    volume = unit_ball_volume(p) * float(np.exp(-0.5 * logdet))

    if not converged:
        warnings.warn(
            f"ellipsoid iteration did not reach tol={tol} in {max_iters} "
            "iterations; returning best iterate",
            RuntimeWarning,
        )
    return Ellipsoid(center=center, shape=shape, volume=volume, n_iters=it, converged=converged)


def elicit_beta_sigma(volume: float, k: int, p: int) -> float:
    """Prior mean for the distance scale from a packing argument:
    0.5 * (volume / (k * unit ball volume))^(1/p)."""
    if volume <= 0:
        raise ParameterError("volume must be positive")
    if k < 1:
        raise ParameterError("k must be at least 1")
    return float(0.5 * (volume / (k * unit_ball_volume(p))) ** (1.0 / p))


def alpha_log_prior(alpha: float) -> float:
    """Log density of the shifted prior alpha - 1 ~ Gamma(0.5, rate 1), with
    the divergence at alpha = 1 capped at ALPHA_EDGE."""
    x = alpha - 1.0
    if x < 0.0:
        return -np.inf
    x = max(x, ALPHA_EDGE)
    return float(
        ALPHA_PRIOR_SHAPE * np.log(ALPHA_PRIOR_RATE)
        - gammaln(ALPHA_PRIOR_SHAPE)
        + (ALPHA_PRIOR_SHAPE - 1.0) * np.log(x)
        - ALPHA_PRIOR_RATE * x
    )


def sigma_log_prior(sigma: float, beta_sigma: float) -> float:
    """Log density of Inverse-Gamma(2, beta_sigma) at sigma."""
    if beta_sigma <= 0:
        raise ParameterError("beta_sigma must be positive")
    if sigma <= 0.0:
        return -np.inf
    a, b = SIGMA_PRIOR_SHAPE, beta_sigma
    return float(a * np.log(b) - gammaln(a) - (a + 1.0) * np.log(sigma) - b / sigma)


def prior_log_densities(params, cfg: PriorConfig) -> float:
    """Joint log prior of all cluster shapes and scales."""
    total = 0.0
    for a, s in zip(params.alpha, params.sigma):
        total += alpha_log_prior(a) + sigma_log_prior(s, cfg.beta_sigma)
    return float(total)


def sample_alpha_prior(rng: np.random.Generator, size=None):
    """Draw from the shifted Gamma prior on the shape parameter."""
    return 1.0 + rng.gamma(ALPHA_PRIOR_SHAPE, 1.0 / ALPHA_PRIOR_RATE, size=size)


def sample_sigma_prior(beta_sigma: float, rng: np.random.Generator, size=None):
    """Draw from the Inverse-Gamma(2, beta_sigma) prior on the scale."""
    return beta_sigma / rng.gamma(SIGMA_PRIOR_SHAPE, 1.0, size=size)
