"""Synthetic mixture generators, clustering metrics, two classical baselines
(spectral clustering and diagonal-covariance Gaussian EM), and tail /
mode-concentration diagnostics for the Gamma distance model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln
from scipy.stats import gamma as gamma_dist

from .errors import NumericalError, ParameterError, ValidationError

__all__ = [
    "GeneratorSpec",
    "MetricsReport",
    "TailBoundParams",
    "gen_skew_normal_mixture",
    "gen_vmf_mixture",
    "gen_laplace_mixture",
    "gen_subspace_mixture",
    "generate",
    "ari",
    "nmi",
    "ami",
    "metrics_report",
    "kmeans",
    "spectral_clustering",
    "gmm_em_diag",
    "tail_bound_check",
    "empirical_tail_check",
    "mode_concentration_check",
]


# ---------------------------------------------------------------------------
# generators


@dataclass
class GeneratorSpec:
    """Parameters of a synthetic mixture.

    Only the fields relevant to the chosen family are used: locations/scales
    for the elliptical families, skews for skew-normal coordinates,
    directions/concentrations for the spherical family, subspace_dim and
    noise_sd for the subspace family.
    """

    family: str
    n: int
    p: int
    weights: tuple = (0.5, 0.5)
    locations: tuple | None = None
    scales: tuple | None = None
    skews: tuple | None = None
    directions: tuple | None = None
    concentrations: tuple | None = None
    subspace_dim: int = 3
    noise_sd: float = 0.05
    seed: int | None = None

    def __post_init__(self):
        valid = {"skew_normal_mixture", "vmf_mixture", "laplace_mixture", "subspace_mixture"}
        if self.family not in valid:
            raise ParameterError(f"unknown family {self.family!r}")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-8:
            raise ParameterError("weights must be a probability vector")
        if self.n < 1 or self.p < 1:
            raise ParameterError("n and p must be positive")

    @property
    def k(self) -> int:
        return len(self.weights)


def _component_labels(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(spec.k, size=spec.n, p=np.asarray(spec.weights, dtype=float)) + 1


def _per_component(values, k, default) -> np.ndarray:
    if values is None:
        return np.full(k, float(default))
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return np.full(k, float(arr))
    if arr.shape[0] != k:
        raise ParameterError("per-component parameter length must equal len(weights)")
    return arr


def _component_locations(values, k, p) -> np.ndarray:
    """Per-component locations as a k x p matrix; scalar-per-component values
    are shared across coordinates."""
    if values is None:
        return np.zeros((k, p))
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != k:
            raise ParameterError("need one location per component")
        return np.repeat(arr[:, None], p, axis=1)
    if arr.shape != (k, p):
        raise ParameterError(f"location matrix must be {k} x {p}")
    return arr


def gen_skew_normal_mixture(spec: GeneratorSpec, rng: np.random.Generator):
    """Coordinates are iid skew-normal within each component, sampled through
    the half-normal plus normal representation."""
    labels = _component_labels(spec, rng)
    locs = _component_locations(spec.locations, spec.k, spec.p)
    scales = _per_component(spec.scales, spec.k, 1.0)
    skews = _per_component(spec.skews, spec.k, 0.0)
    delta = skews / np.sqrt(1.0 + skews**2)
    u0 = np.abs(rng.normal(size=(spec.n, spec.p)))
    v = rng.normal(size=(spec.n, spec.p))
    d = delta[labels - 1][:, None]
    z = d * u0 + np.sqrt(1.0 - d**2) * v
    X = locs[labels - 1] + scales[labels - 1][:, None] * z
    return X, labels


def _vonmises_angle_inverse_cdf(kappa: float, size: int, rng: np.random.Generator):
    """Angles with density proportional to exp(kappa cos a) on [-pi, pi],
    drawn by inverting a dense trapezoid CDF."""
    grid = np.linspace(-np.pi, np.pi, 200_001)
    log_density = kappa * np.cos(grid)
    density = np.exp(log_density - log_density.max())
    cdf = np.concatenate([[0.0], np.cumsum((density[1:] + density[:-1]) * 0.5)])
    cdf /= cdf[-1]
    return np.interp(rng.uniform(size=size), cdf, grid)


def _sample_vmf_cosines(kappa: float, dim: int, size: int, rng: np.random.Generator):
    """Rejection sampler for the cosine of the angle to the mean direction on
    the (dim-1)-sphere (standard beta-envelope scheme)."""
    q = dim - 1.0
    b = q / (np.sqrt(4.0 * kappa**2 + q**2) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + q * np.log(1.0 - x0**2)
    out = np.empty(size)
    filled = 0
    while filled < size:
        m = size - filled
        z = rng.beta(q / 2.0, q / 2.0, size=m)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=m)
        ok = kappa * w + q * np.log(1.0 - x0 * w) - c >= np.log(u)
        n_ok = int(ok.sum())
        out[filled : filled + n_ok] = w[ok]
        filled += n_ok
    return out


def _householder_to(mu: np.ndarray) -> np.ndarray:
    """Orthogonal matrix mapping e_1 to the unit vector mu."""
    p = mu.size
    e1 = np.zeros(p)
    e1[0] = 1.0
    v = e1 - mu
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        return np.eye(p)
    v /= nv
    return np.eye(p) - 2.0 * np.outer(v, v)


def gen_vmf_mixture(spec: GeneratorSpec, rng: np.random.Generator):
    """Unit-sphere mixture with density proportional to exp(kappa mu'y) per
    component.  p = 2 uses inverse-CDF sampling of the angle, p > 2 the
    standard rejection scheme."""
    if spec.directions is None:
        raise ParameterError("vmf_mixture requires component directions")
    mus = np.asarray(spec.directions, dtype=float)
    if mus.shape != (spec.k, spec.p):
        raise ParameterError("directions must be k x p")
    if np.any(np.abs(np.linalg.norm(mus, axis=1) - 1.0) > 1e-8):
        raise ParameterError("component directions must have unit norm")
    kappas = _per_component(spec.concentrations, spec.k, 0.0)
    if np.any(kappas < 0):
        raise ParameterError("concentrations must be nonnegative")

    labels = _component_labels(spec, rng)
    X = np.empty((spec.n, spec.p))
    for h in range(1, spec.k + 1):
        idx = np.nonzero(labels == h)[0]
        if idx.size == 0:
            continue
        mu, kappa = mus[h - 1], kappas[h - 1]
        if spec.p == 2:
            base = np.arctan2(mu[1], mu[0])
            ang = base + _vonmises_angle_inverse_cdf(kappa, idx.size, rng)
            X[idx, 0] = np.cos(ang)
            X[idx, 1] = np.sin(ang)
        else:
            w = _sample_vmf_cosines(kappa, spec.p, idx.size, rng)
            g = rng.normal(size=(idx.size, spec.p))
            g -= np.outer(g @ mu, mu)
            g /= np.linalg.norm(g, axis=1)[:, None]
            X[idx] = w[:, None] * mu[None, :] + np.sqrt(1.0 - w**2)[:, None] * g
    return X, labels


def gen_laplace_mixture(spec: GeneratorSpec, rng: np.random.Generator):
    """Independent double-exponential coordinates shifted per component."""
    labels = _component_labels(spec, rng)
    locs = _component_locations(spec.locations, spec.k, spec.p)
    scales = _per_component(spec.scales, spec.k, 1.0)
    X = locs[labels - 1] + rng.laplace(
        0.0, 1.0, size=(spec.n, spec.p)
    ) * scales[labels - 1][:, None]
    return X, labels


def gen_subspace_mixture(spec: GeneratorSpec, rng: np.random.Generator):
    """Points on random orthonormal linear subspaces plus isotropic noise."""
    if spec.subspace_dim < 1 or spec.subspace_dim > spec.p:
        raise ParameterError("subspace_dim must be in [1, p]")
    labels = _component_labels(spec, rng)
    X = np.empty((spec.n, spec.p))
    for h in range(1, spec.k + 1):
        idx = np.nonzero(labels == h)[0]
        basis, _ = np.linalg.qr(rng.normal(size=(spec.p, spec.subspace_dim)))
        coeffs = rng.normal(size=(idx.size, spec.subspace_dim))
        X[idx] = coeffs @ basis.T + spec.noise_sd * rng.normal(size=(idx.size, spec.p))
    return X, labels


_FAMILIES = {
    "skew_normal_mixture": gen_skew_normal_mixture,
    "vmf_mixture": gen_vmf_mixture,
    "laplace_mixture": gen_laplace_mixture,
    "subspace_mixture": gen_subspace_mixture,
}


def generate(spec: GeneratorSpec, rng: np.random.Generator | None = None):
    """Dispatch on spec.family; seeds a fresh generator from spec.seed when
    no rng is supplied."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    return _FAMILIES[spec.family](spec, rng)


# ---------------------------------------------------------------------------
# partition similarity metrics


def _check_pair(labels_a, labels_b):
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.size != b.size:
        raise ValidationError(f"label vectors differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValidationError("label vectors are empty")
    return a, b


def contingency_table(labels_a, labels_b) -> np.ndarray:
    a, b = _check_pair(labels_a, labels_b)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    r, c = ai.max() + 1, bi.max() + 1
    return np.bincount(ai * c + bi, minlength=r * c).reshape(r, c)


def ari(labels_a, labels_b) -> float:
    """Adjusted Rand index by pair counting with the expected-index correction."""
    ct = contingency_table(labels_a, labels_b).astype(np.int64)
    n = ct.sum()

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = comb2(ct).sum()
    sum_rows = comb2(ct.sum(axis=1)).sum()
    sum_cols = comb2(ct.sum(axis=0)).sum()
    expected = sum_rows * sum_cols / comb2(n)
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        # both partitions trivial (all-singletons or one cluster): identical
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def _entropy(counts: np.ndarray, n: int) -> float:
    pk = counts[counts > 0] / n
    return float(-np.sum(pk * np.log(pk)))


def _mutual_information(ct: np.ndarray) -> float:
    n = ct.sum()
    nz = ct > 0
    outer = np.outer(ct.sum(axis=1), ct.sum(axis=0))
    p = ct[nz] / n
    return float(np.sum(p * np.log(p * n * n / outer[nz])))


def nmi(labels_a, labels_b) -> float:
    """Normalized mutual information with arithmetic-mean normalization."""
    ct = contingency_table(labels_a, labels_b)
    if ct.shape == (1, 1):
        return 1.0
    n = ct.sum()
    h_a = _entropy(ct.sum(axis=1), n)
    h_b = _entropy(ct.sum(axis=0), n)
    denom = 0.5 * (h_a + h_b)
    if denom <= 0:
        return 0.0
    return float(_mutual_information(ct) / denom)


def _expected_mutual_information(ct: np.ndarray) -> float:
    """Expectation of MI under the fixed-margins permutation model."""
    n = int(ct.sum())
    a = ct.sum(axis=1).astype(np.int64)
    b = ct.sum(axis=0).astype(np.int64)
    log_n = np.log(n)
    gln_n = gammaln(n + 1)
    emi = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1)
            term_log = np.log(nij) + log_n - np.log(ai) - np.log(bj)
            log_prob = (
                gammaln(ai + 1)
                + gammaln(bj + 1)
                + gammaln(n - ai + 1)
                + gammaln(n - bj + 1)
                - gln_n
                - gammaln(nij + 1)
                - gammaln(ai - nij + 1)
                - gammaln(bj - nij + 1)
                - gammaln(n - ai - bj + nij + 1)
            )
            emi += float(np.sum(np.exp(log_prob) * (nij / n) * term_log))
    return emi


def ami(labels_a, labels_b) -> float:
    """Adjusted mutual information (arithmetic normalization); may be
    negative for adversarial pairs."""
    ct = contingency_table(labels_a, labels_b)
    if ct.shape == (1, 1):
        return 1.0
    n = ct.sum()
    h_a = _entropy(ct.sum(axis=1), n)
    h_b = _entropy(ct.sum(axis=0), n)
    mi = _mutual_information(ct)
    emi = _expected_mutual_information(ct)
    denom = 0.5 * (h_a + h_b) - emi
    eps = np.finfo(float).eps
    denom = min(denom, -eps) if denom < 0 else max(denom, eps)
    return float((mi - emi) / denom)


@dataclass
class MetricsReport:
    ari: float
    nmi: float
    ami: float


def metrics_report(labels_a, labels_b) -> MetricsReport:
    return MetricsReport(
        ari=ari(labels_a, labels_b),
        nmi=nmi(labels_a, labels_b),
        ami=ami(labels_a, labels_b),
    )


# ---------------------------------------------------------------------------
# baselines


def _kmeans_pp_init(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[j] = X[rng.integers(n)]
            continue
        centers[j] = X[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def kmeans(X, k, rng: np.random.Generator, n_init: int = 10, max_iters: int = 300):
    """Plain Lloyd iterations with k-means++ seeding; returns 1-based labels
    of the best of n_init runs."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if k < 1 or k > n:
        raise ParameterError(f"k must be in [1, {n}]")
    best_labels, best_inertia = None, np.inf
    for _ in range(n_init):
        centers = _kmeans_pp_init(X, k, rng)
        labels = np.zeros(n, dtype=np.int64)
        for _ in range(max_iters):
            d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = d2.argmin(axis=1)
            for j in range(k):
                mask = new_labels == j
                if mask.any():
                    centers[j] = X[mask].mean(axis=0)
                else:  # revive an empty cluster at the farthest point
                    centers[j] = X[d2.min(axis=1).argmax()]
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
        inertia = float(((X - centers[labels]) ** 2).sum())
        if inertia < best_inertia:
            best_inertia, best_labels = inertia, labels.copy()
    return best_labels + 1


def spectral_clustering(D, k, rng: np.random.Generator) -> np.ndarray:
    """Normalized spectral clustering of a distance matrix: Gaussian affinity
    with the median off-diagonal bandwidth, symmetric-normalized Laplacian,
    row-normalized top-k eigenvectors, seeded k-means."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if k == 1:
        return np.ones(n, dtype=np.int64)
    off = ~np.eye(n, dtype=bool)
    s = np.median(D[off])
    if s <= 0:
        s = 1.0
    A = np.exp(-(D**2) / (2.0 * s**2))
    np.fill_diagonal(A, 0.0)
    deg = A.sum(axis=1)
    deg[deg <= 0] = 1e-300
    inv_sqrt = 1.0 / np.sqrt(deg)
    N = A * inv_sqrt[:, None] * inv_sqrt[None, :]
    try:
        _, vecs = np.linalg.eigh(N)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    U = vecs[:, -k:]
    norms = np.linalg.norm(U, axis=1)
    norms[norms <= 0] = 1.0
    return kmeans(U / norms[:, None], k, rng)


def gmm_em_diag(
    X,
    k,
    rng: np.random.Generator,
    max_iters: int = 500,
    rel_tol: float = 1e-8,
    var_floor: float = 1e-10,
    return_model: bool = False,
):
    """EM for a Gaussian mixture with diagonal covariances, k-means start,
    MAP labels out.  Collapsed variances are floored with a warning."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n <= k:
        raise ParameterError(f"need more observations than components: n={n}, k={k}")
    init = kmeans(X, k, rng) - 1
    means = np.empty((k, p))
    variances = np.empty((k, p))
    weights = np.empty(k)
    overall_var = X.var(axis=0) + var_floor
    for j in range(k):
        mask = init == j
        weights[j] = max(mask.mean(), 1.0 / n)
        means[j] = X[mask].mean(axis=0) if mask.any() else X[rng.integers(n)]
        variances[j] = X[mask].var(axis=0) + var_floor if mask.sum() > 1 else overall_var
    weights /= weights.sum()

    prev_ll = -np.inf
    history = []
    log_resp = np.zeros((n, k))
    for _ in range(max_iters):
        for j in range(k):
            log_resp[:, j] = (
                np.log(weights[j])
                - 0.5 * np.sum(np.log(2.0 * np.pi * variances[j]))
                - 0.5 * np.sum((X - means[j]) ** 2 / variances[j], axis=1)
            )
        row_max = log_resp.max(axis=1)
        lse = row_max + np.log(np.exp(log_resp - row_max[:, None]).sum(axis=1))
        ll = float(lse.sum())
        history.append(ll)
        resp = np.exp(log_resp - lse[:, None])

        nk = resp.sum(axis=0) + 1e-300
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        for j in range(k):
            variances[j] = (resp[:, j][:, None] * (X - means[j]) ** 2).sum(axis=0) / nk[j]
        if np.any(variances < var_floor):
            warnings.warn("component variance collapsed; flooring", RuntimeWarning)
            variances = np.maximum(variances, var_floor)

        if abs(ll - prev_ll) <= rel_tol * max(1.0, abs(ll)):
            prev_ll = ll
            break
        prev_ll = ll

    labels = log_resp.argmax(axis=1) + 1
    if return_model:
        model = {
            "means": means,
            "variances": variances,
            "weights": weights,
            "history": history,
        }
        return labels, model
    return labels


# ---------------------------------------------------------------------------
# tail and mode diagnostics


@dataclass
class TailBoundParams:
    """Constants of the sub-exponential tail bound; any left as None are
    fitted from the generated sample."""

    nu: float | None = None
    b: float | None = None
    eta: float | None = None
    q: float = 2.0
    m1: float | None = None
    m2: float | None = None


@dataclass
class GammaTailReport:
    alphas: np.ndarray
    ts: np.ndarray
    exact: np.ndarray  # (len(alphas), len(ts)) upper tails by quadrature
    bound: np.ndarray
    holds: np.ndarray
    in_valid_range: np.ndarray  # t >= alpha, where the moment bound's optimizer is admissible


def tail_bound_check(alpha_grid, t_grid) -> GammaTailReport:
    """Exact Gamma(alpha, 1) upper tails versus alpha^-alpha e^alpha t^alpha e^-t.

    The polynomial-exponential bound comes from an exponential-moment
    argument whose optimizer is admissible only for t >= alpha; points below
    that are reported with in_valid_range False rather than counted as
    failures.
    """
    alphas = np.asarray(alpha_grid, dtype=float)
    ts = np.asarray(t_grid, dtype=float)
    if alphas.size == 0 or ts.size == 0:
        raise ParameterError("grids must be nonempty")
    exact = np.empty((alphas.size, ts.size))
    bound = np.empty_like(exact)
    for i, a in enumerate(alphas):
        M = a ** (-a) * np.exp(a)
        for j, t in enumerate(ts):
            val, _ = integrate.quad(lambda x: gamma_dist.pdf(x, a), t, np.inf)
            exact[i, j] = val
            bound[i, j] = M * t**a * np.exp(-t)
    holds = exact <= bound
    in_valid_range = ts[None, :] >= alphas[:, None]
    return GammaTailReport(alphas, ts, exact, bound, holds, in_valid_range)


@dataclass
class EmpiricalTailReport:
    ts: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    holds: np.ndarray
    vacuous: np.ndarray  # bound >= 1 carries no information
    in_valid_range: np.ndarray
    params: TailBoundParams


def _fit_tail_constants(diffs: np.ndarray, params: TailBoundParams) -> TailBoundParams:
    """Fill in unset sub-exponential constants from coordinate differences."""
    nu = params.nu if params.nu is not None else float(np.sqrt(diffs.var()))
    b = params.b
    if b is None:
        # smallest ladder value whose moment bound holds empirically on |s| <= 1/b
        for cand in nu * np.array([1.0, 2.0, 4.0, 8.0]):
            s = np.linspace(-1.0 / cand, 1.0 / cand, 21)
            mgf = np.exp(s[None, :] * diffs[:, None]).mean(axis=0)
            if np.all(mgf <= np.exp(nu**2 * s**2) + 1e-12):
                b = float(cand)
                break
        else:
            b = float(8.0 * nu)
    q = params.q
    eta = params.eta if params.eta is not None else 1.0 / q
    abs_dev = np.abs(diffs)
    m2 = params.m2 if params.m2 is not None else float(1.0 / abs_dev.mean())
    m1 = params.m1
    if m1 is None:
        grid = np.quantile(abs_dev, np.linspace(0.5, 0.999, 25))
        emp = np.array([(abs_dev >= g).mean() for g in grid])
        m1 = float(max(1.0, 1.1 * np.max(emp * np.exp(m2 * grid))))
    return TailBoundParams(nu=nu, b=b, eta=eta, q=q, m1=m1, m2=m2)


def empirical_tail_check(
    spec: GeneratorSpec,
    params: TailBoundParams | None = None,
    t_grid=None,
    rng: np.random.Generator | None = None,
) -> EmpiricalTailReport:
    """Empirical within-cluster q-norm distance tails against the union bound
    2p exp(-t p^(eta - 1/q) / 2) at thresholds t * b * p^eta, with constants
    fitted from the sample when not supplied."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    X, labels = generate(spec, rng)
    params = params or TailBoundParams()
    p = spec.p
    q = params.q

    dists = []
    diffs = []
    for h in np.unique(labels):
        idx = np.nonzero(labels == h)[0]
        sub = X[idx]
        iu, ju = np.triu_indices(idx.size, k=1)
        delta = sub[iu] - sub[ju]
        diffs.append(delta.ravel())
        dists.append(np.sum(np.abs(delta) ** q, axis=1) ** (1.0 / q))
    diffs = np.concatenate(diffs)
    dists = np.concatenate(dists)

    fitted = _fit_tail_constants(diffs, params)
    eta = fitted.eta
    t_min = 2.0 * (fitted.nu / fitted.b) ** 2 * p ** (1.0 / q - eta)
    if t_grid is None:
        # cover the vacuous small-threshold region and a stretch past t_min
        t_grid = np.linspace(0.1, max(8.0, 3.0 * t_min), 40)
    ts = np.asarray(t_grid, dtype=float)

    thresholds = ts * fitted.b * p**eta
    empirical = np.array([(dists > thr).mean() for thr in thresholds])
    bound = 2.0 * p * np.exp(-ts * p ** (eta - 1.0 / q) / 2.0)
    vacuous = bound >= 1.0
    in_valid_range = ts > t_min
    holds = (empirical <= bound) | vacuous
    return EmpiricalTailReport(ts, empirical, bound, holds, vacuous, in_valid_range, fitted)


@dataclass
class ModeConcentrationReport:
    dims: list
    modes: dict
    within_medians: dict
    cross_medians: dict


def mode_concentration_check(
    p_list=(2, 5, 10),
    n_per_cluster: int = 500,
    seed: int = 0,
) -> ModeConcentrationReport:
    """Histogram mode of within-cluster Euclidean distances scaled by sqrt(p)
    for double-exponential clusters; the mode approaches 1 as p grows."""
    modes, within_medians, cross_medians = {}, {}, {}
    for p in p_list:
        spec = GeneratorSpec(
            family="laplace_mixture",
            n=2 * n_per_cluster,
            p=p,
            weights=(0.5, 0.5),
            locations=(0.0, 2.0),
            scales=(0.5, 0.5),
            seed=seed,
        )
        X, labels = generate(spec)
        scale = np.sqrt(p)
        within, cross = [], []
        diff = X[:, None, :] - X[None, :, :]
        D = np.sqrt((diff**2).sum(axis=2)) / scale
        same = labels[:, None] == labels[None, :]
        iu = np.triu_indices(X.shape[0], k=1)
        within = D[iu][same[iu]]
        cross = D[iu][~same[iu]]
        counts, edges = np.histogram(within, bins=60)
        centers = (edges[:-1] + edges[1:]) / 2.0
        modes[p] = float(centers[np.argmax(counts)])
        within_medians[p] = float(np.median(within))
        cross_medians[p] = float(np.median(cross))
    return ModeConcentrationReport(list(p_list), modes, within_medians, cross_medians)
