import numpy as np
import pytest
from scipy import integrate, stats

from bdclust import likelihood as lk
from bdclust.errors import ParameterError, ValidationError
from helpers import random_distance_matrix, random_labels, random_symmetric


def random_params(rng, k):
    return lk.ClusterParams(
        alpha=1.0 + rng.gamma(0.5, 1.0, size=k),
        sigma=rng.uniform(0.5, 2.0, size=k),
    )


class TestGammaLogDensity:
    def test_exponential_at_origin(self):
        assert lk.gamma_log_density(0.0, 1.0, 1.0) == 0.0

    def test_unit_shape_two(self):
        # direct formula: g(1; 2, 1) = e^{-1}
        assert lk.gamma_log_density(1.0, 2.0, 1.0) == pytest.approx(-1.0, abs=1e-12)

    def test_mode_location(self):
        grid = np.arange(0.01, 12.0, 0.01)
        vals = [lk.gamma_log_density(d, 3.0, 2.0) for d in grid]
        assert grid[np.argmax(vals)] == pytest.approx(4.0, abs=0.011)

    def test_zero_distance_with_shape_above_one(self):
        assert lk.gamma_log_density(0.0, 1.5, 1.0) == -np.inf

    def test_negative_distance_rejected(self):
        with pytest.raises(ParameterError):
            lk.gamma_log_density(-0.1, 1.0, 1.0)


class TestClusterLogLikelihood:
    def test_singleton_is_zero(self):
        D = random_distance_matrix(np.random.default_rng(0), 5)
        assert lk.cluster_log_likelihood(D, [2], 1.5, 1.0) == 0.0

    def test_two_members_hand_value(self):
        D = np.array([[0.0, 1.0], [1.0, 0.0]])
        # ordered-pair sum: (1/2) * 2 * log g(1; 1, 1) = -1
        assert lk.cluster_log_likelihood(D, [0, 1], 1.0, 1.0) == pytest.approx(-1.0)

    def test_member_permutation_exact(self):
        rng = np.random.default_rng(1)
        D = random_distance_matrix(rng, 9)
        members = np.array([0, 2, 3, 7, 8])
        base = lk.cluster_log_likelihood(D, members, 1.7, 0.9)
        for _ in range(10):
            perm = rng.permutation(members)
            assert lk.cluster_log_likelihood(D, perm, 1.7, 0.9) == base

    def test_out_of_range_member(self):
        D = random_distance_matrix(np.random.default_rng(2), 4)
        with pytest.raises(ValidationError):
            lk.cluster_log_likelihood(D, [0, 4], 1.0, 1.0)


def total_vs_matrix_instance(rng, n, k, allow_empty=True):
    D = random_distance_matrix(rng, n)
    labels = random_labels(rng, n, k)
    if not allow_empty:
        labels[: k] = np.arange(1, k + 1)
    a = lk.Assignment(labels, k)
    params = random_params(rng, k)
    elementwise = sum(
        lk.cluster_log_likelihood(D, a.members(h), params.alpha[h - 1], params.sigma[h - 1])
        for h in range(1, k + 1)
    )
    matrix = lk.matrix_form_log_likelihood(D, a.matrix, params)
    return elementwise, matrix


class TestMatrixForm:
    def test_cross_form_identity_random(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(4, 16))
            k = int(rng.integers(1, 5))
            ew, mf = total_vs_matrix_instance(rng, n, k)
            assert abs(ew - mf) < 1e-10 * max(1.0, abs(ew))

    def test_empty_column_contract(self):
        rng = np.random.default_rng(4)
        D = random_distance_matrix(rng, 6)
        labels = np.array([1, 1, 1, 3, 3, 3])  # cluster 2 empty
        a = lk.Assignment(labels, 3)
        params = random_params(rng, 3)
        mf = lk.matrix_form_log_likelihood(D, a.matrix, params)
        nonempty = sum(
            lk.cluster_log_likelihood(D, a.members(h), params.alpha[h - 1], params.sigma[h - 1])
            for h in (1, 3)
        )
        assert mf == pytest.approx(nonempty, abs=1e-10)

    def test_single_cluster_reduction(self):
        rng = np.random.default_rng(5)
        D = random_distance_matrix(rng, 7)
        a = lk.Assignment(np.ones(7, dtype=int), 1)
        params = lk.ClusterParams(alpha=[1.8], sigma=[1.1])
        mf = lk.matrix_form_log_likelihood(D, a.matrix, params)
        ew = lk.cluster_log_likelihood(D, np.arange(7), 1.8, 1.1)
        assert mf == pytest.approx(ew, abs=1e-10)

    def test_invalid_row_sums_rejected(self):
        rng = np.random.default_rng(6)
        D = random_distance_matrix(rng, 3)
        C = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValidationError):
            lk.matrix_form_log_likelihood(D, C, random_params(rng, 2))


class TestTotalLogLikelihood:
    def test_single_cluster_two_points(self):
        D = np.array([[0.0, 1.0], [1.0, 0.0]])
        a = lk.Assignment([1, 1], 1)
        params = lk.ClusterParams(alpha=[1.0], sigma=[1.0])
        w = lk.MixtureWeights(pi=[1.0])
        assert lk.total_log_likelihood(D, a, params, w) == pytest.approx(-1.0)

    def test_exchangeability_exact(self):
        rng = np.random.default_rng(7)
        D = random_distance_matrix(rng, 12)
        labels = random_labels(rng, 12, 3)
        params = random_params(rng, 3)
        w = lk.MixtureWeights(pi=rng.dirichlet(np.ones(3)))
        base = lk.total_log_likelihood(D, lk.Assignment(labels, 3), params, w)
        for _ in range(50):
            perm = rng.permutation(12)
            Dp = D[np.ix_(perm, perm)]
            ap = lk.Assignment(labels[perm], 3)
            assert lk.total_log_likelihood(Dp, ap, params, w) == base

    def test_zero_weight_occupied_cluster_is_neg_inf(self):
        D = random_distance_matrix(np.random.default_rng(8), 4)
        a = lk.Assignment([1, 1, 2, 2], 2)
        params = random_params(np.random.default_rng(9), 2)
        w = lk.MixtureWeights(pi=[1.0, 0.0])
        assert lk.total_log_likelihood(D, a, params, w) == -np.inf

    def test_label_prior_term(self):
        rng = np.random.default_rng(10)
        D = random_distance_matrix(rng, 6)
        a = lk.Assignment([1, 1, 1, 2, 2, 2], 2)
        params = random_params(rng, 2)
        pi = np.array([0.3, 0.7])
        w = lk.MixtureWeights(pi=pi)
        with_prior = lk.total_log_likelihood(D, a, params, w, include_label_prior=True)
        without = lk.total_log_likelihood(D, a, params, include_label_prior=False)
        assert with_prior - without == pytest.approx(3 * np.log(0.3) + 3 * np.log(0.7))


class TestAffinity:
    def test_exponential_kernel_when_shape_one(self):
        rng = np.random.default_rng(11)
        D = random_distance_matrix(rng, 6)
        aff = lk.affinity_from_distance(D, sigma0=1.5, alpha0=1.0)
        off = ~np.eye(6, dtype=bool)
        np.testing.assert_allclose(aff.A[off], aff.kappa - D[off] / 1.5, atol=1e-12)
        assert np.all(aff.A[off] > 0.0)
        assert np.array_equal(aff.A, aff.A.T)
        assert np.all(np.diag(aff.A) == 0.0)

    def test_zero_distance_rejected_for_log_kernel(self):
        D = np.zeros((3, 3))
        D[0, 1] = D[1, 0] = 0.0
        D[0, 2] = D[2, 0] = 1.0
        D[1, 2] = D[2, 1] = 1.0
        with pytest.raises(ValidationError):
            lk.affinity_from_distance(D, sigma0=1.0, alpha0=2.0)

    def test_constant_shift_moves_trace_by_n_times_constant(self):
        rng = np.random.default_rng(12)
        n, k = 9, 3
        A = random_symmetric(rng, n)
        labels = random_labels(rng, n, k)
        C = lk.Assignment(labels, k).matrix
        counts = C.sum(axis=0)
        inv = np.divide(1.0, counts, out=np.zeros_like(counts), where=counts > 0)

        def trace_term(M):
            return float(np.einsum("ih,ij,jh,h->", C, M, C, inv))

        c = 0.37
        shift = trace_term(A + c * np.ones((n, n))) - trace_term(A)
        assert shift == pytest.approx(n * c, abs=1e-9)


class TestNcutAndResidual:
    def test_single_cluster_no_cut(self):
        A = random_symmetric(np.random.default_rng(13), 5)
        a = lk.Assignment(np.ones(5, dtype=int), 1)
        assert lk.ncut_loss(A, a) == 0.0

    def test_two_singletons_hand_value(self):
        A = np.array([[0.0, 1.0], [1.0, 0.0]])
        a = lk.Assignment([1, 2], 2)
        assert lk.ncut_loss(A, a) == pytest.approx(1.0)

    def test_nonnegative(self):
        rng = np.random.default_rng(14)
        A = random_symmetric(rng, 8)
        a = lk.Assignment(random_labels(rng, 8, 3), 3)
        assert lk.ncut_loss(A, a) >= 0.0

    @pytest.mark.parametrize("k", [1, 2, 3, 5])
    def test_residual_vanishes(self, k):
        rng = np.random.default_rng(15 + k)
        for _ in range(25):
            n = int(rng.integers(max(2, k), 14))
            A = random_symmetric(rng, n)
            a = lk.Assignment(random_labels(rng, n, k), k)
            assert abs(lk.theorem4_residual(A, a)) < 1e-10

    def test_residual_with_graph_affinity_object(self):
        rng = np.random.default_rng(20)
        D = random_distance_matrix(rng, 7)
        aff = lk.affinity_from_distance(D, sigma0=1.0, alpha0=1.3)
        a = lk.Assignment(random_labels(rng, 7, 2), 2)
        assert abs(lk.theorem4_residual(aff, a)) < 1e-10


class TestBregman:
    def test_self_divergence_zero(self):
        spec = lk.BregmanSpec()
        rng = np.random.default_rng(16)
        for _ in range(10):
            x = rng.normal(size=4)
            assert lk.bregman_divergence(spec, x, x) == pytest.approx(0.0, abs=1e-12)

    def test_squared_norm_identity(self):
        spec = lk.BregmanSpec()
        rng = np.random.default_rng(17)
        for _ in range(20):
            x, y = rng.normal(size=3), rng.normal(size=3)
            assert lk.bregman_divergence(spec, x, y) == pytest.approx(
                float(np.sum((x - y) ** 2)), abs=1e-12
            )

    def test_unsupported_generator(self):
        with pytest.raises(ParameterError):
            lk.BregmanSpec(phi_id="kullback_leibler")

    def test_distance_equals_model_divergence(self):
        # the pairwise divergence with power 1/n_h equals the centered one
        # exactly for the squared-norm generator at the sample mean
        rng = np.random.default_rng(18)
        X = rng.normal(size=(10, 3))
        a = lk.Assignment(random_labels(rng, 10, 2), 2)
        hd = lk.distance_divergence(X, a)
        hy = lk.model_divergence(X, a)
        assert hd == pytest.approx(hy, abs=1e-10)

    def test_finite_sample_double_sum_identity(self):
        rng = np.random.default_rng(19)
        spec = lk.BregmanSpec()
        X = rng.normal(size=(8, 2))
        n = X.shape[0]
        lhs = sum(
            lk.bregman_divergence(spec, X[i], X[j]) for i in range(n) for j in range(n)
        )
        mean = X.mean(axis=0)
        rhs = n * sum(
            lk.bregman_divergence(spec, X[i], mean) + lk.bregman_divergence(spec, mean, X[i])
            for i in range(n)
        )
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_population_scaling_monte_carlo(self):
        # E[pairwise divergence with power 1/n] matches the expected centered
        # symmetrized divergence at the population mean within 2%; empirical
        # sums have n(n-1) off-diagonal pairs, hence the (n-1)/n factor
        # relative to the independent-copies statement
        rng = np.random.default_rng(20)
        spec = lk.BregmanSpec()
        n, p, reps = 6, 2, 4000
        labels = lk.Assignment(np.ones(n, dtype=int), 1)
        lhs_acc, rhs_acc = 0.0, 0.0
        for _ in range(reps):
            X = rng.normal(size=(n, p))
            lhs_acc += lk.distance_divergence(X, labels, spec)
            rhs_acc += sum(
                0.5
                * (
                    lk.bregman_divergence(spec, X[i], np.zeros(p))
                    + lk.bregman_divergence(spec, np.zeros(p), X[i])
                )
                for i in range(n)
            )
        assert lhs_acc / reps == pytest.approx((n - 1) / n * rhs_acc / reps, rel=0.02)


class TestGammaTailBound:
    def test_bound_holds_in_valid_regime(self):
        # quadrature oracle for the exact upper tail
        ts = np.linspace(0.5, 20.0, 40)
        for alpha in (1.0, 1.5, 3.0):
            M = alpha ** (-alpha) * np.exp(alpha)
            for t in ts:
                if t < alpha:
                    continue
                exact, _ = integrate.quad(lambda x: stats.gamma.pdf(x, alpha), t, np.inf)
                assert exact <= M * t**alpha * np.exp(-t) + 1e-12

    def test_bound_genuinely_fails_below_shape(self):
        # the moment-bound optimizer is inadmissible for t < alpha and the
        # inequality is in fact false there
        exact, _ = integrate.quad(lambda x: stats.gamma.pdf(x, 3.0), 0.5, np.inf)
        bound = 3.0 ** (-3.0) * np.exp(3.0) * 0.5**3 * np.exp(-0.5)
        assert exact > bound
