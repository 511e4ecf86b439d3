import numpy as np
import pytest

from bdclust import distmat
from bdclust.errors import DegenerateDataError, ParameterError, ValidationError
from helpers import euclidean_distances


class TestMinkowski:
    def test_one_dimensional_absolute_difference(self):
        D = distmat.compute_minkowski_distances([[0.0], [3.0]], q=1)
        assert D[0, 1] == 3.0

    def test_three_four_five_triangle(self):
        D = distmat.compute_minkowski_distances([[0.0, 0.0], [3.0, 4.0]], q=2)
        assert D[0, 1] == pytest.approx(5.0, abs=1e-12)

    @pytest.mark.parametrize("q", [1.0, 1.5, 2.0, 3.0])
    def test_symmetric_zero_diagonal(self, q):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(15, 4))
        D = distmat.compute_minkowski_distances(X, q=q)
        assert np.max(np.abs(D - D.T)) == 0.0
        assert np.all(np.diag(D) == 0.0)
        assert np.all(D >= 0.0)

    @pytest.mark.parametrize("q", [1.0, 1.7, 2.0, 4.0])
    def test_triangle_inequality(self, q):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(12, 3))
        D = distmat.compute_minkowski_distances(X, q=q)
        n = X.shape[0]
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    assert D[i, j] <= D[i, l] + D[l, j] + 1e-10

    def test_scaling_by_power_of_two_is_exact(self):
        # doubling commutes with rounding on the q=2 path, so equality is exact
        rng = np.random.default_rng(2)
        X = rng.normal(size=(10, 3))
        D = distmat.compute_minkowski_distances(X, q=2)
        D2 = distmat.compute_minkowski_distances(2.0 * X, q=2)
        assert np.array_equal(D2, 2.0 * D)

    def test_scaling_general_factor(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(10, 3))
        s = 1.7
        D = distmat.compute_minkowski_distances(X, q=2)
        Ds = distmat.compute_minkowski_distances(s * X, q=2)
        np.testing.assert_allclose(Ds, s * D, rtol=1e-12, atol=1e-14)

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError, match=r"non-finite"):
            distmat.compute_minkowski_distances([[0.0], [np.nan]])

    def test_rejects_q_below_one(self):
        with pytest.raises(ParameterError):
            distmat.compute_minkowski_distances([[0.0], [1.0]], q=0.5)


class TestArccos:
    def test_identical_points(self):
        X = np.array([[1.0, 0.0], [1.0, 0.0]])
        D = distmat.compute_arccos_distances(X)
        assert D[0, 1] == 0.0

    def test_antipodal_and_orthogonal(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        D = distmat.compute_arccos_distances(X)
        assert D[0, 1] == pytest.approx(np.pi, abs=1e-12)
        assert D[0, 2] == pytest.approx(np.pi / 2, abs=1e-12)

    def test_non_unit_row_names_index(self):
        X = np.array([[1.0, 0.0], [0.5, 0.0]])
        with pytest.raises(ValidationError, match=r"row 1"):
            distmat.compute_arccos_distances(X)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(20, 3))
        X /= np.linalg.norm(X, axis=1)[:, None]
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        Xr = X @ Q.T
        Xr /= np.linalg.norm(Xr, axis=1)[:, None]
        np.testing.assert_allclose(
            distmat.compute_arccos_distances(X),
            distmat.compute_arccos_distances(Xr),
            atol=1e-7,
        )


def _cvxpy_row_solve(X, i, lam):
    """Oracle for one row of the self-expression problem."""
    cvxpy = pytest.importorskip("cvxpy")
    n = X.shape[0]
    w = cvxpy.Variable(n)
    objective = cvxpy.Minimize(
        cvxpy.sum_squares(X[i] - X.T @ w) + lam * cvxpy.norm1(w)
    )
    problem = cvxpy.Problem(objective, [w[i] == 0, cvxpy.sum(w) == 1])
    problem.solve()
    return np.asarray(w.value).ravel(), problem.value


class TestSelfExpression:
    def test_constraints_hold_exactly(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(12, 4))
        W = distmat.solve_self_expression(X)
        assert np.all(np.diag(W) == 0.0)
        np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-8)

    def test_duplicated_point_gets_dominant_weight(self):
        rng = np.random.default_rng(6)
        far = rng.normal(size=(6, 3)) + 10.0
        X = np.vstack([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], far])
        W = distmat.solve_self_expression(
            X, distmat.SubspaceEmbeddingConfig(sparsity_weight=0.5)
        )
        oracle_w, oracle_obj = _cvxpy_row_solve(X, 0, 0.5)
        assert np.argmax(np.abs(oracle_w)) == 1
        assert np.argmax(np.abs(W[0])) == 1
        row_obj = np.sum((X[0] - W[0] @ X) ** 2) + 0.5 * np.abs(W[0]).sum()
        assert row_obj <= oracle_obj * 1.25 + 1e-6

    def test_orthogonal_subspaces_weights_stay_within(self):
        # points kept away from the subspace intersection so the optimum
        # itself places almost no cross-subspace mass
        rng = np.random.default_rng(7)
        t = rng.uniform(1, 2, size=(10, 1)) * rng.choice([-1, 1], size=(10, 1))
        s = rng.uniform(1, 2, size=(10, 1)) * rng.choice([-1, 1], size=(10, 1))
        a = np.array([[1.0, 0.0, 0.0, 0.0]])
        b = np.array([[0.0, 0.0, 1.0, 0.0]])
        X = np.vstack([t @ a, s @ b]) + 0.005 * rng.normal(size=(20, 4))
        lam = 0.5
        W = distmat.solve_self_expression(
            X, distmat.SubspaceEmbeddingConfig(sparsity_weight=lam, max_iters=2000)
        )
        absW = np.abs(W)
        within = absW[:10, :10].sum() + absW[10:, 10:].sum()
        cross = absW[:10, 10:].sum() + absW[10:, :10].sum()
        assert cross < 0.10 * within
        # the whole-matrix objective sits within a few percent of the oracle
        oracle_total = 0.0
        for i in range(20):
            _, row_opt = _cvxpy_row_solve(X, i, lam)
            oracle_total += row_opt
        ours = np.sum((X - W @ X) ** 2) + lam * absW.sum()
        assert ours <= oracle_total * 1.05

    def test_too_few_points(self):
        with pytest.raises(ValidationError):
            distmat.solve_self_expression(np.eye(2))


class TestSubspaceDistance:
    def test_mutual_maxima_give_zero(self):
        W = np.array(
            [
                [0.0, 0.8, 0.1],
                [0.8, 0.0, 0.2],
                [0.3, 0.7, 0.0],
            ]
        )
        D = distmat.compute_subspace_distances(W)
        assert D[0, 1] == 0.0

    def test_mutual_zeros_give_two(self):
        W = np.array(
            [
                [0.0, 0.0, 0.9],
                [0.0, 0.0, 0.9],
                [0.5, 0.5, 0.0],
            ]
        )
        D = distmat.compute_subspace_distances(W)
        assert D[0, 1] == 2.0

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(8)
        W = rng.normal(size=(9, 9))
        np.fill_diagonal(W, 0.0)
        D = distmat.compute_subspace_distances(W)
        assert np.array_equal(D, D.T)
        assert np.all(D >= 0.0) and np.all(D <= 2.0)
        assert np.all(np.diag(D) == 0.0)

    def test_all_zero_row_errors(self):
        W = np.zeros((3, 3))
        W[1, 0] = W[2, 0] = 1.0
        with pytest.raises(DegenerateDataError, match=r"row 0"):
            distmat.compute_subspace_distances(W)


class TestCsvRoundTrip:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(9)
        D = euclidean_distances(rng.normal(size=(5, 2)))
        path = tmp_path / "d.csv"
        distmat.save_distance_matrix(D, path)
        D2 = distmat.load_distance_matrix(path)
        np.testing.assert_allclose(D2, D, atol=1e-12)

    def test_negative_entry_reports_indices(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,-1\n-1,0\n")
        with pytest.raises(ValidationError, match=r"negative distance at \(0, 1\)"):
            distmat.load_distance_matrix(path)

    def test_non_square_rejected(self, tmp_path):
        path = tmp_path / "rect.csv"
        path.write_text("0,1,2\n1,0,2\n")
        with pytest.raises(ValidationError, match=r"square"):
            distmat.load_distance_matrix(path)

    def test_asymmetric_rejected_and_escape_hatch(self, tmp_path):
        path = tmp_path / "asym.csv"
        path.write_text("0,1\n2,0\n")
        with pytest.raises(ValidationError, match=r"asymmetric"):
            distmat.load_distance_matrix(path)
        D = distmat.load_distance_matrix(path, validate=False)
        assert D[1, 0] == 2.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            distmat.load_distance_matrix(tmp_path / "nope.csv")


class TestPreprocessing:
    def test_pca_projects_to_requested_dimension(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(30, 5))
        Z = distmat.pca_project(X, 2)
        assert Z.shape == (30, 2)
        # full-dimensional projection preserves centered pairwise distances
        Zf = distmat.pca_project(X, 5)
        np.testing.assert_allclose(
            euclidean_distances(Zf), euclidean_distances(X), atol=1e-8
        )

    def test_pca_dimension_bounds(self):
        rng = np.random.default_rng(11)
        with pytest.raises(ParameterError):
            distmat.pca_project(rng.normal(size=(5, 2)), 3)

    def test_jitter_scale(self):
        rng = np.random.default_rng(12)
        X = np.zeros((50, 2))
        Xj = distmat.add_jitter(X, 1e-6, rng)
        assert 0 < np.abs(Xj).max() < 1e-4
