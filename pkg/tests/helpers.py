"""Shared helpers for the test suite."""

import numpy as np


def euclidean_distances(X):
    diff = X[:, None, :] - X[None, :, :]
    D = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(D, 0.0)
    return D


def random_distance_matrix(rng, n, p=3, scale=1.0):
    """Distance matrix of random Gaussian points (positive off-diagonal)."""
    return euclidean_distances(rng.normal(0.0, scale, size=(n, p)))


def random_symmetric(rng, n, low=0.1, high=2.0):
    """Symmetric matrix with positive off-diagonal entries and zero diagonal."""
    A = rng.uniform(low, high, size=(n, n))
    A = (A + A.T) / 2.0
    np.fill_diagonal(A, 0.0)
    return A


def random_labels(rng, n, k):
    """Label vector in 1..k guaranteed to use at least one cluster."""
    return rng.integers(1, k + 1, size=n)


def two_blob_distance_matrix(rng, n_per=10, separation=8.0, p=2):
    X = np.vstack(
        [
            rng.normal(0.0, 1.0, size=(n_per, p)),
            rng.normal(separation, 1.0, size=(n_per, p)),
        ]
    )
    truth = np.repeat([1, 2], n_per)
    return euclidean_distances(X), truth, X
