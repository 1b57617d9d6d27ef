"""Gaussian RBF hypothesis class for the safety value function.

h(x) = sum_i theta_i * phi(x, c_i) + b with phi(x, c) = exp(-||x - c||^2 / 2 sigma^2).

h is linear in (theta, b) for fixed centers and width, which is what lets the
learner pose every constraint as an affine row. The gradient is analytic:
grad h(x) = sum_i theta_i * phi(x, c_i) * (c_i - x) / sigma^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SafetyModel:
    """Learned safety function parameters: centers (N, n), theta (N,), bias, sigma."""

    centers: np.ndarray
    theta: np.ndarray
    bias: float
    sigma: float

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        theta = np.asarray(self.theta, dtype=float).ravel()
        if centers.shape[0] != theta.shape[0]:
            raise ValueError(
                f"|centers| = {centers.shape[0]} must equal |theta| = {theta.shape[0]}"
            )
        if centers.shape[0] < 1:
            raise ValueError("need at least one center")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(theta))):
            raise ValueError("centers and theta must be finite")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "theta", theta)

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def phi(x: np.ndarray, c: np.ndarray, sigma: float) -> float:
    """Gaussian kernel exp(-||x - c||^2 / 2 sigma^2); 1 at x = c, decays to 0."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    if x.shape != c.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {c.shape}")
    d2 = float(np.dot(x - c, x - c))
    return float(np.exp(-d2 / (2.0 * sigma**2)))


def features(X: np.ndarray, centers: np.ndarray, sigma: float) -> np.ndarray:
    """Feature matrix Phi with Phi[p, i] = phi(X[p], centers[i]); shape (P, N)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if X.shape[1] != centers.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {centers.shape[1]}")
    diff = X[:, None, :] - centers[None, :, :]
    d2 = np.sum(diff * diff, axis=2)
    return np.exp(-d2 / (2.0 * sigma**2))


def gram(centers: np.ndarray, sigma: float) -> np.ndarray:
    """Kernel Gram matrix K[i, j] = phi(c_i, c_j); symmetric PSD."""
    return features(centers, centers, sigma)


def evaluate(model: SafetyModel, x: np.ndarray) -> float:
    """h(x) = theta . phi_vec(x) + bias."""
    row = features(np.asarray(x, dtype=float)[None, :], model.centers, model.sigma)
    return float(row[0] @ model.theta + model.bias)


def evaluate_batch(model: SafetyModel, X: np.ndarray) -> np.ndarray:
    """h at many states at once; X is (P, n), result (P,)."""
    return features(X, model.centers, model.sigma) @ model.theta + model.bias


def gradient(model: SafetyModel, x: np.ndarray) -> np.ndarray:
    """Analytic gradient of evaluate at x, shape (n,)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (model.dim,):
        raise ValueError(f"state must have dim {model.dim}, got {x.shape}")
    vals = features(x[None, :], model.centers, model.sigma)[0]
    return ((model.theta * vals) @ (model.centers - x)) / model.sigma**2


def grad_features(x: np.ndarray, centers: np.ndarray, sigma: float) -> np.ndarray:
    """Per-center gradient contributions: row i is phi_i(x) * (c_i - x) / sigma^2.

    gradient(model, x) == theta @ grad_features(x, centers, sigma). The learner
    uses this to write the dynamics constraint as an affine row in theta.
    """
    x = np.asarray(x, dtype=float).ravel()
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    vals = features(x[None, :], centers, sigma)[0]
    return vals[:, None] * (centers - x) / sigma**2


def select_centers(points: np.ndarray, max_centers: int) -> np.ndarray:
    """Deterministic greedy farthest-point subsample of at most max_centers points.

    Seeded at the point nearest the centroid; each round adds the point with
    the largest distance to the selected set, breaking ties at the lowest
    index. Returns points unchanged (as an array) when the budget covers them.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise ValueError("no points to select centers from")
    if max_centers < 1:
        raise ValueError(f"max_centers must be >= 1, got {max_centers}")
    if points.shape[0] <= max_centers:
        return points.copy()
    centroid = points.mean(axis=0)
    seed = int(np.argmin(np.linalg.norm(points - centroid, axis=1)))
    selected = [seed]
    # min distance from each point to the selected set
    mind = np.linalg.norm(points - points[seed], axis=1)
    while len(selected) < max_centers:
        nxt = int(np.argmax(mind))
        selected.append(nxt)
        mind = np.minimum(mind, np.linalg.norm(points - points[nxt], axis=1))
    return points[selected]
