"""Exact Gaussian-process regression with an ARD squared-exponential kernel.

Hyperparameters live in log space. Training runs Adam ascent on the log
marginal likelihood with analytic gradients; several independent models
(one per objective) can be trained in one batched pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

JITTER_LADDER = (0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)
STD_FLOOR = 1e-12

# box constraints applied after every optimizer step (log-space)
LOG_SIGNAL_BOUNDS = (math.log(1e-3), math.log(1e3))
LOG_LENGTH_BOUNDS = (math.log(1e-2), math.log(1e3))
LOG_NOISE_BOUNDS = (math.log(1e-6), math.log(1e1))


class GpNumericalError(RuntimeError):
    """Covariance factorization failed even at the largest jitter."""


@dataclass(frozen=True)
class KernelHyperparams:
    log_signal_variance: float
    log_length_scales: np.ndarray
    log_noise_variance: float

    @classmethod
    def create(cls, signal_variance: float, length_scales, noise_variance: float) -> KernelHyperparams:
        ls = np.atleast_1d(np.asarray(length_scales, dtype=float))
        if signal_variance <= 0 or noise_variance <= 0 or np.any(ls <= 0):
            raise ValueError("hyperparameters must be strictly positive")
        return cls(math.log(signal_variance), np.log(ls), math.log(noise_variance))

    @classmethod
    def default(cls, dim: int) -> KernelHyperparams:
        return cls.create(1.0, np.full(dim, 0.5 * math.sqrt(dim)), 1e-2)

    @classmethod
    def from_vector(cls, theta: np.ndarray) -> KernelHyperparams:
        theta = np.asarray(theta, dtype=float)
        return cls(float(theta[0]), theta[1:-1].copy(), float(theta[-1]))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.log_signal_variance], self.log_length_scales, [self.log_noise_variance]])

    @property
    def signal_variance(self) -> float:
        return math.exp(self.log_signal_variance)

    @property
    def length_scales(self) -> np.ndarray:
        return np.exp(self.log_length_scales)

    @property
    def noise_variance(self) -> float:
        return math.exp(self.log_noise_variance)


def kernel(a, b, h: KernelHyperparams) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"input dimensions differ: {a.shape} vs {b.shape}")
    z = (a - b) / h.length_scales
    return h.signal_variance * math.exp(-0.5 * float(z @ z))


def kernel_matrix(A: np.ndarray, B: np.ndarray, h: KernelHyperparams) -> np.ndarray:
    ls = h.length_scales
    A = np.atleast_2d(A) / ls
    B = np.atleast_2d(B) / ls
    sq = np.sum(A**2, 1)[:, None] + np.sum(B**2, 1)[None, :] - 2.0 * A @ B.T
    return h.signal_variance * np.exp(-0.5 * np.maximum(sq, 0.0))


def _cholesky(A: np.ndarray) -> tuple[np.ndarray, float]:
    n = A.shape[0]
    for jitter in JITTER_LADDER:
        try:
            return np.linalg.cholesky(A + jitter * np.eye(n)), jitter
        except np.linalg.LinAlgError:
            continue
    raise GpNumericalError(f"Cholesky failed for {n}x{n} covariance after jitter {JITTER_LADDER[-1]:g}")


def _standardize(y: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(np.mean(y))
    std = max(float(np.std(y)), STD_FLOOR)
    return (y - mean) / std, mean, std


def _potrf(A: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor via LAPACK with jitter escalation; reads only the lower triangle."""
    n = A.shape[0]
    for jitter in JITTER_LADDER:
        c, info = lapack.dpotrf(A + jitter * np.eye(n) if jitter else A, lower=1, clean=1)
        if info == 0:
            return c, jitter
    raise GpNumericalError(f"Cholesky failed for {n}x{n} covariance after jitter {JITTER_LADDER[-1]:g}")


class _Pairs:
    """Strictly-lower-triangle pair layout of a training set, reused across epochs."""

    def __init__(self, X: np.ndarray):
        n = len(X)
        self.n = n
        self.rows, self.cols = np.tril_indices(n, -1)
        d = X[self.rows] - X[self.cols]
        self.sq = d * d  # (P, D)


def _mll_batch(theta: np.ndarray, pairs: _Pairs, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log marginal likelihood and its log-space gradient for a batch of models.

    theta: (B, D+2) log hyperparameters, Y: (B, n) standardized targets.
    Only the strictly lower triangle of each symmetric matrix is formed.
    """
    n = pairs.n
    B = len(theta)
    rows, cols = pairs.rows, pairs.cols
    sf2 = np.exp(theta[:, 0])
    inv_ls2 = np.exp(-2.0 * theta[:, 1:-1])
    noise = np.exp(theta[:, -1])
    k_off = np.exp(-0.5 * (pairs.sq @ inv_ls2.T)).T * sf2[:, None]  # (B, P)
    mll = np.empty(B)
    w_off = np.empty_like(k_off)
    w_diag = np.empty((B, n))
    A = np.zeros((n, n), order="F")
    diag = np.diag_indices(n)
    for b in range(B):
        A[rows, cols] = k_off[b]
        A[diag] = sf2[b] + noise[b]
        c, _ = _potrf(A)
        alpha, _ = lapack.dpotrs(c, Y[b], lower=1)
        inv, info = lapack.dpotri(c, lower=1)
        if info != 0:
            raise GpNumericalError("covariance inverse failed")
        mll[b] = -0.5 * Y[b] @ alpha - np.log(np.diag(c)).sum() - 0.5 * n * math.log(2.0 * math.pi)
        w_off[b] = alpha[rows] * alpha[cols] - inv[rows, cols]
        w_diag[b] = alpha * alpha - np.diag(inv)
    wk = w_off * k_off
    grad = np.empty_like(theta)
    grad[:, 0] = wk.sum(axis=1) + 0.5 * sf2 * w_diag.sum(axis=1)
    grad[:, 1:-1] = (wk @ pairs.sq) * inv_ls2
    grad[:, -1] = 0.5 * noise * w_diag.sum(axis=1)
    return mll, grad


def log_marginal_likelihood(X: np.ndarray, y: np.ndarray, h: KernelHyperparams) -> tuple[float, np.ndarray]:
    """MLL of already-standardized targets ``y`` and its gradient w.r.t. ``h.to_vector()``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mll, grad = _mll_batch(h.to_vector()[None, :], _Pairs(X), np.asarray(y, dtype=float)[None, :])
    return float(mll[0]), grad[0]


@dataclass(frozen=True)
class GpModel:
    hyperparams: KernelHyperparams
    train_inputs: np.ndarray
    raw_targets: np.ndarray
    train_targets: np.ndarray
    target_mean: float
    target_std: float
    factor: np.ndarray
    alpha: np.ndarray
    jitter: float
    prior_mean: float = 0.0

    @property
    def n(self) -> int:
        return len(self.train_inputs)

    def log_marginal_likelihood(self) -> float:
        return log_marginal_likelihood(self.train_inputs, self.train_targets, self.hyperparams)[0]


def condition(X, y, hyperparams: KernelHyperparams) -> GpModel:
    """Condition a GP with fixed hyperparameters on (X, y); y in raw units."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(X) != len(y) or len(y) < 1:
        raise ValueError("X and y must be non-empty and of equal length")
    ys, mean, std = _standardize(y)
    K = kernel_matrix(X, X, hyperparams) + hyperparams.noise_variance * np.eye(len(X))
    L, jitter = _cholesky(K)
    return _finish(hyperparams, X, y, ys, mean, std, L, jitter)


def _finish(h, X, y, ys, mean, std, L, jitter) -> GpModel:
    alpha = solve_triangular(L.T, solve_triangular(L, ys, lower=True), lower=False)
    return GpModel(h, X, y, ys, mean, std, L, alpha, jitter)


def fit_many(
    X,
    Y,
    epochs: int = 250,
    step_size: float = 0.05,
    init: KernelHyperparams | None = None,
) -> list[GpModel]:
    """Train one independent GP per column of ``Y`` on shared inputs ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, dim = X.shape
    if n < 2:
        raise ValueError("fit needs at least 2 observations")
    if len(Y) != n:
        raise ValueError("X and Y row counts differ")
    n_models = Y.shape[1]
    Ys = np.empty((n_models, n))
    for m in range(n_models):
        Ys[m] = _standardize(Y[:, m])[0]
    pairs = _Pairs(X)
    theta0 = (init or KernelHyperparams.default(dim)).to_vector()
    lo = np.concatenate([[LOG_SIGNAL_BOUNDS[0]], np.full(dim, LOG_LENGTH_BOUNDS[0]), [LOG_NOISE_BOUNDS[0]]])
    hi = np.concatenate([[LOG_SIGNAL_BOUNDS[1]], np.full(dim, LOG_LENGTH_BOUNDS[1]), [LOG_NOISE_BOUNDS[1]]])
    theta = np.tile(theta0, (n_models, 1))
    best_theta = theta.copy()
    best_mll = np.full(n_models, -np.inf)
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    b1, b2, eps = 0.9, 0.999, 1e-8
    for t in range(1, epochs + 2):
        mll, grad = _mll_batch(theta, pairs, Ys)
        better = mll > best_mll
        best_mll = np.where(better, mll, best_mll)
        best_theta[better] = theta[better]
        if t > epochs:
            break
        m1 = b1 * m1 + (1 - b1) * grad
        m2 = b2 * m2 + (1 - b2) * grad * grad
        step = step_size * (m1 / (1 - b1**t)) / (np.sqrt(m2 / (1 - b2**t)) + eps)
        theta = np.clip(theta + step, lo, hi)
    return [condition(X, Y[:, m], KernelHyperparams.from_vector(best_theta[m])) for m in range(n_models)]


def fit(X, y, epochs: int = 250, step_size: float = 0.05, init: KernelHyperparams | None = None) -> GpModel:
    y = np.asarray(y, dtype=float).ravel()
    return fit_many(X, y[:, None], epochs=epochs, step_size=step_size, init=init)[0]


def predict(model: GpModel, x_new) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and latent variance in standardized target units.

    Accepts one point (D,) or a batch (N, D); returns arrays of matching
    leading shape.
    """
    x = np.asarray(x_new, dtype=float)
    single = x.ndim == 1
    Xq = np.atleast_2d(x)
    Ks = kernel_matrix(model.train_inputs, Xq, model.hyperparams)
    mean = model.prior_mean + Ks.T @ model.alpha
    v = solve_triangular(model.factor, Ks, lower=True)
    var = np.maximum(model.hyperparams.signal_variance - np.sum(v * v, axis=0), 0.0)
    if single:
        return mean[0], var[0]
    return mean, var


def predict_raw(model: GpModel, x_new) -> tuple[np.ndarray, np.ndarray]:
    mean, var = predict(model, x_new)
    return to_raw_units(model, mean), var * model.target_std**2


def to_raw_units(model: GpModel, standardized):
    return model.target_mean + model.target_std * np.asarray(standardized)


def update(model: GpModel, x_new, y_new: float) -> GpModel:
    """Condition on one more observation, keeping the hyperparameters.

    The Cholesky factor is extended by one row; targets are re-standardized
    over all n+1 observations.
    """
    h = model.hyperparams
    x = np.asarray(x_new, dtype=float).reshape(1, -1)
    X = np.vstack([model.train_inputs, x])
    y = np.append(model.raw_targets, float(y_new))
    k = kernel_matrix(model.train_inputs, x, h)[:, 0]
    row = solve_triangular(model.factor, k, lower=True)
    d2 = h.signal_variance + h.noise_variance + model.jitter - row @ row
    if d2 <= 1e-12 * h.signal_variance:
        return condition(X, y, h)
    n = model.n
    L = np.zeros((n + 1, n + 1))
    L[:n, :n] = model.factor
    L[n, :n] = row
    L[n, n] = math.sqrt(d2)
    ys, mean, std = _standardize(y)
    return _finish(h, X, y, ys, mean, std, L, model.jitter)
