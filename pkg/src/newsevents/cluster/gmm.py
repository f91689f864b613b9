"""Gaussian mixture fitting by EM with full covariances, plus BIC model
selection. E-step responsibilities are computed in log space (log-sum-exp);
covariances carry a ridge reg*I to stay positive definite."""
from __future__ import annotations

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import logsumexp

from ..util import new_rng
from .kmeans import kmeans
from .result import ClusteringResult, GmmModel, as_values

_LOG_2PI = np.log(2.0 * np.pi)


def _log_gaussian(values: np.ndarray, mean: np.ndarray, cov: np.ndarray,
                  reg: float) -> np.ndarray:
    try:
        chol = cholesky(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            f"covariance not positive definite even with reg={reg}; "
            "increase reg") from exc
    diff = solve_triangular(chol, (values - mean).T, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (values.shape[1] * _LOG_2PI + logdet + np.sum(diff ** 2, axis=0))


def _mle_cov(values: np.ndarray, mean: np.ndarray, reg: float) -> np.ndarray:
    diff = values - mean
    cov = diff.T @ diff / values.shape[0]
    return cov + reg * np.eye(values.shape[1])


def gmm_em(X, k: int, seed: int = 0, reg: float = 1e-6, tol: float = 1e-6,
           max_iter: int = 200, restarts: int = 5) -> ClusteringResult:
    """EM from k-means initializations; the best of `restarts` runs by final
    log-likelihood wins. Labels are argmax responsibilities; components that
    end up with no argmax member are dropped from the labeling (the fitted
    GmmModel keeps all k)."""
    values = as_values(X)
    n, f = values.shape
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = new_rng(seed)
    child_seeds = [int(s) for s in rng.integers(0, 2 ** 62, size=max(1, restarts))]

    best = None
    for child in child_seeds:
        init = kmeans(values, k, seed=child, restarts=1)
        weights = np.bincount(init.labels, minlength=k).astype(np.float64) / n
        means = init.representatives.copy()
        covs = np.stack([
            _mle_cov(values[init.labels == c], means[c], reg) for c in range(k)
        ])

        trace: list[float] = []
        resp = np.zeros((n, k))
        for _ in range(max_iter):
            log_prob = np.column_stack([
                np.log(np.maximum(weights[c], 1e-300)) +
                _log_gaussian(values, means[c], covs[c], reg)
                for c in range(k)
            ])
            row_norm = logsumexp(log_prob, axis=1)
            loglik = float(row_norm.sum())
            resp = np.exp(log_prob - row_norm[:, None])
            trace.append(loglik)
            if len(trace) > 1 and trace[-1] - trace[-2] < tol:
                break
            nc = resp.sum(axis=0) + 10.0 * np.finfo(float).eps
            weights = nc / nc.sum()
            means = (resp.T @ values) / nc[:, None]
            for c in range(k):
                diff = values - means[c]
                covs[c] = (resp[:, c][:, None] * diff).T @ diff / nc[c]
                covs[c] += reg * np.eye(f)

        if best is None or trace[-1] > best[0]:
            best = (trace[-1], weights, means, covs, trace, resp)

    _, weights, means, covs, trace, resp = best
    raw_labels = np.argmax(resp, axis=1)
    present = sorted(set(raw_labels.tolist()))
    remap = {old: new for new, old in enumerate(present)}
    labels = np.array([remap[c] for c in raw_labels], dtype=np.int64)
    model = GmmModel(weights=weights, means=means, covariances=covs,
                     loglik_trace=tuple(trace))
    return ClusteringResult(
        algorithm="gmm", labels=labels, k=len(present),
        representatives=means[present].copy(), extras=model, seed=seed)


def gmm_responsibilities(result: ClusteringResult, X) -> np.ndarray:
    """Posterior membership probabilities under the fitted mixture."""
    model: GmmModel = result.extras
    values = as_values(X)
    log_prob = np.column_stack([
        np.log(np.maximum(model.weights[c], 1e-300)) +
        _log_gaussian(values, model.means[c], model.covariances[c], 0.0)
        for c in range(model.weights.shape[0])
    ])
    return np.exp(log_prob - logsumexp(log_prob, axis=1)[:, None])


def gmm_select_k_bic(X, k_min: int, k_max: int, seed: int = 0,
                     reg: float = 1e-6, restarts: int = 5) -> tuple[int, list[float]]:
    """BIC = -2*loglik + params*ln(n) with params = k-1 + kF + kF(F+1)/2;
    returns (argmin-BIC k, the BIC list over k_min..k_max)."""
    values = as_values(X)
    n, f = values.shape
    if k_min < 1:
        raise ValueError(f"k_min must be >= 1, got {k_min}")
    if k_min > k_max:
        raise ValueError(f"need k_min <= k_max, got {k_min} > {k_max}")
    bics = []
    for k in range(k_min, k_max + 1):
        result = gmm_em(values, k, seed=seed, reg=reg, restarts=restarts)
        loglik = result.extras.loglik_trace[-1]
        params = (k - 1) + k * f + k * f * (f + 1) // 2
        bics.append(-2.0 * loglik + params * np.log(n))
    chosen = k_min + int(np.argmin(bics))
    return chosen, bics
