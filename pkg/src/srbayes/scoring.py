"""Scoring rules and their sample-based estimators.

Implements the four scores used throughout the library: the energy score,
the Gaussian-kernel score (whose divergence is the squared MMD), the
Dawid-Sebastiani score (the synthetic-likelihood score up to constants), and
the semi-parametric synthetic-likelihood score built from KDE marginals tied
together by a Gaussian copula with a rank-based correlation estimate.

Every estimator consumes a simulation batch, an (m, d) array of model draws,
and one observation vector of length d. ``total_score`` sums an estimator
over a whole dataset while sharing the batch-only work (pairwise terms,
covariance factorization, KDE/copula fits) across observations.

All functions are pure; nothing here touches global state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.spatial.distance import cdist, pdist
from scipy.special import logsumexp, ndtr, ndtri

logger = logging.getLogger(__name__)

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# clamp applied to estimated marginal CDF values before the probit, so the
# copula term stays finite for observations far outside the simulated range
CDF_CLAMP = 1e-8


# ---------------------------------------------------------------------------
# configuration types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianKernel:
    """Isotropic Gaussian kernel k(x, y) = exp(-||x-y||^2 / (2 gamma^2))."""

    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"kernel bandwidth must be positive and finite, got {self.gamma}")


@dataclass(frozen=True)
class EnergyScoreConfig:
    """Energy score with exponent beta in (0, 2); beta = 1 is the default."""

    beta: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.beta < 2.0):
            raise ValueError(f"energy score beta must lie in (0, 2), got {self.beta}")


@dataclass(frozen=True)
class KernelScoreConfig:
    """Gaussian-kernel score; requires an explicit bandwidth."""

    kernel: GaussianKernel


@dataclass(frozen=True)
class DawidSebastianiConfig:
    """Dawid-Sebastiani score: log|Cov| plus the Mahalanobis term."""


@dataclass(frozen=True)
class SemiBSLConfig:
    """Semi-parametric synthetic likelihood score.

    ``kde_bandwidth`` overrides the per-column Silverman rule with one fixed
    bandwidth for every column; ``None`` keeps the rule.
    """

    kde_bandwidth: float | None = None

    def __post_init__(self):
        if self.kde_bandwidth is not None and not self.kde_bandwidth > 0:
            raise ValueError("kde_bandwidth must be positive when given")


ScoringRuleConfig = Union[
    EnergyScoreConfig, KernelScoreConfig, DawidSebastianiConfig, SemiBSLConfig
]


# ---------------------------------------------------------------------------
# input coercion
# ---------------------------------------------------------------------------

def as_batch(batch) -> np.ndarray:
    """Coerce to an (m, d) float array; 1-d input becomes a single column."""
    arr = np.asarray(batch, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"simulation batch must be (m, d), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("simulation batch contains non-finite entries")
    return arr


def as_observation(y, d: int) -> np.ndarray:
    """Coerce to a length-d float vector, checking the dimension."""
    vec = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    if vec.shape[0] != d:
        raise ValueError(f"observation has dimension {vec.shape[0]}, batch has {d}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("observation contains non-finite entries")
    return vec


def as_dataset(data, d: int | None = None) -> np.ndarray:
    """Coerce to an (n, d) float array of observations."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None] if d is None or d == 1 else arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"dataset must be (n, d) with n >= 1, got shape {arr.shape}")
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"dataset has dimension {arr.shape[1]}, expected {d}")
    return arr


# ---------------------------------------------------------------------------
# elementary kernels and estimators
# ---------------------------------------------------------------------------

def gaussian_kernel(x, y, kern: GaussianKernel) -> float:
    """Evaluate the Gaussian kernel between two vectors of equal length."""
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    if xv.shape != yv.shape:
        raise ValueError(f"kernel arguments have shapes {xv.shape} and {yv.shape}")
    sq = float(np.sum((xv - yv) ** 2))
    return math.exp(-sq / (2.0 * kern.gamma ** 2))


def _pairwise_abs_power_sum_1d(x: np.ndarray, beta: float) -> float:
    # sum over ordered pairs j != k of |x_j - x_k|^beta
    m = x.shape[0]
    if beta == 1.0:
        # exact O(m log m) identity: sum_{j<k} (x_(k) - x_(j)) with sorted x
        xs = np.sort(x)
        coef = 2.0 * np.arange(m) - (m - 1.0)
        return 2.0 * float(np.dot(coef, xs))
    d = pdist(x[:, None])
    return 2.0 * float(np.sum(d ** beta))


def energy_score_estimate(batch, y, beta: float = 1.0) -> float:
    """Unbiased two-sample estimate of the energy score.

    Returns (2/m) sum_j ||x_j - y||^beta minus the mean of ||x_j - x_k||^beta
    over ordered pairs j != k. For 1-d data with beta = 1 the pairwise term
    uses the exact sorted-order identity instead of materializing all pairs.
    """
    X = as_batch(batch)
    m, d = X.shape
    if m < 2:
        raise ValueError(f"energy score needs m >= 2 simulations, got {m}")
    if not (0.0 < beta <= 2.0):
        raise ValueError(f"beta must lie in (0, 2], got {beta}")
    yv = as_observation(y, d)

    data_term = float(np.mean(np.linalg.norm(X - yv, axis=1) ** beta))
    if d == 1:
        pair_sum = _pairwise_abs_power_sum_1d(X[:, 0], beta)
    else:
        pair_sum = 2.0 * float(np.sum(pdist(X) ** beta))
    return 2.0 * data_term - pair_sum / (m * (m - 1))


def kernel_score_estimate(batch, y, kern: GaussianKernel) -> float:
    """Unbiased two-sample estimate of the Gaussian-kernel score.

    Returns the mean of k(x_j, x_k) over ordered pairs j != k minus
    (2/m) sum_j k(x_j, y).
    """
    X = as_batch(batch)
    m, d = X.shape
    if m < 2:
        raise ValueError(f"kernel score needs m >= 2 simulations, got {m}")
    yv = as_observation(y, d)

    inv = 1.0 / (2.0 * kern.gamma ** 2)
    pair_sum = 2.0 * float(np.sum(np.exp(-pdist(X, "sqeuclidean") * inv)))
    data_term = float(np.mean(np.exp(-np.sum((X - yv) ** 2, axis=1) * inv)))
    return pair_sum / (m * (m - 1)) - 2.0 * data_term


class _DSFit:
    """Mean, covariance factorization, and log-determinant of one batch."""

    def __init__(self, X: np.ndarray):
        m, d = X.shape
        if m < 2:
            raise ValueError(f"Dawid-Sebastiani score needs m >= 2 simulations, got {m}")
        self.mean = X.mean(axis=0)
        cov = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
        if not np.all(np.isfinite(cov)):
            raise ValueError("degenerate simulation covariance")
        try:
            self.cho = cho_factor(cov, lower=True)
        except LinAlgError:
            raise ValueError("degenerate simulation covariance") from None
        diag = np.diag(self.cho[0])
        if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
            raise ValueError("degenerate simulation covariance")
        self.logdet = 2.0 * float(np.sum(np.log(diag)))

    def score(self, yv: np.ndarray) -> float:
        r = yv - self.mean
        return self.logdet + float(r @ cho_solve(self.cho, r))

    def score_total(self, Y: np.ndarray) -> float:
        """Sum of scores over dataset rows; one triangular solve for all."""
        R = Y - self.mean
        quad = np.einsum("ij,ij->i", R, cho_solve(self.cho, R.T).T)
        return Y.shape[0] * self.logdet + float(np.sum(quad))


def ds_score_estimate(batch, y) -> float:
    """Dawid-Sebastiani score of one observation against a batch.

    Uses the batch sample mean and the unbiased (m-1 denominator) sample
    covariance: log|Cov| + (y - mean)' Cov^{-1} (y - mean). Satisfies
    2 * logpdf_normal(y; mean, Cov) = -score - d*log(2*pi) exactly.
    """
    X = as_batch(batch)
    fit = _DSFit(X)
    return fit.score(as_observation(y, X.shape[1]))


# ---------------------------------------------------------------------------
# KDE marginals, rank correlation, and the copula score
# ---------------------------------------------------------------------------

def kde_marginal(samples, bandwidth: float, point: float) -> tuple[float, float]:
    """Gaussian KDE density and exact CDF of one marginal at one point.

    The CDF is the exact integral of the fitted mixture (a mean of normal
    CDFs), so it is strictly increasing in ``point`` and lands in (0, 1).
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.shape[0] < 2:
        raise ValueError(f"kde needs at least 2 samples, got {x.shape[0]}")
    if not bandwidth > 0:
        raise ValueError(f"kde bandwidth must be positive, got {bandwidth}")
    z = (float(point) - x) / bandwidth
    pdf = float(np.mean(np.exp(-0.5 * z * z))) / (bandwidth * _SQRT_2PI)
    cdf = float(np.mean(ndtr(z)))
    return pdf, cdf


def silverman_bandwidth(column: np.ndarray) -> float:
    """Per-column KDE bandwidth: 0.9 * min(sd, IQR/1.34) * m^(-1/5).

    If the IQR is zero (heavily tied column) the sd alone is used; a zero
    result then signals a degenerate column to the caller.
    """
    x = np.asarray(column, dtype=float).ravel()
    m = x.shape[0]
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * m ** (-0.2)


def grc_correlation(batch) -> np.ndarray:
    """Gaussian rank correlation matrix of a batch.

    Ranks each column (ties broken by original sample index, so discrete
    batches rank deterministically), maps ranks r to normal scores
    ndtri(r/(m+1)), and normalizes by sum_j ndtri(j/(m+1))^2 so the diagonal
    is exactly one.
    """
    X = as_batch(batch)
    m, d = X.shape
    if m < 3:
        raise ValueError(f"rank correlation needs m >= 3 simulations, got {m}")

    ranks = np.empty((m, d))
    rank_values = np.arange(1, m + 1, dtype=float)
    for c in range(d):
        order = np.argsort(X[:, c], kind="stable")
        ranks[order, c] = rank_values
    Z = ndtri(ranks / (m + 1.0))
    denom = float(np.sum(ndtri(rank_values / (m + 1.0)) ** 2))
    R = (Z.T @ Z) / denom
    R = 0.5 * (R + R.T)
    np.clip(R, -1.0, 1.0, out=R)
    np.fill_diagonal(R, 1.0)
    return R


@dataclass
class SemiBSLFit:
    """Fitted pieces of the semi-parametric synthetic likelihood.

    ``columns`` holds the batch columns the KDEs were fit on, ``bandwidths``
    the per-column KDE bandwidths, and ``correlation`` the Gaussian rank
    correlation matrix of the batch.
    """

    columns: np.ndarray
    bandwidths: np.ndarray
    correlation: np.ndarray
    _cho: tuple = field(repr=False, default=None)
    _logdet: float = field(repr=False, default=0.0)

    def __post_init__(self):
        try:
            self._cho = cho_factor(self.correlation, lower=True)
        except LinAlgError:
            raise ValueError("degenerate copula correlation") from None
        diag = np.diag(self._cho[0])
        if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
            raise ValueError("degenerate copula correlation")
        self._logdet = 2.0 * float(np.sum(np.log(diag)))

    def neg_log_density(self, yv: np.ndarray) -> float:
        """Negative log semi-parametric synthetic likelihood at one point."""
        m, d = self.columns.shape
        log_pdf = np.empty(d)
        cdf = np.empty(d)
        for k in range(d):
            z = (yv[k] - self.columns[:, k]) / self.bandwidths[k]
            # logsumexp keeps the marginal log-density finite far in the tails
            log_pdf[k] = logsumexp(-0.5 * z * z) - math.log(m * self.bandwidths[k] * _SQRT_2PI)
            cdf[k] = np.mean(ndtr(z))
        eta = ndtri(np.clip(cdf, CDF_CLAMP, 1.0 - CDF_CLAMP))
        quad = float(eta @ cho_solve(self._cho, eta)) - float(eta @ eta)
        return -float(np.sum(log_pdf)) + 0.5 * self._logdet + 0.5 * quad


def fit_semibsl(batch, kde_bandwidth: float | None = None) -> SemiBSLFit:
    """Fit KDE marginals and the rank-correlation copula to a batch."""
    X = as_batch(batch)
    m, d = X.shape
    if d < 2:
        raise ValueError(f"semiBSL needs d >= 2 output dimensions, got {d}")
    if m < 3:
        raise ValueError(f"semiBSL needs m >= 3 simulations, got {m}")
    if kde_bandwidth is not None:
        h = np.full(d, float(kde_bandwidth))
    else:
        h = np.array([silverman_bandwidth(X[:, k]) for k in range(d)])
    if np.any(h <= 0):
        bad = int(np.argmin(h))
        raise ValueError(f"kde bandwidth must be positive, got {h[bad]} for column {bad}")
    return SemiBSLFit(columns=X, bandwidths=h, correlation=grc_correlation(X))


def semibsl_score_estimate(batch, y, kde_bandwidth: float | None = None) -> float:
    """Negative log semi-parametric synthetic likelihood of one observation."""
    X = as_batch(batch)
    fit = fit_semibsl(X, kde_bandwidth)
    return fit.neg_log_density(as_observation(y, X.shape[1]))


# ---------------------------------------------------------------------------
# dataset totals
# ---------------------------------------------------------------------------

def total_score(batch, data, cfg: ScoringRuleConfig) -> float:
    """Sum of the configured score over every observation in a dataset.

    Additive over dataset partitions. Batch-only work (pairwise sums,
    covariance factorizations, KDE/copula fits) happens once regardless of
    the dataset size.
    """
    X = as_batch(batch)
    m, d = X.shape
    Y = as_dataset(data, d)
    n = Y.shape[0]

    if isinstance(cfg, EnergyScoreConfig):
        if m < 2:
            raise ValueError(f"energy score needs m >= 2 simulations, got {m}")
        beta = cfg.beta
        if d == 1:
            pair_sum = _pairwise_abs_power_sum_1d(X[:, 0], beta)
        else:
            pair_sum = 2.0 * float(np.sum(pdist(X) ** beta))
        pair_term = pair_sum / (m * (m - 1))
        dists = cdist(X, Y)
        data_terms = 2.0 * np.mean(dists ** beta, axis=0)
        return float(np.sum(data_terms) - n * pair_term)

    if isinstance(cfg, KernelScoreConfig):
        if m < 2:
            raise ValueError(f"kernel score needs m >= 2 simulations, got {m}")
        inv = 1.0 / (2.0 * cfg.kernel.gamma ** 2)
        pair_sum = 2.0 * float(np.sum(np.exp(-pdist(X, "sqeuclidean") * inv)))
        pair_term = pair_sum / (m * (m - 1))
        kvals = np.exp(-cdist(X, Y, "sqeuclidean") * inv)
        data_terms = 2.0 * np.mean(kvals, axis=0)
        return float(n * pair_term - np.sum(data_terms))

    if isinstance(cfg, DawidSebastianiConfig):
        fit = _DSFit(X)
        return fit.score_total(Y)

    if isinstance(cfg, SemiBSLConfig):
        fit = fit_semibsl(X, cfg.kde_bandwidth)
        return float(sum(fit.neg_log_density(Y[i]) for i in range(n)))

    raise TypeError(f"unknown scoring rule config: {cfg!r}")


def score_estimate(batch, y, cfg: ScoringRuleConfig) -> float:
    """Single-observation score under any configured rule."""
    if isinstance(cfg, EnergyScoreConfig):
        return energy_score_estimate(batch, y, cfg.beta)
    if isinstance(cfg, KernelScoreConfig):
        return kernel_score_estimate(batch, y, cfg.kernel)
    if isinstance(cfg, DawidSebastianiConfig):
        return ds_score_estimate(batch, y)
    if isinstance(cfg, SemiBSLConfig):
        return semibsl_score_estimate(batch, y, cfg.kde_bandwidth)
    raise TypeError(f"unknown scoring rule config: {cfg!r}")
