"""Posterior summaries and posterior-predictive scoring diagnostics.

The predictive check simulates one dataset row per retained posterior draw
(optionally subsampled), pools the rows into a predictive sample, and scores
that sample against held-out clean observations with the energy score and a
gaussian kernel score. Lower totals mean the predictive distribution sits
closer to the data, so two chains can be compared by their totals or, for
time-series outputs, coordinate by coordinate.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from .mcmc import ChainTrace
from .scoring import (EnergyScoreConfig, GaussianKernel, KernelScoreConfig,
                      as_dataset, total_score)
from .simulators import Model

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ChainSummary:
    theta_names: tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    covariance: np.ndarray
    cov_trace: float
    acceptance_rate: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "theta_names": list(self.theta_names),
            "mean": self.mean.tolist(),
            "sd": self.sd.tolist(),
            "covariance": self.covariance.tolist(),
            "cov_trace": self.cov_trace,
            "acceptance_rate": self.acceptance_rate,
            "n_samples": self.n_samples,
        }


def chain_summary(trace: ChainTrace) -> ChainSummary:
    """Posterior means, standard deviations, and sample covariance (ddof=1).

    A single-sample trace gets zero variances with a logged warning rather
    than NaNs.
    """
    samples = np.asarray(trace.samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError("trace has no retained samples")
    n, p = samples.shape
    mean = samples.mean(axis=0)
    if n < 2:
        logger.warning("chain summary from a single sample; variances set to zero")
        cov = np.zeros((p, p))
    else:
        cov = np.atleast_2d(np.cov(samples, rowvar=False, ddof=1))
    return ChainSummary(
        theta_names=trace.theta_names,
        mean=mean,
        sd=np.sqrt(np.diag(cov)),
        covariance=cov,
        cov_trace=float(np.trace(cov)),
        acceptance_rate=trace.acceptance_rate,
        n_samples=n,
    )


@dataclass(frozen=True, eq=False)
class PredictiveCheckReport:
    """Totals of the predictive sample scored against clean observations."""

    energy: float
    kernel: float
    n_draws: int
    predictive: np.ndarray

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "kernel": self.kernel,
            "n_draws": self.n_draws,
        }


def posterior_predictive_scores(trace: ChainTrace, model: Model, clean_data,
                                kernel: Optional[GaussianKernel] = None,
                                rng: Optional[np.random.Generator] = None,
                                subsample: int = 1000) -> PredictiveCheckReport:
    """Score the posterior predictive sample against clean observations.

    Draws at most ``subsample`` parameter vectors from the retained trace
    without replacement, simulates one output row per draw, and computes the
    total energy and gaussian kernel scores of the pooled predictive sample
    against ``clean_data``. With ``kernel=None`` the bandwidth defaults to
    the median pairwise distance within the predictive sample.
    """
    if rng is None:
        rng = np.random.default_rng()
    if subsample < 2:
        raise ValueError(f"subsample must be >= 2, got {subsample}")
    samples = np.asarray(trace.samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError("trace has no retained samples")
    n = samples.shape[0]
    if n > subsample:
        idx = rng.choice(n, size=subsample, replace=False)
        samples = samples[idx]
    rows = [model.simulate(theta, 1, rng) for theta in samples]
    predictive = np.concatenate(rows, axis=0)
    clean = as_dataset(clean_data, predictive.shape[1])
    if kernel is None:
        med = float(np.median(pdist(predictive)))
        if not med > 0:
            raise ValueError(
                "cannot derive a kernel bandwidth from a degenerate predictive sample; "
                "pass an explicit kernel")
        kernel = GaussianKernel(med)
    energy = total_score(predictive, clean, EnergyScoreConfig())
    kern = total_score(predictive, clean, KernelScoreConfig(kernel))
    return PredictiveCheckReport(energy=energy, kernel=kern,
                                 n_draws=predictive.shape[0],
                                 predictive=predictive)


def per_timestep_score_diff(predictive_a, predictive_b, clean_data,
                            kernel: GaussianKernel) -> np.ndarray:
    """Coordinate-wise score differences between two predictive samples.

    Treats each output coordinate as a univariate quantity, scores both
    predictive samples against the clean data coordinate by coordinate, and
    returns a (T, 2) array of differences [energy_b - energy_a,
    kernel_b - kernel_a]; positive entries favor sample a.
    """
    a = np.asarray(predictive_a, dtype=float)
    b = np.asarray(predictive_b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("predictive samples must be 2-d arrays")
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"predictive samples disagree on dimension: {a.shape[1]} vs {b.shape[1]}")
    clean = as_dataset(clean_data, a.shape[1])
    T = a.shape[1]
    out = np.empty((T, 2))
    kcfg = KernelScoreConfig(kernel)
    ecfg = EnergyScoreConfig()
    for t in range(T):
        ya, yb = a[:, t:t + 1], b[:, t:t + 1]
        yc = clean[:, t:t + 1]
        out[t, 0] = total_score(yb, yc, ecfg) - total_score(ya, yc, ecfg)
        out[t, 1] = total_score(yb, yc, kcfg) - total_score(ya, yc, kcfg)
    return out


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

def write_json(obj: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_timestep_diff_csv(diff: np.ndarray, path) -> None:
    """CSV with header ``timestep,energy_diff,kernel_diff``."""
    diff = np.asarray(diff, dtype=float)
    if diff.ndim != 2 or diff.shape[1] != 2:
        raise ValueError("diff must be a (T, 2) array")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestep", "energy_diff", "kernel_diff"])
        for t, (e, k) in enumerate(diff):
            writer.writerow([t, f"{e:.17g}", f"{k:.17g}"])
