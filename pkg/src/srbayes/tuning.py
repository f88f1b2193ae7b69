"""Heuristics for the loss weight w and the gaussian kernel bandwidth.

The weight heuristic calibrates the scoring-rule posterior against a
reference score whose natural weight is known: the raw normal-density score
at w = 1 reproduces synthetic-likelihood tempering. For random prior pairs
(theta, theta') it compares how much the reference and the target score
move between the two parameters and takes the median ratio, so the chosen w
gives the target posterior roughly the reference's concentration.

The bandwidth heuristic is the usual median-distance rule applied under the
prior predictive: the median over prior draws of the per-parameter median
pairwise distance between simulated outputs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from .scoring import DawidSebastianiConfig, ScoringRuleConfig, total_score
from .simulators import Model, SimulationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WTuningReport:
    """Outcome of the weight heuristic.

    ``w`` is the median of ``ratios``; ``n_dropped`` counts prior pairs
    discarded for failed simulations, degenerate score fits, non-finite
    score differences, or an exactly zero target-score difference.
    """

    w: float
    ratios: np.ndarray
    n_used: int
    n_dropped: int


def estimate_w(model: Model, data, scoring: ScoringRuleConfig,
               reference: Optional[ScoringRuleConfig] = None,
               n_pairs: int = 100, m: int = 500,
               rng: Optional[np.random.Generator] = None) -> WTuningReport:
    """Estimate the loss weight w by the median score-ratio heuristic.

    Each pair draws two parameters from the prior and one simulation batch
    of size ``m`` per parameter; the batch is reused for the reference and
    the target score, so the ratio compares the two scores on identical
    randomness. Negative ratios are kept; only non-finite ratios and zero
    denominators are dropped.

    Raises
    ------
    RuntimeError
        If every pair is dropped ("tuning failure").
    """
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if reference is None:
        reference = DawidSebastianiConfig()
    if rng is None:
        rng = np.random.default_rng()
    data = np.asarray(data, dtype=float)

    ratios = []
    dropped = 0
    for _ in range(n_pairs):
        theta_a = model.prior.sample(rng)
        theta_b = model.prior.sample(rng)
        try:
            batch_a = model.simulate(theta_a, m, rng)
            batch_b = model.simulate(theta_b, m, rng)
            num = total_score(batch_a, data, reference) - total_score(batch_b, data, reference)
            den = total_score(batch_a, data, scoring) - total_score(batch_b, data, scoring)
        except (SimulationError, ValueError) as exc:
            logger.warning("dropping tuning pair (%s, %s): %s", theta_a, theta_b, exc)
            dropped += 1
            continue
        if not (math.isfinite(num) and math.isfinite(den)) or den == 0.0:
            dropped += 1
            continue
        ratios.append(num / den)

    if not ratios:
        raise RuntimeError(
            f"tuning failure: all {n_pairs} prior pairs were dropped, no usable score ratios")
    arr = np.asarray(ratios)
    return WTuningReport(w=float(np.median(arr)), ratios=arr,
                         n_used=arr.shape[0], n_dropped=dropped)


def estimate_bandwidth(model: Model, m_gamma: int, m_theta_gamma: int = 1000,
                       rng: Optional[np.random.Generator] = None) -> float:
    """Median-of-medians kernel bandwidth under the prior predictive.

    For each of ``m_theta_gamma`` prior draws, simulates ``m_gamma`` outputs
    and records the median pairwise euclidean distance within the batch; the
    returned bandwidth is the median of those per-parameter medians.

    Raises
    ------
    ValueError
        If the resulting bandwidth is not strictly positive
        ("degenerate simulator output"), or every prior draw failed.
    """
    if m_gamma < 2:
        raise ValueError(f"m_gamma must be >= 2, got {m_gamma}")
    if m_theta_gamma < 1:
        raise ValueError(f"m_theta_gamma must be >= 1, got {m_theta_gamma}")
    if rng is None:
        rng = np.random.default_rng()

    medians = []
    failed = 0
    for _ in range(m_theta_gamma):
        theta = model.prior.sample(rng)
        try:
            batch = model.simulate(theta, m_gamma, rng)
        except SimulationError as exc:
            logger.warning("dropping bandwidth draw %s: %s", theta, exc)
            failed += 1
            continue
        arr = np.asarray(batch, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        medians.append(float(np.median(pdist(arr))))

    if not medians:
        raise RuntimeError(
            f"tuning failure: all {m_theta_gamma} bandwidth draws failed to simulate")
    gamma = float(np.median(np.asarray(medians)))
    if not gamma > 0:
        raise ValueError(
            f"degenerate simulator output: median pairwise distance {gamma} is not positive")
    return gamma
