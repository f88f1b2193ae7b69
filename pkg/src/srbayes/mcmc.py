"""Correlated pseudo-marginal Metropolis-Hastings for scoring-rule posteriors.

The target is pi(theta) * exp(-w * sum_i S(P_theta, y_i)) with the score
estimated from m model simulations per evaluation. The m simulations are
split into G groups, each owning an opaque seed; a proposal refreshes the
seed of exactly one uniformly chosen group and a rejection keeps both the
parameter and the seeds, so consecutive evaluations share most of their
randomness (the correlated pseudo-marginal construction). G = 1 degenerates
to vanilla pseudo-marginal MCMC with fresh randomness every step.

Bounded parameters are handled by running the chain on a logit-transformed
unconstrained space with the prior density corrected by the transform
Jacobian.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .scoring import ScoringRuleConfig, total_score
from .simulators import Gaussian, Model, Prior, SimulationError, Uniform

logger = logging.getLogger(__name__)

_UINT63 = np.uint64(2) ** 63


# ---------------------------------------------------------------------------
# parameter transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogitTransform:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"logit transform needs lower < upper, got [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class IdentityTransform:
    pass


TransformDim = Union[LogitTransform, IdentityTransform]
TransformSpec = tuple


def derive_transform(prior: Prior) -> TransformSpec:
    """Logit for uniform prior dimensions, identity for gaussian ones."""
    dims = []
    for d in prior.dims:
        if isinstance(d, Uniform):
            dims.append(LogitTransform(d.lower, d.upper))
        elif isinstance(d, Gaussian):
            dims.append(IdentityTransform())
        else:
            raise TypeError(f"no transform rule for prior dimension {d!r}")
    return tuple(dims)


def transform_forward(theta, spec: TransformSpec) -> tuple[np.ndarray, float]:
    """Map theta to the unconstrained space.

    Returns (u, log_jacobian) where log_jacobian = log|det du/dtheta|.
    Logit dimensions map (l, u) to R via log((theta - l) / (u - theta)) and
    require theta strictly inside the bounds.
    """
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    if t.shape[0] != len(spec):
        raise ValueError(f"theta has dimension {t.shape[0]}, transform has {len(spec)}")
    u = np.empty_like(t)
    log_jac = 0.0
    for i, dim in enumerate(spec):
        if isinstance(dim, IdentityTransform):
            u[i] = t[i]
        else:
            lo, hi = dim.lower, dim.upper
            if not (lo < t[i] < hi):
                raise ValueError(
                    f"theta[{i}]={t[i]} is not strictly inside ({lo}, {hi})")
            u[i] = math.log((t[i] - lo) / (hi - t[i]))
            # du/dtheta = (hi - lo) / ((theta - lo) * (hi - theta))
            log_jac += math.log(hi - lo) - math.log(t[i] - lo) - math.log(hi - t[i])
    return u, log_jac


def transform_inverse(u, spec: TransformSpec) -> tuple[np.ndarray, float]:
    """Map an unconstrained vector back to theta.

    Returns (theta, log_jacobian) with log_jacobian = log|det dtheta/du|,
    the correction added to the log-target when the chain runs in u-space.
    """
    uv = np.atleast_1d(np.asarray(u, dtype=float))
    if uv.shape[0] != len(spec):
        raise ValueError(f"u has dimension {uv.shape[0]}, transform has {len(spec)}")
    t = np.empty_like(uv)
    log_jac = 0.0
    for i, dim in enumerate(spec):
        if isinstance(dim, IdentityTransform):
            t[i] = uv[i]
        else:
            lo, hi = dim.lower, dim.upper
            # numerically stable sigmoid
            x = uv[i]
            s = 1.0 / (1.0 + math.exp(-x)) if x >= 0 else math.exp(x) / (1.0 + math.exp(x))
            t[i] = lo + (hi - lo) * s
            # dtheta/du = (hi - lo) * s * (1 - s); log via softplus to avoid s(1-s) underflow
            softplus_mx = math.log1p(math.exp(-abs(x)))
            log_s = -softplus_mx if x >= 0 else x - softplus_mx
            log_1ms = -x - softplus_mx if x >= 0 else -softplus_mx
            log_jac += math.log(hi - lo) + log_s + log_1ms
    return t, log_jac


# ---------------------------------------------------------------------------
# proposals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiagonalNormal:
    """Independent normal proposal with per-dimension standard deviations."""

    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma", np.atleast_1d(np.asarray(self.sigma, dtype=float)))
        if np.any(self.sigma <= 0) or not np.all(np.isfinite(self.sigma)):
            raise ValueError("proposal sigma must be positive and finite")

    def draw(self, rng: np.random.Generator, p: int) -> np.ndarray:
        sig = self.sigma if self.sigma.shape[0] > 1 else np.full(p, self.sigma[0])
        if sig.shape[0] != p:
            raise ValueError(f"proposal has {sig.shape[0]} scales, chain has {p} dimensions")
        return sig * rng.standard_normal(p)


@dataclass(frozen=True, eq=False)
class FullNormal:
    """Multivariate normal proposal with a full covariance matrix."""

    covariance: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "covariance", cov)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("proposal covariance must be positive definite") from None
        object.__setattr__(self, "_chol", chol)

    def draw(self, rng: np.random.Generator, p: int) -> np.ndarray:
        if self.covariance.shape[0] != p:
            raise ValueError(
                f"proposal covariance is {self.covariance.shape[0]}-dimensional, chain has {p}")
        return self._chol @ rng.standard_normal(p)


Proposal = Union[DiagonalNormal, FullNormal]


# ---------------------------------------------------------------------------
# chain configuration and state
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChainConfig:
    steps: int
    burn_in: int
    w: float
    m: int
    G: int
    proposal: Proposal
    transform: TransformSpec
    scoring: ScoringRuleConfig
    master_seed: int
    thinning: int = 1
    start: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not 0 <= self.burn_in < self.steps:
            raise ValueError(f"burn_in must lie in [0, steps), got {self.burn_in}")
        if self.thinning < 1:
            raise ValueError(f"thinning must be >= 1, got {self.thinning}")
        if not self.w > 0:
            raise ValueError(f"w must be positive, got {self.w}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if self.G < 1 or self.m % self.G != 0:
            raise ValueError("G must divide m")


@dataclass
class RandomGroupState:
    """Per-group opaque seeds; each seed rebuilds one simulation stream."""

    seeds: np.ndarray  # (G,) uint64

    def generators(self) -> list[np.random.Generator]:
        return [np.random.Generator(np.random.PCG64(int(s))) for s in self.seeds]


@dataclass
class ChainState:
    theta: np.ndarray
    theta_unconstrained: np.ndarray
    groups: RandomGroupState
    current_log_target: float      # log prior + (-w * score), in theta space
    current_score: float           # total score estimate at theta
    current_log_jac: float         # log|det dtheta/du| at the current u


@dataclass
class ChainTrace:
    """Retained samples plus acceptance bookkeeping.

    ``samples`` holds the post-burn-in, thinned parameter draws;
    ``log_targets`` and ``accepted_flags`` align with its rows.
    ``per_step_scores`` keeps the total score estimate at every step of the
    full chain, burn-in included.
    """

    samples: np.ndarray
    accepted: int
    proposed: int
    per_step_scores: np.ndarray
    log_targets: np.ndarray
    accepted_flags: np.ndarray
    theta_names: tuple[str, ...]

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


# ---------------------------------------------------------------------------
# target evaluation
# ---------------------------------------------------------------------------

def simulate_grouped(model: Model, theta: np.ndarray, m: int,
                     groups: RandomGroupState) -> np.ndarray:
    """m simulations assembled from the per-group streams in fixed order."""
    G = groups.seeds.shape[0]
    per = m // G
    parts = [model.simulate(theta, per, gen) for gen in groups.generators()]
    return np.concatenate(parts, axis=0)


def log_target_estimate(theta, groups: RandomGroupState, model: Model, data,
                        cfg: ChainConfig) -> tuple[float, float]:
    """Log pseudo-target at theta: log prior - w * estimated total score.

    Returns (log_target, total_score). Outside the prior support the value
    is -inf and no simulation is run.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    log_prior = model.prior.log_density(theta)
    if not np.isfinite(log_prior):
        return -math.inf, math.nan
    batch = simulate_grouped(model, theta, cfg.m, groups)
    score = total_score(batch, data, cfg.scoring)
    return log_prior - cfg.w * score, score


# ---------------------------------------------------------------------------
# the correlated pseudo-marginal kernel
# ---------------------------------------------------------------------------

def correlated_pm_step(state: ChainState, model: Model, data, cfg: ChainConfig,
                       rng: np.random.Generator) -> tuple[ChainState, bool]:
    """One Metropolis-Hastings step with grouped common random numbers.

    Master-stream consumption order is fixed: proposal increment, group
    index, replacement seed, acceptance uniform. A simulation failure at the
    proposal counts as a rejection.
    """
    p = state.theta_unconstrained.shape[0]
    u_prop = state.theta_unconstrained + cfg.proposal.draw(rng, p)

    new_seeds = state.groups.seeds.copy()
    g_idx = int(rng.integers(new_seeds.shape[0]))
    new_seeds[g_idx] = rng.integers(_UINT63, dtype=np.uint64)
    groups_prop = RandomGroupState(new_seeds)

    theta_prop, log_jac_prop = transform_inverse(u_prop, cfg.transform)
    try:
        lt_prop, score_prop = log_target_estimate(theta_prop, groups_prop, model, data, cfg)
    except SimulationError as exc:
        logger.warning("simulation failed at proposal %s: %s; rejecting", theta_prop, exc)
        rng.uniform()  # keep stream layout identical on every code path
        return state, False
    except ValueError as exc:
        # degenerate score fits (singular covariance/copula) reject the move
        logger.warning("score evaluation failed at proposal %s: %s; rejecting", theta_prop, exc)
        rng.uniform()
        return state, False

    log_alpha = (lt_prop + log_jac_prop) - (state.current_log_target + state.current_log_jac)
    u_acc = rng.uniform()
    accept = bool(log_alpha >= 0.0 or u_acc < math.exp(log_alpha))
    if accept:
        new_state = ChainState(
            theta=theta_prop,
            theta_unconstrained=u_prop,
            groups=groups_prop,
            current_log_target=lt_prop,
            current_score=score_prop,
            current_log_jac=log_jac_prop,
        )
        return new_state, True
    return state, False


def run_chain(model: Model, data, cfg: ChainConfig) -> ChainTrace:
    """Run a full correlated pseudo-marginal chain.

    Initializes at ``cfg.start`` (or a prior draw), runs ``cfg.steps``
    kernel steps, then discards the first ``cfg.burn_in`` samples and thins
    the rest. Deterministic given ``cfg.master_seed``.
    """
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        raise ValueError("dataset is empty")
    master = np.random.default_rng(cfg.master_seed)

    if cfg.start is not None:
        theta0 = np.atleast_1d(np.asarray(cfg.start, dtype=float))
        if not model.prior.contains(theta0):
            raise ValueError(f"configured start {theta0} is outside the prior support")
    else:
        theta0 = model.prior.sample(master)
    u0, _ = transform_forward(theta0, cfg.transform)
    _, log_jac0 = transform_inverse(u0, cfg.transform)

    seeds0 = master.integers(_UINT63, size=cfg.G, dtype=np.uint64)
    groups0 = RandomGroupState(seeds0)
    lt0, score0 = log_target_estimate(theta0, groups0, model, data, cfg)
    if not np.isfinite(lt0):
        raise ValueError("initial state has zero target density")

    state = ChainState(theta0, u0, groups0, lt0, score0, log_jac0)

    p = theta0.shape[0]
    samples = np.empty((cfg.steps, p))
    log_targets = np.empty(cfg.steps)
    scores = np.empty(cfg.steps)
    flags = np.zeros(cfg.steps, dtype=np.int8)
    accepted = 0

    for step in range(cfg.steps):
        state, ok = correlated_pm_step(state, model, data, cfg, master)
        if ok:
            accepted += 1
            flags[step] = 1
        samples[step] = state.theta
        log_targets[step] = state.current_log_target
        scores[step] = state.current_score

    # keep the last sample of each post-burn-in thinning block, so the
    # retained count is exactly (steps - burn_in) // thinning
    kept = (cfg.steps - cfg.burn_in) // cfg.thinning
    idx = cfg.burn_in + cfg.thinning * np.arange(1, kept + 1) - 1
    return ChainTrace(
        samples=samples[idx].copy(),
        accepted=accepted,
        proposed=cfg.steps,
        per_step_scores=scores,
        log_targets=log_targets[idx].copy(),
        accepted_flags=flags[idx].copy(),
        theta_names=model.theta_names,
    )


# ---------------------------------------------------------------------------
# trace export
# ---------------------------------------------------------------------------

def write_trace_csv(trace: ChainTrace, path) -> None:
    """Write retained samples as CSV: one parameter column each, then
    ``log_target`` and ``accepted``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(trace.theta_names) + ["log_target", "accepted"])
        for row, lt, flag in zip(trace.samples, trace.log_targets, trace.accepted_flags):
            writer.writerow([f"{v:.17g}" for v in row] + [f"{lt:.17g}", int(flag)])


def read_trace_csv(path) -> ChainTrace:
    """Read a trace CSV written by ``write_trace_csv``.

    Acceptance totals are not stored in the CSV; the returned trace carries
    the per-row flags and counts derived from them.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader]
    names = tuple(header[:-2])
    arr = np.array([[float(v) for v in r] for r in rows])
    if arr.size == 0:
        raise ValueError(f"trace file {path} has no samples")
    return ChainTrace(
        samples=arr[:, : len(names)],
        accepted=int(arr[:, -1].sum()),
        proposed=arr.shape[0],
        per_step_scores=np.array([]),
        log_targets=arr[:, -2],
        accepted_flags=arr[:, -1].astype(np.int8),
        theta_names=names,
    )
