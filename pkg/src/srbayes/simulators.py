"""Simulator suite: g-and-k (uni/multivariate), MA(2), M/G/1, normal
location, a stochastically forced Lorenz96, and a boom-bust population model.

Each simulator is a pure function of (theta, m, rng) where ``rng`` is a
numpy Generator; given the same generator state the output is bit-identical.
Time-series models also expose their summary-statistics maps, and the
``Model`` registry wires simulators, priors, and statistics together behind
one uniform interface so the samplers and heuristics never special-case a
model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

__all__ = [
    "SimulationError", "Uniform", "Gaussian", "Prior", "Model",
    "NormalOutliers", "ParamOutliers", "CauchyOutliers", "ContaminationSpec",
    "gk_transform", "simulate_gk", "simulate_multi_gk", "simulate_ma2",
    "simulate_mg1", "simulate_normal_location", "simulate_lorenz96",
    "lorenz96_rk4_step", "lorenz96_statistics", "simulate_boom_bust",
    "boom_bust_statistics",
    "generate_observations", "get_model", "MODEL_NAMES",
    "LORENZ96_INITIAL_STATE",
]


class SimulationError(RuntimeError):
    """A simulation produced a non-finite state (e.g. an ODE blow-up)."""


# ---------------------------------------------------------------------------
# priors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"uniform prior needs lower < upper, got [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError(f"gaussian prior needs sd > 0, got {self.sd}")


PriorDim = Union[Uniform, Gaussian]


@dataclass(frozen=True, eq=False)
class Prior:
    """Product of per-dimension priors, optionally cut by a support predicate.

    The predicate covers non-box supports (the MA(2) triangle); inside the
    box the density is left unnormalized, which the samplers and heuristics
    tolerate. Sampling rejects box draws until the predicate holds.
    """

    dims: tuple[PriorDim, ...]
    constraint: Optional[Callable[[np.ndarray], bool]] = None
    constraint_name: str = ""

    @property
    def dim(self) -> int:
        return len(self.dims)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        for _ in range(100_000):
            theta = np.array([
                rng.uniform(d.lower, d.upper) if isinstance(d, Uniform)
                else rng.normal(d.mean, d.sd)
                for d in self.dims
            ])
            if self.constraint is None or self.constraint(theta):
                return theta
        raise RuntimeError("prior rejection sampling failed; constraint region too small")

    def log_density(self, theta) -> float:
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if t.shape[0] != self.dim:
            raise ValueError(f"theta has dimension {t.shape[0]}, prior has {self.dim}")
        total = 0.0
        for v, d in zip(t, self.dims):
            if isinstance(d, Uniform):
                if not (d.lower < v < d.upper):
                    return -math.inf
                total -= math.log(d.upper - d.lower)
            else:
                z = (v - d.mean) / d.sd
                total += -0.5 * z * z - math.log(d.sd * math.sqrt(2 * math.pi))
        if self.constraint is not None and not self.constraint(t):
            return -math.inf
        return total

    def contains(self, theta) -> bool:
        return np.isfinite(self.log_density(theta))


# ---------------------------------------------------------------------------
# g-and-k
# ---------------------------------------------------------------------------

def gk_transform(z, A, B, g, k):
    """Quantile transform of the g-and-k distribution applied to normal draws.

    A + B * (1 + 0.8 * (1 - exp(-g z)) / (1 + exp(-g z))) * (1 + z^2)^k * z,
    vectorized over z.
    """
    z = np.asarray(z, dtype=float)
    egz = np.exp(-g * z)
    skew = 1.0 + 0.8 * (1.0 - egz) / (1.0 + egz)
    return A + B * skew * (1.0 + z * z) ** k * z


def simulate_gk(theta, m: int, rng: np.random.Generator) -> np.ndarray:
    """m i.i.d. univariate g-and-k draws, shape (m, 1)."""
    A, B, g, k = np.asarray(theta, dtype=float)
    if m < 1:
        raise ValueError(f"need m >= 1 simulations, got {m}")
    z = rng.standard_normal(m)
    return gk_transform(z, A, B, g, k)[:, None]


def _multi_gk_cholesky(rho: float) -> np.ndarray:
    sigma = np.eye(5)
    idx = np.arange(4)
    sigma[idx, idx + 1] = rho
    sigma[idx + 1, idx] = rho
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise ValueError(
            f"tridiagonal correlation with rho={rho} is not positive definite"
        ) from None


def simulate_multi_gk(theta, m: int, rng: np.random.Generator) -> np.ndarray:
    """m draws of the 5-dimensional g-and-k with tridiagonal latent correlation."""
    A, B, g, k, rho = np.asarray(theta, dtype=float)
    if m < 1:
        raise ValueError(f"need m >= 1 simulations, got {m}")
    L = _multi_gk_cholesky(rho)
    z = rng.standard_normal((m, 5)) @ L.T
    return gk_transform(z, A, B, g, k)


# ---------------------------------------------------------------------------
# MA(2)
# ---------------------------------------------------------------------------

def simulate_ma2(theta, m: int, rng: np.random.Generator) -> np.ndarray:
    """m draws of a 50-step MA(2) series: x_t = e_t + t1 e_{t-1} + t2 e_{t-2}.

    The first two steps truncate the missing history: x_1 = e_1 and
    x_2 = e_2 + t1 e_1.
    """
    t1, t2 = np.asarray(theta, dtype=float)
    if m < 1:
        raise ValueError(f"need m >= 1 simulations, got {m}")
    e = rng.standard_normal((m, 50))
    x = e.copy()
    x[:, 1:] += t1 * e[:, :-1]
    x[:, 2:] += t2 * e[:, :-2]
    return x


def _ma2_triangle(theta: np.ndarray) -> bool:
    t1, t2 = theta
    return (-1.0 < t2 < 1.0) and (t1 + t2 > -1.0) and (t1 - t2 < 1.0)


# ---------------------------------------------------------------------------
# M/G/1 queue
# ---------------------------------------------------------------------------

def simulate_mg1(theta, m: int, rng: np.random.Generator,
                 formulation: str = "direct") -> np.ndarray:
    """m draws of the log of the first 50 interdeparture times of an M/G/1 queue.

    Service times are Uniform(theta1, theta2), interarrival times are
    Exponential(rate theta3). Two algebraically identical formulations are
    provided: ``direct`` tracks arrival and departure clocks, ``lindley``
    runs the waiting-time recursion. With identical draws of the
    interarrival and service times both return the same output.
    """
    th1, th2, th3 = np.asarray(theta, dtype=float)
    if not (0.0 <= th1 <= th2):
        raise ValueError(f"need 0 <= theta1 <= theta2, got {th1}, {th2}")
    if not th3 > 0:
        raise ValueError(f"need theta3 > 0, got {th3}")
    if formulation not in ("direct", "lindley"):
        raise ValueError(f"formulation must be 'direct' or 'lindley', got {formulation!r}")
    if m < 1:
        raise ValueError(f"need m >= 1 simulations, got {m}")

    # shared draw order for both formulations: interarrivals first, services second
    W = rng.exponential(scale=1.0 / th3, size=(m, 50))
    U = rng.uniform(th1, th2, size=(m, 50))

    Y = np.empty((m, 50))
    if formulation == "direct":
        V = np.cumsum(W, axis=1)         # arrival clock of customer i
        X = np.zeros(m)                  # departure clock of customer i-1
        for i in range(50):
            Y[:, i] = U[:, i] + np.maximum(0.0, V[:, i] - X)
            X = X + Y[:, i]
    else:
        Z = np.zeros(m)                  # waiting time of customer i
        U_prev = np.zeros(m)             # service time of customer i-1 (U_0 = 0)
        for i in range(50):
            Z_new = np.maximum(0.0, Z + U_prev - W[:, i])
            Y[:, i] = W[:, i] + U[:, i] - U_prev + Z_new - Z
            Z = Z_new
            U_prev = U[:, i]

    # interdeparture times are zero only on the theta1 = 0 boundary
    return np.log(np.maximum(Y, 1e-300))


# ---------------------------------------------------------------------------
# normal location
# ---------------------------------------------------------------------------

def simulate_normal_location(theta, m: int, rng: np.random.Generator) -> np.ndarray:
    """m i.i.d. N(theta, 1) draws, shape (m, 1)."""
    if m < 1:
        raise ValueError(f"need m >= 1 simulations, got {m}")
    loc = float(np.atleast_1d(np.asarray(theta, dtype=float))[0])
    return loc + rng.standard_normal((m, 1))


# ---------------------------------------------------------------------------
# Lorenz96 with stochastic forcing
# ---------------------------------------------------------------------------

LORENZ96_K = 8
LORENZ96_T = 45
LORENZ96_DT = 1.0 / 30.0
LORENZ96_F = 10.0

# fixed initial state shared by every simulation, generated once via
# np.random.default_rng(96).standard_normal(8) and stored so the integration
# start never depends on the caller's stream
LORENZ96_INITIAL_STATE = np.array([
    -0.9072133404548357, 1.43353556234907, -0.8206558141763942,
    -1.8104086917878184, -0.4144698467246695, 1.6530806668320728,
    -0.8667794657644139, 1.0130166831451237,
])


def _l96_drift(y: np.ndarray, damping: float, forcing: np.ndarray) -> np.ndarray:
    # dy_k/dt = -y_{k-1} (y_{k-2} - y_{k+1}) - y_k + F - (b0 + b1 y + r)
    # folded here as advection - (1 + b1) y + (F - b0 - r)
    adv = -np.roll(y, 1, axis=-1) * (np.roll(y, 2, axis=-1) - np.roll(y, -1, axis=-1))
    return adv - y * damping + forcing


def lorenz96_rk4_step(
    y: np.ndarray, damping: float, forcing: np.ndarray, dt: float
) -> np.ndarray:
    """One classical RK4 step of the damped-forced Lorenz96 drift."""
    k1 = _l96_drift(y, damping, forcing)
    k2 = _l96_drift(y + 0.5 * dt * k1, damping, forcing)
    k3 = _l96_drift(y + 0.5 * dt * k2, damping, forcing)
    k4 = _l96_drift(y + dt * k3, damping, forcing)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate_lorenz96(theta, m: int, rng: np.random.Generator) -> np.ndarray:
    """m raw Lorenz96 trajectories, shape (m, 8, 45).

    Integrates the 8-site cyclic system dy_k/dt = -y_{k-1}(y_{k-2} - y_{k+1})
    - y_k + 10 - g with an RK4 step of 1/30 over t in [0, 1.5], starting from
    the fixed stored initial state. The effective term g = b0 + b1 y + r(t)
    carries an independent AR(1) state per site, initialized at stationarity
    (r ~ N(0, sigma_e^2)) and updated once per step as
    r <- phi r + sigma_e sqrt(1 - phi^2) eta; the noise is held constant
    across the four RK4 stages of that step.

    Raises SimulationError if the state turns non-finite (blow-up).
    """
    b0, b1, sigma_e, phi = np.asarray(theta, dtype=float)
    if m < 1:
        raise ValueError(f"need m >= 1 simulations, got {m}")

    y = np.tile(LORENZ96_INITIAL_STATE, (m, 1))
    r = sigma_e * rng.standard_normal((m, LORENZ96_K))
    damping = 1.0 + b1
    out = np.empty((m, LORENZ96_K, LORENZ96_T))
    dt = LORENZ96_DT
    scale = sigma_e * math.sqrt(max(0.0, 1.0 - phi * phi))

    # blow-ups surface as SimulationError, not as numpy overflow warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(LORENZ96_T):
            r = phi * r + scale * rng.standard_normal((m, LORENZ96_K))
            forcing = LORENZ96_F - b0 - r
            y = lorenz96_rk4_step(y, damping, forcing, dt)
            if not np.all(np.isfinite(y)):
                raise SimulationError("lorenz96 state blew up (non-finite values)")
            out[:, :, t] = y
    return out


def lorenz96_statistics(series: np.ndarray) -> np.ndarray:
    """Six site-averaged temporal statistics of one or more K x T series.

    Components, each averaged cyclically over the site index k:
      1. temporal mean of y_k
      2. temporal variance of y_k
      3. lag-1 temporal autocovariance of y_k
      4. same-time covariance of y_k with its neighbor
      5. lag-1 cross-covariance of y_k(t) with y_{k+1}(t+1)
      6. lag-1 cross-covariance of y_k(t) with y_{k-1}(t+1)

    Accepts (K, T) or a batch (m, K, T); returns shape (6,) or (m, 6).
    """
    arr = np.asarray(series, dtype=float)
    single = arr.ndim == 2
    if single:
        arr = arr[None, :, :]
    if arr.shape[-1] < 3:
        raise ValueError(f"need T >= 3 time steps, got {arr.shape[-1]}")

    mean_t = arr.mean(axis=-1, keepdims=True)
    dev = arr - mean_t

    def cov(a, b):
        # temporal covariance of two equally long deviation blocks, averaged over sites
        return np.mean(np.mean(a * b, axis=-1), axis=-1)

    d0, d1 = dev[..., :-1], dev[..., 1:]
    neighbor = np.roll(dev, -1, axis=1)          # site k+1
    neighbor_prev = np.roll(dev, 1, axis=1)      # site k-1

    stats = np.stack([
        np.mean(mean_t[..., 0], axis=-1),
        cov(dev, dev),
        cov(d0, d1),
        cov(dev, neighbor),
        cov(d0, neighbor[..., 1:]),
        cov(d0, neighbor_prev[..., 1:]),
    ], axis=-1)
    return stats[0] if single else stats


# ---------------------------------------------------------------------------
# boom-bust population model
# ---------------------------------------------------------------------------

BOOM_BUST_STEPS = 300
BOOM_BUST_BURNIN = 50


def simulate_boom_bust(theta, m: int, rng: np.random.Generator) -> np.ndarray:
    """m boom-bust population series, shape (m, 250), integer counts.

    One step: N' ~ Poisson(N (1 + r)) if N <= kappa else Binomial(N, alpha),
    plus Poisson(beta_im) immigration. Starts at N_0 = round(kappa / 2); 300
    steps are simulated and the first 50 discarded.
    """
    r, kappa, alpha, beta_im = np.asarray(theta, dtype=float)
    if m < 1:
        raise ValueError(f"need m >= 1 simulations, got {m}")
    if beta_im < 0:
        raise ValueError(f"immigration rate must be >= 0, got {beta_im}")

    N = np.full(m, int(round(kappa / 2.0)), dtype=np.int64)
    keep = BOOM_BUST_STEPS - BOOM_BUST_BURNIN
    out = np.empty((m, keep), dtype=np.int64)
    for t in range(BOOM_BUST_STEPS):
        # both branches are drawn for the full vector so the stream layout
        # never depends on the data path
        boom = rng.poisson(N * (1.0 + r))
        bust = rng.binomial(N, alpha)
        imm = rng.poisson(beta_im, size=m)
        N = np.where(N <= kappa, boom, bust) + imm
        if t >= BOOM_BUST_BURNIN:
            out[:, t - BOOM_BUST_BURNIN] = N
    return out


def _moments(x: np.ndarray) -> np.ndarray:
    # population moments; zero variance defines skewness/kurtosis as 0
    mean = float(np.mean(x))
    dev = x - mean
    m2 = float(np.mean(dev ** 2))
    if m2 <= 0.0:
        return np.array([mean, 0.0, 0.0, 0.0])
    m3 = float(np.mean(dev ** 3))
    m4 = float(np.mean(dev ** 4))
    return np.array([mean, m2, m3 / m2 ** 1.5, m4 / (m2 * m2)])


def boom_bust_statistics(series: np.ndarray) -> np.ndarray:
    """Twelve summary statistics of one or more boom-bust series.

    Mean, variance (population), skewness, and raw kurtosis of the counts N,
    of the differences N_t - N_{t-1}, and of the ratios N_t / N_{t-1} (ratio
    terms with N_{t-1} = 0 are dropped; an all-dropped ratio block yields
    zero moments).

    Accepts a length-L vector or a batch (m, L); returns (12,) or (m, 12).
    """
    arr = np.asarray(series, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] < 4:
        raise ValueError(f"need series length >= 4, got {arr.shape[1]}")

    rows = []
    for row in arr:
        diffs = np.diff(row)
        prev = row[:-1]
        mask = prev > 0
        ratios = row[1:][mask] / prev[mask]
        ratio_moments = _moments(ratios) if ratios.size > 0 else np.zeros(4)
        rows.append(np.concatenate([_moments(row), _moments(diffs), ratio_moments]))
    out = np.asarray(rows)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# observation generation with contamination
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalOutliers:
    """Outliers drawn from N(z, 1); for the normal-location model."""
    z: float


@dataclass(frozen=True, eq=False)
class ParamOutliers:
    """Outliers simulated from an alternative parameter value."""
    theta_out: np.ndarray


@dataclass(frozen=True)
class CauchyOutliers:
    """Outliers drawn i.i.d. standard Cauchy per output component."""


OutlierSource = Union[NormalOutliers, ParamOutliers, CauchyOutliers, None]


@dataclass(frozen=True, eq=False)
class ContaminationSpec:
    """How to generate a dataset: n observations from theta_star, with the
    last floor(epsilon * n) replaced by draws from the outlier source.

    epsilon = 1 makes the whole dataset outlier draws (used for the fully
    misspecified setups).
    """

    theta_star: np.ndarray
    n: int
    epsilon: float = 0.0
    outlier_source: OutlierSource = None

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.n < 1:
            raise ValueError(f"need n >= 1 observations, got {self.n}")
        if self.epsilon > 0 and self.outlier_source is None:
            raise ValueError("epsilon > 0 requires an outlier source")


def generate_observations(spec: ContaminationSpec, model: "Model",
                          rng: np.random.Generator) -> np.ndarray:
    """Dataset of shape (n, d): clean draws first, outliers last."""
    n_out = int(math.floor(spec.epsilon * spec.n))
    n_clean = spec.n - n_out
    parts = []
    if n_clean > 0:
        parts.append(model.simulate(np.asarray(spec.theta_star, dtype=float), n_clean, rng))
    if n_out > 0:
        src = spec.outlier_source
        if isinstance(src, NormalOutliers):
            parts.append(src.z + rng.standard_normal((n_out, model.output_dim)))
        elif isinstance(src, ParamOutliers):
            parts.append(model.simulate(np.asarray(src.theta_out, dtype=float), n_out, rng))
        elif isinstance(src, CauchyOutliers):
            parts.append(rng.standard_cauchy((n_out, model.output_dim)))
        else:
            raise ValueError(f"unknown outlier source: {src!r}")
    return np.vstack(parts)


# ---------------------------------------------------------------------------
# model registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Model:
    """Uniform simulator interface.

    ``simulate`` returns the (m, d) batch the scores consume; for the
    time-series models that is the summary-statistics vector and
    ``raw_simulate``/``statistics`` expose the underlying series and the
    reduction map for predictive diagnostics.
    """

    name: str
    theta_names: tuple[str, ...]
    output_dim: int
    prior: Prior
    simulate: Callable[[np.ndarray, int, np.random.Generator], np.ndarray]
    raw_simulate: Optional[Callable[[np.ndarray, int, np.random.Generator], np.ndarray]] = None
    statistics: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def theta_dim(self) -> int:
        return len(self.theta_names)


_SQRT3_3 = math.sqrt(3.0) / 3.0


def _simulate_mg1_box(theta, m, rng):
    # model-level coordinates are (service_min, service_range, arrival_rate)
    u1, u2, u3 = np.asarray(theta, dtype=float)
    return simulate_mg1(np.array([u1, u1 + u2, u3]), m, rng)


def _simulate_lorenz96_stats(theta, m, rng):
    return lorenz96_statistics(simulate_lorenz96(theta, m, rng))


def _simulate_boom_bust_stats(theta, m, rng):
    return boom_bust_statistics(simulate_boom_bust(theta, m, rng))


def _build_registry() -> dict[str, Model]:
    gk_prior = Prior((Uniform(0, 4), Uniform(0, 4), Uniform(0, 4), Uniform(0, 4)))
    registry = {
        "uni_gk": Model(
            name="uni_gk",
            theta_names=("A", "B", "g", "k"),
            output_dim=1,
            prior=gk_prior,
            simulate=simulate_gk,
        ),
        "multi_gk": Model(
            name="multi_gk",
            theta_names=("A", "B", "g", "k", "rho"),
            output_dim=5,
            prior=Prior(gk_prior.dims + (Uniform(-_SQRT3_3, _SQRT3_3),)),
            simulate=simulate_multi_gk,
        ),
        "ma2": Model(
            name="ma2",
            theta_names=("theta1", "theta2"),
            output_dim=50,
            prior=Prior((Uniform(-2, 2), Uniform(-1, 1)),
                        constraint=_ma2_triangle,
                        constraint_name="ma2_triangle"),
            simulate=simulate_ma2,
        ),
        "mg1": Model(
            name="mg1",
            theta_names=("service_min", "service_range", "arrival_rate"),
            output_dim=50,
            prior=Prior((Uniform(0, 10), Uniform(0, 10), Uniform(0, 1.0 / 3.0))),
            simulate=_simulate_mg1_box,
        ),
        "normal_location": Model(
            name="normal_location",
            theta_names=("theta",),
            output_dim=1,
            prior=Prior((Gaussian(0.0, 1.0),)),
            simulate=simulate_normal_location,
        ),
        "lorenz96": Model(
            name="lorenz96",
            theta_names=("b0", "b1", "sigma_e", "phi"),
            output_dim=6,
            prior=Prior((Uniform(1.4, 2.2), Uniform(0, 1), Uniform(1.5, 2.5), Uniform(0, 1))),
            simulate=_simulate_lorenz96_stats,
            raw_simulate=simulate_lorenz96,
            statistics=lorenz96_statistics,
        ),
        "boom_bust": Model(
            name="boom_bust",
            theta_names=("r", "kappa", "alpha", "beta_im"),
            output_dim=12,
            prior=Prior((Uniform(0, 1), Uniform(10, 80), Uniform(0, 1), Uniform(0, 1))),
            simulate=_simulate_boom_bust_stats,
            raw_simulate=simulate_boom_bust,
            statistics=boom_bust_statistics,
        ),
    }
    return registry


_REGISTRY = _build_registry()
MODEL_NAMES = tuple(sorted(_REGISTRY))


def get_model(name: str) -> Model:
    """Look up a registered model by name."""
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}") from None
