"""
The benchmark simulator gallery
===============================

Six likelihood-free benchmark models ship with the library, all behind the
same interface: a frozen Model record with a prior, parameter names, and a
simulate(theta, m, rng) function returning an (m, output_dim) batch. This
script draws from each one and pokes at the structure that makes it
interesting.
"""

import numpy as np

from srbayes import (
    CauchyOutliers,
    ContaminationSpec,
    MODEL_NAMES,
    NormalOutliers,
    ParamOutliers,
    boom_bust_statistics,
    generate_observations,
    get_model,
    lorenz96_statistics,
    simulate_boom_bust,
    simulate_gk,
    simulate_lorenz96,
    simulate_mg1,
)

rng = np.random.default_rng(11)

# ---------------------------------------------------------------------------
# The registry
# ---------------------------------------------------------------------------
# Every model can be looked up by name. The prior stores per-parameter
# ranges; simulating at the prior midpoint gives a quick shape check.

print(f"{'name':<16} {'parameters':<42} {'output dim'}")
for name in MODEL_NAMES:
    model = get_model(name)
    print(f"{name:<16} {', '.join(model.theta_names):<42} {model.output_dim}")

print()
for name in MODEL_NAMES:
    model = get_model(name)
    theta = model.prior.sample(rng)
    batch = model.simulate(theta, 4, rng)
    print(f"{name:<16} theta={np.round(theta, 3)} -> batch shape {batch.shape}")

# ---------------------------------------------------------------------------
# g-and-k: a quantile-defined distribution
# ---------------------------------------------------------------------------
# The univariate g-and-k has no closed-form density. Its four parameters
# control location (A), scale (B), skewness (g) and tail weight (k). Turning
# g and k up should show in the sample moments.

m = 200_000
sym = simulate_gk([3.0, 1.5, 0.0, 0.0], m, np.random.default_rng(1))[:, 0]
skw = simulate_gk([3.0, 1.5, 2.0, 0.0], m, np.random.default_rng(1))[:, 0]
hvy = simulate_gk([3.0, 1.5, 0.0, 1.5], m, np.random.default_rng(1))[:, 0]


def moments(x):
    c = x - x.mean()
    return x.mean(), x.std(), (c ** 3).mean() / x.std() ** 3


print("\ng-and-k sample moments (mean, sd, skewness):")
print("  g=0, k=0  :", np.round(moments(sym), 3), " (plain normal)")
print("  g=2, k=0  :", np.round(moments(skw), 3), " (right-skewed)")
print("  g=0, k=1.5: tail quantiles",
      np.round(np.quantile(hvy, [0.001, 0.999]), 2),
      "vs normal", np.round(np.quantile(sym, [0.001, 0.999]), 2))

# The 5-dimensional variant correlates the latent normals of five g-and-k
# coordinates through a tridiagonal covariance driven by one parameter rho.
# The nonlinear g-and-k transform attenuates the output correlation, but the
# neighbor structure survives: adjacent coordinates co-move, distant ones do
# not.
multi = get_model("multi_gk")
batch = multi.simulate([3.0, 1.5, 0.5, 1.5, -0.3], 100_000, np.random.default_rng(2))
corr = np.corrcoef(batch.T)
print("multi g-and-k (latent rho = -0.3):")
print("  adjacent-coordinate correlations:",
      np.round([corr[i, i + 1] for i in range(4)], 3))
print("  lag-2 correlations              :",
      np.round([corr[i, i + 2] for i in range(3)], 3))

# ---------------------------------------------------------------------------
# MA(2): the sanity-check time series
# ---------------------------------------------------------------------------
# x_t = e_t + t1 e_{t-1} + t2 e_{t-2} over 50 steps. The lag-1 and lag-2
# autocovariances have known values t1 + t1 t2 and t2 (unit noise variance).

ma2 = get_model("ma2")
t1, t2 = 0.6, 0.2
x = ma2.simulate([t1, t2], 100_000, np.random.default_rng(3))
xc = x - x.mean(axis=0)
acov1 = (xc[:, :-1] * xc[:, 1:]).mean()
acov2 = (xc[:, :-2] * xc[:, 2:]).mean()
print("\nMA(2) lag-1 autocovariance:", round(acov1, 4), "expected", t1 + t1 * t2)
print("MA(2) lag-2 autocovariance:", round(acov2, 4), "expected", t2)

# ---------------------------------------------------------------------------
# M/G/1: a queueing model with two equivalent simulators
# ---------------------------------------------------------------------------
# The observable is the log of the first 50 interdeparture times of a queue
# with Uniform(min, min + range) service and Poisson arrivals. Two
# formulations are implemented: one tracks arrival and departure clocks
# directly, the other runs the Lindley waiting-time recursion. They are
# algebraically identical, which makes a strong cross-check; on a shared
# seed they agree to machine precision.

theta_mg1 = [1.0, 4.0, 0.2]
d = simulate_mg1(theta_mg1, 500, np.random.default_rng(4), formulation="direct")
l = simulate_mg1(theta_mg1, 500, np.random.default_rng(4), formulation="lindley")
print("\nM/G/1 direct vs lindley, max |diff|:", np.abs(d - l).max())

# ---------------------------------------------------------------------------
# Lorenz96: a chaotic ODE with a stochastic closure term
# ---------------------------------------------------------------------------
# Eight coupled sites integrated by RK4, with an AR(1)-perturbed forcing
# term g = b0 + b1 y driven by four parameters. The raw output is an
# (m, 8, 45) trajectory array; the model registered in the registry returns
# six summary statistics (temporal mean, variance, lag-1 autocovariance,
# and neighbor covariances, averaged over sites).

theta_l96 = [2.0, 0.8, 1.7, 0.4]
raw = simulate_lorenz96(theta_l96, 3, np.random.default_rng(5))
stats = lorenz96_statistics(raw)
print("\nlorenz96 raw trajectories:", raw.shape, "-> statistics:", stats.shape)
print("statistics of first draw:", np.round(stats[0], 3))

model_l96 = get_model("lorenz96")
print("registry model output   :",
      model_l96.simulate(theta_l96, 3, np.random.default_rng(5)).shape)

# ---------------------------------------------------------------------------
# Boom-bust: an integer population cycle
# ---------------------------------------------------------------------------
# A population grows by Poisson births below the carrying threshold kappa
# and crashes binomially above it, plus Poisson immigration. 300 steps are
# simulated and the first 50 discarded. Summaries are mean, variance,
# skewness and kurtosis of the series, its differences, and its ratios.

theta_bb = [0.4, 50.0, 0.09, 0.05]
series = simulate_boom_bust(theta_bb, 5, np.random.default_rng(6))
print("\nboom-bust series:", series.shape, "dtype", series.dtype)
peak = int(series[0].argmax())
lo = max(0, peak - 10)
print(f"first draw around its peak (steps {lo}-{lo + 19}):",
      series[0, lo:lo + 20])
print("12 summary statistics:", np.round(boom_bust_statistics(series)[0], 3))

# ---------------------------------------------------------------------------
# Contaminated datasets
# ---------------------------------------------------------------------------
# Observed datasets are described by a ContaminationSpec: n draws from
# theta_star with the last floor(epsilon * n) replaced by outliers. Three
# outlier sources cover the usual misspecification stories.

nl = get_model("normal_location")
spec = ContaminationSpec(theta_star=np.array([1.0]), n=10, epsilon=0.2,
                         outlier_source=NormalOutliers(z=10.0))
y = generate_observations(spec, nl, np.random.default_rng(8))
print("\nnormal-location data with 2/10 outliers at z=10:")
print(np.round(y[:, 0], 2), " (outliers sit last)")

spec = ContaminationSpec(theta_star=np.array(theta_l96), n=6, epsilon=1 / 3,
                         outlier_source=ParamOutliers(np.array([1.41, 0.1, 2.4, 0.95])))
y = generate_observations(spec, model_l96, np.random.default_rng(9))
print("lorenz96 data, 4 clean + 2 from an alternative parameter:", y.shape)

spec = ContaminationSpec(theta_star=np.array([3.0, 1.5, 0.5, 1.5]), n=5,
                         epsilon=1.0, outlier_source=CauchyOutliers())
y = generate_observations(spec, get_model("uni_gk"), np.random.default_rng(10))
print("fully Cauchy 'g-and-k' data:", np.round(y[:, 0], 2))
