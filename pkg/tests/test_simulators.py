"""Unit tests for the simulator suite, its priors, and contamination."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import kstest, norm

from srbayes import simulators as sim
from srbayes.simulators import (MODEL_NAMES, CauchyOutliers, ContaminationSpec,
                                Gaussian, NormalOutliers, ParamOutliers, Prior,
                                SimulationError, Uniform, boom_bust_statistics,
                                generate_observations, get_model, gk_transform,
                                lorenz96_rk4_step, lorenz96_statistics,
                                simulate_boom_bust, simulate_gk,
                                simulate_lorenz96, simulate_ma2, simulate_mg1,
                                simulate_multi_gk, simulate_normal_location)


# ---------------------------------------------------------------------------
# g-and-k
# ---------------------------------------------------------------------------

def test_gk_transform_frozen_value():
    # hand-checked once: z=1, (A, B, g, k) = (3, 1.5, 0.5, 1.5)
    assert_allclose(gk_transform(1.0, 3.0, 1.5, 0.5, 1.5),
                    8.073922192838332, rtol=1e-13)


def test_gk_transform_zero_z_gives_location():
    for a, b, g, k in [(3.0, 1.5, 0.5, 1.5), (-2.0, 0.3, 4.0, 0.1)]:
        assert gk_transform(0.0, a, b, g, k) == a


def test_gk_transform_no_skew_no_kurtosis():
    # g = k = 0 reduces to A + B z
    assert gk_transform(1.0, 3.0, 1.5, 0.0, 0.0) == 4.5
    z = np.linspace(-3, 3, 11)
    assert_allclose(gk_transform(z, 3.0, 1.5, 0.0, 0.0), 3.0 + 1.5 * z, rtol=1e-15)


def test_gk_transform_vectorized():
    z = np.array([-1.0, 0.0, 2.0])
    vec = gk_transform(z, 3.0, 1.5, 0.5, 1.5)
    assert vec.shape == (3,)
    for zi, vi in zip(z, vec):
        assert gk_transform(zi, 3.0, 1.5, 0.5, 1.5) == vi


def test_simulate_gk_shape_and_determinism():
    theta = np.array([3.0, 1.5, 0.5, 1.5])
    a = simulate_gk(theta, 100, np.random.default_rng(9))
    b = simulate_gk(theta, 100, np.random.default_rng(9))
    assert a.shape == (100, 1)
    assert np.array_equal(a, b)


def test_simulate_gk_rejects_empty_batch():
    with pytest.raises(ValueError):
        simulate_gk(np.array([3.0, 1.5, 0.5, 1.5]), 0, np.random.default_rng(0))


def test_simulate_gk_normal_reduction_moments():
    # g = k = 0: draws are N(A, B^2); tolerances are 3 MC standard errors
    m = 100_000
    x = simulate_gk(np.array([3.0, 1.5, 0.0, 0.0]), m, np.random.default_rng(42)).ravel()
    assert abs(x.mean() - 3.0) < 3.0 * 1.5 / math.sqrt(m)
    assert abs(x.std(ddof=1) - 1.5) < 3.0 * 1.5 / math.sqrt(2 * m)


def test_simulate_gk_normal_reduction_ks():
    m = 100_000
    x = simulate_gk(np.array([3.0, 1.5, 0.0, 0.0]), m, np.random.default_rng(7)).ravel()
    stat = kstest(x, norm(loc=3.0, scale=1.5).cdf).statistic
    assert stat < 0.01


def test_simulate_multi_gk_shape():
    theta = np.array([3.0, 1.5, 0.5, 1.5, -0.3])
    out = simulate_multi_gk(theta, 64, np.random.default_rng(0))
    assert out.shape == (64, 5)


def test_simulate_multi_gk_independent_when_rho_zero():
    # A = 0, B = 1, g = k = 0 makes the output equal to the latent normals
    out = simulate_multi_gk(np.array([0.0, 1.0, 0.0, 0.0, 0.0]), 10_000,
                            np.random.default_rng(11))
    corr = np.corrcoef(out.T)
    off = corr[~np.eye(5, dtype=bool)]
    assert np.max(np.abs(off)) < 0.05


def test_simulate_multi_gk_latent_correlation():
    out = simulate_multi_gk(np.array([0.0, 1.0, 0.0, 0.0, -0.3]), 100_000,
                            np.random.default_rng(13))
    corr = np.corrcoef(out.T)
    adjacent = np.array([corr[i, i + 1] for i in range(4)])
    assert_allclose(adjacent, -0.3, atol=0.02)
    distant = np.array([corr[i, j] for i in range(5) for j in range(i + 2, 5)])
    assert np.max(np.abs(distant)) < 0.02


def test_simulate_multi_gk_rejects_non_pd_correlation():
    with pytest.raises(ValueError, match="not positive definite"):
        simulate_multi_gk(np.array([3.0, 1.5, 0.5, 1.5, 0.9]), 5,
                          np.random.default_rng(0))


# ---------------------------------------------------------------------------
# MA(2)
# ---------------------------------------------------------------------------

def test_simulate_ma2_matches_recursion_exactly():
    # truncated start: x_1 = e_1, x_2 = e_2 + t1 e_1
    t1, t2 = 0.6, 0.2
    x = simulate_ma2(np.array([t1, t2]), 8, np.random.default_rng(21))
    e = np.random.default_rng(21).standard_normal((8, 50))
    expect = e.copy()
    expect[:, 1:] += t1 * e[:, :-1]
    expect[:, 2:] += t2 * e[:, :-2]
    assert x.shape == (8, 50)
    assert np.array_equal(x, expect)


def test_simulate_ma2_white_noise_variance():
    x = simulate_ma2(np.array([0.0, 0.0]), 4000, np.random.default_rng(3))
    assert abs(x.var() - 1.0) < 0.02


def test_simulate_ma2_stationary_variance():
    # var x_t = 1 + t1^2 + t2^2 = 1.4 from the third step on
    x = simulate_ma2(np.array([0.6, 0.2]), 20_000, np.random.default_rng(5))
    assert abs(x[:, 2:].var() - 1.4) < 0.03
    # the truncated first two columns have smaller variance
    assert abs(x[:, 0].var() - 1.0) < 0.05
    assert abs(x[:, 1].var() - 1.36) < 0.05


def test_simulate_ma2_lag3_autocovariance_vanishes():
    x = simulate_ma2(np.array([0.6, 0.2]), 20_000, np.random.default_rng(6))
    lag3 = np.mean(x[:, :-3] * x[:, 3:])
    assert abs(lag3) < 0.02


def test_simulate_ma2_rejects_empty_batch():
    with pytest.raises(ValueError):
        simulate_ma2(np.array([0.6, 0.2]), 0, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# M/G/1 queue
# ---------------------------------------------------------------------------

def test_mg1_formulations_agree():
    rng_theta = np.random.default_rng(17)
    for trial in range(10):
        lo, hi = np.sort(rng_theta.uniform(0.0, 10.0, size=2))
        theta = np.array([lo, hi, rng_theta.uniform(0.05, 1.0 / 3.0)])
        a = simulate_mg1(theta, 20, np.random.default_rng(100 + trial), formulation="direct")
        b = simulate_mg1(theta, 20, np.random.default_rng(100 + trial), formulation="lindley")
        assert_allclose(a, b, atol=1e-12)


def test_mg1_zero_service_gives_interarrivals():
    # instant service: interdeparture times equal interarrival times
    theta = np.array([0.0, 0.0, 0.7])
    out = simulate_mg1(theta, 30, np.random.default_rng(3))
    W = np.random.default_rng(3).exponential(scale=1.0 / 0.7, size=(30, 50))
    assert_allclose(out, np.log(W), atol=1e-10)


def test_mg1_saturated_queue_pins_service_time():
    # arrivals far faster than service: from the second customer on the
    # queue never empties and interdepartures equal the service time exactly
    out = simulate_mg1(np.array([2.0, 2.0, 1000.0]), 20, np.random.default_rng(11))
    assert np.array_equal(out[:, 1:], np.full((20, 49), math.log(2.0)))
    assert np.all(out[:, 0] > math.log(2.0))


def test_mg1_parameter_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        simulate_mg1(np.array([5.0, 2.0, 0.2]), 5, rng)   # theta1 > theta2
    with pytest.raises(ValueError):
        simulate_mg1(np.array([-1.0, 2.0, 0.2]), 5, rng)  # negative service
    with pytest.raises(ValueError):
        simulate_mg1(np.array([1.0, 2.0, 0.0]), 5, rng)   # zero arrival rate
    with pytest.raises(ValueError):
        simulate_mg1(np.array([1.0, 2.0, 0.2]), 5, rng, formulation="exact")
    with pytest.raises(ValueError):
        simulate_mg1(np.array([1.0, 2.0, 0.2]), 0, rng)


# ---------------------------------------------------------------------------
# normal location
# ---------------------------------------------------------------------------

def test_normal_location_matches_shifted_noise():
    out = simulate_normal_location(1.3, 50, np.random.default_rng(8))
    noise = np.random.default_rng(8).standard_normal((50, 1))
    assert np.array_equal(out, 1.3 + noise)


def test_normal_location_accepts_vector_theta():
    a = simulate_normal_location(0.5, 10, np.random.default_rng(2))
    b = simulate_normal_location(np.array([0.5]), 10, np.random.default_rng(2))
    assert np.array_equal(a, b)


def test_normal_location_rejects_empty_batch():
    with pytest.raises(ValueError):
        simulate_normal_location(0.0, 0, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# Lorenz96
# ---------------------------------------------------------------------------

def test_lorenz96_rk4_step_fixed_point():
    # with sigma_e = 0, b0 = 2, b1 = 0.8 the constant state
    # c = (10 - 2) / 1.8 has exactly zero drift
    c = (10.0 - 2.0) / 1.8
    assert c == 4.444444444444445
    y = np.full((1, 8), c)
    stepped = lorenz96_rk4_step(y, 1.8, np.full((1, 8), 8.0), 1.0 / 30.0)
    assert np.array_equal(stepped, y)


def test_lorenz96_equilibrium_trajectory(monkeypatch):
    c = (10.0 - 2.0) / 1.8
    monkeypatch.setattr(sim, "LORENZ96_INITIAL_STATE", np.full(8, c))
    out = simulate_lorenz96(np.array([2.0, 0.8, 0.0, 0.0]), 3, np.random.default_rng(0))
    assert np.max(np.abs(out - c)) < 1e-6


def test_lorenz96_rk4_step_is_fourth_order():
    # halving the step size shrinks the one-step-vs-reference error ~2^4
    y0 = sim.LORENZ96_INITIAL_STATE[None, :]
    forcing = np.full((1, 8), 8.0)
    dt = 1.0 / 30.0

    def integrate(h, n):
        y = y0.copy()
        for _ in range(n):
            y = lorenz96_rk4_step(y, 1.8, forcing, h)
        return y

    ref = integrate(dt / 256.0, 256)
    e_full = np.linalg.norm(integrate(dt, 1) - ref)
    e_half = np.linalg.norm(integrate(dt / 2.0, 2) - ref)
    ratio = e_full / e_half
    assert 12.0 < ratio < 20.0
    assert_allclose(ratio, 16.847741012687926, rtol=1e-6)


def test_lorenz96_shapes_and_determinism():
    theta = np.array([2.0, 0.8, 1.7, 0.4])
    a = simulate_lorenz96(theta, 4, np.random.default_rng(1))
    b = simulate_lorenz96(theta, 4, np.random.default_rng(1))
    assert a.shape == (4, 8, 45)
    assert np.array_equal(a, b)
    assert lorenz96_statistics(a).shape == (4, 6)


def test_lorenz96_blowup_raises():
    with pytest.raises(SimulationError, match="blew up"):
        simulate_lorenz96(np.array([-1e8, 0.0, 0.0, 0.0]), 2, np.random.default_rng(0))


def test_lorenz96_rejects_empty_batch():
    with pytest.raises(ValueError):
        simulate_lorenz96(np.array([2.0, 0.8, 1.7, 0.4]), 0, np.random.default_rng(0))


def test_lorenz96_statistics_constant_series():
    vals = np.arange(1.0, 9.0)
    series = np.repeat(vals[:, None], 45, axis=1)
    stats = lorenz96_statistics(series)
    assert stats.shape == (6,)
    assert stats[0] == vals.mean()
    assert np.array_equal(stats[1:], np.zeros(5))


def test_lorenz96_statistics_loop_oracle():
    # explicit per-site loops over the six definitions
    rng = np.random.default_rng(77)
    series = rng.standard_normal((8, 45)).cumsum(axis=1)
    stats = lorenz96_statistics(series)
    K = series.shape[0]
    dev = series - series.mean(axis=1, keepdims=True)
    expect = np.zeros(6)
    for k in range(K):
        kp, km = (k + 1) % K, (k - 1) % K
        expect[0] += series[k].mean()
        expect[1] += np.mean(dev[k] ** 2)
        expect[2] += np.mean(dev[k, :-1] * dev[k, 1:])
        expect[3] += np.mean(dev[k] * dev[kp])
        expect[4] += np.mean(dev[k, :-1] * dev[kp, 1:])
        expect[5] += np.mean(dev[k, :-1] * dev[km, 1:])
    assert_allclose(stats, expect / K, rtol=1e-12)


def test_lorenz96_statistics_white_noise():
    series = np.random.default_rng(4).standard_normal((8, 20_000))
    stats = lorenz96_statistics(series)
    assert abs(stats[0]) < 0.02
    assert abs(stats[1] - 1.0) < 0.02
    assert np.max(np.abs(stats[2:])) < 0.02


def test_lorenz96_statistics_rejects_short_series():
    with pytest.raises(ValueError):
        lorenz96_statistics(np.zeros((8, 2)))


# ---------------------------------------------------------------------------
# boom-bust
# ---------------------------------------------------------------------------

def test_boom_bust_shape_dtype_determinism():
    theta = np.array([0.4, 50.0, 0.09, 0.05])
    a = simulate_boom_bust(theta, 6, np.random.default_rng(12))
    b = simulate_boom_bust(theta, 6, np.random.default_rng(12))
    assert a.shape == (6, 250)
    assert a.dtype == np.int64
    assert np.all(a >= 0)
    assert np.array_equal(a, b)


def test_boom_bust_matches_step_recursion():
    # replays the exact draw order: boom, bust, immigration, every step
    theta = np.array([0.4, 50.0, 0.09, 0.05])
    out = simulate_boom_bust(theta, 5, np.random.default_rng(31))
    rng = np.random.default_rng(31)
    r, kappa, alpha, beta_im = theta
    N = np.full(5, int(round(kappa / 2.0)), dtype=np.int64)
    expect = np.empty((5, 250), dtype=np.int64)
    for t in range(300):
        boom = rng.poisson(N * (1.0 + r))
        bust = rng.binomial(N, alpha)
        imm = rng.poisson(beta_im, size=5)
        N = np.where(N <= kappa, boom, bust) + imm
        if t >= 50:
            expect[:, t - 50] = N
    assert np.array_equal(out, expect)


def test_boom_bust_zero_carrying_capacity_is_extinct():
    out = simulate_boom_bust(np.array([0.0, 0.0, 0.5, 0.0]), 4, np.random.default_rng(1))
    assert np.all(out == 0)


def test_boom_bust_zero_survival_collapses():
    # alpha = 0 with no immigration: one bust (or one empty boom) absorbs at 0
    out = simulate_boom_bust(np.array([2.0, 10.0, 0.0, 0.0]), 20, np.random.default_rng(7))
    assert np.all(out[:, 100:] == 0)


def test_boom_bust_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        simulate_boom_bust(np.array([0.4, 50.0, 0.09, -0.1]), 5, rng)
    with pytest.raises(ValueError):
        simulate_boom_bust(np.array([0.4, 50.0, 0.09, 0.05]), 0, rng)


def test_boom_bust_statistics_constant_series():
    stats = boom_bust_statistics(np.full(250, 7))
    expect = np.array([7.0, 0, 0, 0, 0, 0, 0, 0, 1.0, 0, 0, 0])
    assert np.array_equal(stats, expect)


def test_boom_bust_statistics_arithmetic_series():
    stats = boom_bust_statistics(np.arange(1.0, 251.0))
    assert np.array_equal(stats[4:8], np.array([1.0, 0.0, 0.0, 0.0]))


def test_boom_bust_statistics_loop_oracle():
    rng = np.random.default_rng(19)
    series = rng.poisson(5.0, size=250).astype(float)
    series[::17] = 0.0  # exercise the ratio drop rule

    def moments(x):
        n = len(x)
        mean = sum(x) / n
        m2 = sum((v - mean) ** 2 for v in x) / n
        if m2 == 0.0:
            return [mean, 0.0, 0.0, 0.0]
        m3 = sum((v - mean) ** 3 for v in x) / n
        m4 = sum((v - mean) ** 4 for v in x) / n
        return [mean, m2, m3 / m2 ** 1.5, m4 / m2 ** 2]

    ratios = [series[i + 1] / series[i] for i in range(249) if series[i] > 0]
    expect = moments(list(series)) + moments(list(np.diff(series))) + moments(ratios)
    assert_allclose(boom_bust_statistics(series), expect, rtol=1e-10)


def test_boom_bust_statistics_all_ratios_dropped():
    series = np.array([0.0] * 249 + [5.0])
    stats = boom_bust_statistics(series)
    assert np.array_equal(stats[8:], np.zeros(4))


def test_boom_bust_statistics_batch_and_validation():
    batch = np.random.default_rng(2).poisson(5.0, size=(3, 250))
    assert boom_bust_statistics(batch).shape == (3, 12)
    with pytest.raises(ValueError):
        boom_bust_statistics(np.array([1.0, 2.0, 3.0]))


# ---------------------------------------------------------------------------
# priors
# ---------------------------------------------------------------------------

def test_uniform_prior_sampling_and_density():
    prior = get_model("uni_gk").prior
    rng = np.random.default_rng(23)
    draws = np.array([prior.sample(rng) for _ in range(1000)])
    assert draws.shape == (1000, 4)
    assert np.all(draws > 0.0) and np.all(draws < 4.0)
    assert_allclose(prior.log_density(np.array([1.0, 2.0, 3.0, 0.5])),
                    -4.0 * math.log(4.0), rtol=1e-14)
    assert prior.log_density(np.array([1.0, 2.0, 3.0, 4.5])) == -math.inf
    assert prior.log_density(np.array([0.0, 2.0, 3.0, 0.5])) == -math.inf


def test_gaussian_prior_density():
    prior = Prior((Gaussian(0.0, 1.0),))
    assert_allclose(prior.log_density(np.array([0.7])), norm.logpdf(0.7), rtol=1e-12)
    assert prior.contains(np.array([100.0]))


def test_ma2_triangle_constraint():
    prior = get_model("ma2").prior
    rng = np.random.default_rng(29)
    for _ in range(1000):
        t1, t2 = prior.sample(rng)
        assert -1.0 < t2 < 1.0 and t1 + t2 > -1.0 and t1 - t2 < 1.0
    assert_allclose(prior.log_density(np.array([0.0, 0.5])), -math.log(8.0), rtol=1e-14)
    # inside the box but outside the triangle
    assert prior.log_density(np.array([1.8, 0.5])) == -math.inf


def test_prior_dimension_mismatch():
    prior = Prior((Uniform(0, 1), Uniform(0, 1)))
    with pytest.raises(ValueError):
        prior.log_density(np.array([0.5]))


def test_prior_validation():
    with pytest.raises(ValueError):
        Uniform(2.0, 2.0)
    with pytest.raises(ValueError):
        Gaussian(0.0, 0.0)


# ---------------------------------------------------------------------------
# contamination
# ---------------------------------------------------------------------------

def test_generate_observations_clean():
    model = get_model("uni_gk")
    theta = np.array([3.0, 1.5, 0.5, 1.5])
    spec = ContaminationSpec(theta_star=theta, n=25)
    data = generate_observations(spec, model, np.random.default_rng(40))
    assert np.array_equal(data, model.simulate(theta, 25, np.random.default_rng(40)))


def test_generate_observations_normal_outliers_layout():
    # floor(0.1 * 100) = 10 outliers appended after the 90 clean draws
    model = get_model("normal_location")
    spec = ContaminationSpec(theta_star=np.array([0.0]), n=100, epsilon=0.1,
                             outlier_source=NormalOutliers(z=10.0))
    data = generate_observations(spec, model, np.random.default_rng(41))
    rng = np.random.default_rng(41)
    clean = model.simulate(np.array([0.0]), 90, rng)
    outliers = 10.0 + rng.standard_normal((10, 1))
    assert data.shape == (100, 1)
    assert np.array_equal(data[:90], clean)
    assert np.array_equal(data[90:], outliers)


def test_generate_observations_param_outliers():
    # floor(0.2 * 10) = 2 outlier draws from the alternative parameter
    model = get_model("uni_gk")
    theta = np.array([3.0, 1.5, 0.5, 1.5])
    theta_out = np.array([20.0, 1.0, 0.0, 0.0])
    spec = ContaminationSpec(theta_star=theta, n=10, epsilon=0.2,
                             outlier_source=ParamOutliers(theta_out=theta_out))
    data = generate_observations(spec, model, np.random.default_rng(43))
    rng = np.random.default_rng(43)
    clean = model.simulate(theta, 8, rng)
    outliers = model.simulate(theta_out, 2, rng)
    assert np.array_equal(data, np.vstack([clean, outliers]))


def test_generate_observations_all_cauchy():
    model = get_model("uni_gk")
    spec = ContaminationSpec(theta_star=np.array([3.0, 1.5, 0.5, 1.5]), n=12,
                             epsilon=1.0, outlier_source=CauchyOutliers())
    data = generate_observations(spec, model, np.random.default_rng(44))
    assert np.array_equal(data, np.random.default_rng(44).standard_cauchy((12, 1)))


def test_generate_observations_fraction_floors_to_zero():
    model = get_model("normal_location")
    spec = ContaminationSpec(theta_star=np.array([0.0]), n=9, epsilon=0.09,
                             outlier_source=NormalOutliers(z=10.0))
    data = generate_observations(spec, model, np.random.default_rng(45))
    assert np.array_equal(data, model.simulate(np.array([0.0]), 9,
                                               np.random.default_rng(45)))


def test_contamination_spec_validation():
    theta = np.array([0.0])
    with pytest.raises(ValueError):
        ContaminationSpec(theta_star=theta, n=10, epsilon=1.5,
                          outlier_source=NormalOutliers(10.0))
    with pytest.raises(ValueError):
        ContaminationSpec(theta_star=theta, n=10, epsilon=0.1)
    with pytest.raises(ValueError):
        ContaminationSpec(theta_star=theta, n=0)


# ---------------------------------------------------------------------------
# model registry
# ---------------------------------------------------------------------------

def test_registry_names():
    assert MODEL_NAMES == ("boom_bust", "lorenz96", "ma2", "mg1", "multi_gk",
                           "normal_location", "uni_gk")
    with pytest.raises(ValueError, match="unknown model"):
        get_model("mg2")


def test_registry_output_dims_and_determinism():
    for name in MODEL_NAMES:
        model = get_model(name)
        theta = model.prior.sample(np.random.default_rng(50))
        a = model.simulate(theta, 3, np.random.default_rng(51))
        b = model.simulate(theta, 3, np.random.default_rng(51))
        assert a.shape == (3, model.output_dim), name
        assert np.array_equal(a, b), name
        assert model.theta_dim == len(model.theta_names)


def test_mg1_model_uses_range_parametrization():
    # model coordinates (min, range, rate) map to service Uniform(min, min+range)
    model = get_model("mg1")
    out = model.simulate(np.array([1.0, 4.0, 0.2]), 6, np.random.default_rng(52))
    direct = simulate_mg1(np.array([1.0, 5.0, 0.2]), 6, np.random.default_rng(52))
    assert np.array_equal(out, direct)


def test_time_series_models_expose_raw_interface():
    lorenz = get_model("lorenz96")
    raw = lorenz.raw_simulate(np.array([2.0, 0.8, 1.7, 0.4]), 2, np.random.default_rng(53))
    assert raw.shape == (2, 8, 45)
    assert_allclose(lorenz.statistics(raw),
                    lorenz.simulate(np.array([2.0, 0.8, 1.7, 0.4]), 2,
                                    np.random.default_rng(53)), rtol=1e-12)
    boom = get_model("boom_bust")
    raw = boom.raw_simulate(np.array([0.4, 50.0, 0.09, 0.05]), 2, np.random.default_rng(54))
    assert raw.shape == (2, 250)
    assert get_model("uni_gk").raw_simulate is None
