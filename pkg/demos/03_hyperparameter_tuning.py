"""
Tuning the kernel bandwidth and the posterior weight
====================================================

Two free knobs sit in front of every scoring-rule posterior: the Gaussian
kernel needs a bandwidth gamma, and the posterior itself needs a weight w
multiplying the summed score in the exponent. Neither has a canonical value,
but both have workable data-driven heuristics, implemented in
estimate_bandwidth and estimate_w. This script runs them on the univariate
g-and-k model.
"""

import numpy as np

from srbayes import (
    DawidSebastianiConfig,
    EnergyScoreConfig,
    GaussianKernel,
    KernelScoreConfig,
    estimate_bandwidth,
    estimate_w,
    get_model,
    simulate_gk,
)

model = get_model("uni_gk")
theta_star = np.array([3.0, 1.5, 0.5, 1.5])

# ---------------------------------------------------------------------------
# Bandwidth: median pairwise distance under the prior predictive
# ---------------------------------------------------------------------------
# A kernel with gamma far from the data scale is useless: too small and every
# pair of points looks infinitely far apart, too large and everything looks
# identical. The heuristic simulates batches at prior draws, takes the median
# pairwise euclidean distance within each batch, and then the median of those
# medians. That lands gamma right at the typical spread of the model output.

rng = np.random.default_rng(55)
gamma = estimate_bandwidth(model, m_gamma=500, m_theta_gamma=1000, rng=rng)
print("estimated bandwidth gamma:", round(gamma, 4))

# Cheaper settings move the answer only a little; the median is forgiving.
for m_gamma, m_theta in ((100, 200), (300, 500), (500, 1000)):
    g = estimate_bandwidth(model, m_gamma=m_gamma, m_theta_gamma=m_theta,
                           rng=np.random.default_rng(55))
    print(f"  m_gamma={m_gamma:<4d} m_theta_gamma={m_theta:<5d} -> gamma = {g:.4f}")

# ---------------------------------------------------------------------------
# Weight: calibrate against a reference rule
# ---------------------------------------------------------------------------
# The weight w controls how much one observation moves the posterior. The
# heuristic pins the target rule to a reference whose natural scale is
# already likelihood-like (the Dawid-Sebastiani score by default): draw
# pairs of prior parameters, compute the score difference between the pair
# under both rules, and take the median ratio
#
#     w = median  [sum_i S_ref(a, y_i) - S_ref(b, y_i)]
#                 / [sum_i S(a, y_i) - S(b, y_i)]
#
# so that a typical swing in the target score changes the posterior about as
# much as the same swing in the reference.

data = simulate_gk(theta_star, 1, np.random.default_rng(2))
print("\nsingle observation y =", round(float(data[0, 0]), 4))

report_k = estimate_w(model, data, KernelScoreConfig(GaussianKernel(gamma)),
                      n_pairs=100, m=500, rng=np.random.default_rng(1))
print("\nkernel-score weight:")
print("  w        :", round(report_k.w, 3))
print("  n_used   :", report_k.n_used, " n_dropped:", report_k.n_dropped)
print("  ratio quartiles:", np.round(np.percentile(report_k.ratios, [25, 50, 75]), 2))

report_e = estimate_w(model, data, EnergyScoreConfig(),
                      n_pairs=100, m=500, rng=np.random.default_rng(1))
print("energy-score weight:")
print("  w        :", round(report_e.w, 3))
print("  n_used   :", report_e.n_used, " n_dropped:", report_e.n_dropped)
print("  ratio quartiles:", np.round(np.percentile(report_e.ratios, [25, 50, 75]), 2))

# The kernel score is bounded, so each observation carries less raw signal
# than the energy score does; its calibrated weight comes out one to two
# orders of magnitude larger. That ordering is the main thing to take away,
# the exact numbers wobble with the seed and the observation.

for seed in (1, 2, 5):
    rk = estimate_w(model, data, KernelScoreConfig(GaussianKernel(gamma)),
                    n_pairs=100, m=500, rng=np.random.default_rng(seed))
    re = estimate_w(model, data, EnergyScoreConfig(),
                    n_pairs=100, m=500, rng=np.random.default_rng(seed))
    print(f"  seed {seed}: w_kernel = {rk.w:6.2f}   w_energy = {re.w:5.3f}")

# Treat the output as a starting point, not gospel. The raw reference-
# difference convention used here tends to sit above hand-tuned weights (the
# full-scale recipes in demos/configs/ pin explicit w values for exactly
# this reason), and a posterior that is too concentrated or too flat is the
# sign to move w down or up.

# ---------------------------------------------------------------------------
# Sanity property: calibrating a rule against itself gives w = 1
# ---------------------------------------------------------------------------
# Every numerator equals its denominator, so all ratios are exactly one.

self_cal = estimate_w(model, data, DawidSebastianiConfig(),
                      reference=DawidSebastianiConfig(),
                      n_pairs=20, m=200, rng=np.random.default_rng(3))
print("\nself-calibration w:", self_cal.w,
      "(all ratios == 1:", bool(np.all(self_cal.ratios == 1.0)), ")")
