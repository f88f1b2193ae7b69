"""
Outlier-robust inference on the normal location model
======================================================

The normal location model (y ~ N(theta, 1), prior theta ~ N(0, 1)) is the
one benchmark where the exact Bayesian answer is available: the posterior
after n observations is N(n ybar / (n + 1), 1 / (n + 1)). That makes it the
cleanest place to watch a scoring-rule posterior do something standard Bayes
cannot: ignore outliers.

We contaminate 10% of the data with draws from N(10, 1) and compare the
conjugate posterior against a kernel-score posterior sampled with the
correlated pseudo-marginal chain.
"""

import numpy as np

from srbayes import (
    ChainConfig,
    ContaminationSpec,
    DiagonalNormal,
    GaussianKernel,
    KernelScoreConfig,
    NormalOutliers,
    chain_summary,
    derive_transform,
    generate_observations,
    get_model,
    run_chain,
)

model = get_model("normal_location")
n = 100

# ---------------------------------------------------------------------------
# Contaminated data
# ---------------------------------------------------------------------------
# 90 observations from theta = 1, 10 from N(10, 1).

spec = ContaminationSpec(theta_star=np.array([1.0]), n=n, epsilon=0.1,
                         outlier_source=NormalOutliers(z=10.0))
data = generate_observations(spec, model, np.random.default_rng(42))
ybar = float(data.mean())
print(f"{n} observations, sample mean {ybar:.3f} "
      f"(the clean 90 average {data[:90].mean():.3f})")

# Standard Bayes has no defense: the posterior mean is n ybar / (n + 1),
# and ybar has been dragged toward the outliers.
conj_mean = n * ybar / (n + 1)
conj_sd = 1.0 / np.sqrt(n + 1)
print(f"conjugate posterior: N({conj_mean:.3f}, {conj_sd:.4f}^2)")

# ---------------------------------------------------------------------------
# Kernel-score posterior
# ---------------------------------------------------------------------------
# The Gaussian kernel saturates, so an observation ten units away can only
# shift the total score by a bounded amount no matter how far it sits. The
# weight w = 2.8 and bandwidth gamma = 0.9566 are calibrated so that, on
# clean data, this posterior roughly matches the spread of the conjugate
# one; everything interesting here is therefore attributable to robustness,
# not to a flatter posterior.

cfg = ChainConfig(steps=8000, burn_in=2000, thinning=1,
                  w=2.8, m=500, G=50,
                  proposal=DiagonalNormal(1.0),
                  transform=derive_transform(model.prior),
                  scoring=KernelScoreConfig(GaussianKernel(0.9566)),
                  master_seed=4242)
trace = run_chain(model, data, cfg)
summary = chain_summary(trace)

post_mean = float(summary.mean[0])
post_sd = float(summary.sd[0])
print(f"\nkernel-score posterior: mean {post_mean:.3f}, sd {post_sd:.4f}")
print(f"acceptance rate {summary.acceptance_rate:.3f} over "
      f"{trace.proposed} proposals, {trace.samples.shape[0]} retained draws")

# ---------------------------------------------------------------------------
# Side by side
# ---------------------------------------------------------------------------

print("\n                     mean    sd      |mean - 1|")
print(f"conjugate (contam.)  {conj_mean:5.3f}   {conj_sd:.4f}  {abs(conj_mean - 1):.3f}")
print(f"kernel score         {post_mean:5.3f}   {post_sd:.4f}  {abs(post_mean - 1):.3f}")

# The ten outliers drag the conjugate mean most of a unit off the truth;
# the kernel-score posterior stays within a few hundredths of it. Pushing z
# further out would not change the kernel result: the score contribution of
# an outlier is already saturated.

# For calibration, the conjugate answer on the clean 90 observations alone:
clean_mean = 90 * data[:90].mean() / 91
print(f"conjugate (clean 90) {clean_mean:5.3f}   {1 / np.sqrt(91):.4f}  "
      f"{abs(clean_mean - 1):.3f}")
