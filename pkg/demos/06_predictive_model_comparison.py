"""
Posterior predictive checks and per-timestep comparison
=======================================================

Once two different posteriors exist for the same model, "which one explains
the data better" is answered by scoring their posterior predictive samples
against held-out clean observations. Two tools cover this:

* posterior_predictive_scores pools one simulation per retained draw and
  reports the total energy and kernel scores of that pooled sample.
* per_timestep_score_diff breaks a comparison down coordinate by
  coordinate, which for time-series models means timestep by timestep.

Neither needs anything from a trace beyond the retained samples, so for
this demo we build the traces directly: one cloud of parameters centered on
the truth, one centered well away from it. Chapter 04 and 05 show how real
traces are produced; the point here is the diagnostics.
"""

import os
import tempfile

import numpy as np

from srbayes import (
    ChainTrace,
    ContaminationSpec,
    GaussianKernel,
    generate_observations,
    get_model,
    per_timestep_score_diff,
    posterior_predictive_scores,
    simulate_ma2,
    write_timestep_diff_csv,
)

model = get_model("ma2")
theta_star = np.array([0.6, 0.2])
theta_off = np.array([1.5, 0.8])  # still inside the triangular prior region

# Held-out clean data: 30 series from the truth.
clean = generate_observations(
    ContaminationSpec(theta_star=theta_star, n=30), model,
    np.random.default_rng(99))


def cloud_trace(center, spread, size, seed):
    """A stand-in for MCMC output: retained draws scattered around center."""
    rng = np.random.default_rng(seed)
    samples = center + spread * rng.standard_normal((size, 2))
    return ChainTrace(samples=samples, accepted=size, proposed=size,
                      per_step_scores=np.zeros(size),
                      log_targets=np.zeros(size),
                      accepted_flags=np.ones(size, dtype=bool),
                      theta_names=model.theta_names)


trace_good = cloud_trace(theta_star, 0.05, 400, seed=1)
trace_off = cloud_trace(theta_off, 0.05, 400, seed=2)

# ---------------------------------------------------------------------------
# Pooled predictive scores
# ---------------------------------------------------------------------------
# One simulation per retained parameter, scored in aggregate against the 30
# clean series. Lower is better for both rules.

rep_good = posterior_predictive_scores(trace_good, model, clean,
                                       rng=np.random.default_rng(3))
rep_off = posterior_predictive_scores(trace_off, model, clean,
                                      rng=np.random.default_rng(4))

print("pooled predictive scores against clean data (lower is better):")
print(f"  cloud at truth : energy {rep_good.energy:9.3f}   "
      f"kernel {rep_good.kernel:8.3f}   ({rep_good.n_draws} draws)")
print(f"  cloud off truth: energy {rep_off.energy:9.3f}   "
      f"kernel {rep_off.kernel:8.3f}   ({rep_off.n_draws} draws)")

# A word of caution on the kernel column above: with kernel=None each report
# derives its own bandwidth (the median pairwise distance inside its own
# predictive sample), so those two kernel numbers are on different scales.
# The energy column is always comparable. To compare kernel scores across
# posteriors, pin one bandwidth for both:
kern = GaussianKernel(12.77)
rep_good_k = posterior_predictive_scores(trace_good, model, clean, kernel=kern,
                                         rng=np.random.default_rng(3))
rep_off_k = posterior_predictive_scores(trace_off, model, clean, kernel=kern,
                                        rng=np.random.default_rng(4))
print(f"  shared bandwidth 12.77: kernel {rep_good_k.kernel:.3f} (truth) "
      f"vs {rep_off_k.kernel:.3f} (off)")

# ---------------------------------------------------------------------------
# Where in the series do they differ?
# ---------------------------------------------------------------------------
# Per-timestep differences: score both predictive samples at each of the 50
# timesteps separately and subtract. Positive entries favor sample a (the
# truth-centered cloud here), for the energy rule in column 0 and the kernel
# rule in column 1.

pred_a = simulate_ma2(theta_star, 500, np.random.default_rng(5))
pred_b = simulate_ma2(theta_off, 500, np.random.default_rng(6))
diff = per_timestep_score_diff(pred_a, pred_b, clean, GaussianKernel(2.0))

print(f"\nper-timestep diff array: {diff.shape}")
print("timesteps favoring the truth cloud (of 50):",
      f"energy {int((diff[:, 0] > 0).sum())}, kernel {int((diff[:, 1] > 0).sum())}")
print("mean advantage per step: energy "
      f"{diff[:, 0].mean():.4f}, kernel {diff[:, 1].mean():.4f}")

# Two things worth noticing. The advantage is spread across the series
# rather than localized, because an MA(2) is stationary after its two-step
# startup; step 0 is the lone exception, since x_1 = e_1 has unit variance
# under any parameters and offers nothing to distinguish. And the advantage
# comes entirely from the per-step marginal spread (the off parameters pump
# the variance up to 1 + t1^2 + t2^2 = 3.89 versus 1.40 at the truth); a
# per-coordinate check is blind to dependence between steps, which is what
# the pooled check above covers.
print("first five rows:")
print(np.round(diff[:5], 4))

# The CSV writer puts this in a spreadsheet-friendly shape.
out = os.path.join(tempfile.mkdtemp(prefix="srbayes_demo_"), "timestep_diff.csv")
write_timestep_diff_csv(diff, out)
with open(out) as fh:
    head = [next(fh) for _ in range(3)]
print("\nwrote", out)
print("".join(head), end="")
