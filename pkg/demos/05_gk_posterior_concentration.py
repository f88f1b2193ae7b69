"""
Posterior concentration on the g-and-k model
============================================

A strictly proper scoring rule identifies the data-generating parameter:
as the number of observations n grows, the scoring-rule posterior should
tighten around the truth. The univariate g-and-k model is the standard
stress test because its likelihood is intractable while simulation is one
line of code.

We run the energy-score posterior at n = 10 and n = 60 observations and
watch the marginal standard deviations shrink. The chains here are kept
deliberately short so the script finishes in about a minute; the full-length
settings live in demos/configs/uni_gk_energy_full.json.
"""

import numpy as np

from srbayes import (
    ChainConfig,
    ContaminationSpec,
    DiagonalNormal,
    EnergyScoreConfig,
    chain_summary,
    derive_transform,
    generate_observations,
    get_model,
    run_chain,
)

model = get_model("uni_gk")
theta_star = np.array([3.0, 1.5, 0.5, 1.5])
print("true parameters:",
      ", ".join(f"{n}={v}" for n, v in zip(model.theta_names, theta_star)))

# ---------------------------------------------------------------------------
# Two datasets, one chain configuration
# ---------------------------------------------------------------------------
# Same generator seed for both sizes, so the small dataset is a prefix of
# the large one and the comparison is as paired as it can be. The proposal
# scale is the one knob retuned per dataset: tighter posteriors need smaller
# steps to keep acceptance workable.

data_by_n = {
    n: generate_observations(
        ContaminationSpec(theta_star=theta_star, n=n), model,
        np.random.default_rng(123))
    for n in (10, 60)
}
sigma_by_n = {10: 0.8, 60: 0.35}

summaries = {}
for n, data in data_by_n.items():
    cfg = ChainConfig(steps=5000, burn_in=1500, thinning=1,
                      w=0.35, m=200, G=200,
                      proposal=DiagonalNormal(sigma_by_n[n]),
                      transform=derive_transform(model.prior),
                      scoring=EnergyScoreConfig(),
                      master_seed=1000 + n)
    trace = run_chain(model, data, cfg)
    summaries[n] = chain_summary(trace)
    print(f"\nn = {n:3d}: acceptance {summaries[n].acceptance_rate:.3f}, "
          f"{summaries[n].n_samples} retained draws")
    for name, mu, sd in zip(model.theta_names, summaries[n].mean, summaries[n].sd):
        print(f"  {name}: mean {mu:6.3f}  sd {sd:.3f}")

# ---------------------------------------------------------------------------
# Concentration
# ---------------------------------------------------------------------------

print("\nmarginal sd, n=10 -> n=60:")
for i, name in enumerate(model.theta_names):
    s10 = summaries[10].sd[i]
    s60 = summaries[60].sd[i]
    print(f"  {name}: {s10:.3f} -> {s60:.3f}   (ratio {s60 / s10:.2f})")

print("\nposterior covariance trace: "
      f"{summaries[10].cov_trace:.3f} -> {summaries[60].cov_trace:.3f}")

# Every marginal tightens, most visibly for the location A and scale B. The
# skewness g is the stubborn one; the score is least sensitive to it at
# this sample size, so expect its interval to shrink last. With the
# full-length run (110000 steps, m = 500, n up to 100) the same pattern
# continues and the means settle on the truth.
