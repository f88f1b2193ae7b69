"""
Config-driven experiments and the artifact layout
=================================================

Everything the earlier scripts did by hand (generate data, tune, sample,
summarize, predictive-check) is packaged behind one JSON config and one
call: run_experiment. This is what the srbayes command-line tool drives,
and what makes a run reproducible: the config plus one master seed pins
every random decision, and the output directory records everything needed
for exact replay.
"""

import json
import os
import tempfile

import numpy as np

from srbayes import (
    apply_override,
    parse_config_dict,
    read_observations_csv,
    run_experiment,
    run_sweep,
)

workdir = tempfile.mkdtemp(prefix="srbayes_runs_")

# ---------------------------------------------------------------------------
# A complete experiment in one dictionary
# ---------------------------------------------------------------------------
# Keys mirror the pipeline stages. Only model, data, scoring, and chain are
# required; tuning, predictive, and sweep have sensible defaults. Unknown
# keys anywhere are rejected loudly, so typos cannot silently change a run.

raw = {
    "model": "normal_location",
    "data": {"theta_star": [1.0], "n": 25},
    "scoring": {"rule": "energy"},
    "chain": {
        "steps": 1200, "burn_in": 400, "thinning": 2,
        "w": 1.0, "m": 100, "G": 20,
        "proposal": {"kind": "diagonal", "sigma": 0.6},
    },
    "predictive": {"enabled": True, "subsample": 200},
    "out": os.path.join(workdir, "demo_run"),
    "master_seed": 20240817,
}

cfg = parse_config_dict(raw)
result = run_experiment(cfg)

print("artifacts in", cfg.out)
for name in sorted(os.listdir(cfg.out)):
    print("  ", name)

# ---------------------------------------------------------------------------
# What the artifacts hold
# ---------------------------------------------------------------------------
# observations.csv is the exact dataset used (one row per observation, full
# float precision, re-ingestable through data.path). trace.csv holds the
# retained draws. summary.json has the posterior moments; predictive.json
# the predictive check; metadata.json echoes the resolved config and all
# derived child seeds, which is what exact replay needs.

with open(os.path.join(cfg.out, "summary.json")) as fh:
    summary = json.load(fh)
print("\nposterior mean:", np.round(summary["mean"], 4),
      " sd:", np.round(summary["sd"], 4),
      " acceptance:", round(summary["acceptance_rate"], 3))

with open(os.path.join(cfg.out, "metadata.json")) as fh:
    meta = json.load(fh)
print("child seeds:", meta["seeds"])

obs = read_observations_csv(os.path.join(cfg.out, "observations.csv"),
                            expected_dim=1)
print("observations round-trip:", obs.shape, "mean", round(float(obs.mean()), 4))

# Replay: the same config into a fresh directory gives identical artifacts.
cfg2 = parse_config_dict({**raw, "out": os.path.join(workdir, "demo_run_replay")})
run_experiment(cfg2)
same = all(
    open(os.path.join(cfg.out, f), "rb").read()
    == open(os.path.join(cfg2.out, f), "rb").read()
    for f in ("observations.csv", "trace.csv", "summary.json")
)
print("replay byte-identical:", same)

# ---------------------------------------------------------------------------
# Overrides
# ---------------------------------------------------------------------------
# apply_override edits one dotted path in a raw config dict; the CLI exposes
# the same thing as --override key=value. Handy for seed studies and quick
# what-ifs without duplicating config files.

raw_hot = json.loads(json.dumps(raw))
apply_override(raw_hot, "chain.w", 2.0)
apply_override(raw_hot, "data.n", 50)
print("\noverridden: chain.w ->", raw_hot["chain"]["w"],
      ", data.n ->", raw_hot["data"]["n"])

# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------
# A sweep block runs the same experiment once per value of a single dotted
# key, each in its own subdirectory, and collects a one-row-per-value
# summary. Sweeping the simulation count m is the classic use: it shows
# directly how cheap a pseudo-marginal chain can get before mixing degrades.

raw_sweep = {**json.loads(json.dumps(raw)),
             "out": os.path.join(workdir, "m_sweep"),
             "sweep": {"key": "chain.m", "values": [4, 100, 400]}}
raw_sweep["chain"]["G"] = 4
results = run_sweep(parse_config_dict(raw_sweep))

print("\nsweep directories:")
for name in sorted(os.listdir(raw_sweep["out"])):
    print("  ", name)
with open(os.path.join(raw_sweep["out"], "sweep_summary.csv")) as fh:
    print(fh.read(), end="")

# The noise in a m=4 score estimate depresses acceptance and inflates the
# sampled posterior (largest cov_trace). By m=100 acceptance has recovered
# and most of the extra width is gone; quadrupling the budget again only
# shaves the remainder. Picking m at the knee of this curve is the standard
# tradeoff.

# ---------------------------------------------------------------------------
# The same pipeline from the shell
# ---------------------------------------------------------------------------
# Every stage of this script maps onto a srbayes subcommand, and all of
# them read the same config format:
#
#   srbayes simulate              --config cfg.json --out runs/demo
#   srbayes generate-observations --config cfg.json --out runs/demo
#   srbayes tune-w                --config cfg.json --out runs/demo
#   srbayes tune-bandwidth        --config cfg.json --out runs/demo
#   srbayes sample                --config cfg.json --out runs/demo
#   srbayes predictive-check      --config cfg.json --out runs/demo
#   srbayes sweep                 --config sweep.json
#
# plus --seed to replace the master seed and --override key=value (repeat
# as needed) for the dotted-path edits shown above. predictive-check reuses
# the trace that sample left in the output directory. Full-scale example
# configs live in demos/configs/.
