"""Command-line interface.

Every command reads one JSON experiment config (see ``experiments``) and
shares four flags::

    srbayes <command> --config cfg.json [--seed U64] [--out DIR]
                      [--override key=value ...]

``--seed`` replaces ``master_seed``, ``--out`` replaces ``out``, and each
``--override`` sets one dotted config key, with the value parsed as JSON
when possible (``--override chain.m=1000 --override scoring.rule=kernel``).

Commands: ``simulate`` (draws from the model at theta_star),
``generate-observations`` (writes the dataset with any contamination),
``tune-w`` / ``tune-bandwidth`` (hyperparameter heuristics, JSON reports),
``sample`` (the full pipeline), ``predictive-check`` (scores an existing
trace), ``sweep`` (one run per swept value plus a summary CSV).

Exit codes: 0 success, 1 invalid config or usage, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .diagnostics import posterior_predictive_scores, write_json
from .experiments import (ConfigError, ExperimentConfig, _child_seeds,
                          apply_override, clean_subset, parse_config_dict,
                          read_observations_csv, run_experiment, run_sweep,
                          write_observations_csv)
from .mcmc import read_trace_csv
from .scoring import GaussianKernel
from .simulators import ContaminationSpec, generate_observations, get_model
from .tuning import estimate_bandwidth, estimate_w

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the contract reserves 1 for that."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_override(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} must look like key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _load_config(args) -> ExperimentConfig:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    for item in args.override:
        key, value = _parse_override(item)
        apply_override(raw, key, value)
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.out is not None:
        raw["out"] = args.out
    return parse_config_dict(raw)


def _require_out(cfg: ExperimentConfig) -> str:
    if not cfg.out:
        raise ConfigError("no output directory: set config field 'out' or pass --out")
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def _dataset(cfg: ExperimentConfig, model, seeds) -> np.ndarray:
    if cfg.data.path is not None:
        return read_observations_csv(cfg.data.path, model.output_dim)
    spec = ContaminationSpec(
        theta_star=np.asarray(cfg.data.theta_star, dtype=float),
        n=cfg.data.n,
        epsilon=cfg.data.epsilon,
        outlier_source=None if cfg.data.outliers is None else cfg.data.outliers.build(),
    )
    return generate_observations(spec, model, np.random.default_rng(seeds["data"]))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_simulate(cfg: ExperimentConfig) -> None:
    out = _require_out(cfg)
    model = get_model(cfg.model)
    if cfg.data.theta_star is None:
        raise ConfigError("config field 'data.theta_star' is required for simulate")
    theta = np.asarray(cfg.data.theta_star, dtype=float)
    batch = model.simulate(theta, cfg.chain.m, np.random.default_rng(cfg.master_seed))
    path = os.path.join(out, "simulations.csv")
    write_observations_csv(batch, path)
    print(f"wrote {batch.shape[0]} simulations to {path}")


def _cmd_generate_observations(cfg: ExperimentConfig) -> None:
    out = _require_out(cfg)
    model = get_model(cfg.model)
    data = _dataset(cfg, model, _child_seeds(cfg.master_seed))
    path = os.path.join(out, "observations.csv")
    write_observations_csv(data, path)
    print(f"wrote {data.shape[0]} observations to {path}")


def _cmd_tune_w(cfg: ExperimentConfig) -> None:
    out = _require_out(cfg)
    model = get_model(cfg.model)
    seeds = _child_seeds(cfg.master_seed)
    data = _dataset(cfg, model, seeds)
    rng = np.random.default_rng(seeds["tuning"])
    tuning_m = cfg.tuning.m if cfg.tuning.m is not None else cfg.chain.m
    gamma = cfg.scoring.gamma if cfg.scoring.rule == "kernel" else None
    if cfg.tuning.tune_bandwidth or (cfg.scoring.rule == "kernel" and gamma is None):
        gamma = estimate_bandwidth(model, m_gamma=tuning_m,
                                   m_theta_gamma=cfg.tuning.m_theta_gamma, rng=rng)
    report = estimate_w(model, data, cfg.scoring.build(gamma=gamma),
                        n_pairs=cfg.tuning.n_pairs, m=tuning_m, rng=rng)
    path = os.path.join(out, "tuning_w.json")
    write_json({"w": report.w, "n_used": report.n_used, "n_dropped": report.n_dropped,
                "ratios": report.ratios.tolist(), "gamma": gamma}, path)
    print(f"w = {report.w:.6g} ({report.n_used} pairs used, "
          f"{report.n_dropped} dropped); wrote {path}")


def _cmd_tune_bandwidth(cfg: ExperimentConfig) -> None:
    out = _require_out(cfg)
    model = get_model(cfg.model)
    seeds = _child_seeds(cfg.master_seed)
    tuning_m = cfg.tuning.m if cfg.tuning.m is not None else cfg.chain.m
    gamma = estimate_bandwidth(model, m_gamma=tuning_m,
                               m_theta_gamma=cfg.tuning.m_theta_gamma,
                               rng=np.random.default_rng(seeds["tuning"]))
    path = os.path.join(out, "tuning_bandwidth.json")
    write_json({"gamma": gamma, "m_gamma": tuning_m,
                "m_theta_gamma": cfg.tuning.m_theta_gamma}, path)
    print(f"gamma = {gamma:.6g}; wrote {path}")


def _cmd_sample(cfg: ExperimentConfig) -> None:
    result = run_experiment(cfg)
    s = result.summary
    means = ", ".join(f"{n}={v:.4g}" for n, v in zip(s.theta_names, s.mean))
    print(f"chain done: acceptance {s.acceptance_rate:.3f}, "
          f"{s.n_samples} retained samples")
    print(f"posterior means: {means}")
    print(f"artifacts in {result.out_dir}")


def _cmd_predictive_check(cfg: ExperimentConfig) -> None:
    out = _require_out(cfg)
    model = get_model(cfg.model)
    trace_path = os.path.join(out, "trace.csv")
    if not os.path.exists(trace_path):
        raise ConfigError(f"no trace at {trace_path}; run the sample command first")
    trace = read_trace_csv(trace_path)
    obs_path = cfg.data.path or os.path.join(out, "observations.csv")
    if not os.path.exists(obs_path):
        raise ConfigError(f"no observations at {obs_path}")
    data = read_observations_csv(obs_path, model.output_dim)
    seeds = _child_seeds(cfg.master_seed)
    pred_gamma = cfg.predictive.gamma
    if pred_gamma is None and cfg.scoring.rule == "kernel":
        pred_gamma = cfg.scoring.gamma
    report = posterior_predictive_scores(
        trace, model, clean_subset(cfg, data),
        kernel=None if pred_gamma is None else GaussianKernel(pred_gamma),
        rng=np.random.default_rng(seeds["predictive"]),
        subsample=cfg.predictive.subsample)
    path = os.path.join(out, "predictive.json")
    write_json(report.to_dict(), path)
    print(f"predictive energy {report.energy:.6g}, kernel {report.kernel:.6g} "
          f"({report.n_draws} draws); wrote {path}")


def _cmd_sweep(cfg: ExperimentConfig) -> None:
    results = run_sweep(cfg)
    print(f"{len(results)} runs complete; summary in "
          f"{os.path.join(cfg.out, 'sweep_summary.csv')}")


_COMMANDS = {
    "simulate": _cmd_simulate,
    "generate-observations": _cmd_generate_observations,
    "tune-w": _cmd_tune_w,
    "tune-bandwidth": _cmd_tune_bandwidth,
    "sample": _cmd_sample,
    "predictive-check": _cmd_predictive_check,
    "sweep": _cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srbayes",
                     description="Scoring-rule posterior inference for simulator models.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None,
                       help="override master_seed (u64)")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set one dotted config key; value parsed as JSON when possible")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print(f"srbayes: error: --seed must be a u64, got {args.seed}", file=sys.stderr)
        return 1
    try:
        cfg = _load_config(args)
        _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"srbayes: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"srbayes: error: {exc}", file=sys.stderr)
        logger.debug("traceback", exc_info=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
