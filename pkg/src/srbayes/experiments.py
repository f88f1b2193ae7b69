"""Config-driven experiment runner.

An experiment is described by a JSON document with these blocks::

    {
      "model": "uni_gk",
      "data": {"theta_star": [3.0, 1.5, 0.5, 1.5], "n": 100,
               "epsilon": 0.0, "outliers": null, "path": null},
      "scoring": {"rule": "energy", "beta": 1.0},
      "chain": {"steps": 20000, "burn_in": 5000, "thinning": 1,
                "w": 0.35, "m": 500, "G": 500,
                "proposal": {"kind": "diagonal", "sigma": [1.0]},
                "start": null},
      "tuning": {"tune_w": false, "tune_bandwidth": false,
                 "n_pairs": 100, "m": null, "m_theta_gamma": 1000},
      "predictive": {"enabled": true, "subsample": 1000, "gamma": null},
      "sweep": null,
      "out": "runs/demo",
      "master_seed": 20240817
    }

Unknown keys anywhere are rejected. The runner derives four child seeds
from ``master_seed`` (data, tuning, chain, predictive), so a directory of
artifacts plus its echoed config regenerates itself bit-identically. No
timestamps or host details enter the artifacts for that reason.
"""

from __future__ import annotations

import contextlib
import json
import logging
import math
import os
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .diagnostics import (ChainSummary, PredictiveCheckReport, chain_summary,
                          posterior_predictive_scores, write_json)
from .mcmc import (ChainConfig, ChainTrace, DiagonalNormal, FullNormal,
                   derive_transform, run_chain, write_trace_csv)
from .scoring import (DawidSebastianiConfig, EnergyScoreConfig, GaussianKernel,
                      KernelScoreConfig, ScoringRuleConfig, SemiBSLConfig)
from .simulators import (CauchyOutliers, ContaminationSpec, Model,
                         NormalOutliers, ParamOutliers, generate_observations,
                         get_model)
from .tuning import WTuningReport, estimate_bandwidth, estimate_w

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid or ill-formed experiment configuration."""


# ---------------------------------------------------------------------------
# config blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutlierBlock:
    kind: str                                # "normal" | "params" | "cauchy"
    z: Optional[float] = None
    theta_out: Optional[tuple] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "normal":
            d["z"] = self.z
        elif self.kind == "params":
            d["theta_out"] = list(self.theta_out)
        return d

    def build(self):
        if self.kind == "normal":
            return NormalOutliers(self.z)
        if self.kind == "params":
            return ParamOutliers(np.asarray(self.theta_out, dtype=float))
        return CauchyOutliers()


@dataclass(frozen=True)
class DataBlock:
    theta_star: Optional[tuple] = None
    n: Optional[int] = None
    epsilon: float = 0.0
    outliers: Optional[OutlierBlock] = None
    path: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "theta_star": None if self.theta_star is None else list(self.theta_star),
            "n": self.n,
            "epsilon": self.epsilon,
            "outliers": None if self.outliers is None else self.outliers.to_dict(),
            "path": self.path,
        }


@dataclass(frozen=True)
class ScoringBlock:
    rule: str                                # "energy" | "kernel" | "ds" | "semibsl"
    beta: float = 1.0
    gamma: Optional[float] = None
    kde_bandwidth: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"rule": self.rule}
        if self.rule == "energy":
            d["beta"] = self.beta
        elif self.rule == "kernel":
            d["gamma"] = self.gamma
        elif self.rule == "semibsl":
            d["kde_bandwidth"] = self.kde_bandwidth
        return d

    def build(self, gamma: Optional[float] = None) -> ScoringRuleConfig:
        """Concrete scoring config; ``gamma`` supplies a tuned bandwidth."""
        if self.rule == "energy":
            return EnergyScoreConfig(beta=self.beta)
        if self.rule == "kernel":
            g = self.gamma if gamma is None else gamma
            if g is None:
                raise ConfigError(
                    "config field 'scoring.gamma' is required for the kernel rule "
                    "unless 'tuning.tune_bandwidth' is true")
            return KernelScoreConfig(GaussianKernel(g))
        if self.rule == "ds":
            return DawidSebastianiConfig()
        return SemiBSLConfig(kde_bandwidth=self.kde_bandwidth)


@dataclass(frozen=True)
class ProposalBlock:
    kind: str                                # "diagonal" | "full"
    sigma: Optional[tuple] = None
    covariance: Optional[tuple] = None       # tuple of row tuples

    def to_dict(self) -> dict:
        if self.kind == "diagonal":
            return {"kind": "diagonal", "sigma": list(self.sigma)}
        return {"kind": "full", "covariance": [list(r) for r in self.covariance]}

    def build(self) -> Union[DiagonalNormal, FullNormal]:
        if self.kind == "diagonal":
            return DiagonalNormal(np.asarray(self.sigma, dtype=float))
        return FullNormal(np.asarray(self.covariance, dtype=float))


@dataclass(frozen=True)
class ChainBlock:
    steps: int
    burn_in: int = 0
    thinning: int = 1
    w: Optional[float] = None
    m: int = 500
    G: int = 500
    proposal: ProposalBlock = ProposalBlock("diagonal", sigma=(1.0,))
    start: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "burn_in": self.burn_in,
            "thinning": self.thinning,
            "w": self.w,
            "m": self.m,
            "G": self.G,
            "proposal": self.proposal.to_dict(),
            "start": None if self.start is None else list(self.start),
        }


@dataclass(frozen=True)
class TuningBlock:
    tune_w: bool = False
    tune_bandwidth: bool = False
    n_pairs: int = 100
    m: Optional[int] = None                  # None -> chain.m
    m_theta_gamma: int = 1000

    def to_dict(self) -> dict:
        return {
            "tune_w": self.tune_w,
            "tune_bandwidth": self.tune_bandwidth,
            "n_pairs": self.n_pairs,
            "m": self.m,
            "m_theta_gamma": self.m_theta_gamma,
        }


@dataclass(frozen=True)
class PredictiveBlock:
    enabled: bool = True
    subsample: int = 1000
    gamma: Optional[float] = None            # None -> scoring gamma or median rule

    def to_dict(self) -> dict:
        return {"enabled": self.enabled, "subsample": self.subsample, "gamma": self.gamma}


@dataclass(frozen=True)
class SweepBlock:
    key: str                                 # dotted config path, e.g. "data.n"
    values: tuple

    def to_dict(self) -> dict:
        return {"key": self.key, "values": list(self.values)}


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    data: DataBlock
    scoring: ScoringBlock
    chain: ChainBlock
    tuning: TuningBlock = TuningBlock()
    predictive: PredictiveBlock = PredictiveBlock()
    sweep: Optional[SweepBlock] = None
    out: Optional[str] = None
    master_seed: int = 0

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "data": self.data.to_dict(),
            "scoring": self.scoring.to_dict(),
            "chain": self.chain.to_dict(),
            "tuning": self.tuning.to_dict(),
            "predictive": self.predictive.to_dict(),
            "sweep": None if self.sweep is None else self.sweep.to_dict(),
            "out": self.out,
            "master_seed": self.master_seed,
        }


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _check_keys(block: dict, allowed: set, where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)} in '{where}'")


def _get(block: dict, key: str, where: str, required: bool = False, default=None):
    val = block.get(key, None)
    if val is None:
        if required:
            raise ConfigError(f"config field '{where}.{key}' is required")
        return default
    return val


def _num(val, where: str, integer: bool = False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"config field '{where}' must be a number, got {val!r}")
    if integer:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigError(f"config field '{where}' must be an integer, got {val!r}")
        return int(val)
    return float(val)


def _vector(val, where: str) -> tuple:
    if not isinstance(val, (list, tuple)) or not val:
        raise ConfigError(f"config field '{where}' must be a non-empty array")
    return tuple(_num(v, where) for v in val)


def _parse_outliers(block, where: str) -> Optional[OutlierBlock]:
    if block is None:
        return None
    if not isinstance(block, dict):
        raise ConfigError(f"config field '{where}' must be an object or null")
    kind = _get(block, "kind", where, required=True)
    if kind == "normal":
        _check_keys(block, {"kind", "z"}, where)
        return OutlierBlock("normal", z=_num(_get(block, "z", where, required=True), f"{where}.z"))
    if kind == "params":
        _check_keys(block, {"kind", "theta_out"}, where)
        return OutlierBlock("params", theta_out=_vector(
            _get(block, "theta_out", where, required=True), f"{where}.theta_out"))
    if kind == "cauchy":
        _check_keys(block, {"kind"}, where)
        return OutlierBlock("cauchy")
    raise ConfigError(f"config field '{where}.kind' must be one of "
                      f"['cauchy', 'normal', 'params'], got {kind!r}")


def _parse_data(block, model: Model) -> DataBlock:
    if not isinstance(block, dict):
        raise ConfigError("config field 'data' must be an object")
    _check_keys(block, {"theta_star", "n", "epsilon", "outliers", "path"}, "data")
    path = _get(block, "path", "data")
    theta_star = block.get("theta_star")
    if theta_star is not None:
        theta_star = _vector(theta_star, "data.theta_star")
        if len(theta_star) != model.theta_dim:
            raise ConfigError(
                f"config field 'data.theta_star' has {len(theta_star)} entries, "
                f"model '{model.name}' has {model.theta_dim} parameters")
    n = block.get("n")
    if n is not None:
        n = _num(n, "data.n", integer=True)
        if n < 1:
            raise ConfigError(f"config field 'data.n' must be >= 1, got {n}")
    epsilon = _num(_get(block, "epsilon", "data", default=0.0), "data.epsilon")
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError(f"config field 'data.epsilon' must lie in [0, 1], got {epsilon}")
    outliers = _parse_outliers(block.get("outliers"), "data.outliers")
    if path is None:
        if theta_star is None:
            raise ConfigError("config field 'data.theta_star' is required when no 'data.path' is given")
        if n is None:
            raise ConfigError("config field 'data.n' is required when no 'data.path' is given")
        if epsilon > 0 and outliers is None:
            raise ConfigError("config field 'data.outliers' is required when 'data.epsilon' > 0")
    elif not isinstance(path, str):
        raise ConfigError("config field 'data.path' must be a string or null")
    if outliers is not None and outliers.kind == "params" \
            and len(outliers.theta_out) != model.theta_dim:
        raise ConfigError(
            f"config field 'data.outliers.theta_out' has {len(outliers.theta_out)} entries, "
            f"model '{model.name}' has {model.theta_dim} parameters")
    return DataBlock(theta_star=theta_star, n=n, epsilon=epsilon,
                     outliers=outliers, path=path)


def _parse_scoring(block) -> ScoringBlock:
    if not isinstance(block, dict):
        raise ConfigError("config field 'scoring' must be an object")
    rule = _get(block, "rule", "scoring", required=True)
    if rule == "energy":
        _check_keys(block, {"rule", "beta"}, "scoring")
        beta = _num(_get(block, "beta", "scoring", default=1.0), "scoring.beta")
        if not 0.0 < beta < 2.0:
            raise ConfigError(f"config field 'scoring.beta' must lie in (0, 2), got {beta}")
        return ScoringBlock("energy", beta=beta)
    if rule == "kernel":
        _check_keys(block, {"rule", "gamma"}, "scoring")
        gamma = block.get("gamma")
        if gamma is not None:
            gamma = _num(gamma, "scoring.gamma")
            if not gamma > 0:
                raise ConfigError(f"config field 'scoring.gamma' must be positive, got {gamma}")
        return ScoringBlock("kernel", gamma=gamma)
    if rule == "ds":
        _check_keys(block, {"rule"}, "scoring")
        return ScoringBlock("ds")
    if rule == "semibsl":
        _check_keys(block, {"rule", "kde_bandwidth"}, "scoring")
        kb = block.get("kde_bandwidth")
        if kb is not None:
            kb = _num(kb, "scoring.kde_bandwidth")
            if not kb > 0:
                raise ConfigError(
                    f"config field 'scoring.kde_bandwidth' must be positive, got {kb}")
        return ScoringBlock("semibsl", kde_bandwidth=kb)
    raise ConfigError(f"config field 'scoring.rule' must be one of "
                      f"['ds', 'energy', 'kernel', 'semibsl'], got {rule!r}")


def _parse_proposal(block, model: Model) -> ProposalBlock:
    if block is None:
        return ProposalBlock("diagonal", sigma=(1.0,))
    if not isinstance(block, dict):
        raise ConfigError("config field 'chain.proposal' must be an object")
    kind = _get(block, "kind", "chain.proposal", required=True)
    if kind == "diagonal":
        _check_keys(block, {"kind", "sigma"}, "chain.proposal")
        raw = _get(block, "sigma", "chain.proposal", required=True)
        sigma = (_num(raw, "chain.proposal.sigma"),) if isinstance(raw, (int, float)) \
            else _vector(raw, "chain.proposal.sigma")
        if any(s <= 0 for s in sigma):
            raise ConfigError("config field 'chain.proposal.sigma' must be positive")
        if len(sigma) not in (1, model.theta_dim):
            raise ConfigError(
                f"config field 'chain.proposal.sigma' has {len(sigma)} entries, "
                f"model '{model.name}' has {model.theta_dim} parameters")
        return ProposalBlock("diagonal", sigma=sigma)
    if kind == "full":
        _check_keys(block, {"kind", "covariance"}, "chain.proposal")
        raw = _get(block, "covariance", "chain.proposal", required=True)
        if not isinstance(raw, (list, tuple)) or not raw:
            raise ConfigError("config field 'chain.proposal.covariance' must be a matrix")
        cov = tuple(_vector(r, "chain.proposal.covariance") for r in raw)
        p = model.theta_dim
        if len(cov) != p or any(len(r) != p for r in cov):
            raise ConfigError(
                f"config field 'chain.proposal.covariance' must be {p}x{p} "
                f"for model '{model.name}'")
        return ProposalBlock("full", covariance=cov)
    raise ConfigError(f"config field 'chain.proposal.kind' must be 'diagonal' or 'full', "
                      f"got {kind!r}")


def _parse_chain(block, model: Model) -> ChainBlock:
    if not isinstance(block, dict):
        raise ConfigError("config field 'chain' must be an object")
    _check_keys(block, {"steps", "burn_in", "thinning", "w", "m", "G", "proposal", "start"},
                "chain")
    steps = _num(_get(block, "steps", "chain", required=True), "chain.steps", integer=True)
    burn_in = _num(_get(block, "burn_in", "chain", default=0), "chain.burn_in", integer=True)
    thinning = _num(_get(block, "thinning", "chain", default=1), "chain.thinning", integer=True)
    m = _num(_get(block, "m", "chain", default=500), "chain.m", integer=True)
    G = _num(_get(block, "G", "chain", default=500), "chain.G", integer=True)
    w = block.get("w")
    if w is not None:
        w = _num(w, "chain.w")
        if not w > 0:
            raise ConfigError(f"config field 'chain.w' must be positive, got {w}")
    if steps < 1:
        raise ConfigError(f"config field 'chain.steps' must be >= 1, got {steps}")
    if not 0 <= burn_in < steps:
        raise ConfigError(
            f"config field 'chain.burn_in' must lie in [0, steps), got {burn_in}")
    if thinning < 1:
        raise ConfigError(f"config field 'chain.thinning' must be >= 1, got {thinning}")
    if m < 2:
        raise ConfigError(f"config field 'chain.m' must be >= 2, got {m}")
    if G < 1 or m % G != 0:
        raise ConfigError("G must divide m")
    start = block.get("start")
    if start is not None:
        start = _vector(start, "chain.start")
        if len(start) != model.theta_dim:
            raise ConfigError(
                f"config field 'chain.start' has {len(start)} entries, "
                f"model '{model.name}' has {model.theta_dim} parameters")
    return ChainBlock(steps=steps, burn_in=burn_in, thinning=thinning, w=w, m=m, G=G,
                      proposal=_parse_proposal(block.get("proposal"), model), start=start)


def _parse_tuning(block) -> TuningBlock:
    if block is None:
        return TuningBlock()
    if not isinstance(block, dict):
        raise ConfigError("config field 'tuning' must be an object")
    _check_keys(block, {"tune_w", "tune_bandwidth", "n_pairs", "m", "m_theta_gamma"}, "tuning")
    tune_w = _get(block, "tune_w", "tuning", default=False)
    tune_bw = _get(block, "tune_bandwidth", "tuning", default=False)
    if not isinstance(tune_w, bool) or not isinstance(tune_bw, bool):
        raise ConfigError("config fields 'tuning.tune_w'/'tuning.tune_bandwidth' must be booleans")
    n_pairs = _num(_get(block, "n_pairs", "tuning", default=100), "tuning.n_pairs", integer=True)
    if n_pairs < 1:
        raise ConfigError(f"config field 'tuning.n_pairs' must be >= 1, got {n_pairs}")
    m = block.get("m")
    if m is not None:
        m = _num(m, "tuning.m", integer=True)
        if m < 2:
            raise ConfigError(f"config field 'tuning.m' must be >= 2, got {m}")
    mtg = _num(_get(block, "m_theta_gamma", "tuning", default=1000),
               "tuning.m_theta_gamma", integer=True)
    if mtg < 1:
        raise ConfigError(f"config field 'tuning.m_theta_gamma' must be >= 1, got {mtg}")
    return TuningBlock(tune_w=tune_w, tune_bandwidth=tune_bw, n_pairs=n_pairs,
                       m=m, m_theta_gamma=mtg)


def _parse_predictive(block) -> PredictiveBlock:
    if block is None:
        return PredictiveBlock()
    if not isinstance(block, dict):
        raise ConfigError("config field 'predictive' must be an object")
    _check_keys(block, {"enabled", "subsample", "gamma"}, "predictive")
    enabled = _get(block, "enabled", "predictive", default=True)
    if not isinstance(enabled, bool):
        raise ConfigError("config field 'predictive.enabled' must be a boolean")
    subsample = _num(_get(block, "subsample", "predictive", default=1000),
                     "predictive.subsample", integer=True)
    if subsample < 2:
        raise ConfigError(f"config field 'predictive.subsample' must be >= 2, got {subsample}")
    gamma = block.get("gamma")
    if gamma is not None:
        gamma = _num(gamma, "predictive.gamma")
        if not gamma > 0:
            raise ConfigError(f"config field 'predictive.gamma' must be positive, got {gamma}")
    return PredictiveBlock(enabled=enabled, subsample=subsample, gamma=gamma)


def _parse_sweep(block) -> Optional[SweepBlock]:
    if block is None:
        return None
    if not isinstance(block, dict):
        raise ConfigError("config field 'sweep' must be an object or null")
    _check_keys(block, {"key", "values"}, "sweep")
    key = _get(block, "key", "sweep", required=True)
    if not isinstance(key, str) or not key:
        raise ConfigError("config field 'sweep.key' must be a non-empty string")
    values = _get(block, "values", "sweep", required=True)
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError("config field 'sweep.values' must be a non-empty array")
    return SweepBlock(key=key, values=tuple(values))


def parse_config_dict(raw: dict) -> ExperimentConfig:
    """Validate a raw config dictionary into an ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(raw, {"model", "data", "scoring", "chain", "tuning", "predictive",
                      "sweep", "out", "master_seed"}, "config root")
    name = _get(raw, "model", "config root", required=True)
    try:
        model = get_model(name)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config field 'model': {exc}") from None
    data = _parse_data(_get(raw, "data", "config root", required=True), model)
    scoring = _parse_scoring(_get(raw, "scoring", "config root", required=True))
    chain = _parse_chain(_get(raw, "chain", "config root", required=True), model)
    tuning = _parse_tuning(raw.get("tuning"))
    predictive = _parse_predictive(raw.get("predictive"))
    sweep = _parse_sweep(raw.get("sweep"))
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("config field 'out' must be a string or null")
    master_seed = _num(_get(raw, "master_seed", "config root", default=0),
                       "master_seed", integer=True)
    if master_seed < 0:
        raise ConfigError(f"config field 'master_seed' must be >= 0, got {master_seed}")
    if chain.w is None and not tuning.tune_w:
        raise ConfigError(
            "config field 'chain.w' is required unless 'tuning.tune_w' is true")
    if scoring.rule == "kernel" and scoring.gamma is None and not tuning.tune_bandwidth:
        raise ConfigError(
            "config field 'scoring.gamma' is required for the kernel rule "
            "unless 'tuning.tune_bandwidth' is true")
    return ExperimentConfig(model=name, data=data, scoring=scoring, chain=chain,
                            tuning=tuning, predictive=predictive, sweep=sweep,
                            out=out, master_seed=master_seed)


def parse_config(path) -> ExperimentConfig:
    """Load and validate a JSON experiment config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return parse_config_dict(raw)


def apply_override(raw: dict, key: str, value) -> dict:
    """Set a dotted-path key in a raw config dict, creating blocks as needed."""
    parts = key.split(".")
    if not all(parts):
        raise ConfigError(f"override key {key!r} is malformed")
    node = raw
    for p in parts[:-1]:
        nxt = node.get(p)
        if nxt is None:
            nxt = {}
            node[p] = nxt
        elif not isinstance(nxt, dict):
            raise ConfigError(f"override key {key!r} descends into non-object field {p!r}")
        node = nxt
    node[parts[-1]] = value
    return raw


# ---------------------------------------------------------------------------
# artifact helpers
# ---------------------------------------------------------------------------

@contextlib.contextmanager
def _directory_lock(out_dir: str):
    lock_path = os.path.join(out_dir, ".lock")
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"output directory {out_dir} is locked by another run "
            f"(remove {lock_path} if that run is dead)") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.remove(lock_path)


def write_observations_csv(data: np.ndarray, path) -> None:
    """Plain numeric CSV, one row per observation, no header."""
    np.savetxt(path, np.atleast_2d(np.asarray(data, dtype=float)),
               fmt="%.17g", delimiter=",")


def read_observations_csv(path, expected_dim: int) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError:
        raise ConfigError(f"observations file not found: {path}") from None
    except ValueError as exc:
        raise ConfigError(f"observations file {path} is not numeric CSV: {exc}") from None
    if data.shape[1] != expected_dim:
        raise ConfigError(
            f"observations file {path} has {data.shape[1]} columns, "
            f"the model emits {expected_dim}-dimensional outputs")
    return data


def _child_seeds(master_seed: int) -> dict:
    """Four named child seeds derived from the master seed."""
    state = np.random.SeedSequence(master_seed).generate_state(4, dtype=np.uint64)
    return {
        "data": int(state[0]),
        "tuning": int(state[1]),
        "chain": int(state[2]),
        "predictive": int(state[3]),
    }


@contextlib.contextmanager
def _stage(name: str):
    """Tag stage failures so CLI messages say where the pipeline died."""
    try:
        yield
    except ConfigError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    except Exception as exc:
        raise RuntimeError(f"{name}: {exc}") from exc


# ---------------------------------------------------------------------------
# the runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RunResult:
    out_dir: str
    config: ExperimentConfig
    data: np.ndarray
    trace: ChainTrace
    summary: ChainSummary
    predictive: Optional[PredictiveCheckReport]
    resolved_w: float
    resolved_gamma: Optional[float]
    seeds: dict


def _make_dataset(cfg: ExperimentConfig, model: Model, rng) -> np.ndarray:
    if cfg.data.path is not None:
        return read_observations_csv(cfg.data.path, model.output_dim)
    spec = ContaminationSpec(
        theta_star=np.asarray(cfg.data.theta_star, dtype=float),
        n=cfg.data.n,
        epsilon=cfg.data.epsilon,
        outlier_source=None if cfg.data.outliers is None else cfg.data.outliers.build(),
    )
    return generate_observations(spec, model, rng)


def clean_subset(cfg: ExperimentConfig, data: np.ndarray) -> np.ndarray:
    """Rows the predictive check scores against.

    Generated datasets put contaminated rows last, so the clean prefix holds
    the rows simulated from theta_star; a fully contaminated dataset (or one
    read from CSV) is scored against all rows.
    """
    if cfg.data.path is not None or cfg.data.epsilon == 0.0:
        return data
    n = data.shape[0]
    n_clean = n - int(math.floor(cfg.data.epsilon * n))
    return data if n_clean == 0 else data[:n_clean]


def _resolve_hyperparameters(cfg: ExperimentConfig, model: Model, data, rng
                             ) -> tuple[float, Optional[float], Optional[WTuningReport]]:
    """Run requested tuning; bandwidth first, since the kernel score needs it."""
    gamma = cfg.scoring.gamma if cfg.scoring.rule == "kernel" else None
    tuning_m = cfg.tuning.m if cfg.tuning.m is not None else cfg.chain.m
    if cfg.tuning.tune_bandwidth:
        gamma = estimate_bandwidth(model, m_gamma=tuning_m,
                                   m_theta_gamma=cfg.tuning.m_theta_gamma, rng=rng)
        logger.info("tuned bandwidth gamma=%.6g", gamma)
    w = cfg.chain.w
    w_report = None
    if cfg.tuning.tune_w:
        scoring_cfg = cfg.scoring.build(gamma=gamma)
        w_report = estimate_w(model, data, scoring_cfg, n_pairs=cfg.tuning.n_pairs,
                              m=tuning_m, rng=rng)
        w = w_report.w
        logger.info("tuned w=%.6g from %d pairs", w, w_report.n_used)
        if not w > 0:
            raise RuntimeError(
                f"tuning produced non-positive w={w}; set 'chain.w' explicitly")
    return w, gamma, w_report


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> RunResult:
    """Execute the full pipeline and write all artifacts.

    Stages: data generation or ingest, optional hyperparameter tuning, the
    correlated pseudo-marginal chain, posterior summary, and the predictive
    check. Artifacts: ``observations.csv``, ``trace.csv``, ``summary.json``,
    ``predictive.json`` (when enabled), and ``metadata.json`` echoing the
    resolved config and every seed for exact replay.
    """
    out = out_dir if out_dir is not None else cfg.out
    if not out:
        raise ConfigError("no output directory: set config field 'out' or pass --out")
    os.makedirs(out, exist_ok=True)
    model = get_model(cfg.model)
    seeds = _child_seeds(cfg.master_seed)

    with _directory_lock(out):
        with _stage("data"):
            data = _make_dataset(cfg, model, np.random.default_rng(seeds["data"]))
            write_observations_csv(data, os.path.join(out, "observations.csv"))

        with _stage("tuning"):
            w, gamma, w_report = _resolve_hyperparameters(
                cfg, model, data, np.random.default_rng(seeds["tuning"]))

        with _stage("chain"):
            chain_cfg = ChainConfig(
                steps=cfg.chain.steps, burn_in=cfg.chain.burn_in,
                thinning=cfg.chain.thinning, w=w, m=cfg.chain.m, G=cfg.chain.G,
                proposal=cfg.chain.proposal.build(),
                transform=derive_transform(model.prior),
                scoring=cfg.scoring.build(gamma=gamma),
                master_seed=seeds["chain"],
                start=None if cfg.chain.start is None
                else np.asarray(cfg.chain.start, dtype=float),
            )
            trace = run_chain(model, data, chain_cfg)
            write_trace_csv(trace, os.path.join(out, "trace.csv"))
            summary = chain_summary(trace)
            write_json(summary.to_dict(), os.path.join(out, "summary.json"))

        predictive = None
        if cfg.predictive.enabled:
            with _stage("predictive"):
                clean = clean_subset(cfg, data)
                pred_gamma = cfg.predictive.gamma
                if pred_gamma is None:
                    pred_gamma = gamma
                predictive = posterior_predictive_scores(
                    trace, model, clean,
                    kernel=None if pred_gamma is None else GaussianKernel(pred_gamma),
                    rng=np.random.default_rng(seeds["predictive"]),
                    subsample=cfg.predictive.subsample)
                write_json(predictive.to_dict(), os.path.join(out, "predictive.json"))

        with _stage("metadata"):
            meta = {
                "config": cfg.to_dict(),
                "seeds": {"master": cfg.master_seed, **seeds},
                "resolved": {
                    "w": w,
                    "gamma": gamma,
                    "w_tuning": None if w_report is None else {
                        "w": w_report.w,
                        "n_used": w_report.n_used,
                        "n_dropped": w_report.n_dropped,
                        "ratios": w_report.ratios.tolist(),
                    },
                },
                "acceptance_rate": trace.acceptance_rate,
                "n_retained": int(trace.samples.shape[0]),
            }
            write_json(meta, os.path.join(out, "metadata.json"))

    return RunResult(out_dir=out, config=cfg, data=data, trace=trace, summary=summary,
                     predictive=predictive, resolved_w=w, resolved_gamma=gamma, seeds=seeds)


def run_sweep(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> list[RunResult]:
    """One experiment per sweep value, plus a one-row-per-value summary CSV.

    Each run writes into ``<out>/<leaf>_<value>/``; the parent directory gets
    ``sweep_summary.csv`` with the swept value, acceptance rate, and the
    trace of the posterior covariance.
    """
    if cfg.sweep is None:
        raise ConfigError("config field 'sweep' is required for the sweep command")
    out = out_dir if out_dir is not None else cfg.out
    if not out:
        raise ConfigError("no output directory: set config field 'out' or pass --out")
    os.makedirs(out, exist_ok=True)

    leaf = cfg.sweep.key.split(".")[-1]
    results = []
    for value in cfg.sweep.values:
        raw = cfg.to_dict()
        raw["sweep"] = None
        apply_override(raw, cfg.sweep.key, value)
        sub_cfg = parse_config_dict(raw)
        sub_out = os.path.join(out, f"{leaf}_{value}")
        results.append(run_experiment(sub_cfg, out_dir=sub_out))

    rows = ["value,acceptance_rate,cov_trace"]
    for value, res in zip(cfg.sweep.values, results):
        rows.append(f"{value},{res.summary.acceptance_rate:.17g},"
                    f"{res.summary.cov_trace:.17g}")
    with open(os.path.join(out, "sweep_summary.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")
    return results
