"""YAML experiment configuration, validated into dataclasses.

Grammar (all blocks optional except ``experiment``)::

    experiment: expansion-check        # see EXPERIMENTS
    model:
      preset: ou-myopic                # see presets.PRESETS
      params: {y0: 0.5}                # overrides of the preset parameters
    lambdas: [1.0e-3, 1.0e-4]
    mc: {n_paths: 10000, dt: null, seed: 2024, antithetic: false}
    output: {prefix: expansion}
    options: {tolerance: 0.15}         # experiment specific, see OPTION_DEFAULTS

Unknown keys at any level raise ConfigError.
"""
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import yaml

from . import presets
from .errors import ConfigError

OPTION_DEFAULTS = {
    "expansion-check": {"theta_offset": 0.0, "dt_factor": 0.02, "min_steps": 200, "tolerance": 0.15,
                        "require_decrease": True},
    "stationary-variance": {"sigma_theta": 1.0, "relaxation_times": 50.0, "burn_in_fraction": 0.2,
                            "dt_factor": 0.02, "min_steps": 200, "band": [0.9, 1.1]},
    "execution-compare": {"delta0": 1.0, "relaxation_times": 5.0, "dt_fraction": 1e-4, "order_band": [1.8, 2.2]},
    "friction-compare": {"risk_tolerance": 1.0, "sigma_s": 0.2, "sigma_theta": 0.5, "tolerance": 1e-12},
    "hedging-ce": {"payoff_scale": 1.0, "n_steps": 100, "n_states": 100, "theta_zero_payoff": 0.5},
    "corrector-residuals": {"n_states": 10, "dt": 0.01, "refinements": 2, "theta_offset": 0.5,
                            "n_first_corrector": 500},
}

DEFAULT_PRESET = {
    "expansion-check": "ou-myopic",
    "stationary-variance": "bachelier-const",
    "execution-compare": "bachelier-const",
    "friction-compare": "bachelier-const",
    "hedging-ce": "hedge-tanh",
    "corrector-residuals": "ou-myopic",
}

DEFAULT_LAMBDAS = {
    "expansion-check": [1e-3, 1e-4, 1e-5],
    "stationary-variance": [1e-4],
    "execution-compare": [1e-4],
    "friction-compare": [1e-4, 1.0],
    "hedging-ce": [1e-4],
    "corrector-residuals": [1e-4],
}

EXPERIMENTS = tuple(OPTION_DEFAULTS)


@dataclass(frozen=True)
class ModelConfig:
    preset: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class McBlock:
    n_paths: int = 10000
    dt: Optional[float] = None
    seed: int = 2024
    antithetic: bool = False


@dataclass(frozen=True)
class OutputConfig:
    prefix: str = "run"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: ModelConfig
    lambdas: tuple
    mc: McBlock
    output: OutputConfig
    options: dict

    def as_dict(self):
        return asdict(self)


def _block(cls, raw, where):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _number(v, where, kind=float, positive=True):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number")
    if kind is int and int(v) != v:
        raise ConfigError(f"{where} must be an integer")
    if positive and not v > 0:
        raise ConfigError(f"{where} must be positive")
    return kind(v)


def parse_config(raw):
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    allowed = {"experiment", "model", "lambdas", "mc", "output", "options"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    exp = raw.get("experiment")
    if exp not in OPTION_DEFAULTS:
        raise ConfigError(f"experiment must be one of {list(EXPERIMENTS)}, got {exp!r}")

    model = _block(ModelConfig, raw.get("model") or {"preset": DEFAULT_PRESET[exp]}, "model")
    if model.preset not in presets.PRESETS:
        raise ConfigError(f"unknown preset {model.preset!r}")
    if not isinstance(model.params, dict):
        raise ConfigError("model.params must be a mapping")
    try:
        presets.preset_params(model.preset, **model.params)
    except TypeError as exc:
        raise ConfigError(f"model.params: {exc}") from None

    lambdas = raw.get("lambdas", DEFAULT_LAMBDAS[exp])
    if not isinstance(lambdas, list) or not lambdas:
        raise ConfigError("lambdas must be a nonempty list")
    lambdas = tuple(_number(v, "lambdas entry") for v in lambdas)

    mc = _block(McBlock, raw.get("mc"), "mc")
    _number(mc.n_paths, "mc.n_paths", int)
    if mc.n_paths < 2:
        raise ConfigError("mc.n_paths must be at least 2")
    if mc.dt is not None:
        _number(mc.dt, "mc.dt")
    _number(mc.seed, "mc.seed", int, positive=False)
    if not 0 <= mc.seed < 2 ** 63:
        raise ConfigError("mc.seed out of range")
    if not isinstance(mc.antithetic, bool):
        raise ConfigError("mc.antithetic must be a boolean")

    output = _block(OutputConfig, raw.get("output"), "output")
    if not isinstance(output.prefix, str) or not output.prefix:
        raise ConfigError("output.prefix must be a nonempty string")

    opts_raw = raw.get("options") or {}
    if not isinstance(opts_raw, dict):
        raise ConfigError("options must be a mapping")
    unknown = set(opts_raw) - set(OPTION_DEFAULTS[exp])
    if unknown:
        raise ConfigError(f"unknown options for {exp}: {sorted(unknown)}")
    options = dict(OPTION_DEFAULTS[exp], **opts_raw)
    return ExperimentConfig(exp, model, lambdas, mc, output, options)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    return parse_config(raw)


def with_overrides(cfg, seed=None):
    if seed is None:
        return cfg
    mc = McBlock(cfg.mc.n_paths, cfg.mc.dt, int(seed), cfg.mc.antithetic)
    return ExperimentConfig(cfg.experiment, cfg.model, cfg.lambdas, mc, cfg.output, cfg.options)
