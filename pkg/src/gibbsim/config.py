"""Experiment configuration: a small INI dialect, fully echoed into outputs.

Grammar (configparser syntax, ``;`` comments)::

    [experiment]
    kind = sample | minkowski | pressure | gap | mean-energy | entropy |
           boundary | gnz | validate
    seed = <u64>             ; master seed (CLI --seed overrides)

    [model]
    id = ideal | strauss | hardcore | lj-trunc | quermass
    ; remaining keys are model parameters:
    ;   ideal:    z, dimension
    ;   strauss:  z, beta, range, dimension
    ;   hardcore: z, delta, dimension
    ;   lj-trunc: z, epsilon, sigma, cutoff, dimension
    ;   quermass: theta1, theta2, theta3, r

    [law]                    ; gap / mean-energy / entropy verbs
    kind = poisson | gibbs
    intensity = 1.0          ; poisson: comma list allowed (gap curves)

    [windows]
    n_list = 3,5,8           ; half-side of the cubes [-n, n]^d

    [ti]
    theta_nodes = 11         ; odd count, Simpson rule
    rule = simpson | trapezoid

    [mcmc]
    burn_in = auto           ; auto scales with window volume
    samples = 2000
    thin = auto
    chains = 4
    kick = auto              ; auto = half the interaction range

    [sample]
    boundary_file = path     ; optional fixed exterior configuration

    [gnz]
    nodes_per_axis = 10

    [minkowski]
    points = path/to/configuration.txt
    radius = 0.5

    [validate]
    subset = full | theta0

Every value is echoed into output headers; a config plus the package version
determines every output byte.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field

from .core import Seed
from .models import EnergyModel, build_model
from .sampler import McmcParams

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "KINDS"]

KINDS = ("sample", "minkowski", "pressure", "gap", "mean-energy", "entropy",
         "boundary", "gnz", "validate")

_MODEL_KEYS = {
    "ideal": {"z": float, "dimension": int},
    "strauss": {"z": float, "beta": float, "range": float, "dimension": int},
    "hardcore": {"z": float, "delta": float, "dimension": int},
    "lj-trunc": {"z": float, "epsilon": float, "sigma": float, "cutoff": float,
                 "dimension": int},
    "quermass": {"theta1": float, "theta2": float, "theta3": float, "r": float},
}

_MODEL_ARG_NAMES = {
    "ideal": {"z": "activity", "dimension": "dimension"},
    "strauss": {"z": "activity", "beta": "beta", "range": "interaction_range",
                "dimension": "dimension"},
    "hardcore": {"z": "activity", "delta": "core", "dimension": "dimension"},
    "lj-trunc": {"z": "activity", "epsilon": "epsilon", "sigma": "sigma",
                 "cutoff": "cutoff", "dimension": "dimension"},
    "quermass": {"theta1": "theta1", "theta2": "theta2", "theta3": "theta3",
                 "r": "disc_radius"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the section and field."""


@dataclass
class LawSpec:
    kind: str                      # poisson | gibbs
    intensity: float | None = None

    def describe(self) -> str:
        if self.kind == "poisson":
            return f"poisson({self.intensity:g})"
        return "gibbs"


@dataclass
class ExperimentConfig:
    kind: str
    seed: Seed
    model_id: str | None = None
    model_params: dict = field(default_factory=dict)
    laws: list = field(default_factory=list)
    n_list: list = field(default_factory=lambda: [3.0])
    theta: float = 1.0
    boundary_mode: str = "free"
    theta_nodes: int = 11
    rule: str = "simpson"
    burn_in: str | int = "auto"
    samples: int = 2000
    thin: str | int = "auto"
    chains: int = 4
    kick: str | float = "auto"
    gnz_nodes_per_axis: int = 10
    boundary_file: str | None = None
    minkowski_points: str | None = None
    minkowski_radius: float | None = None
    validate_subset: str = "full"
    raw_text: str = ""

    def build_model(self) -> EnergyModel:
        if self.model_id is None:
            raise ConfigError("[model] section required for this experiment")
        names = _MODEL_ARG_NAMES[self.model_id]
        kwargs = {names[k]: v for k, v in self.model_params.items()}
        try:
            return build_model(self.model_id, **kwargs)
        except ValueError as exc:
            raise ConfigError(f"[model] {exc}") from exc

    def mcmc_params(self, model: EnergyModel, volume: float,
                    theta: float = 1.0) -> McmcParams:
        """Resolve 'auto' chain lengths against the window volume.

        The auto burn-in is proportional to the volume (fewer sweeps for
        the geometric model, whose steps are costlier); tempered targets
        below theta = 0.5 are handled inside the integrator.
        """
        if self.burn_in == "auto":
            per_vol = 2_000 if model.id == "quermass" else 100_000
            burn = max(1000, int(per_vol * volume))
        else:
            burn = int(self.burn_in)
        if self.thin == "auto":
            per_vol = 0.5 if model.id == "quermass" else 2.0
            thin = max(1, int(round(per_vol * volume)))
        else:
            thin = int(self.thin)
        kick = None if self.kick == "auto" else float(self.kick)
        return McmcParams(burn_in=burn, samples=self.samples, thin=thin,
                          chains=self.chains, kick_scale=kick)

    def theta_grid(self) -> list[float]:
        from .thermo import default_theta_grid

        return default_theta_grid(self.theta_nodes)

    def config_hash(self) -> str:
        return hashlib.sha256(self.raw_text.encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        from . import __version__

        out = {
            "version": __version__,
            "config_hash": self.config_hash(),
            "kind": self.kind,
            "seed": f"{self.seed.value}:{self.seed.stream}",
        }
        if self.model_id:
            out["model"] = self.model_id
            for k, v in sorted(self.model_params.items()):
                out[f"model.{k}"] = repr(v)
        return out


def _get(parser, section, key, cast, default=None, required=False):
    if not parser.has_option(section, key):
        if required:
            raise ConfigError(f"[{section}] missing required key '{key}'")
        return default
    raw = parser.get(section, key).strip()
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def _float_list(raw: str) -> list[float]:
    return [float(v) for v in raw.replace(",", " ").split()]


def load_config(path: str | None, kind: str | None = None,
                seed_override: int | None = None) -> ExperimentConfig:
    """Read and validate a config file; CLI verb and seed take precedence."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    raw_text = ""
    if path is not None:
        try:
            with open(path) as fh:
                raw_text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            parser.read_string(raw_text)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    file_kind = _get(parser, "experiment", "kind", str) if parser.has_section(
        "experiment") else None
    if kind is None:
        kind = file_kind
    elif file_kind is not None and file_kind != kind:
        raise ConfigError(
            f"[experiment] kind = {file_kind!r} conflicts with the "
            f"command-line verb {kind!r}")
    if kind is None:
        raise ConfigError("no experiment kind (give a verb or [experiment] kind)")
    if kind not in KINDS:
        raise ConfigError(f"[experiment] unknown kind {kind!r}; known: {KINDS}")

    seed_value = seed_override
    if seed_value is None:
        seed_value = _get(parser, "experiment", "seed", int,
                          default=0) if parser.has_section("experiment") else 0
    cfg = ExperimentConfig(kind=kind, seed=Seed(int(seed_value)),
                           raw_text=raw_text)

    if parser.has_section("model"):
        model_id = _get(parser, "model", "id", str, required=True)
        if model_id not in _MODEL_KEYS:
            raise ConfigError(f"[model] unknown id {model_id!r}")
        cfg.model_id = model_id
        casts = _MODEL_KEYS[model_id]
        for key in parser.options("model"):
            if key == "id":
                continue
            if key not in casts:
                raise ConfigError(f"[model] unknown key {key!r} for {model_id}")
            cfg.model_params[key] = _get(parser, "model", key, casts[key])
        _validate_model_params(model_id, cfg.model_params)

    if parser.has_section("law"):
        law_kind = _get(parser, "law", "kind", str, required=True)
        if law_kind == "poisson":
            values = _get(parser, "law", "intensity", _float_list, required=True)
            for v in values:
                if v <= 0:
                    raise ConfigError("[law] intensity must be positive")
                cfg.laws.append(LawSpec("poisson", v))
        elif law_kind == "gibbs":
            cfg.laws.append(LawSpec("gibbs"))
        else:
            raise ConfigError(f"[law] unknown kind {law_kind!r}")

    if parser.has_section("windows"):
        cfg.n_list = _get(parser, "windows", "n_list", _float_list, required=True)
        if not cfg.n_list or any(n <= 0 for n in cfg.n_list):
            raise ConfigError("[windows] n_list must be positive values")
        cfg.n_list = sorted(cfg.n_list)

    if parser.has_section("ti"):
        cfg.theta_nodes = _get(parser, "ti", "theta_nodes", int, cfg.theta_nodes)
        if cfg.theta_nodes < 3 or cfg.theta_nodes % 2 == 0:
            raise ConfigError("[ti] theta_nodes must be odd and >= 3")
        cfg.rule = _get(parser, "ti", "rule", str, cfg.rule)
        if cfg.rule not in ("simpson", "trapezoid"):
            raise ConfigError(f"[ti] unknown rule {cfg.rule!r}")

    if parser.has_section("mcmc"):
        for key, attr, cast in (("burn_in", "burn_in", int),
                                ("samples", "samples", int),
                                ("thin", "thin", int),
                                ("chains", "chains", int)):
            if parser.has_option("mcmc", key):
                raw = parser.get("mcmc", key).strip()
                if raw == "auto" and key in ("burn_in", "thin"):
                    setattr(cfg, attr, "auto")
                else:
                    value = _get(parser, "mcmc", key, cast)
                    if value < 1:
                        raise ConfigError(f"[mcmc] {key} must be >= 1")
                    setattr(cfg, attr, value)
        if parser.has_option("mcmc", "kick"):
            raw = parser.get("mcmc", "kick").strip()
            if raw != "auto":
                kick = _get(parser, "mcmc", "kick", float)
                if kick <= 0:
                    raise ConfigError("[mcmc] kick must be positive")
                cfg.kick = kick
        if parser.has_option("mcmc", "theta"):
            cfg.theta = _get(parser, "mcmc", "theta", float)
            if not (0.0 <= cfg.theta <= 1.0):
                raise ConfigError("[mcmc] theta must lie in [0, 1]")

    if parser.has_section("sample"):
        cfg.boundary_file = _get(parser, "sample", "boundary_file", str)

    if parser.has_section("gnz"):
        cfg.gnz_nodes_per_axis = _get(parser, "gnz", "nodes_per_axis", int,
                                      cfg.gnz_nodes_per_axis)
        if cfg.gnz_nodes_per_axis < 1:
            raise ConfigError("[gnz] nodes_per_axis must be >= 1")

    if parser.has_section("minkowski"):
        cfg.minkowski_points = _get(parser, "minkowski", "points", str)
        cfg.minkowski_radius = _get(parser, "minkowski", "radius", float)
        if cfg.minkowski_radius is not None and cfg.minkowski_radius <= 0:
            raise ConfigError("[minkowski] radius must be positive")

    if parser.has_section("validate"):
        cfg.validate_subset = _get(parser, "validate", "subset", str, "full")
        if cfg.validate_subset not in ("full", "theta0"):
            raise ConfigError("[validate] subset must be full or theta0")

    _check_kind_requirements(cfg)
    return cfg


def _validate_model_params(model_id: str, params: dict) -> None:
    def positive(key):
        if key in params and not (params[key] > 0):
            raise ConfigError(f"[model] {key} must be positive")

    for key in ("z", "range", "delta", "epsilon", "sigma", "cutoff", "r"):
        positive(key)
    if model_id == "strauss" and "beta" in params and params["beta"] < 0:
        raise ConfigError("[model] beta must be nonnegative (stability)")
    if "dimension" in params and params["dimension"] not in (1, 2, 3):
        raise ConfigError("[model] dimension must be 1, 2, or 3")


def _check_kind_requirements(cfg: ExperimentConfig) -> None:
    needs_model = cfg.kind in ("sample", "pressure", "gap", "mean-energy",
                               "entropy", "boundary", "gnz")
    if needs_model and cfg.model_id is None:
        raise ConfigError(f"[model] section required for kind={cfg.kind}")
    if cfg.kind == "minkowski":
        if cfg.minkowski_radius is None:
            raise ConfigError("[minkowski] radius required for kind=minkowski")
    if cfg.kind in ("gap", "mean-energy") and not cfg.laws:
        raise ConfigError(f"[law] section required for kind={cfg.kind}")
