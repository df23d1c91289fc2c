"""Declarative experiment configuration, named presets and schema validation."""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import yaml

from ..channel import LinkConfig
from ..signal import EqConfig, SignalConfig

KINDS = ("scatter", "surface", "sweep", "voa")
CORRECTION_MODES = ("off", "on", "both")
WORKERS_ENV = "MDGSIM_WORKERS"


class ConfigError(ValueError):
    """Configuration does not satisfy the schema; ``path`` names the field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.detail = message


def load_schema() -> dict:
    text = resources.files("mdgsim.experiments").joinpath("config.schema.json").read_text()
    return json.loads(text)


def validate_dict(d: dict) -> None:
    """Raise :class:`ConfigError` on the first schema violation (deepest path first)."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(d), key=lambda e: (-len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        e = errors[0]
        path = ".".join(str(p) for p in e.absolute_path)
        if e.validator == "additionalProperties":
            extra = sorted(set(e.instance) - set(e.schema.get("properties", {})))
            path = ".".join(filter(None, [path, extra[0] if extra else ""]))
            raise ConfigError("unknown field", path)
        raise ConfigError(e.message, path or "<root>")


@dataclass(frozen=True)
class GridSpec:
    """Sweep axes. ``sigma_mdg_targets`` are calibrated to ``sigma_g`` values at run time."""

    snr_db: tuple = (10.0,)
    sigma_g: Optional[tuple] = None
    sigma_mdg_targets: Optional[tuple] = None

    def __post_init__(self):
        if not self.snr_db:
            raise ConfigError("grid needs at least one SNR value", "grid.snr_db")
        snr = tuple(math.inf if (s == "inf" or s == math.inf) else float(s) for s in self.snr_db)
        object.__setattr__(self, "snr_db", snr)
        for name in ("sigma_g", "sigma_mdg_targets"):
            v = getattr(self, name)
            if v is not None:
                if len(v) == 0:
                    raise ConfigError("grid axis must be nonempty", f"grid.{name}")
                object.__setattr__(self, name, tuple(float(x) for x in v))

    def to_dict(self) -> dict:
        d = {"snr_db": ["inf" if math.isinf(s) else s for s in self.snr_db]}
        if self.sigma_g is not None:
            d["sigma_g"] = list(self.sigma_g)
        if self.sigma_mdg_targets is not None:
            d["sigma_mdg_targets"] = list(self.sigma_mdg_targets)
        return d


@dataclass(frozen=True)
class VoaGrid:
    cases: tuple = (1, 2, 3, 4)
    steps_db: tuple = tuple(float(x) for x in range(13))
    coupling_kappa: float = 0.1
    baseline_db: tuple = (0.0, 0.0, 0.0)
    # SNR of the unloaded reference measurement; None uses the channel itself
    intrinsic_snr_db: Optional[float] = 38.5
    signal_chain: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cases"] = list(self.cases)
        d["steps_db"] = list(self.steps_db)
        d["baseline_db"] = list(self.baseline_db)
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    link: LinkConfig = field(default_factory=LinkConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    trials: int = 5
    correction: str = "both"
    seed: int = 0
    workers: Optional[int] = None
    signal: SignalConfig = field(default_factory=SignalConfig)
    equalizer: EqConfig = field(default_factory=lambda: EqConfig(taps_per_filter=60))
    voa: VoaGrid = field(default_factory=VoaGrid)
    n_points: int = 512
    preset: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}", "kind")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1", "trials")
        if self.correction not in CORRECTION_MODES:
            raise ConfigError(f"correction must be one of {CORRECTION_MODES}", "correction")
        if self.kind != "voa" and self.grid.sigma_g is None and self.grid.sigma_mdg_targets is None:
            raise ConfigError("grid needs sigma_g or sigma_mdg_targets", "grid")
        if self.kind == "voa" and (not self.voa.cases or not self.voa.steps_db):
            raise ConfigError("VOA grid must be nonempty", "voa")

    @property
    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                n = int(env)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}", WORKERS_ENV) from None
            return max(1, n)
        return 1

    def to_dict(self) -> dict:
        link = asdict(self.link)
        link.pop("sigma_g")
        link.pop("seed")
        sig = asdict(self.signal)
        eq = asdict(self.equalizer)
        eq.pop("supervised")
        d = {
            "kind": self.kind,
            "seed": self.seed,
            "trials": self.trials,
            "correction": self.correction,
            "n_points": self.n_points,
            "link": link,
            "grid": self.grid.to_dict(),
            "signal": sig,
            "equalizer": eq,
            "voa": self.voa.to_dict(),
        }
        if self.workers is not None:
            d["workers"] = self.workers
        if self.preset is not None:
            d["preset"] = self.preset
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        """Validate ``d`` (after overlaying its ``preset``, if any) and build a config."""
        merged = resolve(d)
        validate_dict(merged)
        if "kind" not in merged:
            raise ConfigError("missing required field", "kind")
        try:
            return cls(
                kind=merged["kind"],
                link=LinkConfig(**merged.get("link", {})),
                grid=GridSpec(**merged.get("grid", {})),
                trials=merged.get("trials", 5),
                correction=merged.get("correction", "both"),
                seed=merged.get("seed", 0),
                workers=merged.get("workers"),
                signal=SignalConfig(**merged.get("signal", {})),
                equalizer=EqConfig(**{"taps_per_filter": 60, **merged.get("equalizer", {})}),
                voa=_voa_from(merged.get("voa", {})),
                n_points=merged.get("n_points", 512),
                preset=merged.get("preset"),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _voa_from(d: dict) -> VoaGrid:
    d = dict(d)
    for k in ("cases", "steps_db", "baseline_db"):
        if k in d:
            d[k] = tuple(d[k])
    return VoaGrid(**d)


# -- presets -----------------------------------------------------------------

_LONG_HAUL = {"spatial_modes": 6, "spans": 100, "span_length": 50.0, "gd_coeff": 3.1, "bandwidth": 240.0}
# 3-mode link short enough that 60 T/2-spaced taps span the impulse response
_DESK_LINK = {"spatial_modes": 3, "spans": 20, "span_length": 5.0, "gd_coeff": 3.1, "n_bins": 200, "bandwidth": 240.0}

PRESETS = {
    "scatter": {
        "kind": "scatter",
        "trials": 1,
        "link": dict(_LONG_HAUL, n_bins=200),
        "grid": {"sigma_mdg_targets": [1.2, 5.5], "snr_db": [5, 15]},
    },
    "surface-desk": {
        "kind": "surface",
        "trials": 5,
        "link": dict(_LONG_HAUL, n_bins=200),
        "grid": {
            "sigma_mdg_targets": [1.0 + 0.5 * i for i in range(19)],
            "snr_db": [float(s) for s in range(2, 25)],
        },
    },
    "surface-full": {
        "kind": "surface",
        "trials": 5,
        "link": dict(_LONG_HAUL, n_bins=1000),
        "grid": {
            "sigma_mdg_targets": [1.0 + 0.5 * i for i in range(19)],
            "snr_db": [float(s) for s in range(2, 25)],
        },
    },
    "sweep-desk": {
        "kind": "sweep",
        "trials": 3,
        "link": dict(_DESK_LINK),
        "grid": {"sigma_mdg_targets": [2.0, 4.0, 6.0], "snr_db": [10, 15, "inf"]},
        "signal": {"symbols_per_stream": 100_000},
        "equalizer": {"taps_per_filter": 60, "step_size": 5e-4, "epochs": 1},
    },
    "sweep-full": {
        "kind": "sweep",
        "trials": 3,
        "link": dict(_LONG_HAUL, n_bins=1000),
        "grid": {"sigma_mdg_targets": [2.0, 4.0, 6.0, 8.0], "snr_db": [10, 15, 20, "inf"]},
        "signal": {"symbols_per_stream": 400_000},
        "equalizer": {"taps_per_filter": 100, "step_size": 2e-4, "epochs": 1},
    },
    "voa": {
        "kind": "voa",
        "trials": 1,
        "link": {"spatial_modes": 3, "n_bins": 1},
        "grid": {"snr_db": [12, 17]},
        "voa": {"cases": [1, 2, 3, 4], "steps_db": [0.5 * i for i in range(25)], "coupling_kappa": 0.1,
                "baseline_db": [0.7, 0.0, 0.0], "intrinsic_snr_db": 38.5, "signal_chain": False},
    },
}


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve(d: dict) -> dict:
    """Overlay ``d`` on its named preset (if any); ``d`` wins field by field."""
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a mapping", "<root>")
    name = d.get("preset")
    if name is None:
        return copy.deepcopy(d)
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", "preset")
    return _deep_merge(PRESETS[name], d)


def preset(name: str, **overrides) -> ExperimentConfig:
    return ExperimentConfig.from_dict(_deep_merge({"preset": name}, overrides))


def read_config_file(path) -> dict:
    """Parse a YAML or JSON config file into a dict (no validation)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config: {exc}", str(path)) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping", "<root>")
    return data


def load_config(path, **overrides) -> ExperimentConfig:
    d = read_config_file(path)
    d = _deep_merge(d, {k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(d)
