"""Run configuration: flat JSON files, command-line overrides, validation and hashing."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError, InvalidParameterError
from .flow import FlowSettings
from .model import DEFAULT_CUTOFF, DEFAULT_N, DEFAULT_QMAX, DimensionlessParams, ModelParams
from .oracle import SpectralSettings
from .scan import WindowPolicy

FORMATS = ("json", "csv")


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of every command, with defaults. Keys match the JSON config file."""

    lambda0: float = 1.0
    eta: float = 0.0
    cutoff: float = DEFAULT_CUTOFF
    # physical scales; when all three are set, outputs gain physical-unit columns
    mass: float | None = None
    hbar: float | None = None
    omega0: float | None = None
    grid_n: int = DEFAULT_N
    qmax: float = DEFAULT_QMAX
    dt: float = 1e-3
    tmax: float = 60.0
    spinodal_eps: float = 1e-8
    convergence_tol: float = 1e-10
    fit_window: int = 9
    oracle_box: float = 8.0
    oracle_points: int = 2048
    oracle_tilt: float = 1e-3
    etas: tuple | None = None
    lambdas: tuple = (0.1, 0.3, 0.5, 1.0)
    coarse_points: int = 12
    bisections: int = 8
    window_points: int = 10
    chi_ratio: float | None = 5.0
    min_points: int = 6
    fit_span: float | None = None
    scan_table: str | None = None
    jobs: int = 1
    out: str = "."
    format: str = "json"

    def __post_init__(self):
        for name in ("etas", "lambdas"):
            value = getattr(self, name)
            if isinstance(value, list):
                object.__setattr__(self, name, tuple(float(v) for v in value))
        self.validate()

    def validate(self):
        positive = ("lambda0", "cutoff", "qmax", "dt", "tmax", "spinodal_eps",
                    "convergence_tol", "oracle_box", "oracle_tilt")
        for name in positive:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value) or value <= 0:
                raise InvalidParameterError(name, f"must be a positive number, got {value!r}")
        if not isinstance(self.eta, (int, float)) or not math.isfinite(self.eta) or self.eta < 0:
            raise InvalidParameterError("eta", f"must be >= 0, got {self.eta!r}")
        for name in ("mass", "hbar", "omega0", "fit_span", "chi_ratio"):
            value = getattr(self, name)
            if value is not None and (not isinstance(value, (int, float)) or not value > 0):
                raise InvalidParameterError(name, f"must be positive or null, got {value!r}")
        for name, low in (("grid_n", 32), ("oracle_points", 256), ("fit_window", 5),
                          ("coarse_points", 2), ("bisections", 0), ("window_points", 0), ("min_points", 3), ("jobs", 1)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < low:
                raise InvalidParameterError(name, f"must be an integer >= {low}, got {value!r}")
        if self.etas is not None:
            if any(e < 0 for e in self.etas):
                raise InvalidParameterError("etas", "all eta values must be >= 0")
            if any(b <= a for a, b in zip(self.etas, self.etas[1:])):
                raise InvalidParameterError("etas", "must be strictly increasing")
        if not self.lambdas or any(not lam > 0 for lam in self.lambdas):
            raise InvalidParameterError("lambdas", "need at least one coupling, all > 0")
        if self.format not in FORMATS:
            raise InvalidParameterError("format", f"must be one of {FORMATS}, got {self.format!r}")

    @property
    def physical(self):
        return None not in (self.mass, self.hbar, self.omega0)

    def dimensionless(self):
        return DimensionlessParams(lam=self.lambda0, etabar=self.eta, cutbar=self.cutoff)

    def model_params(self):
        """Physical parameters consistent with the dimensionless ones (None unless scales are set)."""
        if not self.physical:
            return None
        lambda0 = self.lambda0 * self.mass**2 * self.omega0**3 / self.hbar
        return ModelParams(mass=self.mass, hbar=self.hbar, omega0=self.omega0, lambda0=lambda0,
                           eta=self.eta * self.mass * self.omega0, cutoff=self.cutoff * self.omega0)

    def flow_settings(self):
        return FlowSettings(t_max=self.tmax, dt=self.dt, spinodal_eps=self.spinodal_eps,
                            convergence_tol=self.convergence_tol)

    def spectral_settings(self):
        return SpectralSettings(box=self.oracle_box, points=self.oracle_points, tilt=self.oracle_tilt)

    def window_policy(self):
        return WindowPolicy(chi_ratio=self.chi_ratio, min_points=self.min_points)

    def to_dict(self):
        data = asdict(self)
        for name in ("etas", "lambdas"):
            if data[name] is not None:
                data[name] = list(data[name])
        return data

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self):
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


KEYS = tuple(f.name for f in fields(RunConfig))


def _coerce(name, value):
    """Accept ints where floats are expected (JSON has one number type)."""
    default = getattr(RunConfig, name, None)
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if name in ("mass", "hbar", "omega0", "fit_span", "chi_ratio") and isinstance(value, int) \
            and not isinstance(value, bool):
        return float(value)
    return value


def from_mapping(data, source="<mapping>"):
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    unknown = sorted(set(data) - set(KEYS))
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {', '.join(unknown)}")
    return RunConfig(**{k: _coerce(k, v) for k, v in data.items()})


def parse_config_text(text, source="<string>"):
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return from_mapping(data, source)


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: not valid UTF-8") from exc
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    from_mapping(data, str(path))
    return data


def load_config(path):
    return from_mapping(_read(path), str(path))


def resolve(path=None, overrides=None, env_out=None):
    """Defaults < ``env_out`` (output directory only) < file < overrides (None means unset)."""
    data = {"out": env_out} if env_out else {}
    if path is not None:
        data.update(_read(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return from_mapping(data, str(path) if path else "<flags>")


def serialize(config: RunConfig):
    return json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n"


__all__ = ["RunConfig", "load_config", "parse_config_text", "resolve", "serialize", "replace"]
