"""Experiment configuration: a TOML file plus command-line overrides.

All rates and times are expressed in units of gamma (gamma defaults to 1
and is only overridden deliberately).  A configuration resolves to a plain
nested dict that round-trips losslessly through the TOML writer below,
which is what makes re-runs bit-reproducible.
"""

import json
import sys
from dataclasses import asdict, dataclass, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from importlib import resources

from .errors import ConfigError
from .lattice import LatticeGeometry, build_chain, build_rect

METHODS = ("rk4", "jump", "homodyne", "spectrum")
DIRECTIONS = ("+x", "-x", "+y", "-y", "+z", "-z")
MAX_OUTPUT_ROWS = 10_000


@dataclass(frozen=True)
class ExperimentConfig:
    # lattice
    lx: int = 2
    ly: int = 1
    periodic: bool = True
    double_bonds: bool = False  # keep coincident wrap bonds instead of merging
    # couplings (units of gamma)
    jx: float = 0.9
    jy: float = 1.1
    jz: float = 1.0
    gamma: float = 1.0
    # run
    method: str = "rk4"
    dt: float = 1e-3
    t_max: float = 20.0
    t_total: float | None = None   # per-trajectory span for sampling runs
    t_s: float | None = None       # discard-before time for histograms
    n_traj: int | None = None
    base_seed: int = 7
    record_every: int | None = None
    initial_state: str | None = None  # default depends on the command
    fit_t_start: float = 5.0
    fit_t_end: float | None = None
    n_bins: int = 81
    n_workers: int = 1
    # output
    output_dir: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.method not in METHODS:
            raise ConfigError(f"run.method must be one of {METHODS}, got {self.method!r}")
        if self.lx < 1 or self.ly < 1:
            raise ConfigError(f"lattice.lx/ly must be positive, got {self.lx}x{self.ly}")
        for key in ("dt", "t_max"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be nonnegative, got {self.gamma}")
        for key in ("t_total", "t_s", "fit_t_end"):
            value = getattr(self, key)
            if value is not None and value <= 0:
                raise ConfigError(f"{key} must be positive, got {value}")
        if self.fit_t_start < 0:
            raise ConfigError(f"fit_t_start must be nonnegative, got {self.fit_t_start}")
        if self.method in ("jump", "homodyne"):
            if self.n_traj is None or self.n_traj < 1:
                raise ConfigError(f"run.n_traj is required for method {self.method!r}")
        if self.record_every is not None and self.record_every < 1:
            raise ConfigError("run.record_every must be a positive integer")
        if self.base_seed < 0:
            raise ConfigError(f"run.base_seed must be nonnegative, got {self.base_seed}")
        if self.initial_state is not None and self.initial_state not in DIRECTIONS:
            raise ConfigError(
                f"run.initial_state must be one of {DIRECTIONS}, got {self.initial_state!r}")
        if self.n_bins < 2:
            raise ConfigError(f"run.n_bins must be at least 2, got {self.n_bins}")
        if self.n_workers < 1:
            raise ConfigError("run.n_workers must be a positive integer")
        return self

    # --- derived quantities ---------------------------------------------

    def geometry(self) -> LatticeGeometry:
        if self.lx == 1 and self.ly == 1:
            return LatticeGeometry((1, 1), 1, (), self.periodic)  # single spin
        dedupe = not self.double_bonds
        if self.ly == 1:
            return build_chain(self.lx, self.periodic, dedupe=dedupe)
        return build_rect(self.lx, self.ly, self.periodic, dedupe=dedupe)

    def couplings(self):
        from .operators import Couplings

        return Couplings(self.jx, self.jy, self.jz, self.gamma)

    def span(self) -> float:
        """Integration span: t_total for sampling runs, else t_max."""
        return self.t_total if self.t_total is not None else self.t_max

    def resolved_record_every(self, span: float | None = None) -> int:
        """Explicit record_every, or the smallest stride keeping the output
        at or under MAX_OUTPUT_ROWS rows."""
        if self.record_every is not None:
            return self.record_every
        n_steps = round((span if span is not None else self.span()) / self.dt)
        return max(1, -(-n_steps // (MAX_OUTPUT_ROWS - 1)))

    def with_updates(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)

    # --- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        flat = asdict(self)
        out = {
            "lattice": {k: flat[k] for k in ("lx", "ly", "periodic", "double_bonds")},
            "couplings": {k: flat[k] for k in ("jx", "jy", "jz", "gamma")},
            "run": {k: flat[k] for k in (
                "method", "dt", "t_max", "t_total", "t_s", "n_traj", "base_seed",
                "record_every", "initial_state", "fit_t_start", "fit_t_end",
                "n_bins", "n_workers") if flat[k] is not None},
            "output": {k: flat[k] for k in ("output_dir",) if flat[k] is not None},
        }
        return {k: v for k, v in out.items() if v}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {section: dict(data.get(section, {}))
                 for section in ("lattice", "couplings", "run", "output")}
        unknown = set(data) - {"lattice", "couplings", "run", "output"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for section, contents in known.items():
            for key, value in contents.items():
                if key not in cls.__dataclass_fields__:
                    raise ConfigError(f"unknown config key {section}.{key}")
                kwargs[key] = value
        try:
            return cls(**kwargs).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def toml_dumps(data: dict) -> str:
    """Serialize the nested config dict as TOML (scalars, lists, one table level)."""
    lines = []
    for section, contents in data.items():
        lines.append(f"[{section}]")
        for key, value in contents.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize config value {value!r}")


def load_config(path: str) -> ExperimentConfig:
    """Parse a TOML experiment file; parse errors carry line information."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def load_preset(name: str) -> ExperimentConfig:
    """Load one of the packaged experiment presets by name."""
    pkg_files = resources.files("xyzsim") / "presets"
    candidate = pkg_files / f"{name}.toml"
    if not candidate.is_file():
        available = sorted(p.name[:-5] for p in pkg_files.iterdir()
                           if p.name.endswith(".toml"))
        raise ConfigError(f"unknown preset {name!r}; available: {available}")
    data = tomllib.loads(candidate.read_text())
    return ExperimentConfig.from_dict(data)


def apply_overrides(config: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply `section.key=value` strings (CLI flags win over the file)."""
    updates = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, _, raw = item.partition("=")
        parts = dotted.strip().split(".")
        key = parts[-1]
        if key not in ExperimentConfig.__dataclass_fields__:
            raise ConfigError(f"unknown config key {dotted.strip()!r}")
        updates[key] = _parse_scalar(raw.strip())
    return config.with_updates(**updates).validate()


def _parse_scalar(raw: str):
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("none", "null"):
        return None
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw
