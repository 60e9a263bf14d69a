"""Run configuration: flat ``key = value`` files with ``#`` comments."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .fields import GridSpec
from .model import GammaLaw, ModelError, ModelParams, NonMonotone


class ConfigError(ValueError):
    pass


INIT_MODES = ("equilibrium", "random_smooth", "manufactured")


@dataclass
class RunConfig:
    # grid
    n: int = 32
    L: float = 6.283185307179586
    # model
    mu: float = 0.1
    lambda_: float = 0.1
    rho_tilde: float = 1.0
    H_tilde: tuple = (1.0, 1.0, 1.0)
    pressure: str = "gamma"
    K: float = 1.0
    gamma: float = 1.4
    rho_prime: float = 0.0
    rho_double_prime: float = 0.0
    stiffness: float = 1.0
    rho_lower: float = 0.5
    rho_upper: float = 1.5
    d: float = 0.25
    # initial data
    init: str = "random_smooth"
    seed: int = 0
    spectral_decay_rate: float = 2.0
    target_C0: float = 1e-2
    max_mode: int = 3
    manufactured_case: int = 1
    shrink_to_corridor: bool = True
    # time stepping
    t_end: float = 1.0
    dt: float = 0.0
    cfl: float = 0.4
    visc_cfl: float = 0.08
    # cadences (in steps)
    diagnostics_every: int = 1
    snapshot_every: int = 100
    particles_every: int = 1
    particles_per_axis: int = 4
    # flags
    dealias: bool = True
    deterministic: bool = True
    spectral_interp: bool = False
    output: str = "run_output"
    div_tol_scale: float = 1e-8

    def validate(self) -> "RunConfig":
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.dt < 0:
            raise ConfigError("dt must be >= 0 (0 selects the CFL step)")
        if self.dt == 0 and not self.cfl > 0:
            raise ConfigError("cfl must be positive when dt = 0")
        for name in ("diagnostics_every", "snapshot_every", "particles_every", "particles_per_axis"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.init not in INIT_MODES:
            raise ConfigError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.init == "random_smooth" and not self.target_C0 > 0:
            raise ConfigError("target_C0 must be positive for random_smooth")
        if len(self.H_tilde) != 3:
            raise ConfigError("H_tilde needs three components")
        self.grid()
        self.params()
        return self

    def grid(self) -> GridSpec:
        try:
            return GridSpec(int(self.n), float(self.L))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def pressure_law(self):
        if self.pressure == "gamma":
            return GammaLaw(self.K, self.gamma)
        if self.pressure == "nonmonotone":
            return NonMonotone(self.rho_prime, self.rho_double_prime, self.stiffness)
        raise ConfigError(f"unknown pressure law {self.pressure!r}")

    def params(self) -> ModelParams:
        try:
            return ModelParams(mu=self.mu, lambda_=self.lambda_, rho_tilde=self.rho_tilde,
                               H_tilde=tuple(self.H_tilde), pressure=self.pressure_law(),
                               rho_lower=self.rho_lower, rho_upper=self.rho_upper, d=self.d)
        except ModelError as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _coerce(name: str, text: str, default):
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(float(x) for x in text.replace("(", "").replace(")", "").split(","))
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def parse_config(text: str) -> RunConfig:
    defaults = RunConfig()
    known = {f.name: getattr(defaults, f.name) for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, val, known[key])
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def format_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(float(x)) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


