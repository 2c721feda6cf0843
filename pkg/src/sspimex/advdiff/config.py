"""``key = value`` run configuration for the advection-diffusion lab."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from ..grid import GridField, spacing
from ..tableaux import SCHEMES, builtin
from .simulation import CourantNumbers, TransportProblem
from .transport import ADVECTION_SCHEMES, DIFFUSION_STENCILS, VelocityField

PROFILES = ("constant", "linear", "gaussian", "step", "sine")
VELOCITIES = ("none", "uniform", "cellular")
PERTURBATIONS = ("none", "noise", "sawtooth")


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


@dataclass
class RunConfig:
    nx: int = 32
    ny: int = 32
    Lx: float = 1.0
    Ly: float = 1.0
    kappa_T: float = 1.0
    kappa_c: float = 1.0
    C_c: float = 0.2
    C_T: float = 0.2
    C_visc: float = 0.2
    C_fluid: float = 0.5
    eta_over_rho: float = 0.0
    gravity: float = 0.0
    scheme: str = "imex_ssp2_222"
    gamma: float = math.nan
    stencil: str = "threepoint"
    advection: str = "upwind1"
    velocity: str = "none"
    u0: float = 0.0
    v0: float = 0.0
    amplitude: float = 0.0
    initial_T: str = "gaussian"
    initial_c: str = "constant"
    T_bottom: float = 0.0
    T_top: float = 0.0
    c_bottom: float = 0.0
    c_top: float = 0.0
    perturbation: str = "none"
    perturbation_amplitude: float = 0.0
    t_end: float = 0.01
    dt_factor: float = 1.0
    dt_scan: tuple = ()
    controller: bool = True
    scan_vertical: bool = False
    snapshot_every: int = 0
    max_steps: int = 100_000
    cg_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("nx and ny must be positive")
        if self.Lx <= 0 or self.Ly <= 0 or self.t_end <= 0 or self.dt_factor <= 0:
            raise ConfigError("Lx, Ly, t_end and dt_factor must be positive")
        if self.kappa_T <= 0 or self.kappa_c <= 0:
            raise ConfigError("kappa_T and kappa_c must be positive")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        for key, allowed in (
            ("stencil", DIFFUSION_STENCILS),
            ("advection", ADVECTION_SCHEMES),
            ("velocity", VELOCITIES),
            ("initial_T", PROFILES),
            ("initial_c", PROFILES),
            ("perturbation", PERTURBATIONS),
        ):
            if getattr(self, key) not in allowed:
                raise ConfigError(f"{key} must be one of {allowed}, got {getattr(self, key)!r}")
        if any(f <= 0 for f in self.dt_scan):
            raise ConfigError("dt_scan factors must be positive")

    def tableau(self):
        try:
            return builtin(self.scheme, None if math.isnan(self.gamma) else self.gamma)
        except Exception as exc:
            raise ConfigError(str(exc)) from exc


_CONVERTERS = {int: int, float: float, str: str.strip, bool: _bool, tuple: _floats}


def parse_config(text: str, **overrides) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    types = {f.name: f.type for f in fields(RunConfig)}
    types = {k: {"int": int, "float": float, "str": str, "bool": bool, "tuple": tuple}[v] for k, v in types.items()}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[types[key]](val.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def load_config(path, **overrides) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


def _profile(kind, X, Y, Lx, Ly, bottom, top):
    if kind == "constant":
        return np.zeros_like(X) + 0.5 * (bottom + top)
    if kind == "linear":
        return bottom + (top - bottom) * Y / Ly
    if kind == "gaussian":
        r2 = (X - 0.5 * Lx) ** 2 + (Y - 0.5 * Ly) ** 2
        return np.exp(-r2 / (0.1 * min(Lx, Ly)) ** 2)
    if kind == "step":
        return np.where(np.abs(X - 0.5 * Lx) < 0.25 * Lx, 1.0, 0.0)
    if kind == "sine":
        return np.sin(2 * np.pi * X / Lx) * np.sin(np.pi * Y / Ly)
    raise ConfigError(f"unknown profile {kind!r}")


def build_problem(cfg: RunConfig) -> TransportProblem:
    dx, dy = spacing(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly)
    x = np.arange(cfg.nx) * dx
    y = (np.arange(cfg.ny) + 1) * dy
    X, Y = np.meshgrid(x, y, indexing="ij")
    T = _profile(cfg.initial_T, X, Y, cfg.Lx, cfg.Ly, cfg.T_bottom, cfg.T_top)
    c = _profile(cfg.initial_c, X, Y, cfg.Lx, cfg.Ly, cfg.c_bottom, cfg.c_top)
    if cfg.perturbation != "none" and cfg.perturbation_amplitude:
        rng = np.random.default_rng(cfg.seed)
        if cfg.perturbation == "noise":
            pert = rng.uniform(-1.0, 1.0, size=T.shape)
        else:
            # grid-scale in x, smooth in y
            pert = (-1.0) ** np.arange(cfg.nx)[:, None] * rng.uniform(0.5, 1.0, size=(cfg.nx, 1)) * np.sin(np.pi * Y / cfg.Ly)
        T = T + cfg.perturbation_amplitude * pert
        c = c + cfg.perturbation_amplitude * pert
    if cfg.velocity == "none":
        vel = VelocityField.zero(cfg.nx, cfg.ny)
    elif cfg.velocity == "uniform":
        if cfg.v0 != 0.0:
            raise ConfigError("a uniform velocity must be horizontal (v0 = 0) to respect the walls")
        vel = VelocityField.uniform(cfg.nx, cfg.ny, cfg.u0, 0.0)
    else:
        vel = VelocityField.cellular(cfg.nx, cfg.ny, dx, dy, cfg.amplitude)
    return TransportProblem(
        T=GridField(T, dx, dy, cfg.T_bottom, cfg.T_top),
        c=GridField(c, dx, dy, cfg.c_bottom, cfg.c_top),
        velocity=vel,
        kappa_T=cfg.kappa_T,
        kappa_c=cfg.kappa_c,
        courant=CourantNumbers(cfg.C_c, cfg.C_T, cfg.C_visc, cfg.C_fluid),
        eta_over_rho=cfg.eta_over_rho,
        gravity=cfg.gravity,
        advection=cfg.advection,
    )
