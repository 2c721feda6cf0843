"""Total-variation experiments on 1D periodic step data.

The forward-Euler TVD limit is measured by a CFL scan, and each scheme's
admissible CFL is that limit times the radius of absolute monotonicity of its
explicit part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import total_variation
from ..monotonicity import radius
from ..stepper import SplitSystem, linear_stage_solver, step
from ..tableaux import RKTableau, Tableau, builtin, explicit_part
from .transport import advect_1d, burgers_1d

FLUXES = ("linear", "burgers")
TV_TOL = 1e-12


def step_profile(n: int = 100) -> np.ndarray:
    """Periodic square wave: one on the middle half of the line."""
    x = (np.arange(n) + 0.5) / n
    return np.where(np.abs(x - 0.5) < 0.25, 1.0, 0.0)


def _system(flux: str, scheme: str, dx: float) -> SplitSystem:
    if flux == "linear":
        f = lambda u: advect_1d(u, 1.0, dx, scheme)
    elif flux == "burgers":
        f = lambda u: burgers_1d(u, dx, scheme)
    else:
        raise ValueError(f"unknown flux {flux!r}; expected one of {FLUXES}")
    return SplitSystem(f_explicit=f, stage_solver=linear_stage_solver(0.0))


@dataclass
class TVRun:
    cfl: float
    tv: np.ndarray  # TV before the first step and after each step

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.tv)

    def diminishing(self, tol: float = TV_TOL) -> bool:
        return bool(np.all(self.increments <= tol * self.tv[0]))

    @property
    def max_increase(self) -> float:
        return float(self.increments.max(initial=0.0))


def tv_run(t: Tableau, cfl: float, steps: int = 500, n: int = 100, flux: str = "linear", scheme: str = "upwind1", u0=None) -> TVRun:
    """TV history of ``steps`` steps at ``dt = cfl * dx`` (unit maximal speed)."""
    dx = 1.0 / n
    u = step_profile(n) if u0 is None else np.asarray(u0, dtype=float)
    sys = _system(flux, scheme, dx)
    dt = cfl * dx
    tv = [total_variation(u)]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            u = step(sys, t, u, dt).y_new
            tv.append(total_variation(u) if np.all(np.isfinite(u)) else np.inf)
            if not np.isfinite(tv[-1]):
                break
    return TVRun(cfl, np.array(tv))


def forward_euler_bound(flux: str = "linear", scheme: str = "upwind1", steps: int = 500, n: int = 100, cfl_step: float = 0.01, cfl_max: float = 2.0) -> float:
    """Largest scanned CFL below which every forward-Euler run is TVD."""
    fe = builtin("forward_euler")
    best = 0.0
    for cfl in np.arange(1, int(round(cfl_max / cfl_step)) + 1) * cfl_step:
        if not tv_run(fe, float(cfl), steps, n, flux, scheme).diminishing():
            break
        best = float(cfl)
    return best


def ssp_coefficient(t: Tableau) -> float:
    """Radius of absolute monotonicity of the explicit part (0 for non-SSP schemes)."""
    part = t if isinstance(t, RKTableau) else explicit_part(t)
    return radius(part)


def ssp_bound(t: Tableau, fe_bound: float) -> float:
    return ssp_coefficient(t) * fe_bound


def first_tv_increase(t: Tableau, cfls, steps: int = 500, n: int = 100, flux: str = "linear", scheme: str = "upwind1"):
    """First CFL in ``cfls`` whose run increases TV at some step, else ``None``."""
    for cfl in cfls:
        if not tv_run(t, float(cfl), steps, n, flux, scheme).diminishing():
            return float(cfl)
    return None
