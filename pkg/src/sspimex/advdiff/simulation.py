"""Two-scalar advection-diffusion runs with explicit advection and implicit diffusion."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..elliptic import CGFailure, DiffusionStageSolver
from ..grid import GridField, total_variation
from ..stepper import SplitSystem, StageSolveError, step
from ..tableaux import AdditiveTableau, Tableau
from .control import StepControllerState, controller_update, line_counts
from .transport import VelocityField, advect, diffuse_stencil

TRAJECTORY_COLUMNS = ("step", "time", "dt", "osc_count", "cg_iters", "tv_T", "tv_c", "min_c", "max_c")
BLOWUP_FACTOR = 1e6


@dataclass
class CourantNumbers:
    C_c: float = 0.2
    C_T: float = 0.2
    C_visc: float = 0.2
    C_fluid: float = 0.5


@dataclass
class TransportProblem:
    T: GridField
    c: GridField
    velocity: VelocityField
    kappa_T: float
    kappa_c: float
    courant: CourantNumbers = field(default_factory=CourantNumbers)
    eta_over_rho: float = 0.0
    gravity: float = 0.0
    advection: str = "upwind1"

    def __post_init__(self):
        if not (self.kappa_T > 0 and self.kappa_c > 0):
            raise ValueError("diffusivities must be positive")
        if self.T.shape != self.c.shape or (self.T.dx, self.T.dy) != (self.c.dx, self.c.dy):
            raise ValueError("T and c must share one grid")
        nx, ny = self.T.shape
        if self.velocity.u.shape != (nx, ny) or self.velocity.v.shape != (nx, ny + 1):
            raise ValueError("velocity does not match the grid")
        if np.any(self.velocity.v[:, 0] != 0) or np.any(self.velocity.v[:, -1] != 0):
            raise ValueError("velocity must not cross the walls")
        if self.eta_over_rho < 0 or self.gravity < 0:
            raise ValueError("eta_over_rho and gravity must be nonnegative")

    @property
    def dx(self):
        return self.T.dx

    @property
    def dy(self):
        return self.T.dy

    @property
    def shape(self):
        return self.T.shape


@dataclass
class TimeStepLimits:
    dt: float
    tau_c: float
    tau_T: float
    tau_visc: float
    tau_fluid: float

    def implicit_cap(self) -> float:
        """Limit once both diffusion terms are implicit."""
        return min(self.tau_visc, self.tau_fluid)


def explicit_dt_limit(p: TransportProblem) -> TimeStepLimits:
    h2 = min(p.dx, p.dy) ** 2
    cn = p.courant
    tau_c = cn.C_c / p.kappa_c * h2
    tau_T = cn.C_T / p.kappa_T * h2
    tau_visc = cn.C_visc / p.eta_over_rho * h2 if p.eta_over_rho > 0 else math.inf
    speed = p.velocity.max_speed()
    tau_fluid = cn.C_fluid / speed * min(p.dx, p.dy) if speed > 0 else math.inf
    return TimeStepLimits(min(tau_c, tau_T, tau_visc, tau_fluid), tau_c, tau_T, tau_visc, tau_fluid)


def buoyancy_timescale(p: TransportProblem) -> float:
    if p.gravity <= 0:
        return math.inf
    return math.sqrt(min(p.dx, p.dy)) / math.sqrt(p.gravity)


def split_system(p: TransportProblem, stencil: str = "threepoint", cg_tol: float = 1e-10) -> SplitSystem:
    """State is the stacked array ``(2, nx, ny)`` holding T and c."""
    kappas = (p.kappa_T, p.kappa_c)
    walls = ((p.T.bottom, p.T.top), (p.c.bottom, p.c.top))
    dx, dy = p.dx, p.dy

    def fields(y):
        return [GridField(y[k], dx, dy, *walls[k]) for k in range(2)]

    def f(y):
        return np.stack([advect(g, p.velocity, p.advection) for g in fields(y)])

    def g(y):
        return np.stack([kappas[k] * diffuse_stencil(fld, stencil) for k, fld in enumerate(fields(y))])

    solver = DiffusionStageSolver(
        list(kappas),
        dx,
        dy,
        bottom=[w[0] for w in walls],
        top=[w[1] for w in walls],
        stencil=stencil,
        tol=cg_tol,
    )
    return SplitSystem(f_explicit=f, g_implicit=g, stage_solver=solver, dimension=2 * p.T.values.size)


@dataclass
class SimulationResult:
    status: str
    records: list
    T: np.ndarray
    c: np.ndarray
    time: float
    dt_cap: float
    limits: TimeStepLimits
    message: str = ""
    snapshots: list = field(default_factory=list, repr=False)
    rejected_steps: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=TRAJECTORY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.records:
            w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()

    def diagnostics(self) -> dict:
        return {
            "status": self.status,
            "message": self.message,
            "time": self.time,
            "steps": len(self.records) - 1,
            "rejected_steps": self.rejected_steps,
            "dt_cap": self.dt_cap,
            "limits": {k: getattr(self.limits, k) for k in ("dt", "tau_c", "tau_T", "tau_visc", "tau_fluid")},
        }


def _osc_count(y, scan_vertical: bool) -> int:
    counts = [line_counts(y[k], "horizontal").max(initial=0) for k in range(2)]
    if scan_vertical:
        counts += [line_counts(y[k], "vertical").max(initial=0) for k in range(2)]
    return int(max(counts))


def run_simulation(
    p: TransportProblem,
    t: Tableau,
    stencil: str = "threepoint",
    t_end: float = 1.0,
    controller: bool = True,
    dt: float | None = None,
    max_steps: int = 100_000,
    snapshot_every: int = 0,
    scan_vertical: bool = False,
    cg_tol: float = 1e-10,
) -> SimulationResult:
    """Advance T and c to ``t_end``.

    The initial step is the explicit limit unless ``dt`` is given.  With the
    controller on, ``dt`` never exceeds ``dt_cap``: the advective (and
    viscous) limits for IMEX tableaux, all four limits for explicit ones.  A
    step whose worst line exceeds the detection limit outside a hold period is
    repeated with the reduced step.
    """
    limits = explicit_dt_limit(p)
    implicit = isinstance(t, AdditiveTableau)
    dt_cap = limits.implicit_cap() if implicit else limits.dt
    if not math.isfinite(dt_cap):
        dt_cap = t_end
    dt0 = limits.dt if dt is None else float(dt)
    if not dt0 > 0:
        raise ValueError("dt must be positive")
    state = StepControllerState(dt=min(dt0, dt_cap) if controller else dt0, dt_cap=dt_cap if controller else max(dt0, dt_cap))

    sys = split_system(p, stencil, cg_tol)
    solver = sys.stage_solver
    y = np.stack([p.T.values, p.c.values]).astype(float)
    scale = max(1.0, float(np.abs(y).max()), abs(p.T.bottom), abs(p.T.top), abs(p.c.bottom), abs(p.c.top))
    line_length = p.shape[0]
    time, n = 0.0, 0
    records, snapshots = [], []
    rejected = 0

    def result(status, message=""):
        return SimulationResult(status, records, y[0], y[1], time, dt_cap, limits, message, snapshots, rejected)

    def record(n, time, h, osc, cg_iters):
        records.append(
            {
                "step": n,
                "time": time,
                "dt": h,
                "osc_count": osc,
                "cg_iters": cg_iters,
                "tv_T": total_variation(y[0], walls=(p.T.bottom, p.T.top)),
                "tv_c": total_variation(y[1], walls=(p.c.bottom, p.c.top)),
                "min_c": float(y[1].min()),
                "max_c": float(y[1].max()),
            }
        )

    record(0, 0.0, 0.0, _osc_count(y, scan_vertical), 0)
    if snapshot_every:
        snapshots.append((0, 0.0, y.copy()))
    while time < t_end * (1 - 1e-14):
        if n >= max_steps:
            return result("max_steps", f"stopped after {max_steps} steps at t={time:g}")
        if controller and state.dt < 1e-12 * dt_cap:
            return result("dt_underflow", f"dt={state.dt:.3e} fell below 1e-12 * dt_cap at t={time:g}")
        h = min(state.dt, t_end - time)
        cg_iters = 0
        try:
            solver.total_iterations = 0
            rec = step(sys, t, y, h)
            cg_iters = solver.total_iterations
        except StageSolveError as exc:
            cause = exc.cause
            while isinstance(cause, StageSolveError):
                cause = cause.cause
            if isinstance(cause, CGFailure):
                return result("cg_failure", str(exc))
            raise
        y_new = rec.y_new
        if not np.all(np.isfinite(y_new)) or np.abs(y_new).max() > BLOWUP_FACTOR * scale:
            y = np.where(np.isfinite(y_new), y_new, np.nan)
            time += h
            return result("blowup", f"solution exceeded {BLOWUP_FACTOR:g} x initial scale at t={time:g}")
        osc = _osc_count(y_new, scan_vertical)
        if controller:
            if state.rejects(osc, line_length):
                state = controller_update(state, osc, line_length)
                rejected += 1
                continue
            state = controller_update(state, osc, line_length)
        y = y_new
        time += h
        n += 1
        record(n, time, h, osc, cg_iters)
        if snapshot_every and n % snapshot_every == 0:
            snapshots.append((n, time, y.copy()))
    return result("ok")
