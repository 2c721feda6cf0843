"""Empirical convergence order and error constants on ``y' = (1 + sin y) + (y^2 - sin y)``.

The exact solution from ``y(0) = 0`` is ``tan(t)``; errors are measured at
``t = 1.3``.  The first bracket is treated explicitly and the second
implicitly.  The error constant ``C`` is the least-squares fit of
``log(error) = log(C) + p log(dt)`` with ``p`` fixed at the nominal order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .stepper import SplitSystem, StageSolveError, integrate, newton_scalar
from .tableaux import NOMINAL_ORDER, Tableau, builtin

T_END = 1.3
EXACT = math.tan(T_END)
DEFAULT_KS = tuple(range(6, 13))
ORDER_SLACK = 0.3


def _f(y):
    return 1.0 + math.sin(y)


def _g(y):
    return y * y - math.sin(y)


def _dg(y):
    return 2.0 * y - math.cos(y)


def nonlinear_split_system() -> SplitSystem:
    return SplitSystem(f_explicit=_f, g_implicit=_g, stage_solver=newton_scalar(_g, _dg))


def run_test_problem(t: Tableau, dt: float) -> float:
    """``|y_num(1.3) - tan(1.3)|`` for a uniform step ``dt``."""
    n = T_END / dt
    if abs(n - round(n)) > 1e-9 * max(n, 1.0):
        raise ValueError(f"dt={dt} does not divide {T_END}")
    y = integrate(nonlinear_split_system(), t, 0.0, T_END, dt)
    if not math.isfinite(y):
        raise StageSolveError(f"solution blew up at dt={dt}")
    return abs(y - EXACT)


@dataclass
class ConvergenceReport:
    scheme: str
    order: int
    step_sizes: np.ndarray
    errors: np.ndarray
    fitted_order: float
    order_residual: float
    fitted_constant: float
    gamma: float | None = None
    valid: bool = field(init=False)

    def __post_init__(self):
        self.valid = bool(np.all(self.errors > 0)) and abs(self.fitted_order - self.order) <= ORDER_SLACK

    def summary(self) -> dict:
        return {
            "scheme": self.scheme,
            "gamma": self.gamma,
            "order": self.order,
            "fitted_order": self.fitted_order,
            "order_residual": self.order_residual,
            "fitted_constant": self.fitted_constant,
            "valid": self.valid,
        }


def fit_error_constant(
    t: Tableau,
    p: int | None = None,
    ks=DEFAULT_KS,
    label: str | None = None,
) -> ConvergenceReport:
    """Run ``dt = 1.3 / 2**k`` for each ``k`` and fit ``error ~ C dt**p``."""
    name = label or t.label
    if p is None:
        p = NOMINAL_ORDER[t.label]
    dts = np.array([T_END / 2**k for k in ks])
    errs = np.array([run_test_problem(t, dt) for dt in dts])
    logdt, logerr = np.log(dts), np.log(errs)
    (slope, intercept), res, *_ = np.polyfit(logdt, logerr, 1, full=True)
    resid = float(np.sqrt(res[0] / len(dts))) if len(res) else 0.0
    log_c = float(np.mean(logerr - p * logdt))
    return ConvergenceReport(
        scheme=name,
        order=p,
        step_sizes=dts,
        errors=errs,
        fitted_order=float(slope),
        order_residual=resid,
        fitted_constant=math.exp(log_c),
        gamma=getattr(t, "gamma", None),
    )


def gamma_sweep(gammas=None, ks=DEFAULT_KS) -> list[ConvergenceReport]:
    """Error constants of the SSP2(2,2,2) family over a grid of gamma."""
    if gammas is None:
        gammas = np.round(np.arange(0.05, 0.45 + 1e-9, 0.005), 6)
    return [fit_error_constant(builtin("imex_ssp2_222", gamma=float(g)), 2, ks=ks) for g in gammas]


def sweep_minimum(reports: list[ConvergenceReport]) -> float:
    k = int(np.argmin([r.fitted_constant for r in reports]))
    return reports[k].gamma


def reports_csv(reports: list[ConvergenceReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "gamma", "dt", "error"])
    for r in reports:
        for dt, e in zip(r.step_sizes, r.errors):
            w.writerow([r.scheme, "" if r.gamma is None else repr(float(r.gamma)), repr(float(dt)), repr(float(e))])
    return buf.getvalue()


def reports_json(reports: list[ConvergenceReport]) -> str:
    return json.dumps([r.summary() for r in reports], indent=2)
