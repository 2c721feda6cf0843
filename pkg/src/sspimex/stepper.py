"""One-step integration of ``y' = F(y) + G(y)`` with additive RK tableaux."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .tableaux import AdditiveTableau, RKTableau, Tableau

State = Any  # float, complex or ndarray


class StageSolveError(RuntimeError):
    """An implicit stage solve failed; ``stage`` is the 0-based stage index."""

    def __init__(self, message: str, stage: int | None = None, cause: Exception | None = None):
        super().__init__(message if stage is None else f"stage {stage}: {message}")
        self.stage = stage
        self.cause = cause


def _zero_field(y):
    return 0.0 * y


@dataclass
class SplitSystem:
    """Right-hand side split into an explicit field F and an implicit field G.

    ``stage_solver(y_star, coeff)`` must return ``y`` with
    ``y = y_star + coeff * G(y)``.  Systems without an implicit part can leave
    ``g_implicit`` and ``stage_solver`` unset.
    """

    f_explicit: Callable[[State], State]
    g_implicit: Callable[[State], State] = _zero_field
    stage_solver: Optional[Callable[[State, float], State]] = None
    dimension: int = 1


@dataclass
class StepRecord:
    y_new: State
    stage_values: list = field(repr=False)
    f_evals: int
    g_solves: int


def _as_additive(t: Tableau) -> tuple[AdditiveTableau, bool]:
    if isinstance(t, AdditiveTableau):
        return t, False
    if isinstance(t, RKTableau):
        if not t.is_explicit:
            raise ValueError("plain tableaux must be explicit; wrap implicit ones in an AdditiveTableau")
        return AdditiveTableau.from_single(t), True
    raise TypeError(f"expected a tableau, got {type(t).__name__}")


def step(sys: SplitSystem, t: Tableau, y_old: State, dt: float) -> StepRecord:
    """Advance one step of size ``dt``.

    A plain explicit tableau integrates ``F + G`` fully explicitly.  Stages
    whose implicit diagonal entry is zero are explicit in both fields.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    tab, plain = _as_additive(t)
    A, At = tab.explicit.A, tab.implicit.A
    b, bt = tab.explicit.weights, tab.implicit.weights
    s = tab.stages

    Fs, Gs, stages = [], [], []
    g_solves = 0
    for i in range(s):
        y_star = y_old
        for j in range(i):
            if A[i, j] != 0.0:
                y_star = y_star + (dt * A[i, j]) * Fs[j]
            if not plain and At[i, j] != 0.0:
                y_star = y_star + (dt * At[i, j]) * Gs[j]
        diag = At[i, i]
        if plain or diag == 0.0:
            y_i = y_star
        else:
            if sys.stage_solver is None:
                raise StageSolveError("no stage solver for an implicit stage", stage=i)
            try:
                y_i = sys.stage_solver(y_star, dt * diag)
            except StageSolveError as exc:
                raise StageSolveError(str(exc), stage=i, cause=exc) from exc
            except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
                raise StageSolveError(str(exc), stage=i, cause=exc) from exc
            g_solves += 1
        stages.append(y_i)
        if plain:
            Fs.append(sys.f_explicit(y_i) + sys.g_implicit(y_i))
        else:
            Fs.append(sys.f_explicit(y_i))
            Gs.append(sys.g_implicit(y_i))

    y_new = y_old
    for j in range(s):
        if b[j] != 0.0:
            y_new = y_new + (dt * b[j]) * Fs[j]
        if not plain and bt[j] != 0.0:
            y_new = y_new + (dt * bt[j]) * Gs[j]
    return StepRecord(y_new, stages, f_evals=s, g_solves=g_solves)


def integrate(sys: SplitSystem, t: Tableau, y0: State, t_end: float, dt: float) -> State:
    """Take uniform steps of ``dt`` to ``t_end``; a shorter final step closes any gap."""
    if not dt > 0 or t_end < 0:
        raise ValueError("need dt > 0 and t_end >= 0")
    ratio = t_end / dt
    n = round(ratio)
    if abs(ratio - n) <= 4 * math.ulp(max(ratio, 1.0)) or math.isclose(n * dt, t_end, rel_tol=1e-14):
        steps, last = n, 0.0
    else:
        steps = int(math.floor(ratio))
        last = t_end - steps * dt
    y = y0
    for _ in range(steps):
        y = step(sys, t, y, dt).y_new
    if last > 0.0:
        y = step(sys, t, y, last).y_new
    return y


def newton_scalar(
    g: Callable[[float], float],
    dg: Callable[[float], float],
    tol: float = 1e-14,
    max_iter: int = 50,
) -> Callable[[float, float], float]:
    """Scalar stage solver for ``y = y_star + c g(y)`` by damped Newton.

    A step that increases the residual is halved until it does not.
    """

    def solve(y_star: float, c: float) -> float:
        y = y_star
        res = y - y_star - c * g(y)
        for _ in range(max_iter):
            slope = 1.0 - c * dg(y)
            if slope == 0.0:
                raise StageSolveError("zero derivative in Newton iteration")
            delta = res / slope
            lam = 1.0
            while True:
                y_try = y - lam * delta
                res_try = y_try - y_star - c * g(y_try)
                if abs(res_try) <= abs(res) or lam < 1e-8:
                    break
                lam *= 0.5
            y, res = y_try, res_try
            if not math.isfinite(y):
                raise StageSolveError("Newton iteration diverged")
            if abs(lam * delta) <= tol * max(1.0, abs(y)) or res == 0.0:
                return y
        raise StageSolveError(f"Newton did not converge in {max_iter} iterations (residual {res:.3e})")

    return solve


def linear_stage_solver(alpha: complex) -> Callable[[State, float], State]:
    """Exact stage solver for ``G(y) = alpha * y``."""

    def solve(y_star, c):
        denom = 1.0 - c * alpha
        if denom == 0:
            raise StageSolveError("singular linear stage")
        return y_star / denom

    return solve
