"""Two-point instability detection and the heuristic step-size controller."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# Sign patterns over (d1, d2, d3, d4); 0 marks a free position.
PATTERNS = (
    (1, -1, 1, 0),
    (-1, 1, -1, 0),
    (0, 1, -1, 1),
    (0, -1, 1, -1),
)

HOLD_STEPS = 15
QUIET_STEPS = 50


def two_point_mask(line) -> np.ndarray:
    """Boolean mask over window centres ``j = 2 .. n-3`` flagging alternating sign windows.

    The differences are ``d1 = u[j-1]-u[j-2]`` through ``d4 = u[j+2]-u[j+1]``.
    A zero difference is neither positive nor negative, so it matches no
    pattern position, including the free ones.
    """
    u = np.asarray(line, dtype=float)
    if u.ndim != 1 or u.size < 5:
        raise ValueError("need a 1D line of at least 5 points")
    s = np.sign(np.diff(u))
    d = np.stack([s[:-3], s[1:-2], s[2:-1], s[3:]], axis=-1)
    nonzero = d != 0
    hit = np.zeros(d.shape[0], dtype=bool)
    for pat in PATTERNS:
        pat = np.array(pat)
        fixed = pat != 0
        ok = np.all(d[:, fixed] == pat[fixed], axis=1) & np.all(nonzero[:, ~fixed], axis=1)
        hit |= ok
    return hit


def count_two_point(line) -> int:
    return int(two_point_mask(line).sum())


def detect_two_point_instabilities(values, index: int, axis: str = "horizontal") -> int:
    """Detections on one grid line.

    ``axis="horizontal"`` scans ``values[:, index]`` (fixed height, varying x);
    ``"vertical"`` scans ``values[index, :]``.
    """
    v = np.asarray(getattr(values, "values", values), dtype=float)
    line = v[:, index] if axis == "horizontal" else v[index, :]
    return count_two_point(line)


def line_counts(values, axis: str = "horizontal") -> np.ndarray:
    """Detections for every line of a 2D field."""
    v = np.asarray(getattr(values, "values", values), dtype=float)
    lines = v.T if axis == "horizontal" else v
    if lines.shape[1] < 5:
        return np.zeros(lines.shape[0], dtype=int)
    return np.array([count_two_point(line) for line in lines], dtype=int)


@dataclass(frozen=True)
class StepControllerState:
    dt: float
    dt_cap: float
    hold_remaining: int = 0
    quiet_streak: int = 0
    osc_limit_fraction: float = 0.1
    reduce_factor: float = 2.0 / 3.0
    grow_factor: float = 5.0 / 4.0
    quiet_threshold: int = 0

    def __post_init__(self):
        if not (self.dt > 0 and self.dt_cap > 0):
            raise ValueError("dt and dt_cap must be positive")
        if self.dt > self.dt_cap:
            object.__setattr__(self, "dt", self.dt_cap)

    def limit(self, line_length: int) -> float:
        return self.osc_limit_fraction * line_length

    def rejects(self, osc_count: int, line_length: int) -> bool:
        """True when the step just taken must be repeated with a smaller dt."""
        return self.hold_remaining == 0 and osc_count > self.limit(line_length)


def controller_update(s: StepControllerState, osc_count: int, line_length: int) -> StepControllerState:
    """Advance the controller by one step.

    ``osc_count`` is the largest per-line detection count of the step and
    ``line_length`` the number of points on a scanned line.
    """
    if s.hold_remaining > 0:
        return replace(s, hold_remaining=s.hold_remaining - 1, dt=min(s.dt, s.dt_cap))
    if osc_count > s.limit(line_length):
        return replace(s, dt=s.dt * s.reduce_factor, hold_remaining=HOLD_STEPS, quiet_streak=0)
    if osc_count <= s.quiet_threshold:
        streak = s.quiet_streak + 1
        if streak > QUIET_STEPS:
            return replace(s, dt=min(s.dt * s.grow_factor, s.dt_cap), quiet_streak=0)
        return replace(s, quiet_streak=streak)
    return replace(s, quiet_streak=0)
