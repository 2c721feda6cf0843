"""Uniform 2D grid storage shared by the elliptic solver and the transport lab.

Layout: ``values[i, j]`` with ``i`` horizontal (periodic, ``x_i = i*dx``) and
``j`` vertical.  The vertical direction holds ``ny`` interior nodes
``y_j = (j+1)*dy`` between Dirichlet walls at ``y = 0`` and ``y = (ny+1)*dy``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass
class GridField:
    values: np.ndarray
    dx: float
    dy: float
    bottom: float = 0.0
    top: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2D array (nx, ny)")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("grid spacings must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def with_values(self, values) -> "GridField":
        return replace(self, values=np.asarray(values, dtype=float))

    def coords(self):
        return grid_coords(self.nx, self.ny, self.dx, self.dy)

    def to_csv(self, name: str = "field") -> str:
        """Headered CSV: preamble lines ``# key = value`` then ``i,j,x,y,<name>`` rows."""
        x, y = self.coords()
        lines = [
            f"# nx = {self.nx}",
            f"# ny = {self.ny}",
            f"# dx = {self.dx:.17g}",
            f"# dy = {self.dy:.17g}",
            f"# bottom = {self.bottom:.17g}",
            f"# top = {self.top:.17g}",
            f"i,j,x,y,{name}",
        ]
        for i in range(self.nx):
            for j in range(self.ny):
                lines.append(f"{i},{j},{x[i]:.17g},{y[j]:.17g},{self.values[i, j]:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "GridField":
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            elif line and not line.startswith("i,"):
                rows.append(line.split(","))
        nx, ny = int(meta["nx"]), int(meta["ny"])
        values = np.empty((nx, ny))
        for i, j, _, _, v in rows:
            values[int(i), int(j)] = float(v)
        return cls(values, float(meta["dx"]), float(meta["dy"]), float(meta["bottom"]), float(meta["top"]))


def spacing(nx: int, ny: int, Lx: float, Ly: float) -> tuple[float, float]:
    return Lx / nx, Ly / (ny + 1)


def grid_coords(nx: int, ny: int, dx: float, dy: float):
    return np.arange(nx) * dx, (np.arange(ny) + 1) * dy


def total_variation(values: np.ndarray, periodic_x: bool = True, walls=None) -> float:
    """Sum of absolute differences along both axes (wrapping horizontally).

    ``walls=(bottom, top)`` appends the Dirichlet wall values to every
    column before differencing vertically.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        d = np.diff(np.append(v, v[0])) if periodic_x else np.diff(v)
        return float(np.abs(d).sum())
    dx = np.roll(v, -1, axis=0) - v if periodic_x else np.diff(v, axis=0)
    if walls is not None:
        nx = v.shape[0]
        v = np.hstack([np.full((nx, 1), walls[0]), v, np.full((nx, 1), walls[1])])
    return float(np.abs(dx).sum() + np.abs(np.diff(v, axis=1)).sum())
