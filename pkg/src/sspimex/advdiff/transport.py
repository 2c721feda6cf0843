"""Spatial operators for the advection-diffusion lab.

Advection is written in flux form with face-normal velocities so that a
discretely divergence-free velocity (built from a stream function) conserves
mass up to wall fluxes.  Diffusion uses the three-point or the fourth-order
five-point second difference in each direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..elliptic import _second_difference_fourth
from ..grid import GridField

ADVECTION_SCHEMES = ("upwind1", "eno2")
DIFFUSION_STENCILS = ("threepoint", "fourthorder")


@dataclass
class VelocityField:
    """Face-normal velocities.

    ``u[i, j]`` lives on the face between nodes ``i`` and ``i+1`` (periodic);
    ``v[i, j]`` on the face below node ``j``, so ``v[:, 0]`` and ``v[:, -1]``
    are the bottom and top walls.
    """

    u: np.ndarray
    v: np.ndarray

    @classmethod
    def zero(cls, nx, ny):
        return cls(np.zeros((nx, ny)), np.zeros((nx, ny + 1)))

    @classmethod
    def uniform(cls, nx, ny, u0, v0=0.0):
        return cls(np.full((nx, ny), float(u0)), np.full((nx, ny + 1), float(v0)))

    @classmethod
    def from_streamfunction(cls, psi, nx, ny, dx, dy):
        """``u = dpsi/dy, v = -dpsi/dx`` from corner values, exactly divergence-free."""
        xc = (np.arange(nx + 1) - 0.5) * dx  # corners x_{i-1/2}, i = 0..nx
        yc = (np.arange(ny + 1) + 0.5) * dy  # corners y_{j+1/2-1}, faces below node j
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        P = psi(X, Y)
        u = (P[1:, 1:] - P[1:, :-1]) / dy
        v = -(P[1:, :] - P[:-1, :]) / dx
        return cls(u, v)

    @classmethod
    def cellular(cls, nx, ny, dx, dy, amplitude):
        """One convection cell per box width, ``psi = A Lx/pi sin(2 pi x/Lx) sin(pi s/H)``.

        ``s`` is measured from the bottom wall face at ``dy/2`` and ``H = ny*dy``
        spans the wall faces, so no flow crosses them.
        """
        Lx, H = nx * dx, ny * dy

        def psi(x, y):
            return amplitude * Lx / np.pi * np.sin(2 * np.pi * x / Lx) * np.sin(np.pi * (y - 0.5 * dy) / H)

        vel = cls.from_streamfunction(psi, nx, ny, dx, dy)
        vel.v[:, [0, -1]] = 0.0  # psi is constant along the walls; drop rounding
        return vel

    def divergence(self, dx, dy):
        return (self.u - np.roll(self.u, 1, axis=0)) / dx + (self.v[:, 1:] - self.v[:, :-1]) / dy

    def max_speed(self) -> float:
        uc = 0.5 * (self.u + np.roll(self.u, 1, axis=0))
        vc = 0.5 * (self.v[:, 1:] + self.v[:, :-1])
        return float(np.sqrt(uc**2 + vc**2).max()) if uc.size else 0.0


def _minabs(a, b):
    return np.where(np.abs(a) <= np.abs(b), a, b)


def _face_values(ext: np.ndarray, vel: np.ndarray, scheme: str) -> np.ndarray:
    """Upwind face values along the last axis.

    ``ext`` carries two ghost nodes on each end; face ``k`` sits between
    ``ext[..., k+1]`` and ``ext[..., k+2]``.
    """
    left = ext[..., 1:-2]
    right = ext[..., 2:-1]
    if scheme == "upwind1":
        return np.where(vel >= 0.0, left, right)
    if scheme == "eno2":
        d = np.diff(ext, axis=-1)
        # slopes at left node: d[k] (backward), d[k+1] (forward); at right node: d[k+1], d[k+2]
        left_val = left + 0.5 * _minabs(d[..., :-2], d[..., 1:-1])
        right_val = right - 0.5 * _minabs(d[..., 1:-1], d[..., 2:])
        return np.where(vel >= 0.0, left_val, right_val)
    raise ValueError(f"unknown advection scheme {scheme!r}; expected one of {ADVECTION_SCHEMES}")


def _extend_x(phi):
    return np.concatenate([phi[-2:], phi, phi[:2]], axis=0)


def _extend_y(phi, bottom, top):
    nx = phi.shape[0]
    ext = np.empty((nx, phi.shape[1] + 4))
    ext[:, 2:-2] = phi
    ext[:, 1] = bottom
    ext[:, 0] = 2 * bottom - phi[:, 0]
    ext[:, -2] = top
    ext[:, -1] = 2 * top - phi[:, -1]
    return ext


def advective_fluxes(field: GridField, velocity: VelocityField, scheme: str = "upwind1"):
    """Face fluxes ``(Fx, Fy)``: ``Fx[i]`` on face ``i+1/2``, ``Fy[:, j]`` on the face below node ``j``."""
    phi = field.values
    ext_x = _extend_x(phi).T  # move x to the last axis
    # faces between ext nodes k+1 and k+2 for k = 0..nx: we need faces i+1/2 for i = 0..nx-1
    fx = _face_values(ext_x, np.vstack([velocity.u, velocity.u[:1]]).T, scheme).T[1:]
    Fx = velocity.u * fx
    ext_y = _extend_y(phi, field.bottom, field.top)
    fy = _face_values(ext_y, velocity.v, scheme)
    Fy = velocity.v * fy
    return Fx, Fy


def advect(field: GridField, velocity: VelocityField, scheme: str = "upwind1") -> np.ndarray:
    """Conservative tendency ``-div(u phi)``, equal to ``-(u.grad) phi`` for divergence-free ``u``."""
    Fx, Fy = advective_fluxes(field, velocity, scheme)
    return -(Fx - np.roll(Fx, 1, axis=0)) / field.dx - (Fy[:, 1:] - Fy[:, :-1]) / field.dy


def diffuse_stencil(field: GridField, kind: str = "threepoint") -> np.ndarray:
    """Discrete Laplacian, periodic in x and with Dirichlet walls in y."""
    phi = field.values
    if kind == "threepoint":
        dxx = (np.roll(phi, -1, axis=0) - 2 * phi + np.roll(phi, 1, axis=0)) / field.dx**2
        pad = np.empty((phi.shape[0], phi.shape[1] + 2))
        pad[:, 1:-1] = phi
        pad[:, 0] = field.bottom
        pad[:, -1] = field.top
        dyy = (pad[:, 2:] - 2 * pad[:, 1:-1] + pad[:, :-2]) / field.dy**2
        return dxx + dyy
    if kind == "fourthorder":
        if min(field.shape) < 5 and field.nx != 1:
            raise ValueError("fourth-order stencil needs at least 5 points per direction")
        dxx = _second_difference_fourth(phi, 0, 0.0, 0.0, True) / field.dx**2
        dyy = _second_difference_fourth(phi, 1, field.bottom, field.top, False) / field.dy**2
        return dxx + dyy
    raise ValueError(f"unknown stencil {kind!r}; expected one of {DIFFUSION_STENCILS}")


def diffusive_wall_fluxes(field: GridField, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Diffusive flux ``-kappa dphi/dy`` through the bottom and top walls, per column (three-point form)."""
    phi = field.values
    bottom = -kappa * (phi[:, 0] - field.bottom) / field.dy
    top = -kappa * (field.top - phi[:, -1]) / field.dy
    return bottom, top


def wall_budget(field: GridField, velocity: VelocityField, kappa: float, scheme: str = "upwind1") -> float:
    """Net inflow rate through both walls, integrated over the horizontal: ``d/dt sum(phi) dx dy``."""
    _, Fy = advective_fluxes(field, velocity, scheme)
    db, dt_ = diffusive_wall_fluxes(field, kappa)
    inflow = (Fy[:, 0] + db) - (Fy[:, -1] + dt_)
    return float(inflow.sum() * field.dx)


# --- 1D periodic helpers for TVD experiments ------------------------------


def advect_1d(phi: np.ndarray, speed: float, dx: float, scheme: str = "upwind1") -> np.ndarray:
    """Periodic 1D linear advection tendency ``-a phi_x``."""
    ext = np.concatenate([phi[-2:], phi, phi[:2]])
    vel = np.full(phi.size + 1, float(speed))
    faces = _face_values(ext, vel, scheme)[1:]  # faces i+1/2, i = 0..n-1
    flux = speed * faces
    return -(flux - np.roll(flux, 1)) / dx


def burgers_1d(phi: np.ndarray, dx: float, scheme: str = "eno2") -> np.ndarray:
    """Periodic 1D Burgers tendency ``-(phi^2/2)_x`` with a local Lax-Friedrichs flux."""
    ext = np.concatenate([phi[-2:], phi, phi[:2]])
    d = np.diff(ext)
    if scheme == "eno2":
        left = ext[1:-2] + 0.5 * _minabs(d[:-2], d[1:-1])
        right = ext[2:-1] - 0.5 * _minabs(d[1:-1], d[2:])
    elif scheme == "upwind1":
        left, right = ext[1:-2], ext[2:-1]
    else:
        raise ValueError(f"unknown advection scheme {scheme!r}")
    a = np.maximum(np.abs(left), np.abs(right))
    flux = 0.25 * (left**2 + right**2) - 0.5 * a * (right - left)
    flux = flux[1:]
    return -(flux - np.roll(flux, 1)) / dx
