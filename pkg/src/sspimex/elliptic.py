"""Conjugate-gradient solver for ``g*phi - div(h grad phi) = f`` on the lab grid.

Horizontal boundaries are periodic and vertical ones Dirichlet (see
:mod:`sspimex.grid` for the node layout).  The default discretization is the
flux form with face coefficients taken as arithmetic means of neighbouring
node values; ``stencil="fourthorder"`` applies the five-point fourth-order
second derivative per direction and needs a constant ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

STENCILS = ("threepoint", "fourthorder")


class CGFailure(RuntimeError):
    def __init__(self, message, phi, residual, iterations):
        super().__init__(message)
        self.phi = phi
        self.residual = residual
        self.iterations = iterations


@dataclass
class EllipticProblem:
    g: np.ndarray | float
    h: np.ndarray | float
    rhs: np.ndarray
    dx: float
    dy: float
    bottom: float = 0.0
    top: float = 0.0
    stencil: str = "threepoint"

    def __post_init__(self):
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.rhs.ndim != 2:
            raise ValueError("rhs must be 2D (nx, ny)")
        shape = self.rhs.shape
        self.g = np.broadcast_to(np.asarray(self.g, dtype=float), shape)
        if self.stencil not in STENCILS:
            raise ValueError(f"unknown stencil {self.stencil!r}")
        if np.any(self.g < 0):
            raise ValueError("g must be nonnegative")
        h = np.asarray(self.h, dtype=float)
        if np.any(h < 0):
            raise ValueError("h must be nonnegative")
        if self.stencil == "fourthorder":
            if h.size != 1 and not np.all(h == h.flat[0]):
                raise ValueError("the fourth-order operator needs a constant h")
            if min(shape) < 5 and shape[0] != 1:
                raise ValueError("the fourth-order operator needs at least 5 points per direction")
        self.h = np.broadcast_to(h, shape)

    @property
    def shape(self):
        return self.rhs.shape


def _faces(h: np.ndarray):
    hx = 0.5 * (h + np.roll(h, -1, axis=0))  # face i+1/2, periodic
    hy = np.empty((h.shape[0], h.shape[1] + 1))  # faces j-1/2 for j = 0..ny
    hy[:, 1:-1] = 0.5 * (h[:, 1:] + h[:, :-1])
    hy[:, 0] = h[:, 0]
    hy[:, -1] = h[:, -1]
    return hx, hy


def _second_difference_fourth(phi: np.ndarray, axis: int, lo: float, hi: float, periodic: bool):
    if periodic:
        p = lambda k: np.roll(phi, -k, axis=axis)
        return (-p(2) + 16 * p(1) - 30 * phi + 16 * p(-1) - p(-2)) / 12.0
    # Dirichlet walls one node beyond each end; second ghost by odd reflection about the wall.
    n = phi.shape[axis]
    moved = np.moveaxis(phi, axis, -1)
    ext = np.empty(moved.shape[:-1] + (n + 4,))
    ext[..., 2:-2] = moved
    ext[..., 1] = lo
    ext[..., 0] = 2 * lo - moved[..., 0]
    ext[..., -2] = hi
    ext[..., -1] = 2 * hi - moved[..., -1]
    d = (-ext[..., 4:] + 16 * ext[..., 3:-1] - 30 * ext[..., 2:-2] + 16 * ext[..., 1:-3] - ext[..., :-4]) / 12.0
    return np.moveaxis(d, -1, axis)


def _divergence_term(p: EllipticProblem, phi: np.ndarray, bottom: float, top: float) -> np.ndarray:
    """``div(h grad phi)`` with the given wall values."""
    dx2, dy2 = p.dx**2, p.dy**2
    if p.stencil == "fourthorder":
        h0 = float(p.h.flat[0])
        out = _second_difference_fourth(phi, 0, 0.0, 0.0, True) / dx2
        out = out + _second_difference_fourth(phi, 1, bottom, top, False) / dy2
        return h0 * out
    hx, hy = _faces(p.h)
    east = hx * (np.roll(phi, -1, axis=0) - phi)
    west = np.roll(hx, 1, axis=0) * (phi - np.roll(phi, 1, axis=0))
    padded = np.empty((phi.shape[0], phi.shape[1] + 2))
    padded[:, 1:-1] = phi
    padded[:, 0] = bottom
    padded[:, -1] = top
    flux = hy * (padded[:, 1:] - padded[:, :-1])  # flux across faces j-1/2, j = 0..ny
    return (east - west) / dx2 + (flux[:, 1:] - flux[:, :-1]) / dy2


def apply_operator(p: EllipticProblem, phi: np.ndarray) -> np.ndarray:
    """``g*phi - div(h grad phi)`` including the Dirichlet wall values."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != p.shape:
        raise ValueError(f"phi has shape {phi.shape}, problem has {p.shape}")
    return p.g * phi - _divergence_term(p, phi, p.bottom, p.top)


def apply_homogeneous(p: EllipticProblem, phi: np.ndarray) -> np.ndarray:
    """The linear part of the operator (zero wall values); symmetric positive semidefinite."""
    return p.g * phi - _divergence_term(p, phi, 0.0, 0.0)


def operator_diagonal(p: EllipticProblem) -> np.ndarray:
    dx2, dy2 = p.dx**2, p.dy**2
    if p.stencil == "fourthorder":
        h0 = float(p.h.flat[0])
        d = np.full(p.shape, 30.0 / 12.0 / dy2)
        d[:, 0] = d[:, -1] = 29.0 / 12.0 / dy2
        if p.shape[1] == 1:
            d[:, 0] = 28.0 / 12.0 / dy2
        dxx = 0.0 if p.shape[0] == 1 else 30.0 / 12.0 / dx2
        return p.g + h0 * (d + dxx)
    hx, hy = _faces(p.h)
    dxx = 0.0 if p.shape[0] == 1 else (hx + np.roll(hx, 1, axis=0)) / dx2
    return p.g + dxx + (hy[:, 1:] + hy[:, :-1]) / dy2


@dataclass
class CGResult:
    phi: np.ndarray
    iterations: int
    residual: float
    history: list = field(default_factory=list, repr=False)
    energy_errors: Optional[list] = field(default=None, repr=False)


def solve_cg(
    p: EllipticProblem,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    x0: np.ndarray | None = None,
    jacobi: bool = False,
    reference: np.ndarray | None = None,
) -> CGResult:
    """Solve the problem by (optionally Jacobi-preconditioned) conjugate gradients.

    Stops when ``||A phi - f|| / ||f|| <= tol``.  ``history`` holds the
    relative residual after each iteration.  Passing a ``reference`` solution
    also records the energy-norm error per iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    boundary = apply_operator(p, np.zeros(p.shape))
    b = p.rhs - boundary
    fnorm = np.linalg.norm(p.rhs)
    if fnorm == 0.0:
        fnorm = max(np.linalg.norm(b), 1.0)

    x = np.zeros(p.shape) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_homogeneous(p, x)
    minv = 1.0 / operator_diagonal(p) if jacobi else None
    z = r * minv if jacobi else r
    d = z.copy()
    rz = float(np.vdot(r, z))
    res = np.linalg.norm(r) / fnorm
    history = [res]
    energy = None
    if reference is not None:
        e = x - reference
        energy = [float(np.sqrt(max(np.vdot(e, apply_homogeneous(p, e)), 0.0)))]
    it = 0
    best_x, best_res = x.copy(), res
    while res > tol:
        if it >= max_iter:
            raise CGFailure(
                f"CG did not reach tol={tol:g} in {max_iter} iterations (residual {best_res:.3e})",
                best_x,
                best_res,
                it,
            )
        Ad = apply_homogeneous(p, d)
        dAd = float(np.vdot(d, Ad))
        if dAd <= 0.0:
            raise CGFailure("operator is not positive definite", best_x, best_res, it)
        alpha = rz / dAd
        x = x + alpha * d
        r = r - alpha * Ad
        it += 1
        res = np.linalg.norm(r) / fnorm
        history.append(res)
        if energy is not None:
            e = x - reference
            energy.append(float(np.sqrt(max(np.vdot(e, apply_homogeneous(p, e)), 0.0))))
        if res < best_res:
            best_x, best_res = x.copy(), res
        z = r * minv if jacobi else r
        rz_new = float(np.vdot(r, z))
        d = z + (rz_new / rz) * d
        rz = rz_new
    return CGResult(x, it, res, history, energy)


class DiffusionStageSolver:
    """Implicit stage solver for ``y = y_star + c * div(kappa grad y)``.

    Acts on arrays of shape ``(nx, ny)`` or stacked ``(k, nx, ny)`` with one
    set of wall values per component.  With constant density the stage reduces
    to ``(1/c) y - div(kappa grad y) = y_star / c``.
    """

    def __init__(self, kappa, dx, dy, bottom=0.0, top=0.0, stencil="threepoint", tol=1e-10, max_iter=10_000, jacobi=False):
        self.kappa = kappa if isinstance(kappa, (list, tuple)) else [kappa]
        self.bottom = np.atleast_1d(bottom)
        self.top = np.atleast_1d(top)
        self.dx, self.dy = dx, dy
        self.stencil = stencil
        self.tol = tol
        self.max_iter = max_iter
        self.jacobi = jacobi
        self.last_iterations = 0
        self.total_iterations = 0

    def _solve_one(self, y_star, coeff, k):
        kappa = self.kappa[k] if len(self.kappa) > 1 else self.kappa[0]
        bottom = self.bottom[k] if self.bottom.size > 1 else self.bottom[0]
        top = self.top[k] if self.top.size > 1 else self.top[0]
        p = EllipticProblem(1.0 / coeff, kappa, y_star / coeff, self.dx, self.dy, bottom, top, self.stencil)
        result = solve_cg(p, tol=self.tol, max_iter=self.max_iter, x0=y_star, jacobi=self.jacobi)
        self.last_iterations += result.iterations
        return result.phi

    def __call__(self, y_star, coeff):
        if not coeff > 0:
            raise ValueError("stage coefficient must be positive")
        self.last_iterations = 0
        y_star = np.asarray(y_star, dtype=float)
        if y_star.ndim == 2:
            out = self._solve_one(y_star, coeff, 0)
        else:
            out = np.stack([self._solve_one(y_star[k], coeff, k) for k in range(y_star.shape[0])])
        self.total_iterations += self.last_iterations
        return out


def stage_solver_for_diffusion(kappa, dx, dy, bottom=0.0, top=0.0, stencil="threepoint", tol=1e-10):
    """Convenience constructor for :class:`DiffusionStageSolver`."""
    return DiffusionStageSolver(kappa, dx, dy, bottom, top, stencil, tol)
