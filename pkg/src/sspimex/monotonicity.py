"""Regions and radii of absolute monotonicity.

The pointwise test uses the extended coefficient arrays

    K  = [[A, 0], [b^T, 0]],     Kt = [[At, 0], [bt^T, 0]]

and declares ``(r, rt)`` absolutely monotonic when ``M = I + r K + rt Kt`` is
invertible and ``M^-1 K``, ``M^-1 Kt`` and ``M^-1 e`` are componentwise
nonnegative.  The closed forms known for the three IMEX schemes serve as the
independent check on this criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .tableaux import (
    GAMMA_DEFAULT,
    AdditiveTableau,
    RKTableau,
    builtin,
)

NONNEG_TOL = -1e-12
# Radii larger than this are reported as the cap itself.
RADIUS_CAP = 1e3

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class MonotonicityRegion:
    radius_explicit: float
    radius_implicit: float
    boundary: np.ndarray  # shape (n, 2): columns r, rtilde
    grid_step: float
    r_max: float

    def to_csv(self) -> str:
        rows = ["r,rtilde"]
        rows += [f"{r:.17g},{rt:.17g}" for r, rt in self.boundary]
        return "\n".join(rows) + "\n"

    def rtilde_at(self, r):
        """Linear interpolation of the boundary curve."""
        return np.interp(r, self.boundary[:, 0], self.boundary[:, 1])


def extended(t: RKTableau) -> np.ndarray:
    s = t.stages
    K = np.zeros((s + 1, s + 1))
    K[:s, :s] = t.A
    K[s, :s] = t.weights
    return K


def _am_matrices(K: np.ndarray, Kt: np.ndarray, r: float, rt: float) -> bool:
    n = K.shape[0]
    M = np.eye(n) + r * K + rt * Kt
    try:
        Minv = np.linalg.inv(M)
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.isfinite(Minv)):
        return False
    return bool(
        (Minv @ K >= NONNEG_TOL).all()
        and (Minv @ Kt >= NONNEG_TOL).all()
        and (Minv.sum(axis=1) >= NONNEG_TOL).all()
    )


def am_at_point(t: AdditiveTableau, r: float, rt: float) -> bool:
    """Is the pair absolutely monotonic at ``(-r, -rt)``?"""
    if r < 0 or rt < 0:
        raise ValueError("r and rt must be nonnegative")
    if not t.implicit.is_dirk:
        raise ValueError("implicit part must be diagonally implicit")
    return _am_matrices(extended(t.explicit), extended(t.implicit), r, rt)


def am_single(t: RKTableau, r: float) -> bool:
    """Absolute monotonicity of a single method at ``-r``."""
    K = extended(t)
    return _am_matrices(K, np.zeros_like(K), r, 0.0)


def _bisect_true_false(pred: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    """Largest x in [lo, hi] with pred(x) true, assuming pred is a down-set."""
    if pred(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def radius(t: RKTableau, tol: float = 1e-10, cap: float = RADIUS_CAP) -> float:
    """Radius of absolute monotonicity of a single method."""
    if not am_single(t, 0.0):
        return 0.0
    return _bisect_true_false(lambda x: am_single(t, x), 0.0, cap, tol)


def _scan_then_bisect(pred, hi: float, step: float, tol: float) -> float:
    """Walk up in ``step`` increments while ``pred`` holds, then bisect the bracket."""
    if not pred(0.0):
        return 0.0
    x = 0.0
    while x < hi:
        nxt = min(x + step, hi)
        if not pred(nxt):
            return _bisect_true_false(pred, x, nxt, tol)
        x = nxt
    return hi


# --- closed forms -----------------------------------------------------------


def radius_implicit_gamma(gamma: float) -> float:
    """Radius of the implicit part of the SSP2(2,2,2) family as a function of gamma."""
    if not 0.0 <= gamma <= 0.5:
        raise ValueError(f"gamma={gamma} outside [0, 1/2]")
    if gamma <= 0.25:
        return 1.0 / (1.0 - 3.0 * gamma)
    # (1-2g)/d -+ sqrt(4g-1)/|d| with d = 2g^2-4g+1, rationalized so that the
    # pole at d = 0 (the default gamma) cancels
    return 2.0 / (1.0 - 2.0 * gamma + math.sqrt(4.0 * gamma - 1.0))


def _phi_gamma(gamma: float) -> tuple[Callable[[float], float], float]:
    r_max = 1.0 if gamma <= 1.0 / 3.0 else (1.0 - 2.0 * gamma) / gamma
    return (lambda r: (1.0 - r) / (1.0 - gamma)), r_max


def phi_ssp2_332(r):
    r = np.asarray(r, dtype=float)
    return 0.25 * (-28.0 + 9.0 * r) + 0.25 * np.sqrt(1264.0 - 984.0 * r + 201.0 * r**2)


def phi_ssp3_333(r):
    r = np.asarray(r, dtype=float)
    return (15.0 / 302.0) * (28.0 - 25.0 * r - np.sqrt(180.0 - 192.0 * r + 21.0 * r**2))


CLOSED_FORM_RADII = {
    "imex_ssp2_222": (1.0, 1.0 + SQRT2),
    "imex_ssp2_332": (2.0, (5.0 / 9.0) * (math.sqrt(70.0) - 4.0)),
    "imex_ssp3_333": (1.0, (5.0 / 47.0) * (13.0 - 2.0 * math.sqrt(7.0))),
}


def closed_form_boundary(name: str, gamma: float | None = None) -> tuple[Callable, float]:
    """Boundary function ``rt = phi(r)`` and its extent ``r_max``."""
    if name == "imex_ssp2_222":
        return _phi_gamma(GAMMA_DEFAULT if gamma is None else gamma)
    if gamma is not None:
        raise ValueError(f"gamma is only meaningful for imex_ssp2_222, not {name}")
    if name == "imex_ssp2_332":
        return (lambda r: float(phi_ssp2_332(r))), 1.0
    if name == "imex_ssp3_333":
        return (lambda r: float(phi_ssp3_333(r))), 1.0
    raise KeyError(f"no closed-form region for {name!r}")


def region_closed_form(name: str, gamma: float | None = None, samples: int = 201) -> MonotonicityRegion:
    phi, r_max = closed_form_boundary(name, gamma)
    if name == "imex_ssp2_222":
        g = GAMMA_DEFAULT if gamma is None else gamma
        radii = (1.0, radius_implicit_gamma(g))
    else:
        radii = CLOSED_FORM_RADII[name]
    samples = max(samples, 200)
    rs = np.linspace(0.0, r_max, samples)
    boundary = np.column_stack([rs, [max(phi(r), 0.0) for r in rs]])
    step = r_max / (samples - 1) if r_max > 0 else 0.0
    return MonotonicityRegion(radii[0], radii[1], boundary, step, r_max)


# --- numeric scan -----------------------------------------------------------


def region_numeric(
    t: AdditiveTableau,
    r_max: float | None = None,
    rt_max: float = 10.0,
    step: float = 0.01,
) -> MonotonicityRegion:
    """Sample the curve of absolute monotonicity by scanning ``r``.

    For each ``r`` on a grid of spacing ``step`` the largest admissible ``rt``
    is bracketed by an ``rt`` scan of the same spacing and bisected to
    ``step/100``.  The r-extent is located the same way when ``r_max`` is not
    given.  Radii come from each part on its own, refined to 1e-10.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    K, Kt = extended(t.explicit), extended(t.implicit)
    tol = step / 100.0

    extent = _scan_then_bisect(lambda r: _am_matrices(K, Kt, r, 0.0), RADIUS_CAP, step, tol)
    if r_max is None:
        r_max = extent
    else:
        r_max = min(r_max, extent)

    n = int(math.floor(r_max / step + 1e-9)) + 1
    rs = [i * step for i in range(n)]
    if r_max - rs[-1] > 1e-12:
        rs.append(r_max)
    pts = []
    for r in rs:
        rt = _scan_then_bisect(lambda x: _am_matrices(K, Kt, r, x), rt_max, step, tol)
        pts.append((r, rt))
    boundary = np.array(pts, dtype=float)
    return MonotonicityRegion(radius(t.explicit), radius(t.implicit), boundary, step, r_max)


def radius_implicit_gamma_numeric(gamma: float, tol: float = 1e-10) -> float:
    t = builtin("imex_ssp2_222", gamma=gamma)
    return radius(t.implicit, tol=tol)


def extent_numeric(t: AdditiveTableau, tol: float = 1e-10) -> float:
    """Largest r with ``(r, 0)`` inside the joint region."""
    K, Kt = extended(t.explicit), extended(t.implicit)
    return _scan_then_bisect(lambda r: _am_matrices(K, Kt, r, 0.0), RADIUS_CAP, 0.01, tol)
