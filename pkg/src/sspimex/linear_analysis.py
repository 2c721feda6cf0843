"""Linear stability and dissipativity of plain and additive RK methods.

For an additive tableau the split test equation puts ``Re(z)`` on the
implicit part and ``Im(z)`` on the explicit part::

    Y = (I - i Im(z) A - Re(z) At)^-1 e
    R = 1 + i Im(z) b.Y + Re(z) bt.Y

A plain tableau feeds the whole of ``z`` to its single part.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .tableaux import AdditiveTableau, RKTableau, Tableau

SQRT2 = math.sqrt(2.0)

UNBOUNDED_REACH = 1e6
LANDMARK_CAP = 1e3
LIMIT_PROBES = (-1e3, -1e6, -1e9)


def stability_value(t: Tableau, z):
    """Evaluate the stability function at ``z`` (scalar or array).

    A singular stage matrix is a pole and evaluates to ``inf``.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    zf = z.reshape(-1)
    if isinstance(t, AdditiveTableau):
        A, At = t.explicit.A, t.implicit.A
        b, bt = t.explicit.weights, t.implicit.weights
        x, y = zf.real, zf.imag
        M = np.eye(t.stages) - 1j * y[:, None, None] * A - x[:, None, None] * At
    else:
        A, b = t.A, t.weights
        M = np.eye(t.stages) - zf[:, None, None] * A
    out = np.empty(zf.shape, dtype=complex)
    ones = np.ones(M.shape[-1], dtype=complex)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(M)
        ok = np.isfinite(cond) & (cond < 1e15)
        Y = np.full((zf.size, M.shape[-1]), np.nan, dtype=complex)
        if ok.any():
            rhs = np.broadcast_to(ones, (int(ok.sum()), M.shape[-1]))[..., None]
            Y[ok] = np.linalg.solve(M[ok], rhs)[..., 0]
        if isinstance(t, AdditiveTableau):
            out[:] = 1.0 + 1j * zf.imag * (Y @ b) + zf.real * (Y @ bt)
        else:
            out[:] = 1.0 + zf * (Y @ b)
    out[~ok] = complex(np.inf, 0.0)
    return complex(out[0]) if scalar else out.reshape(z.shape)


def modulus(t: Tableau, z):
    return np.abs(stability_value(t, z))


# --- closed forms -----------------------------------------------------------


def _r_ssp2_222(z):
    return 2.0 * (1.0 + SQRT2) * (1.0 + z + SQRT2) / (2.0 - z + SQRT2) ** 2


def _r_ssp2_332(z):
    return (-150.0 - 40.0 * z + 9.0 * z**2) / (2.0 * (-5.0 + z) ** 2 * (-3.0 + z))


def _r_ssp3_333(z):
    return (450.0 + 390.0 * z + 167.0 * z**2 + 47.0 * z**3) / (2.0 * (-15.0 + z) ** 2)


def ssprk32_polynomial(z):
    return 1.0 + z + z**2 / 2.0 + z**3 / 12.0


_CLOSED_FORMS = {
    "imex_ssp2_222": (_r_ssp2_222, (2.0 + SQRT2,)),
    "imex_ssp2_332": (_r_ssp2_332, (5.0, 3.0)),
    "imex_ssp3_333": (_r_ssp3_333, (15.0,)),
}


def implicit_stability_closed_form(name: str, z):
    """Closed-form rational stability function of the implicit part of an IMEX scheme."""
    try:
        fn, poles = _CLOSED_FORMS[name]
    except KeyError:
        raise KeyError(f"no closed-form implicit stability function for {name!r}") from None
    z = np.asarray(z, dtype=complex)
    if np.any(np.isin(z, np.asarray(poles, dtype=complex))):
        raise ZeroDivisionError(f"z hits a pole of the {name} stability function")
    out = fn(z)
    return complex(out) if out.ndim == 0 else out


# --- stability regions ------------------------------------------------------


@dataclass
class StabilityRegionReport:
    scheme: str
    boundary: list = field(repr=False)  # list of complex arrays, one per contour
    z_left: Optional[float]  # None means unbounded along the negative real axis
    limit_at_minus_infinity: str
    max_modulus_imag_axis: float

    @property
    def unbounded(self) -> bool:
        return self.z_left is None

    def summary(self) -> dict:
        return {
            "scheme": self.scheme,
            "z_left": "unbounded" if self.z_left is None else self.z_left,
            "limit_class": self.limit_at_minus_infinity,
            "max_modulus_imag_axis": self.max_modulus_imag_axis,
        }

    def to_csv(self) -> str:
        lines = ["re,im"]
        for curve in self.boundary:
            lines += [f"{z.real:.17g},{z.imag:.17g}" for z in curve]
        return "\n".join(lines) + "\n"


def _bisect_level(f, lo: float, hi: float, tol: float) -> float:
    """Bisect ``f`` (negative at ``lo``, nonnegative at ``hi``) down to ``tol`` or roundoff."""
    flo = f(lo)
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if fm < 0.0:
            lo, flo = mid, fm
        else:
            hi = mid
    return hi


def find_z_left(t: Tableau, reach: float = UNBOUNDED_REACH, tol: float = 1e-12) -> Optional[float]:
    """First point on the negative real axis where ``|R| >= 1``, or None if none up to ``reach``."""
    fine = -np.linspace(0.0, 10.0, 10001)[1:]
    coarse = -np.geomspace(10.0, reach, 2000)[1:]
    xs = np.concatenate([fine, coarse])
    mods = modulus(t, xs)
    hit = np.nonzero(mods >= 1.0)[0]
    if hit.size == 0:
        return None
    k = hit[0]
    hi = xs[k]
    lo = 0.0 if k == 0 else xs[k - 1]
    f = lambda x: float(modulus(t, x)) - 1.0
    return _bisect_level(f, lo, hi, tol)


def classify_limit(t: Tableau) -> str:
    vals = np.abs(stability_value(t, np.asarray(LIMIT_PROBES, dtype=complex)))
    if vals[-1] < 1e-4 and vals[-1] <= vals[0]:
        return "zero"
    if vals[-1] > 1e4 and vals[-1] >= vals[0]:
        return "infinite"
    return "finite_nonzero"


def max_modulus_imaginary_axis(t: Tableau, reach: float = 1e3) -> float:
    ys = np.geomspace(1e-3, reach, 4000)
    ys = np.concatenate([-ys[::-1], [0.0], ys])
    return float(np.max(modulus(t, 1j * ys)))


def _refine_on_edge(t: Tableau, z0: complex, z1: complex, tol: float = 1e-13) -> complex:
    """Bisect ``|R| - 1`` along the segment ``z0 -> z1`` (signs must differ)."""
    f0 = abs(stability_value(t, z0)) - 1.0
    a, b = 0.0, 1.0
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = abs(stability_value(t, z0 + m * (z1 - z0))) - 1.0
        if (fm < 0) == (f0 < 0):
            a = m
        else:
            b = m
        if (b - a) * abs(z1 - z0) < tol:
            break
    return z0 + 0.5 * (a + b) * (z1 - z0)


def region_boundary(t: Tableau, re_range, im_range, resolution: int) -> list:
    """Polylines of ``|R(z)| = 1`` on a grid, each vertex refined onto the level set."""
    from skimage import measure

    if resolution < 64:
        raise ValueError("resolution must be at least 64 per axis")
    xs = np.linspace(re_range[0], re_range[1], resolution)
    ys = np.linspace(im_range[0], im_range[1], resolution)
    Z = xs[None, :] + 1j * ys[:, None]
    with np.errstate(all="ignore"):
        level = np.log(np.clip(modulus(t, Z), 1e-300, 1e300))
    level = np.where(np.isfinite(level), level, 700.0)
    curves = []
    for contour in measure.find_contours(level, 0.0):
        pts = []
        for row, col in contour:
            i0, j0 = int(math.floor(row)), int(math.floor(col))
            if row == i0:  # on a horizontal grid edge
                j1 = min(j0 + 1, resolution - 1)
                za, zb = Z[i0, j0], Z[i0, j1]
            else:
                i1 = min(i0 + 1, resolution - 1)
                za, zb = Z[i0, j0], Z[i1, j0]
            fa = abs(stability_value(t, za)) - 1.0
            fb = abs(stability_value(t, zb)) - 1.0
            if za != zb and (fa < 0) != (fb < 0) and np.isfinite(fa) and np.isfinite(fb):
                pts.append(_refine_on_edge(t, za, zb))
        if pts:
            curves.append(np.array(pts))
    return curves


def scan_stability_region(
    t: Tableau,
    re_range=(-6.0, 1.0),
    im_range=(-4.0, 4.0),
    resolution: int = 128,
    label: str | None = None,
) -> StabilityRegionReport:
    boundary = region_boundary(t, re_range, im_range, resolution)
    return StabilityRegionReport(
        scheme=label or t.label,
        boundary=boundary,
        z_left=find_z_left(t),
        limit_at_minus_infinity=classify_limit(t),
        max_modulus_imag_axis=max_modulus_imaginary_axis(t),
    )


# --- dissipativity ----------------------------------------------------------

STENCILS = ("threepoint", "fourthorder")


def stencil_symbol(kind: str, theta):
    """Fourier symbol of the discrete second derivative, times ``dx**2``."""
    theta = np.asarray(theta, dtype=float)
    if kind == "threepoint":
        return 2.0 * np.cos(theta) - 2.0
    if kind == "fourthorder":
        return (-2.0 * np.cos(2.0 * theta) + 32.0 * np.cos(theta) - 30.0) / 12.0
    raise ValueError(f"unknown stencil {kind!r}; expected one of {STENCILS}")


def amplification(t: RKTableau, stencil: str, theta, mu):
    """``g(theta, mu) = R(mu * sigma(theta))`` for one part of a scheme."""
    if np.any(np.asarray(mu) < 0):
        raise ValueError("mu must be nonnegative")
    z = np.asarray(mu, dtype=float) * stencil_symbol(stencil, theta)
    g = stability_value(t, z)
    return np.real(g) if np.ndim(g) else float(np.real(g))


@dataclass
class AmplificationProfile:
    scheme: str
    stencil: str
    theta: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)  # shape (len(theta), len(mu))
    first_zero_at_pi: Optional[float]
    unit_modulus_at_pi: Optional[float]

    def summary(self) -> dict:
        return {
            "scheme": self.scheme,
            "stencil": self.stencil,
            "first_zero": self.first_zero_at_pi,
            "unit_modulus": self.unit_modulus_at_pi,
        }


def _first_crossing(f, cap: float, tol: float) -> Optional[float]:
    fine = np.linspace(0.0, 20.0, 40001)[1:]
    coarse = np.geomspace(20.0, cap, 3000)[1:]
    mus = np.concatenate([fine, coarse])
    vals = f(mus)
    hit = np.nonzero(vals >= 0.0)[0]
    if hit.size == 0:
        return None
    k = hit[0]
    lo = 0.0 if k == 0 else mus[k - 1]
    hi = mus[k]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(np.array([mid]))[0] >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def locate_dissipativity_landmarks(
    t: RKTableau, stencil: str, cap: float = LANDMARK_CAP, tol: float = 1e-10
) -> tuple[Optional[float], Optional[float]]:
    """First positive zero of ``g(pi, mu)`` and first ``mu`` with ``|g(pi, mu)| = 1``."""
    g = lambda mu: amplification(t, stencil, math.pi, mu)
    first_zero = _first_crossing(lambda mu: -g(mu), cap, tol)
    unit = _first_crossing(lambda mu: np.abs(g(mu)) - 1.0, cap, tol)
    return first_zero, unit


def amplification_profile(
    t: RKTableau,
    stencil: str,
    theta=None,
    mu=None,
    label: str | None = None,
) -> AmplificationProfile:
    theta = np.array([0.0, math.pi / 4, math.pi / 2, math.pi]) if theta is None else np.asarray(theta)
    mu = np.linspace(0.0, 2.0, 201) if mu is None else np.asarray(mu)
    g = np.array([amplification(t, stencil, th, mu) for th in theta])
    zero, unit = locate_dissipativity_landmarks(t, stencil)
    return AmplificationProfile(label or t.label, stencil, theta, mu, g, zero, unit)


def landmarks_json(profiles, extra: dict | None = None) -> str:
    rows = [p.summary() for p in profiles]
    return json.dumps({"landmarks": rows, **(extra or {})}, indent=2)
