"""Butcher tableaux for plain and additive (IMEX) Runge-Kutta methods.

Rational coefficients are kept as :class:`fractions.Fraction`;
entries involving irrational parameters (the default ``gamma = 1 - 1/sqrt(2)``)
are kept as Python floats.  Numeric work uses the ``A``, ``b`` and ``c``
properties, which return float arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Sequence, Union

import numpy as np

Coeff = Union[Fraction, float]

ROW_SUM_TOL = 1e-14
ORDER_TOL = 1e-12

GAMMA_DEFAULT = 1.0 - 1.0 / math.sqrt(2.0)
GAMMA_THIRD_ORDER = (1.0 - 1.0 / math.sqrt(3.0)) / 2.0


class TableauError(ValueError):
    """Raised for malformed or inconsistent tableaux."""


def _coerce(x) -> Coeff:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_number(x)
    if isinstance(x, Real):
        return float(x)
    raise TableauError(f"unsupported coefficient {x!r}")


def parse_number(token: str) -> Coeff:
    """Integers and ``p/q`` tokens become Fractions, anything else a float."""
    token = token.strip()
    try:
        return Fraction(int(token))
    except ValueError:
        pass
    if "/" in token:
        num, _, den = token.partition("/")
        try:
            return Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError) as exc:
            raise TableauError(f"bad fraction {token!r}") from exc
    try:
        return float(token)
    except ValueError as exc:
        raise TableauError(f"bad number {token!r}") from exc


def format_number(x: Coeff) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(float(x))


@dataclass(frozen=True)
class RKTableau:
    """A single Runge-Kutta method ``(a, b)``; abscissae are the row sums of ``a``."""

    a: tuple
    b: tuple
    label: str = field(default="", compare=False)

    def __post_init__(self):
        a = tuple(tuple(_coerce(v) for v in row) for row in self.a)
        b = tuple(_coerce(v) for v in self.b)
        s = len(b)
        if s == 0:
            raise TableauError("tableau needs at least one stage")
        if len(a) != s or any(len(row) != s for row in a):
            raise TableauError(f"a must be {s}x{s} to match {s} weights")
        if abs(float(sum(b)) - 1.0) > ROW_SUM_TOL:
            raise TableauError(f"weights sum to {float(sum(b))!r}, not 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def stages(self) -> int:
        return len(self.b)

    @property
    def A(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.a])

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(v) for v in self.b])

    @property
    def c(self) -> np.ndarray:
        return np.array([float(sum(row)) for row in self.a])

    @property
    def is_explicit(self) -> bool:
        s = self.stages
        return all(self.a[i][j] == 0 for i in range(s) for j in range(i, s))

    @property
    def is_dirk(self) -> bool:
        s = self.stages
        return all(self.a[i][j] == 0 for i in range(s) for j in range(i + 1, s))

    def diagonal(self) -> np.ndarray:
        return np.diag(self.A)


@dataclass(frozen=True)
class AdditiveTableau:
    """Explicit/implicit pair applied to ``y' = F(y) + G(y)``.

    ``explicit`` must be strictly lower triangular and ``implicit`` lower
    triangular (DIRK).
    """

    explicit: RKTableau
    implicit: RKTableau
    label: str = field(default="", compare=False)
    gamma: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.explicit.stages != self.implicit.stages:
            raise TableauError(
                f"stage counts differ: explicit {self.explicit.stages}, "
                f"implicit {self.implicit.stages}"
            )
        if not self.explicit.is_explicit:
            raise TableauError("explicit part has entries on or above the diagonal")
        if not self.implicit.is_dirk:
            raise TableauError("implicit part has entries above the diagonal")

    @property
    def stages(self) -> int:
        return self.explicit.stages

    @classmethod
    def from_single(cls, t: RKTableau) -> "AdditiveTableau":
        """Pair an explicit method with itself (both vector fields explicit)."""
        return cls(t, t, label=t.label)


Tableau = Union[RKTableau, AdditiveTableau]


def _F(num, den=1):
    return Fraction(num, den)


_EXPLICIT = {
    "forward_euler": ([[0]], [1]),
    "ssprk22": ([[0, 0], [1, 0]], [_F(1, 2), _F(1, 2)]),
    "ssprk32": (
        [[0, 0, 0], [_F(1, 2), 0, 0], [_F(1, 2), _F(1, 2), 0]],
        [_F(1, 3)] * 3,
    ),
    "ssprk33": (
        [[0, 0, 0], [1, 0, 0], [_F(1, 4), _F(1, 4), 0]],
        [_F(1, 6), _F(1, 6), _F(2, 3)],
    ),
    "heun3": (
        [[0, 0, 0], [_F(1, 3), 0, 0], [0, _F(2, 3), 0]],
        [_F(1, 4), 0, _F(3, 4)],
    ),
}

NOMINAL_ORDER = {
    "forward_euler": 1,
    "ssprk22": 2,
    "ssprk32": 2,
    "ssprk33": 3,
    "heun3": 3,
    "imex_ssp2_222": 2,
    "imex_ssp2_332": 2,
    "imex_ssp3_333": 3,
    "pr_ssp2_332_original": 2,
}

IMEX_SCHEMES = ("imex_ssp2_222", "imex_ssp2_332", "imex_ssp3_333", "pr_ssp2_332_original")
EXPLICIT_SCHEMES = tuple(_EXPLICIT)
SCHEMES = tuple(NOMINAL_ORDER)

# Names used in the summary tables of the analysis output.
DISPLAY_NAMES = {
    "forward_euler": "Forward Euler",
    "ssprk22": "SSPRK(2,2)",
    "ssprk32": "SSPRK(3,2)",
    "ssprk33": "SSPRK(3,3)",
    "heun3": "Heun3",
    "imex_ssp2_222": "IMEX SSP2(2,2,2)",
    "imex_ssp2_332": "IMEX SSP2(3,3,2)",
    "imex_ssp3_333": "IMEX SSP3(3,3,3)",
    "pr_ssp2_332_original": "IMEX SSP2(3,3,2) original",
}


def _plain(name: str) -> RKTableau:
    a, b = _EXPLICIT[name]
    return RKTableau(a, b, label=name)


def builtin(name: str, gamma: float | Fraction | None = None) -> Tableau:
    """Return a named scheme.

    Explicit methods come back as :class:`RKTableau`, IMEX pairs as
    :class:`AdditiveTableau`.  ``gamma`` is only meaningful for
    ``imex_ssp2_222`` and must lie in ``[0, 1/2]``.
    """
    if name not in NOMINAL_ORDER:
        raise KeyError(f"unknown scheme {name!r}; known: {', '.join(SCHEMES)}")
    if gamma is not None and name != "imex_ssp2_222":
        raise TableauError(f"gamma is only accepted for imex_ssp2_222, not {name}")

    if name in _EXPLICIT:
        return _plain(name)

    if name == "imex_ssp2_222":
        if gamma is None:
            gamma = GAMMA_DEFAULT
        g = _coerce(gamma)
        if not 0 <= g <= Fraction(1, 2):
            raise TableauError(f"gamma={float(g)} outside [0, 1/2]")
        implicit = RKTableau([[g, 0], [1 - 2 * g, g]], [_F(1, 2), _F(1, 2)])
        return AdditiveTableau(_plain("ssprk22"), implicit, label=name, gamma=float(g))

    if name == "imex_ssp2_332":
        implicit = RKTableau(
            [[_F(1, 5), 0, 0], [_F(1, 10), _F(1, 5), 0], [_F(1, 3), _F(1, 3), _F(1, 3)]],
            [_F(1, 3)] * 3,
        )
        return AdditiveTableau(_plain("ssprk32"), implicit, label=name)

    if name == "pr_ssp2_332_original":
        implicit = RKTableau(
            [[_F(1, 4), 0, 0], [0, _F(1, 4), 0], [_F(1, 3), _F(1, 3), _F(1, 3)]],
            [_F(1, 3)] * 3,
        )
        return AdditiveTableau(_plain("ssprk32"), implicit, label=name)

    # imex_ssp3_333
    implicit = RKTableau(
        [[0, 0, 0], [_F(14, 15), _F(1, 15), 0], [_F(7, 30), _F(1, 5), _F(1, 15)]],
        [_F(1, 6), _F(1, 6), _F(2, 3)],
    )
    return AdditiveTableau(_plain("ssprk33"), implicit, label=name)


def implicit_part(t: Tableau) -> RKTableau:
    return t.implicit if isinstance(t, AdditiveTableau) else t


def explicit_part(t: Tableau) -> RKTableau:
    return t.explicit if isinstance(t, AdditiveTableau) else t


# --- order conditions -------------------------------------------------------


def _order_residuals(bs: Sequence[np.ndarray], As: Sequence[np.ndarray], p: int):
    """Yield residuals of the classical conditions up to order ``p``.

    With one ``(A, b)`` pair these are the usual Butcher conditions; with two
    pairs every mix of explicit/implicit coefficients is included, which gives
    the coupling conditions of additive methods.
    """
    cs = [A.sum(axis=1) for A in As]
    for b in bs:
        yield b.sum() - 1.0
    if p >= 2:
        for b in bs:
            for c in cs:
                yield b @ c - 0.5
    if p >= 3:
        for b in bs:
            for c1 in cs:
                for c2 in cs:
                    yield b @ (c1 * c2) - 1.0 / 3.0
            for A in As:
                for c in cs:
                    yield b @ (A @ c) - 1.0 / 6.0


def check_order_conditions(t: Tableau, p: int) -> bool:
    """True iff every order condition up to ``p`` (at most 3) holds to 1e-12.

    Additive tableaux are checked including the coupling conditions between
    their two parts.
    """
    if not 1 <= p <= 3:
        raise ValueError("order conditions are only implemented for p in 1..3")
    if isinstance(t, AdditiveTableau):
        parts = (t.explicit, t.implicit)
    else:
        parts = (t,)
    bs = [q.weights for q in parts]
    As = [q.A for q in parts]
    return all(abs(r) <= ORDER_TOL for r in _order_residuals(bs, As, p))


def order_of(t: Tableau, max_order: int = 3) -> int:
    """Largest ``p <= max_order`` whose conditions all hold (0 if none)."""
    order = 0
    for p in range(1, max_order + 1):
        if not check_order_conditions(t, p):
            break
        order = p
    return order


# --- text format ------------------------------------------------------------


def serialize_tableau(t: Tableau) -> str:
    """Render a tableau in the line-oriented text format read by :func:`parse_tableau`.

    A plain tableau is written as an additive pair with both parts equal.
    """
    if isinstance(t, RKTableau):
        t = AdditiveTableau.from_single(t)
    lines = []
    if t.label:
        lines.append(f"# {t.label}")
        lines.append(f"label {t.label}")
    if t.gamma is not None:
        lines.append(f"gamma {t.gamma:.17g}")
    lines.append(f"stages {t.stages}")
    for block, key, part in (("explicit", "b", t.explicit), ("implicit", "bt", t.implicit)):
        lines.append(block)
        for row in part.a:
            lines.append(" ".join(format_number(v) for v in row))
        lines.append(key + " " + " ".join(format_number(v) for v in part.b))
    return "\n".join(lines) + "\n"


def parse_tableau(text: str) -> AdditiveTableau:
    """Parse the text format; raises :class:`TableauError` on any inconsistency."""
    tokens = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens.append(line.split())

    label, gamma, stages = "", None, None
    blocks: dict[str, tuple[list, list]] = {}
    i = 0
    while i < len(tokens):
        head = tokens[i][0]
        if head == "label":
            label = " ".join(tokens[i][1:])
            i += 1
        elif head == "gamma":
            if len(tokens[i]) != 2:
                raise TableauError("gamma line needs exactly one value")
            gamma = float(parse_number(tokens[i][1]))
            i += 1
        elif head == "stages":
            if len(tokens[i]) != 2:
                raise TableauError("stages line needs exactly one value")
            try:
                stages = int(tokens[i][1])
            except ValueError as exc:
                raise TableauError(f"bad stage count {tokens[i][1]!r}") from exc
            if stages < 1:
                raise TableauError("stage count must be positive")
            i += 1
        elif head in ("explicit", "implicit"):
            if head in blocks:
                raise TableauError(f"duplicate {head} block")
            weight_key = "b" if head == "explicit" else "bt"
            rows = []
            i += 1
            while i < len(tokens) and tokens[i][0] != weight_key:
                if tokens[i][0] in ("explicit", "implicit", "stages"):
                    raise TableauError(f"{head} block is missing its '{weight_key}' row")
                rows.append([parse_number(v) for v in tokens[i]])
                i += 1
            if i == len(tokens):
                raise TableauError(f"{head} block is missing its '{weight_key}' row")
            weights = [parse_number(v) for v in tokens[i][1:]]
            blocks[head] = (rows, weights)
            i += 1
        else:
            raise TableauError(f"unexpected line starting with {head!r}")

    if stages is None:
        raise TableauError("missing 'stages' header")
    for name in ("explicit", "implicit"):
        if name not in blocks:
            raise TableauError(f"missing {name} block")
        rows, weights = blocks[name]
        if len(rows) != stages or any(len(r) != stages for r in rows) or len(weights) != stages:
            raise TableauError(
                f"{name} block is not consistent with stages {stages}: "
                f"{len(rows)} rows of widths {[len(r) for r in rows]}, {len(weights)} weights"
            )
    explicit = RKTableau(*blocks["explicit"])
    implicit = RKTableau(*blocks["implicit"])
    return AdditiveTableau(explicit, implicit, label=label, gamma=gamma)
