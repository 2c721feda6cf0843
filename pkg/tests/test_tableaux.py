import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sspimex.tableaux import (
    GAMMA_DEFAULT,
    GAMMA_THIRD_ORDER,
    IMEX_SCHEMES,
    NOMINAL_ORDER,
    SCHEMES,
    AdditiveTableau,
    RKTableau,
    TableauError,
    builtin,
    check_order_conditions,
    order_of,
    parse_tableau,
    serialize_tableau,
)


def test_imex_ssp2_222_coefficients():
    t = builtin("imex_ssp2_222")
    g = 1 - 1 / math.sqrt(2)
    np.testing.assert_array_equal(t.explicit.A, [[0, 0], [1, 0]])
    np.testing.assert_array_equal(t.explicit.weights, [0.5, 0.5])
    np.testing.assert_allclose(t.implicit.A, [[g, 0], [1 - 2 * g, g]], rtol=0, atol=1e-16)
    np.testing.assert_array_equal(t.implicit.weights, [0.5, 0.5])
    assert t.gamma == pytest.approx(g, abs=1e-16)


def test_imex_ssp3_333_implicit_is_exact_rational():
    t = builtin("imex_ssp3_333")
    assert t.implicit.a == (
        (0, 0, 0),
        (F(14, 15), F(1, 15), 0),
        (F(7, 30), F(1, 5), F(1, 15)),
    )
    assert t.implicit.b == (F(1, 6), F(1, 6), F(2, 3))


def test_forward_euler():
    t = builtin("forward_euler")
    assert t.a == ((0,),) and t.b == (1,)


def test_heun3_third_order_conditions_in_exact_arithmetic():
    t = builtin("heun3")
    assert t.a == ((0, 0, 0), (F(1, 3), 0, 0), (0, F(2, 3), 0))
    assert t.b == (F(1, 4), 0, F(3, 4))
    a, b = t.a, t.b
    c = [sum(row) for row in a]
    assert sum(b) == 1
    assert sum(bi * ci for bi, ci in zip(b, c)) == F(1, 2)
    assert sum(bi * ci * ci for bi, ci in zip(b, c)) == F(1, 3)
    Ac = [sum(a[i][j] * c[j] for j in range(3)) for i in range(3)]
    assert sum(bi * x for bi, x in zip(b, Ac)) == F(1, 6)


def test_original_ssp2_332_implicit_rows():
    t = builtin("pr_ssp2_332_original")
    assert t.implicit.a[0] == (F(1, 4), 0, 0)
    assert t.implicit.a[1] == (0, F(1, 4), 0)


def test_abscissae_are_row_sums():
    for name in SCHEMES:
        t = builtin(name)
        parts = (t.explicit, t.implicit) if isinstance(t, AdditiveTableau) else (t,)
        for part in parts:
            np.testing.assert_allclose(part.c, part.A.sum(axis=1), atol=1e-14)


@pytest.mark.parametrize("name", SCHEMES)
def test_nominal_order_holds(name):
    assert check_order_conditions(builtin(name), NOMINAL_ORDER[name])


@pytest.mark.parametrize("name", [n for n in SCHEMES if NOMINAL_ORDER[n] < 3])
def test_order_above_nominal_fails(name):
    assert not check_order_conditions(builtin(name), NOMINAL_ORDER[name] + 1)


def test_order_condition_examples():
    assert check_order_conditions(builtin("ssprk22"), 2)
    assert not check_order_conditions(builtin("ssprk32"), 3)
    assert check_order_conditions(builtin("forward_euler"), 1)


def test_third_order_gamma_implicit_part():
    t = builtin("imex_ssp2_222", gamma=GAMMA_THIRD_ORDER)
    assert check_order_conditions(t.implicit, 3)
    assert not check_order_conditions(builtin("imex_ssp2_222").implicit, 3)
    assert order_of(t) == 2


@pytest.mark.parametrize("name", IMEX_SCHEMES)
def test_imex_weights_shared(name):
    t = builtin(name)
    np.testing.assert_array_equal(t.explicit.weights, t.implicit.weights)


def test_builtin_errors():
    with pytest.raises(KeyError):
        builtin("rk4")
    with pytest.raises(TableauError):
        builtin("imex_ssp2_222", gamma=0.6)
    with pytest.raises(TableauError):
        builtin("imex_ssp2_222", gamma=-0.1)
    with pytest.raises(TableauError):
        builtin("ssprk22", gamma=0.2)


def test_rktableau_rejects_inconsistent_weights():
    with pytest.raises(TableauError):
        RKTableau([[0, 0], [1, 0]], [F(1, 2), F(1, 3)])
    with pytest.raises(TableauError):
        RKTableau([[0, 0]], [1])


@pytest.mark.parametrize("name", SCHEMES)
def test_serialization_round_trip(name):
    t = builtin(name)
    back = parse_tableau(serialize_tableau(t))
    expected = t if isinstance(t, AdditiveTableau) else AdditiveTableau.from_single(t)
    assert back == expected
    assert back.label == name
    assert serialize_tableau(back) == serialize_tableau(expected)


def test_round_trip_keeps_rationals_exact():
    back = parse_tableau(serialize_tableau(builtin("imex_ssp2_332")))
    assert back.implicit.a[1] == (F(1, 10), F(1, 5), 0)
    assert all(isinstance(v, F) for row in back.implicit.a for v in row)


GOOD = """\
# two-stage example
stages 2
explicit
0 0
1 0
b 1/2 1/2
implicit
1/4 0
1/2 1/4
bt 1/2 1/2
"""


def test_parse_comments_and_fractions():
    t = parse_tableau(GOOD)
    assert t.implicit.a[1] == (F(1, 2), F(1, 4))


def test_parse_rejects_entry_above_diagonal():
    bad = GOOD.replace("1/4 0\n1/2 1/4", "1/4 1/8\n1/2 1/4")
    with pytest.raises(TableauError):
        parse_tableau(bad)


def test_parse_rejects_mismatched_stage_counts():
    bad = """stages 3
explicit
0 0 0
1 0 0
1/4 1/4 0
b 1/6 1/6 2/3
implicit
1/2 0
0 1/2
bt 1/2 1/2
"""
    with pytest.raises(TableauError):
        parse_tableau(bad)


@pytest.mark.parametrize(
    "text",
    [
        "",
        GOOD.replace("stages 2\n", ""),
        GOOD.replace("bt 1/2 1/2\n", ""),
        GOOD.replace("explicit\n0 0\n1 0\nb 1/2 1/2\n", ""),
        GOOD.replace("1/4 0\n", "x 0\n"),
        GOOD + "stray line\n",
    ],
)
def test_parse_rejects_malformed(text):
    with pytest.raises(TableauError):
        parse_tableau(text)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=50), min_size=3, max_size=3))
def test_round_trip_random_rationals(vals):
    a21, d1, d2 = vals
    b = [F(1, 3), F(2, 3)]
    t = AdditiveTableau(RKTableau([[0, 0], [a21, 0]], b), RKTableau([[d1, 0], [a21, d2]], b))
    assert parse_tableau(serialize_tableau(t)) == t
