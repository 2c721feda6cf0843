import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sspimex.monotonicity import (
    GAMMA_DEFAULT,
    am_at_point,
    am_single,
    closed_form_boundary,
    extent_numeric,
    radius,
    radius_implicit_gamma,
    radius_implicit_gamma_numeric,
    region_closed_form,
    region_numeric,
)
from sspimex.tableaux import AdditiveTableau, IMEX_SCHEMES, builtin

SQRT2 = math.sqrt(2.0)


def test_point_inside_default_region():
    t = builtin("imex_ssp2_222")
    assert am_at_point(t, 0.5, 0.5)
    assert am_at_point(t, 0.5, SQRT2 * 0.5 - 1e-6)
    assert not am_at_point(t, 0.5, SQRT2 * 0.5 + 1e-6)


def test_explicit_extent_of_default_region():
    t = builtin("imex_ssp2_222")
    assert not am_at_point(t, 1.5, 0.0)
    assert am_at_point(t, 1.0 - 1e-9, 0.0)


@pytest.mark.parametrize("name", IMEX_SCHEMES)
def test_origin_always_inside(name):
    assert am_at_point(builtin(name), 0.0, 0.0)


def test_negative_arguments_rejected():
    with pytest.raises(ValueError):
        am_at_point(builtin("imex_ssp2_222"), -0.1, 0.0)


def test_forward_euler_pair_scalar_oracle():
    # one stage: M = [[1, 0], [-(r+rt)... ]] reduces to 1 - r - rt >= 0 on each axis
    fe = builtin("forward_euler")
    t = AdditiveTableau(fe, fe)
    for r in np.linspace(0.0, 2.0, 41):
        assert am_at_point(t, r, 0.0) == (r <= 1.0 + 1e-12)
        assert am_at_point(t, 0.0, r) == (r <= 1.0 + 1e-12)
    assert radius(fe) == pytest.approx(1.0, abs=1e-9)


def test_radius_of_explicit_builtins():
    assert radius(builtin("ssprk22")) == pytest.approx(1.0, abs=1e-9)
    assert radius(builtin("ssprk32")) == pytest.approx(2.0, abs=1e-9)
    assert radius(builtin("ssprk33")) == pytest.approx(1.0, abs=1e-9)
    assert radius(builtin("heun3")) == 0.0


def test_single_part_criterion_matches_am_single():
    t = builtin("ssprk32")
    assert am_single(t, 1.99) and not am_single(t, 2.01)


def test_radius_implicit_gamma_examples():
    assert radius_implicit_gamma(GAMMA_DEFAULT) == pytest.approx(1 + SQRT2, abs=1e-12)
    assert radius_implicit_gamma(0.2) == pytest.approx(2.5, abs=1e-12)
    assert radius_implicit_gamma(0.0) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        radius_implicit_gamma(0.51)


@pytest.mark.parametrize("g0", [0.25, GAMMA_DEFAULT])
def test_radius_implicit_gamma_continuous_at_branch_points(g0):
    # square-root branch at 1/4, so the jump shrinks like sqrt(offset)
    for eps in (1e-6, 1e-10):
        lo, hi = radius_implicit_gamma(g0 - eps), radius_implicit_gamma(g0 + eps)
        assert abs(lo - hi) < 20 * math.sqrt(eps)
        assert abs(lo - radius_implicit_gamma(g0)) < 20 * math.sqrt(eps)


def test_radius_implicit_gamma_peak():
    gs = np.linspace(0.0, 0.5, 2001)
    vals = np.array([radius_implicit_gamma(g) for g in gs])
    assert gs[np.argmax(vals)] == pytest.approx(0.25, abs=1e-9)
    assert vals.max() == pytest.approx(4.0, abs=1e-9)


@pytest.mark.parametrize("g", [0.05, 0.2, 0.26, 0.28, 0.3, 0.35, 0.45])
def test_radius_implicit_gamma_matches_numeric(g):
    assert radius_implicit_gamma_numeric(g) == pytest.approx(radius_implicit_gamma(g), abs=1e-6)


def test_closed_form_point_values():
    phi2, rmax2 = closed_form_boundary("imex_ssp2_332")
    assert phi2(1.0) == pytest.approx((-19 + math.sqrt(481)) / 4, abs=1e-12)
    assert phi2(1.0) == pytest.approx(0.73292, abs=1e-5)
    phi3, _ = closed_form_boundary("imex_ssp3_333")
    assert phi3(0.0) == pytest.approx(15 / 302 * (28 - math.sqrt(180)), abs=1e-12)
    assert phi3(0.0) == pytest.approx(0.72435, abs=1e-5)


def test_gamma_family_extent():
    assert region_closed_form("imex_ssp2_222", 0.3).r_max == 1.0
    assert region_closed_form("imex_ssp2_222", 0.4).r_max == pytest.approx(0.5)
    for g in (0.35, 0.4, 0.45):
        t = builtin("imex_ssp2_222", gamma=g)
        assert extent_numeric(t) == pytest.approx((1 - 2 * g) / g, abs=1e-8)


def test_closed_form_region_shape():
    reg = region_closed_form("imex_ssp2_222")
    assert len(reg.boundary) >= 200
    assert np.all(np.diff(reg.boundary[:, 0]) > 0)
    np.testing.assert_allclose(reg.boundary[:, 1], SQRT2 * (1 - reg.boundary[:, 0]), atol=1e-12)
    with pytest.raises(KeyError):
        region_closed_form("pr_ssp2_332_original")


@pytest.mark.parametrize("name", ["imex_ssp2_222", "imex_ssp2_332", "imex_ssp3_333"])
def test_numeric_region_matches_closed_form(name):
    step = 0.02
    num = region_numeric(builtin(name), step=step)
    closed = region_closed_form(name)
    assert num.r_max == pytest.approx(closed.r_max, abs=2 * step)
    phi, _ = closed_form_boundary(name)
    for r, rt in num.boundary:
        assert rt == pytest.approx(max(phi(min(r, closed.r_max)), 0.0), abs=2 * step)
    assert num.radius_explicit == pytest.approx(closed.radius_explicit, abs=1e-6)
    assert num.radius_implicit == pytest.approx(closed.radius_implicit, abs=1e-6)


def test_original_ssp2_332_region_is_trivial():
    reg = region_numeric(builtin("pr_ssp2_332_original"), step=0.01)
    assert reg.r_max == 0.0
    assert not am_at_point(builtin("pr_ssp2_332_original"), 0.01, 0.0)


def test_region_csv_header():
    text = region_closed_form("imex_ssp3_333").to_csv()
    assert text.splitlines()[0] == "r,rtilde"


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["imex_ssp2_222", "imex_ssp2_332", "imex_ssp3_333"]),
    st.floats(0, 2),
    st.floats(0, 3),
    st.floats(0, 1),
    st.floats(0, 1),
)
def test_region_is_a_down_set(name, r, rt, fr, frt):
    t = builtin(name)
    if am_at_point(t, r, rt):
        assert am_at_point(t, r * fr, rt * frt)


def test_gamma_radius_stable_next_to_default_gamma():
    g = GAMMA_DEFAULT
    for x in (math.nextafter(g, 0), g, math.nextafter(g, 1), 1 - 2**-0.5):
        assert radius_implicit_gamma(x) == pytest.approx(1 + math.sqrt(2), abs=1e-12)
