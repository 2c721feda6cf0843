import math
from importlib import resources

import numpy as np
import pytest

from sspimex.advdiff.config import ConfigError, RunConfig, build_problem, load_config, parse_config
from sspimex.advdiff.simulation import (
    TRAJECTORY_COLUMNS,
    CourantNumbers,
    TransportProblem,
    buoyancy_timescale,
    explicit_dt_limit,
    run_simulation,
)
from sspimex.advdiff.transport import VelocityField
from sspimex.grid import GridField
from sspimex.tableaux import builtin


def bundled(name):
    return resources.files("sspimex") / "configs" / name


def square_problem(n=10, dx=0.01, kappa_T=1.0, kappa_c=1.0, eta=0.0, gravity=0.0, courant=None, velocity=None):
    z = np.zeros((n, n))
    return TransportProblem(
        T=GridField(z, dx, dx),
        c=GridField(z.copy(), dx, dx),
        velocity=velocity or VelocityField.zero(n, n),
        kappa_T=kappa_T,
        kappa_c=kappa_c,
        courant=courant or CourantNumbers(),
        eta_over_rho=eta,
        gravity=gravity,
    )


def test_thermal_limit_formula():
    lim = explicit_dt_limit(square_problem(dx=0.01, kappa_T=1.0, courant=CourantNumbers(C_T=0.2)))
    assert lim.tau_T == pytest.approx(2e-5)


def test_symmetric_case_binds_both_diffusive_limits():
    lim = explicit_dt_limit(square_problem(kappa_T=0.7, kappa_c=0.7))
    assert lim.dt == pytest.approx(lim.tau_T) == pytest.approx(lim.tau_c)
    assert math.isinf(lim.tau_visc) and math.isinf(lim.tau_fluid)
    assert math.isinf(lim.implicit_cap())


def test_low_lewis_and_prandtl_numbers_bind_the_thermal_limit():
    lim = explicit_dt_limit(square_problem(kappa_T=1.0, kappa_c=0.1, eta=0.5))
    assert lim.dt == lim.tau_T
    assert lim.tau_T < lim.tau_visc < lim.tau_c


def test_advective_limit_uses_max_speed():
    n, dx = 10, 0.01
    p = square_problem(n, dx, velocity=VelocityField.uniform(n, n, 4.0), courant=CourantNumbers(C_fluid=0.5))
    assert explicit_dt_limit(p).tau_fluid == pytest.approx(0.5 * dx / 4.0)


@pytest.mark.parametrize("dx,g,expected", [(1.0, 1.0, 1.0), (0.25, 4.0, 0.25), (0.25, 0.0, math.inf)])
def test_buoyancy_timescale(dx, g, expected):
    assert buoyancy_timescale(square_problem(dx=dx, gravity=g)) == expected


def test_problem_validation():
    with pytest.raises(ValueError):
        square_problem(kappa_T=0.0)
    n = 6
    vel = VelocityField.uniform(n, n, 0.0, 1.0)
    with pytest.raises(ValueError):
        square_problem(n, velocity=vel)


def test_diffusion_only_imex_at_ten_times_the_limit():
    cfg = load_config(bundled("diffusion_only.cfg"), snapshot_every=1)
    p = build_problem(cfg)
    lim = explicit_dt_limit(p)
    res = run_simulation(p, cfg.tableau(), cfg.stencil, cfg.t_end, controller=False, dt=10 * lim.dt, snapshot_every=1)
    assert res.ok
    assert res.column("dt")[1] == pytest.approx(10 * lim.dt)
    peaks = np.array([np.abs(s[2][0]).max() for s in res.snapshots])
    assert np.all(np.diff(peaks) < 0)
    assert np.all(res.column("osc_count") == 0)
    assert res.column("cg_iters")[1:].min() > 0


def test_step_advection_with_ssprk22_is_tvd():
    cfg = load_config(bundled("step_advection.cfg"))
    p = build_problem(cfg)
    res = run_simulation(p, cfg.tableau(), t_end=cfg.t_end, controller=False)
    assert res.ok
    tv = res.column("tv_c")
    assert np.all(np.diff(tv) <= 1e-12 * tv[0])
    assert res.column("min_c").min() >= -1e-12
    assert res.column("max_c").max() <= 1 + 1e-12


def test_controller_reduces_dt_for_the_third_order_implicit_part():
    cfg = load_config(bundled("controller_demo.cfg"))
    p = build_problem(cfg)
    res = run_simulation(p, cfg.tableau(), cfg.stencil, cfg.t_end, controller=True)
    assert res.ok
    assert res.rejected_steps > 0
    dts = res.column("dt")[1:-1]
    assert dts.min() < dts[0]
    assert np.all(dts <= res.dt_cap * (1 + 1e-12))


def test_without_controller_the_same_run_is_unstable():
    cfg = load_config(bundled("controller_demo.cfg"))
    res = run_simulation(build_problem(cfg), cfg.tableau(), cfg.stencil, cfg.t_end, controller=False)
    assert res.status == "blowup"


def test_explicit_scheme_above_diffusive_limit_blows_up():
    cfg = load_config(bundled("diffusion_only.cfg"), scheme="ssprk22")
    p = build_problem(cfg)
    lim = explicit_dt_limit(p)
    res = run_simulation(p, cfg.tableau(), t_end=cfg.t_end, controller=False, dt=10 * lim.dt)
    assert res.status == "blowup"


def test_explicit_controller_respects_all_four_limits():
    cfg = load_config(bundled("diffusion_only.cfg"), scheme="ssprk33", controller=True, t_end=1e-3)
    p = build_problem(cfg)
    res = run_simulation(p, cfg.tableau(), t_end=cfg.t_end, dt=1.0)
    assert res.dt_cap == explicit_dt_limit(p).dt
    assert res.column("dt")[1:].max() <= res.dt_cap


def test_max_steps_status():
    cfg = load_config(bundled("diffusion_only.cfg"))
    res = run_simulation(build_problem(cfg), cfg.tableau(), t_end=cfg.t_end, controller=False, max_steps=3)
    assert res.status == "max_steps"
    assert len(res.records) == 4


def test_trajectory_csv_columns():
    cfg = load_config(bundled("diffusion_only.cfg"), t_end=1e-3)
    res = run_simulation(build_problem(cfg), cfg.tableau(), t_end=cfg.t_end)
    lines = res.trajectory_csv().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == len(res.records) + 1
    assert res.diagnostics()["steps"] == len(res.records) - 1


def test_seeded_runs_are_deterministic():
    text = "nx = 16\nny = 16\nperturbation = noise\nperturbation_amplitude = 0.01\nseed = 7\nt_end = 1e-3\n"
    a = parse_config(text)
    b = parse_config(text)
    ra = run_simulation(build_problem(a), a.tableau(), t_end=a.t_end)
    rb = run_simulation(build_problem(b), b.tableau(), t_end=b.t_end)
    np.testing.assert_array_equal(ra.T, rb.T)
    c = parse_config(text, seed=8)
    assert not np.array_equal(build_problem(c).T.values, build_problem(a).T.values)


@pytest.mark.parametrize(
    "text",
    [
        "nx = 0\n",
        "scheme = rk4\n",
        "bogus = 1\n",
        "nx 12\n",
        "nx = twelve\n",
        "controller = maybe\n",
        "stencil = ninepoint\n",
        "dt_scan = 1, -2\n",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_uniform_vertical_velocity_rejected():
    with pytest.raises(ConfigError):
        build_problem(RunConfig(velocity="uniform", u0=1.0, v0=0.5))


def test_config_comments_and_overrides():
    cfg = parse_config("# header\nnx = 12  # trailing\nscheme = ssprk33\ncontroller = off\n", nx=20)
    assert cfg.nx == 20 and cfg.scheme == "ssprk33" and cfg.controller is False
    assert cfg.tableau() is not None
    assert parse_config("gamma = 0.3\n").tableau() == builtin("imex_ssp2_222", 0.3)


def test_cellular_flow_keeps_c_bounded():
    cfg = parse_config(
        "nx = 24\nny = 24\nvelocity = cellular\namplitude = 1.0\nadvection = eno2\n"
        "initial_c = step\nkappa_c = 0.01\nkappa_T = 0.01\nt_end = 0.05\nc_bottom = 0\nc_top = 0\n"
    )
    p = build_problem(cfg)
    res = run_simulation(p, cfg.tableau(), t_end=cfg.t_end)
    assert res.ok
    assert res.dt_cap == explicit_dt_limit(p).tau_fluid
