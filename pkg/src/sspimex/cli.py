"""Command-line front end: ``sspimex <command> [options]``.

Every command writes CSV/JSON files into ``--out`` (created if missing) and
prints the summary JSON to stdout.  Exit codes: 0 success, 2 usage or
configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import accuracy, linear_analysis, monotonicity
from .advdiff.config import ConfigError, build_problem, load_config
from .advdiff.simulation import explicit_dt_limit, run_simulation
from .grid import GridField
from .stepper import StageSolveError
from .tableaux import (
    GAMMA_DEFAULT,
    IMEX_SCHEMES,
    SCHEMES,
    TableauError,
    builtin,
    implicit_part,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

DEFAULT_DISSIPATIVITY = ("imex_ssp2_222", "imex_ssp2_332", "imex_ssp3_333")


class UsageError(Exception):
    pass


def parse_gamma_range(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive) or a comma list of values."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return np.round(start + step * np.arange(n), 12)
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise UsageError(f"bad gamma range {text!r}; expected start:stop:step") from None


def _schemes(args, default) -> list[str]:
    names = []
    for item in args.scheme or []:
        names += [s.strip() for s in item.split(",") if s.strip()]
    if not names:
        if default is None:
            raise UsageError("at least one --scheme is required")
        names = list(default)
    if names == ["all"]:
        names = list(SCHEMES)
    unknown = [n for n in names if n not in SCHEMES]
    if unknown:
        raise UsageError(f"unknown scheme(s): {', '.join(unknown)}; known: {', '.join(SCHEMES)}")
    return names


def _tableaux(args, default):
    """``(label, tableau)`` pairs, expanding ``--gamma``/``--gamma-range`` for the gamma family."""
    out = []
    gammas = None
    if getattr(args, "gamma_range", None):
        gammas = parse_gamma_range(args.gamma_range)
    elif getattr(args, "gamma", None) is not None:
        gammas = [args.gamma]
    for name in _schemes(args, default):
        if name == "imex_ssp2_222" and gammas is not None:
            for g in gammas:
                try:
                    out.append((f"{name}_gamma{float(g):g}", builtin(name, gamma=float(g))))
                except TableauError as exc:
                    raise UsageError(str(exc)) from None
        else:
            out.append((name, builtin(name)))
    return out


def _outdir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str):
    path.write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=lambda x: None if x is None else float(x))


def cmd_stability(args) -> int:
    out = _outdir(args)
    rows = []
    for label, t in _tableaux(args, None):
        z_left = linear_analysis.find_z_left(t)
        left = -6.0 if z_left is None else min(-6.0, 1.2 * z_left)
        report = linear_analysis.scan_stability_region(t, (left, 1.0), (-4.0, 4.0), args.resolution, label=label)
        _write(out / f"stability_{label}.csv", report.to_csv())
        row = report.summary()
        row["gamma"] = getattr(t, "gamma", None)
        rows.append(row)
    text = _dump(rows)
    _write(out / "stability_summary.json", text)
    print(text)
    return EXIT_OK


def cmd_dissipativity(args) -> int:
    out = _outdir(args)
    stencils = [args.stencil] if args.stencil else list(linear_analysis.STENCILS)
    profiles = []
    for label, t in _tableaux(args, DEFAULT_DISSIPATIVITY):
        part = implicit_part(t)
        for stencil in stencils:
            prof = linear_analysis.amplification_profile(part, stencil, label=label)
            profiles.append(prof)
            lines = ["theta,mu,g"]
            for th, row in zip(prof.theta, prof.g):
                lines += [f"{th:.17g},{m:.17g},{v:.17g}" for m, v in zip(prof.mu, row)]
            _write(out / f"amplification_{label}_{stencil}.csv", "\n".join(lines) + "\n")
    text = linear_analysis.landmarks_json(profiles)
    _write(out / "landmarks.json", text)
    print(text)
    return EXIT_OK


def cmd_monotonicity(args) -> int:
    out = _outdir(args)
    step = 1.0 / args.resolution
    rows = []
    if args.gamma_range:
        gammas = parse_gamma_range(args.gamma_range)
        lines = ["gamma,radius_closed_form,radius_numeric"]
        for g in gammas:
            lines.append(f"{g:.17g},{monotonicity.radius_implicit_gamma(g):.17g},{monotonicity.radius_implicit_gamma_numeric(g):.17g}")
        _write(out / "radius_gamma.csv", "\n".join(lines) + "\n")
    names = _schemes(args, IMEX_SCHEMES)
    if any(n not in IMEX_SCHEMES for n in names):
        raise UsageError("monotonicity regions need IMEX schemes: " + ", ".join(IMEX_SCHEMES))
    for label, t in _tableaux(args, IMEX_SCHEMES):
        region = monotonicity.region_numeric(t, step=step)
        _write(out / f"monotonicity_{label}.csv", region.to_csv())
        row = {
            "scheme": label,
            "gamma": getattr(t, "gamma", None),
            "radius_explicit": region.radius_explicit,
            "radius_implicit": region.radius_implicit,
            "r_max": region.r_max,
            "grid_step": step,
        }
        name = t.label
        if name in ("imex_ssp2_222", "imex_ssp2_332", "imex_ssp3_333"):
            gamma = t.gamma if name == "imex_ssp2_222" else None
            closed = monotonicity.region_closed_form(name, gamma)
            _write(out / f"monotonicity_{label}_closed_form.csv", closed.to_csv())
            row["radius_implicit_closed_form"] = closed.radius_implicit
            row["r_max_closed_form"] = closed.r_max
        rows.append(row)
    text = _dump(rows)
    _write(out / "monotonicity_summary.json", text)
    print(text)
    return EXIT_OK


def _convergence(reports, out: Path, stem: str):
    _write(out / f"{stem}.csv", accuracy.reports_csv(reports))
    text = accuracy.reports_json(reports)
    _write(out / f"{stem}.json", text)
    return text


def cmd_convergence(args) -> int:
    out = _outdir(args)
    reports = []
    for label, t in _tableaux(args, SCHEMES):
        reports.append(accuracy.fit_error_constant(t, accuracy.NOMINAL_ORDER[t.label], label=label))
    print(_convergence(reports, out, "convergence"))
    return EXIT_OK


def cmd_gamma_sweep(args) -> int:
    out = _outdir(args)
    gammas = parse_gamma_range(args.gamma_range) if args.gamma_range else None
    reports = accuracy.gamma_sweep(gammas)
    _convergence(reports, out, "gamma_sweep_errors")
    lines = ["gamma,fitted_constant,fitted_order"]
    lines += [f"{r.gamma:.17g},{r.fitted_constant:.17g},{r.fitted_order:.17g}" for r in reports]
    _write(out / "gamma_sweep.csv", "\n".join(lines) + "\n")
    summary = {"minimum_gamma": accuracy.sweep_minimum(reports), "default_gamma": GAMMA_DEFAULT, "points": len(reports)}
    text = _dump(summary)
    _write(out / "gamma_sweep.json", text)
    print(text)
    return EXIT_OK


def _snapshot_files(out: Path, prefix: str, result, problem):
    for n, _, y in result.snapshots:
        for k, (name, fld) in enumerate((("T", problem.T), ("c", problem.c))):
            grid = GridField(y[k], fld.dx, fld.dy, fld.bottom, fld.top)
            _write(out / f"{prefix}snapshot_{n:06d}_{name}.csv", grid.to_csv(name))


def _run_one(cfg, problem, dt, out: Path, prefix: str = ""):
    result = run_simulation(
        problem,
        cfg.tableau(),
        stencil=cfg.stencil,
        t_end=cfg.t_end,
        controller=cfg.controller,
        dt=dt,
        max_steps=cfg.max_steps,
        snapshot_every=cfg.snapshot_every,
        scan_vertical=cfg.scan_vertical,
        cg_tol=cfg.cg_tol,
    )
    _write(out / f"{prefix}trajectory.csv", result.trajectory_csv())
    _snapshot_files(out, prefix, result, problem)
    diag = result.diagnostics()
    tv = result.column("tv_c")
    diag["tv_c_increased"] = bool(np.any(np.diff(tv) > 1e-12 * max(tv[0], 1e-300)))
    diag["dt_initial"] = dt
    _write(out / f"{prefix}diagnostics.json", _dump(diag))
    return result, diag


def cmd_simulate(args) -> int:
    if not args.config:
        raise UsageError("simulate needs --config")
    try:
        cfg = load_config(
            args.config,
            seed=args.seed,
            scheme=(args.scheme[0] if args.scheme else None),
            gamma=args.gamma,
            stencil=args.stencil,
        )
        problem = build_problem(cfg)
        cfg.tableau()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    except (ConfigError, KeyError) as exc:
        raise UsageError(f"config error: {exc}") from None
    out = _outdir(args)
    base_dt = explicit_dt_limit(problem).dt
    try:
        if cfg.dt_scan:
            rows = []
            for factor in cfg.dt_scan:
                _, diag = _run_one(cfg, problem, factor * base_dt, out, prefix=f"scan_{factor:g}_")
                rows.append({"dt_factor": factor, **diag})
            summary = {"scheme": cfg.scheme, "explicit_dt": base_dt, "runs": rows,
                       "any_tv_increase": any(r["tv_c_increased"] for r in rows)}
            text = _dump(summary)
            _write(out / "scan_summary.json", text)
            print(text)
            return EXIT_OK
        result, diag = _run_one(cfg, problem, cfg.dt_factor * base_dt, out)
    except StageSolveError as exc:
        _write(out / "diagnostics.json", _dump({"status": "stage_failure", "message": str(exc)}))
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERIC
    print(_dump(diag))
    return EXIT_OK if result.ok else EXIT_NUMERIC


COMMANDS = {
    "stability": cmd_stability,
    "dissipativity": cmd_dissipativity,
    "monotonicity": cmd_monotonicity,
    "convergence": cmd_convergence,
    "gamma-sweep": cmd_gamma_sweep,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sspimex", description="SSP and IMEX Runge-Kutta analysis lab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scheme", action="append", help="scheme name, comma list or 'all' (repeatable)")
        p.add_argument("--gamma", type=float, help="gamma for imex_ssp2_222")
        p.add_argument("--gamma-range", help="start:stop:step for the imex_ssp2_222 family")
        p.add_argument("--stencil", choices=linear_analysis.STENCILS)
        p.add_argument("--resolution", type=int, default=128 if name == "stability" else 100)
        p.add_argument("--out", default=".")
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with 2 on usage errors
    if args.resolution < (64 if args.command == "stability" else 1):
        parser.error("--resolution must be at least 64 for stability and positive otherwise")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"sspimex {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StageSolveError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"sspimex {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
