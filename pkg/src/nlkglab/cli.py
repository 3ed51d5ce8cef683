"""Command-line front end.

Subcommands: groundstate, soliton, evolve, spectrum, modulate,
multisoliton, sweep.  NLKG_OUT_DIR sets the default output root.
Exit codes: 0 success, 2 configuration error, 3 numerical failure
(blow-up or tube exit), 4 I/O error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, parse_config, serialize_config
from .experiments import run_backward_construction
from .fieldio import (
    FieldFormatError,
    format_float,
    read_field,
    write_diagnostics_csv,
    write_field,
)
from .functionals import ActionParams, charge, energy, gradient_norm, momentum
from .grids import Field, Grid
from .integrator import BlowUpError, DiagnosticsRecord, IntegratorConfig, evolve
from .modulation import NotInTubeError, fit_modulation
from .profiles import (
    DomainTooSmallError,
    ModelParams,
    SolitonParams,
    boost_profile,
    ground_state_1d,
    ground_state_radial,
    profile_norms,
    sample_soliton,
)
from .spectrum import assemble_second_variation, slope_test, spectrum_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _out_root() -> Path:
    return Path(os.environ.get("NLKG_OUT_DIR", "."))


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=float, default=1.0, help="mass coefficient")
    p.add_argument("--p", type=float, default=3.0, help="nonlinearity exponent")
    p.add_argument("--d", type=int, default=1, help="spatial dimension (profiles only for d>1)")


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-points", type=int, default=1024)
    p.add_argument("--length", type=float, default=80.0)


def cmd_groundstate(args: argparse.Namespace) -> int:
    model = ModelParams(args.m, args.p, args.d)
    if args.d == 1:
        grid = Grid(args.length, args.grid_points)
        gs = ground_state_1d(model, args.omega, grid)
        xs = grid.x
        n2, dn2 = profile_norms(gs)
        print(f"phi(0) = {gs.samples[grid.points // 2]:.12g}")
        print(f"||phi||_2^2 = {n2:.12g}   ||phi'||_2^2 = {dn2:.12g}")
    else:
        gs = ground_state_radial(model, args.omega, rmax=args.length / 2.0)
        xs = gs.radial_mesh
        print(f"phi(0) = {gs.samples[0]:.12g}")
    print(f"ODE residual (sup) = {gs.residual:.3e}")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write("x,phi\n")
            for x, v in zip(xs, gs.samples):
                fh.write(f"{format_float(x)},{format_float(v)}\n")
        print(f"profile written to {args.out}")
    return EXIT_OK


def _soliton_from_args(args: argparse.Namespace, model: ModelParams) -> SolitonParams:
    return SolitonParams(model, omega=args.omega, theta=args.theta, v=args.v, x0=args.x0)


def cmd_soliton(args: argparse.Namespace) -> int:
    model = ModelParams(args.m, args.p, 1)
    grid = Grid(args.length, args.grid_points)
    sp = _soliton_from_args(args, model)
    w = sample_soliton(sp, args.t, grid)
    if not sp.stable:
        print("warning: parameters outside the orbital-stability window", file=sys.stderr)
    ap = ActionParams.from_soliton(sp)
    print(f"E = {energy(w, model):.12g}  Q = {charge(w):.12g}  P = {momentum(w):.12g}")
    print(f"||S'(Phi)|| = {gradient_norm(w, ap):.3e}")
    write_field(args.out, w, args.t)
    print(f"field written to {args.out}")
    return EXIT_OK


def cmd_evolve(args: argparse.Namespace) -> int:
    w, _ = read_field(args.src)
    if args.config:
        run = parse_config(Path(args.config).read_text(encoding="utf-8"))
        model = run.model()
        dealias = run.dealias or args.dealias
    else:
        model = ModelParams(args.m, args.p, 1)
        dealias = args.dealias
    cfg = IntegratorConfig(dt=args.dt, dealias=dealias)
    rows: list[list[float]] = []

    def hook(rec: DiagnosticsRecord) -> None:
        rows.append([rec.t, rec.energy, rec.charge, rec.momentum])

    stride = max(1, int(round(args.diag_period / abs(args.dt)))) if args.diag else 0
    out = evolve(w, args.t0, args.t1, cfg, model, hooks=[hook] if args.diag else [], diag_stride=stride)
    write_field(args.out, out, args.t1)
    print(f"field written to {args.out}")
    if args.diag:
        write_diagnostics_csv(args.diag, ["t", "E", "Q", "P"], rows)
        print(f"diagnostics written to {args.diag}")
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    model = ModelParams(args.m, args.p, 1)
    grid = Grid(args.length, args.grid_points)
    sp = _soliton_from_args(args, model)
    gs = ground_state_1d(model, args.omega, grid)
    phi = boost_profile(gs, sp, grid)
    ap = ActionParams.from_soliton(sp)
    op = assemble_second_variation(phi, ap)
    rep = spectrum_report(op)

    def family(om: float) -> Field:
        fsp = SolitonParams(model, omega=om, theta=sp.theta, v=sp.v, x0=sp.x0)
        return boost_profile(ground_state_1d(model, om, grid), fsp, grid)

    rep.slope = slope_test(family, ap, args.omega, op=op)
    print(f"negative eigenvalues : {rep.negative_count} (lowest {rep.negative_eigenvalue:.6g})")
    print(f"kernel dimension     : {rep.kernel_dimension} (tol {rep.kernel_tolerance:.3e})")
    print(f"coercivity delta     : {rep.coercivity_delta:.6g}")
    print(f"frequency slope      : {rep.slope:.6g} ({'stable' if rep.slope < 0 else 'unstable'} sign)")
    if args.out:
        low = np.sort(rep.eigenvalues)[:20]
        write_diagnostics_csv(args.out, ["index", "eigenvalue"], [[float(i), float(v)] for i, v in enumerate(low)])
        print(f"lowest eigenvalues written to {args.out}")
    return EXIT_OK


def cmd_modulate(args: argparse.Namespace) -> int:
    w, _ = read_field(args.src)
    try:
        run = parse_config(Path(args.seed).read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"cannot read seed config: {exc}", file=sys.stderr)
        return EXIT_IO
    state = fit_modulation(w, run.soliton_params(), w.grid)
    print("j,theta,omega,x0,v")
    for j, s in enumerate(state.solitons):
        print(
            f"{j},{format_float(s.theta)},{format_float(s.omega)},"
            f"{format_float(s.x0)},{format_float(s.v)}"
        )
    print(f"residual H1xL2 norm = {state.residual_norm:.6e}")
    print(f"max orthogonality residual = {np.max(np.abs(state.ortho_residuals)):.3e}")
    if args.out:
        write_diagnostics_csv(
            args.out,
            ["j", "theta", "omega", "x0", "v"],
            [
                [float(j), s.theta, s.omega, s.x0, s.v]
                for j, s in enumerate(state.solitons)
            ],
        )
    return EXIT_OK


def _write_multisoliton_outputs(outdir: Path, run, report) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "resolved.cfg").write_text(serialize_config(run), encoding="utf-8")
    nsol = len(run.solitons)
    header = ["t", "E", "Q", "P"]
    for j in range(nsol):
        header += [f"E_{j}", f"Q_{j}", f"P_{j}"]
    header += ["S_localized", "err_H1L2"]
    rows = []
    for i, t in enumerate(report.times):
        row = [t, report.energies[i], report.charges[i], report.momenta[i]]
        loc = report.localized[i]
        for j in range(nsol):
            row += [loc.e[j], loc.q[j], loc.p[j]]
        row += [report.action_series[i], report.errors[i]]
        rows.append(row)
    write_diagnostics_csv(outdir / "diagnostics.csv", header, rows)
    if report.final_field is not None:
        write_field(outdir / "field_final.dump", report.final_field, report.config.t_start)
    lines = [
        f"nlkglab multisoliton report (v{__version__})",
        f"solitons: {nsol}, window [{run.t_start}, {run.t_final}], dt={run.dt}",
        f"v_star = {report.config.v_star}, omega_star = {report.config.omega_star}",
        f"reference rate (ceiling) = {report.reference_rate:.6g}",
        f"fitted log-error slope = {report.fitted_slope:.6g} "
        f"(stderr {report.slope_stderr:.2g}, rms {report.fit_rms:.2g}) "
        f"on window {report.fit_window}",
        f"slope significant (stderr < 10% of |slope|): "
        f"{report.slope_stderr < 0.1 * abs(report.fitted_slope)}",
        f"tube exit: {report.tube_exit_time}",
        f"runtime: {report.runtime_seconds:.1f} s",
    ]
    for w in run.stability_warnings:
        lines.append(f"warning: {w}")
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_multisoliton(args: argparse.Namespace) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    run = parse_config(text)
    for warning in run.stability_warnings:
        print(f"warning: {warning}", file=sys.stderr)
    cfg = run.experiment()
    report = run_backward_construction(cfg)
    outdir = Path(args.out_dir) if args.out_dir else _out_root() / Path(run.out_dir)
    _write_multisoliton_outputs(outdir, run, report)
    print(f"outputs in {outdir}")
    if report.tube_exit_time is not None:
        print(f"trajectory left the modulation tube at t={report.tube_exit_time}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    def one(path: str) -> tuple[str, int]:
        ns = argparse.Namespace(config=path, out_dir=None)
        try:
            return path, cmd_multisoliton(ns)
        except (ConfigError, BlowUpError, NotInTubeError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            return path, EXIT_NUMERICAL if not isinstance(exc, ConfigError) else EXIT_CONFIG

    worst = EXIT_OK
    with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for path, code in pool.map(one, args.configs):
            print(f"{path}: exit {code}")
            worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlkglab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("groundstate", help="compute a ground-state profile")
    _model_args(g)
    _grid_args(g)
    g.add_argument("--omega", type=float, required=True)
    g.add_argument("--out", type=str, default="")
    g.set_defaults(func=cmd_groundstate)

    s = sub.add_parser("soliton", help="sample an exact soliton to a field dump")
    _model_args(s)
    _grid_args(s)
    s.add_argument("--omega", type=float, required=True)
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--v", type=float, default=0.0)
    s.add_argument("--x0", type=float, default=0.0)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--out", type=str, required=True)
    s.set_defaults(func=cmd_soliton)

    e = sub.add_parser("evolve", help="integrate a field dump in time")
    e.add_argument("--from", dest="src", type=str, required=True)
    e.add_argument("--config", type=str, default="", help="take model/flags from a run config")
    e.add_argument("--m", type=float, default=1.0)
    e.add_argument("--p", type=float, default=3.0)
    e.add_argument("--t0", type=float, required=True)
    e.add_argument("--t1", type=float, required=True)
    e.add_argument("--dt", type=float, required=True)
    e.add_argument("--dealias", action="store_true")
    e.add_argument("--diag", type=str, default="")
    e.add_argument("--diag-period", type=float, default=0.5)
    e.add_argument("--out", type=str, required=True)
    e.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("spectrum", help="second-variation spectrum at a soliton")
    _model_args(sp)
    _grid_args(sp)
    sp.add_argument("--omega", type=float, required=True)
    sp.add_argument("--theta", type=float, default=0.0)
    sp.add_argument("--v", type=float, default=0.0)
    sp.add_argument("--x0", type=float, default=0.0)
    sp.add_argument("--out", type=str, default="")
    sp.set_defaults(func=cmd_spectrum)

    mo = sub.add_parser("modulate", help="fit modulation parameters to a field dump")
    mo.add_argument("--from", dest="src", type=str, required=True)
    mo.add_argument("--seed", type=str, required=True, help="config file with soliton seeds")
    mo.add_argument("--out", type=str, default="")
    mo.set_defaults(func=cmd_modulate)

    mu = sub.add_parser("multisoliton", help="backward multi-soliton construction")
    mu.add_argument("--config", type=str, required=True)
    mu.add_argument("--out-dir", type=str, default="")
    mu.set_defaults(func=cmd_multisoliton)

    sw = sub.add_parser("sweep", help="run several multisoliton configs concurrently")
    sw.add_argument("configs", nargs="+")
    sw.add_argument("--jobs", type=int, default=2)
    sw.set_defaults(func=cmd_sweep)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (DomainTooSmallError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, NotInTubeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FieldFormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
