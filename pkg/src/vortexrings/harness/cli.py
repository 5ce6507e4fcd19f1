"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 collapse or containment halt.
"""

import argparse
import sys
from pathlib import Path

from ..errors import CollapseError, ConfigError, VortexError
from .. import pointvortex as pvm
from .config import build_run_spec, load_config, pv_config, sweep_config
from .fitting import FitError, ScalingFit, fit_scaling
from .kernelcheck import (DEFAULT_ANGLES, DEFAULT_R0, DEFAULT_SEPARATIONS, DEFAULT_X2_FRACTIONS,
                          KERNEL_CHECK_COLUMNS, kernel_check)
from .runner import (HALT_COLLAPSE, HALT_CONTAINMENT, PV_COLUMNS, pv_rows,
                     read_records, run_single, run_sweep, write_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_HALT = 4


def _out(args, raw):
    return Path(args.out or raw.get("output_dir", "out"))


def _halt_code(record):
    if not record.halted:
        return EXIT_OK
    if record.halted in (HALT_CONTAINMENT, HALT_COLLAPSE):
        return EXIT_HALT
    return EXIT_NUMERIC


def cmd_simulate(args):
    raw = load_config(args.config)
    spec = build_run_spec(raw)
    if args.double_resolution:
        spec = spec.refined()
    out = _out(args, raw)
    rec, _, _ = run_single(spec, out)
    print(f"eps={rec.epsilon:g} r0={rec.r0:.4g} particles={rec.particles} "
          f"sup|B-z|={rec.sup_dist_to_pv:.4e} sup I={rec.sup_I:.4e} T={rec.T_containment}"
          + (f" halted: {rec.halted} at t={rec.halt_time:g}" if rec.halted else ""))
    print(f"wrote {out}/")
    return _halt_code(rec)


def cmd_sweep(args):
    raw = load_config(args.config)
    sw = sweep_config(raw)
    if args.double_resolution:
        from dataclasses import replace
        sw = replace(sw, resolution_doubling=True)
    out = _out(args, raw)
    records, refined = run_sweep(sw, out)
    for r in records:
        print(f"eps={r.epsilon:.1e} sup|B-z|={r.sup_dist_to_pv:.4e} sup I={r.sup_I:.4e} "
              f"T={r.T_containment} {r.halted}")
    _report(out, records, sw.alpha)
    codes = [_halt_code(r) for r in records + (refined or [])]
    return max(codes) if codes else EXIT_OK


def cmd_pv(args):
    raw = load_config(args.config)
    cfg = pv_config(raw)
    dt = float(raw.get("dt", 0.01))
    horizon = raw.get("horizon")
    if horizon is None:
        raise ConfigError("the pv subcommand needs an explicit 'horizon'")
    floor = float((raw.get("pv") or {}).get("collapse_floor", pvm.DEFAULT_COLLAPSE_FLOOR))
    traj = pvm.integrate(cfg, dt, float(horizon), floor)
    out = _out(args, raw)
    write_csv(out / "pv.csv", PV_COLUMNS, pv_rows(traj))
    print(f"R_m={pvm.min_distance_over_horizon(traj):.6g} steps={len(traj.times) - 1}")
    if traj.collapse is not None:
        t, pair = traj.collapse
        print(f"collapse of vortices {pair} at t={t:g}", file=sys.stderr)
        return EXIT_HALT
    return EXIT_OK


def cmd_kernel_check(args):
    raw = load_config(args.config)
    kc = dict(raw.get("kernel_check") or {})
    res = kernel_check(
        r0_list=kc.get("r0", DEFAULT_R0),
        x2_fractions=kc.get("x2_fractions", DEFAULT_X2_FRACTIONS),
        separations=kc.get("separations", DEFAULT_SEPARATIONS),
        angles=int(kc.get("angles", DEFAULT_ANGLES)),
        mode=kc.get("mode", "elliptic"),
        quad_rel_tol=float(kc.get("quad_rel_tol", 1e-10)),
    )
    out = _out(args, raw)
    write_csv(out / "kernel_check.csv", KERNEL_CHECK_COLUMNS, res.rows)
    write_csv(out / "kernel_check_max.csv", ["r0", "max_bound_ratio", "max_abs_D2_times_r0"],
              [[r0, res.max_ratio[r0], res.max_d2_scaled[r0]] for r0 in res.max_ratio])
    for r0 in res.max_ratio:
        print(f"r0={r0:g} max ratio={res.max_ratio[r0]:.4f} max|D2| r0={res.max_d2_scaled[r0]:.4f}")
    print(f"ratio spread {res.ratio_spread():.3f}x")
    return EXIT_OK


def _report(out, records, alpha=None):
    try:
        fits = fit_scaling(records, alpha)
    except FitError as exc:
        print(f"no scaling fit: {exc}", file=sys.stderr)
        return []
    write_csv(Path(out) / "fits.csv", ScalingFit.columns(), [f.row() for f in fits])
    for f in fits:
        print(f"{f.quantity}: slope {f.slope:.3f} [{f.ci_low:.3f}, {f.ci_high:.3f}] "
              f"expected {f.expected_slope:g} {'in band' if f.within_band else 'OUT of band'}")
    return fits


def cmd_report(args):
    path = Path(args.dir) / "summary.csv"
    if not path.exists():
        raise ConfigError(f"no summary.csv in {args.dir}")
    records = read_records(path)
    for r in records:
        print(f"eps={r.epsilon:.1e} sup|B-z|={r.sup_dist_to_pv:.4e} sup I={r.sup_I:.4e} "
              f"T={r.T_containment} {r.halted}")
    _report(args.dir, records)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="vortexrings", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one configuration")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (overrides output_dir)")
    s.add_argument("--double-resolution", action="store_true",
                   help="twice the particles per diameter and half the step")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run the epsilon sweep and fit scaling laws")
    s.add_argument("config")
    s.add_argument("--out")
    s.add_argument("--double-resolution", action="store_true",
                   help="repeat each point at doubled resolution")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("pv", help="integrate the point-vortex system only")
    s.add_argument("config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_pv)

    s = sub.add_parser("kernel-check", help="tabulate G - K against its envelope")
    s.add_argument("config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_kernel_check)

    s = sub.add_parser("report", help="fit scaling laws from an existing sweep directory")
    s.add_argument("dir")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CollapseError as exc:
        print(f"collapse: {exc}", file=sys.stderr)
        return EXIT_HALT
    except (VortexError, ArithmeticError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
