"""Command-line entry point: ``heraldkit <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import __version__
from .config import load_config
from .counting import (
    BackgroundRatioWarning,
    estimate_chi_d,
    estimate_to_json,
    records_from_csv,
    records_to_csv,
    simulate_ensemble,
    sum_records,
)
from .dispersion import group_term, refractive_index
from .errors import DomainError, HeraldkitError
from .heralding import (
    budget_solve,
    evaluate_chi_p,
    format_sig,
    geometry_for_solution,
    sweep_chi_p,
    sweep_to_csv,
)
from .phasematching import bandwidth_scan, solve_central


class UsageError(HeraldkitError):
    code = "USAGE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def g6(x):
    return format_sig(float(x))


def _emit(text, args, out):
    """Write a machine-readable artifact to ``--output`` or stdout."""
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


def _theta_s(cfg, args):
    if getattr(args, "angle", None) is not None:
        return math.radians(args.angle)
    if cfg.theta_s_ext is None:
        raise DomainError("heralding_mode.external_angle_deg is not set and --angle not given")
    return cfg.theta_s_ext


def _solution(cfg, args, crystal=None):
    return solve_central(crystal or cfg.crystal, cfg.pump, _theta_s(cfg, args))


def parse_range(text, flag):
    """``min:max:n`` in micrometres -> waists in metres."""
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise DomainError(f"{flag} expects min:max:n, got {text!r}") from None
    if n < 1 or lo <= 0 or hi < lo or (n == 1 and hi != lo):
        raise DomainError(f"{flag} range {text!r} must satisfy 0 < min <= max, n >= 1")
    return np.linspace(lo, hi, n) * 1e-6


# --------------------------------------------------------------------------
# commands


def cmd_index(cfg, args, out):
    T = cfg.crystal.temperature
    sell = cfg.crystal.sellmeier
    n = float(refractive_index(args.wavelength, T, sell))
    D = float(group_term(args.wavelength, T, sell))
    out.write(f"sellmeier      {sell.name}\n")
    out.write(f"wavelength_nm  {g6(args.wavelength)}\n")
    out.write(f"temperature_C  {g6(T)}\n")
    out.write(f"n              {g6(n)}\n")
    out.write(f"D_s_per_m      {g6(D)}\n")


PM_HEADER = ["temperature_C", "lambda_s_nm", "lambda_i_nm", "theta_s_ext_deg",
             "theta_i_ext_deg", "residual_dkz_per_m"]


def _pm_row(T, sol):
    return [g6(T), g6(sol.lambda_s), g6(sol.lambda_i), g6(math.degrees(sol.theta_s_ext)),
            g6(math.degrees(sol.theta_i_ext)), g6(sol.residual_dkz)]


def cmd_phasematch(cfg, args, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PM_HEADER)
    if args.scan_temperature:
        t0, t1, step = args.scan_temperature
        if step <= 0 or t1 < t0:
            raise DomainError("--scan-temperature needs min <= max and step > 0")
        temps = np.arange(int(round((t1 - t0) / step)) + 1) * step + t0
        for T in temps:
            crystal = replace(cfg.crystal, temperature=float(T))
            try:
                writer.writerow(_pm_row(T, _solution(cfg, args, crystal)))
            except HeraldkitError:
                writer.writerow([g6(T)] + ["nan"] * (len(PM_HEADER) - 1))
        _emit(buf.getvalue(), args, out)
        return
    sol = _solution(cfg, args)
    writer.writerow(_pm_row(cfg.crystal.temperature, sol))
    out.write(f"temperature_C     {g6(cfg.crystal.temperature)}\n")
    out.write(f"lambda_s_nm       {g6(sol.lambda_s)}\n")
    out.write(f"lambda_i_nm       {g6(sol.lambda_i)}\n")
    out.write(f"theta_s_ext_deg   {g6(math.degrees(sol.theta_s_ext))}\n")
    out.write(f"theta_i_ext_deg   {g6(math.degrees(sol.theta_i_ext))}\n")
    out.write(f"theta_s_int_deg   {g6(math.degrees(sol.theta_s_int))}\n")
    out.write(f"theta_i_int_deg   {g6(math.degrees(sol.theta_i_int))}\n")
    out.write(f"residual_dkz      {g6(sol.residual_dkz)}\n")
    if args.output:
        _emit(buf.getvalue(), args, out)


def cmd_bandwidth(cfg, args, out):
    sol = _solution(cfg, args)
    geom = geometry_for_solution(cfg.geometry, sol)
    doc = {}
    for arm, mode, label in (("heralding", geom.heralding_mode, "delta1"),
                             ("heralded", geom.heralded_mode, "delta2")):
        res = bandwidth_scan(cfg.crystal, cfg.pump, sol, mode, arm)
        out.write(f"{label}_nm  {g6(res.delta_nm)}  (waist {g6(mode.waist_at_crystal_wo * 1e6)} um, "
                  f"centre {g6(mode.central_wavelength)} nm)\n")
        doc[f"{label}_nm"] = float(g6(res.delta_nm))
    if args.output:
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args, out)


def cmd_chi_p(cfg, args, out):
    sol = _solution(cfg, args)
    b = evaluate_chi_p(cfg.crystal, cfg.geometry, sol, delta1_nm=args.delta1)
    c = b.coefficients
    rows = [
        ("lambda_s_nm", sol.lambda_s), ("lambda_i_nm", sol.lambda_i),
        ("delta1_nm", b.delta1_nm), ("delta2_nm", b.delta2_nm),
        ("c1", c.c1), ("c2", c.c2), ("s1", c.s1), ("s2", c.s2),
        ("spatial", b.spatial), ("spectral", b.spectral),
        ("f_c", b.f_c), ("f_s", b.f_s), ("chi_p", b.chi_p),
    ]
    for k, v in rows:
        out.write(f"{k:<12}{g6(v)}\n")
    if args.output:
        _emit(json.dumps({k: float(g6(v)) for k, v in rows}, indent=2, sort_keys=True) + "\n",
              args, out)


def cmd_sweep(cfg, args, out):
    sol = _solution(cfg, args)
    w1 = parse_range(args.w1, "--w1")
    w2 = parse_range(args.w2, "--w2")
    points = sweep_chi_p(cfg.geometry, cfg.crystal, sol, w1, w2, delta1_override_nm=args.delta1)
    for p in points:
        if p.error:
            sys.stderr.write(f"warning: w_o1={g6(p.w_o1 * 1e6)} w_o2={g6(p.w_o2 * 1e6)}: {p.error}\n")
    _emit(sweep_to_csv(points), args, out)


def cmd_simulate(cfg, args, out):
    if cfg.gate is None:
        raise DomainError("config has no gate section")
    recs = simulate_ensemble(cfg.gate, args.heralds, args.runs, args.seed)
    _emit(records_to_csv(recs), args, out)


def cmd_estimate(cfg, args, out):
    with open(args.counts, newline="") as fh:
        records = records_from_csv(fh.read())
    totals = sum_records(records)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BackgroundRatioWarning)
        est = estimate_chi_d(totals)
    for w in caught:
        sys.stderr.write(f"warning: {w.message}\n")
    extra = {}
    if args.invert:
        budget = budget_solve(replace(cfg.budget, chi_D=est.chi_D_hat, chi_P=None))
        extra["chi_p"] = float(g6(budget.chi_P))
        extra["budget"] = {"eta_det": budget.eta_det, "tau_opt": budget.tau_opt,
                           "tau_smf_lens": budget.tau_smf_lens}
    _emit(estimate_to_json(est, totals, extra), args, out)


COMMANDS = {
    "index": cmd_index,
    "phasematch": cmd_phasematch,
    "bandwidth": cmd_bandwidth,
    "chi-p": cmd_chi_p,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="experiment JSON file or shipped config name (default: paper-default)")
    common.add_argument("--output", default=argparse.SUPPRESS,
                        help="write the CSV/JSON artifact here instead of stdout")

    p = _Parser(prog="heraldkit", parents=[common],
                description="Heralded single-photon source modelling and calibration.")
    p.add_argument("--version", action="version", version=f"heraldkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("index", parents=[common], help="refractive index and group term")
    s.add_argument("wavelength", type=float, help="wavelength in nm")

    s = sub.add_parser("phasematch", parents=[common], help="central phase-matching solution")
    s.add_argument("--angle", type=float, help="signal external angle in degrees")
    s.add_argument("--scan-temperature", type=float, nargs=3, metavar=("MIN", "MAX", "STEP"))

    s = sub.add_parser("bandwidth", parents=[common], help="fibre-selected bandwidths")
    s.add_argument("--angle", type=float)

    s = sub.add_parser("chi-p", parents=[common], help="heralding efficiency with intermediates")
    s.add_argument("--angle", type=float)
    s.add_argument("--delta1", type=float, help="heralding bandwidth override in nm")

    s = sub.add_parser("sweep", parents=[common], help="heralding efficiency over a waist grid")
    s.add_argument("--angle", type=float)
    s.add_argument("--w1", default="40:250:20", help="heralding waists min:max:n in um")
    s.add_argument("--w2", default="40:250:20", help="heralded waists min:max:n in um")
    s.add_argument("--delta1", type=float, help="heralding bandwidth override in nm")

    s = sub.add_parser("simulate", parents=[common], help="simulate calibration count records")
    s.add_argument("--heralds", type=int, default=100000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--runs", type=int, default=1)

    s = sub.add_parser("estimate", parents=[common], help="raw efficiency from count records")
    s.add_argument("counts", help="count-record CSV")
    s.add_argument("--invert", action="store_true", help="also solve the budget for chi_p")
    return p


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        args.output = getattr(args, "output", None)
        cfg = load_config(getattr(args, "config", None))
        COMMANDS[args.command](cfg, args, out)
    except HeraldkitError as exc:
        sys.stderr.write(f"error: {exc.code}: {exc}\n")
        return 1 if not isinstance(exc, UsageError) else 2
    except OSError as exc:
        sys.stderr.write(f"error: IO: {exc.strerror or exc}: {exc.filename}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
