"""Command-line entry point: ``levyfwd <subcommand> ...``.

Exit codes: 0 success, 1 domain or invariant failure, 2 input/parse failure.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import calibration as cal
from . import market_quotes as mq
from . import mc_oracle as mo
from .errors import (
    LevyFwdError,
    MalformedFileError,
    MissingPillarError,
    NonPositiveDiscountError,
    PriceOutOfBoundsError,
)
from .fourier_pricing import DampingConfig, price_maturity
from .levy_driver import NigParams
from .model_core import VolStructure, admissibility_violations, assemble_model
from .tenor_curves import TenorGrid, load_curves

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT = 0, 1, 2
INPUT_ERRORS = (MalformedFileError, MissingPillarError, NonPositiveDiscountError)


class InputError(Exception):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError("expected a comma-separated list of numbers, got %r" % text)


def _pairs(items, what):
    out = []
    for it in items or []:
        if "=" not in it:
            raise InputError("%s must look like LABEL=VALUE, got %r" % (what, it))
        k, v = it.split("=", 1)
        out.append((k, v))
    return out


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise InputError("%s is not valid JSON: %s" % (path, exc))


def _model_spec(args):
    spec = _read_json(args.model)
    for key in ("alpha", "beta", "delta_nig", "a", "a_d"):
        if key not in spec:
            raise InputError("model file lacks %r" % key)
    if args.variant:
        spec["variant"] = args.variant
    spec["variant"] = str(spec.get("variant", "a")).upper()
    if spec["variant"] not in ("A", "B"):
        raise InputError("variant must be a or b")
    return spec


def _grid(args):
    tenors = {k: float(v) for k, v in _pairs(args.tenor or ["6m=0.5"], "--tenor")}
    try:
        return TenorGrid.equidistant(args.delta, args.periods, tenors)
    except ValueError as exc:
        raise InputError(str(exc))


def _curves(args, grid):
    fra = _pairs(args.fra, "--fra")
    if not args.discount:
        raise InputError("--discount is required")
    return load_curves(args.discount, fra, grid)


def _params(spec):
    p = NigParams(spec["alpha"], spec["beta"], spec["delta_nig"],
                  em_bound_M=spec.get("em_bound_M"), em_eps=spec.get("em_eps", 0.05))
    vol = VolStructure(spec["a"], spec["a_d"], spec.get("a_l", 0.0),
                       spec.get("a_l_bar", 0.0), spec["variant"])
    return p, vol


def _model(args):
    spec = _model_spec(args)
    grid = _grid(args)
    curves = _curves(args, grid)
    p, vol = _params(spec)
    return assemble_model(p, vol, grid, curves, args.label), spec


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(x):
    return "" if x is None or not np.isfinite(x) else repr(float(x))


# -- subcommands ---------------------------------------------------------------


def cmd_validate(args):
    spec = _model_spec(args)
    grid = _grid(args)
    curves = _curves(args, grid)
    problems = []
    try:
        p, vol = _params(spec)
        problems = admissibility_violations(p, vol, grid, curves, args.label)
    except LevyFwdError as exc:
        problems = [str(exc)]
    if problems:
        for msg in problems:
            print("violation: %s" % msg)
        return EXIT_DOMAIN
    print("ok: all admissibility conditions hold")
    return EXIT_OK


def _implied_bps(m, T, K, price):
    T_k = T + m.delta_l
    F = m.curves.fra_rate(m.label, T, T_k)
    try:
        return mq.bachelier_implied_vol(price, F, K, T, m.curves.discount(T_k), m.delta_l) / mq.BP
    except PriceOutOfBoundsError:
        return float("nan")


def cmd_price(args):
    m, _ = _model(args)
    Ts, Ks = _floats(args.maturities), _floats(args.strikes)
    cfg = DampingConfig(tol=args.tol)
    out = os.path.join(_outdir(args), "prices.csv")
    n_ok = 0
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["expiry", "strike", "price", "normal_vol_bps", "converged"])
        for T in Ts:
            try:
                res = price_maturity(T, Ks, m, cfg)
                prices, conv = res.prices, res.converged
            except LevyFwdError as exc:
                print("expiry %g: %s" % (T, exc), file=sys.stderr)
                prices, conv = np.full(len(Ks), np.nan), np.zeros(len(Ks), dtype=bool)
            for K, p, c in zip(Ks, prices, conv):
                vol = _implied_bps(m, T, K, p) if np.isfinite(p) else float("nan")
                w.writerow([repr(T), repr(K), _fmt(p), _fmt(vol), int(bool(c))])
                n_ok += bool(c)
    print("wrote %s" % out)
    return EXIT_OK if n_ok else EXIT_DOMAIN


def cmd_simulate(args):
    m, _ = _model(args)
    cfg = mo.McConfig(paths=args.paths, steps_per_year=args.steps_per_year, seed=args.seed,
                      antithetic=args.antithetic)
    rows = mo.martingale_report(m, cfg)
    d = _outdir(args)
    mo.write_report_csv(os.path.join(d, "martingale_report.csv"), rows)
    _write_json(os.path.join(d, "simulate_meta.json"), {
        "seed": args.seed, "paths": args.paths, "steps_per_year": args.steps_per_year,
        "antithetic": bool(args.antithetic), "flagged": sum(r.flagged for r in rows),
    })
    flagged = [r for r in rows if r.flagged]
    for r in flagged:
        print("flag: %s period %d z=%.2f" % (r.check, r.period, r.z_score))
    return EXIT_DOMAIN if flagged else EXIT_OK


def cmd_calibrate(args):
    conf = _read_json(args.problem)
    if "center" not in conf or "target_csv" not in conf:
        raise InputError("problem file needs 'center' and 'target_csv'")
    grid = _grid(args)
    curves = _curves(args, grid)
    Ts, Ks, tgt = cal.read_target_csv(conf["target_csv"])
    variant = (args.variant or conf.get("variant") or conf["center"].get("variant", "a")).upper()
    opts = {k: conf[k] for k in ("box", "em_eps", "margin", "restarts", "max_evals",
                                 "xtol", "ftol", "tol") if k in conf}
    if "free" in conf:
        opts["free"] = tuple(conf["free"])
    seed = args.seed if args.seed is not None else conf.get("seed", 0)
    try:
        prob = cal.CalibrationProblem(Ts, Ks, tgt, grid, curves, conf["center"], variant,
                                      label=args.label, seed=seed, **opts)
    except (ValueError, KeyError) as exc:
        raise InputError("invalid problem: %s" % exc)
    res = cal.calibrate(prob)
    d = _outdir(args)
    blob = cal.result_to_json(res, prob)
    blob["settings"] = cal.problem_settings(prob)
    _write_json(os.path.join(d, "calibration_result.json"), blob)
    cal.write_error_csv(os.path.join(d, "calibration_errors.csv"), res, prob)
    print("objective %.6e, rms vol error %.4f bp" % (res.objective, res.rms_vol_bps))
    return EXIT_OK


def cmd_strip(args):
    grid = _grid(args)
    curves = _curves(args, grid)
    quotes = mq.read_cap_quotes(args.quotes, args.label)
    caplets = mq.strip_caplets(quotes, curves, grid, args.label)
    out = os.path.join(_outdir(args), "stripped_caplets.csv")
    mq.write_stripped_csv(out, caplets)
    print("wrote %s" % out)
    return EXIT_OK


def cmd_implied_vol(args):
    grid = _grid(args)
    curves = _curves(args, grid)
    delta = grid.sub_delta(args.label)
    Ts, Ks, tgt = cal.read_target_csv(args.prices)
    out = os.path.join(_outdir(args), "implied_vols.csv")
    bad = 0
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["expiry", "strike", "price", "normal_vol_bps", "ok"])
        for i, T in enumerate(Ts):
            F = curves.fra_rate(args.label, T, T + delta)
            df = curves.discount(T + delta)
            for j, K in enumerate(Ks):
                try:
                    v = mq.bachelier_implied_vol(tgt[i, j], F, K, T, df, delta) / mq.BP
                    ok = 1
                except PriceOutOfBoundsError:
                    v, ok = float("nan"), 0
                    bad += 1
                w.writerow([repr(T), repr(K), repr(float(tgt[i, j])), _fmt(v), ok])
    print("wrote %s" % out)
    return EXIT_DOMAIN if bad else EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--discount", help="discount CSV (maturity_years,discount_factor)")
    common.add_argument("--fra", action="append", metavar="LABEL=PATH",
                        help="FRA CSV per tenor (start_years,end_years,fra_rate)")
    common.add_argument("--delta", type=float, default=0.5, help="fine tenor year fraction")
    common.add_argument("--periods", type=int, default=6, help="number of fine periods")
    common.add_argument("--tenor", action="append", metavar="LABEL=YEARS",
                        help="risky tenor sub-grid (default 6m=0.5)")
    common.add_argument("--label", default="6m", help="risky curve to model")
    common.add_argument("--variant", choices=["a", "b"], type=str.lower)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--paths", type=int, default=1_000_000)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--out", default=".", help="output directory")

    ap = argparse.ArgumentParser(prog="levyfwd", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check admissibility")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("price", parents=[common], help="Fourier caplet price surface")
    p.add_argument("--model", required=True)
    p.add_argument("--maturities", default="0.5,1.5,2.5")
    p.add_argument("--strikes", default="-0.005,-0.0025,0,0.0025,0.005")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo martingale report")
    p.add_argument("--model", required=True)
    p.add_argument("--steps-per-year", type=int, default=250)
    p.add_argument("--antithetic", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="fit a caplet price surface")
    p.add_argument("--problem", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("strip", parents=[common], help="caplets from cap quotes")
    p.add_argument("--quotes", required=True)
    p.set_defaults(func=cmd_strip)

    p = sub.add_parser("implied-vol", parents=[common], help="normal vols of caplet prices")
    p.add_argument("--prices", required=True)
    p.set_defaults(func=cmd_implied_vol)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.seed is None and args.command != "calibrate":
        args.seed = 0
    try:
        return args.func(args)
    except (InputError, *INPUT_ERRORS) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print("I/O error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except LevyFwdError as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
