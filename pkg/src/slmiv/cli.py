"""Command-line front end.

Every subcommand writes CSV or JSON data (no plots).  Errors produce a single
``Code: message`` line on stderr and exit status 2 (usage), 3 (domain) or
4 (numerical).  ``SLM_THREADS`` caps the worker pool used for strike grids.
"""

import argparse
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import asymptotics, detector, duality, mcsim, models, pricer
from .errors import DomainError, NonExistenceError, SlmError
from .specfun import norm_quantile


class UsageError(Exception):
    code = "ParseError"
    exit_status = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# formatting


def _json_text(obj):
    """JSON with every float written to 17 significant digits; non-finite -> null."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_text(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_text(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv_text(columns, rows):
    def cell(v):
        if isinstance(v, str):
            return v
        if isinstance(v, bool):
            return str(v).lower()
        return format(float(v), ".10g")

    out = io.StringIO()
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(cell(row[c]) for c in columns) + "\n")
    return out.getvalue()


def _emit(args, payload, columns=None, rows=None):
    if args.format == "csv":
        if rows is None:
            rows = payload if isinstance(payload, list) else [payload]
        columns = columns or list(rows[0])
        text = _csv_text(columns, rows)
    else:
        text = _json_text(payload) + "\n"
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument helpers


def parse_grid(text):
    """``a:b:step`` (inclusive), a comma list, or a single number."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            a, b, step = parts
            if not step > 0 or b < a:
                raise ValueError
            n = int(math.floor((b - a) / step + 1e-9))
            return [a + k * step for k in range(n + 1)]
        return [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}; expected a:b:step, a list or a number")


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _float_list(text):
    try:
        return [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid list {text!r}")


def _workers():
    env = os.environ.get("SLM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"SLM_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _map(fn, xs):
    """Evaluate ``fn`` over ``xs`` in a worker pool; results keep the order of ``xs``."""
    workers = min(_workers(), len(xs))
    if workers <= 1:
        return [fn(x) for x in xs]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, xs))


def _law(args):
    law = models.parse_model(args.model, args.T)
    _ = law.defect  # fill the cache before threads share the law
    return law


# ---------------------------------------------------------------------------
# subcommands


def cmd_price(args):
    law = _law(args)
    m = law.defect

    def row(x):
        return {
            "x": x,
            "call": pricer.call_price(law, x),
            "put": pricer.put_price(law, x),
            "call_alpha": pricer.call_price(law, x, args.alpha),
            "alpha": args.alpha,
            "m_T": m,
            "parity_residual": pricer.parity_residual(law, x),
        }

    rows = _map(row, args.x)
    _emit(args, rows[0] if len(rows) == 1 else rows, rows=rows if args.format == "csv" else None)


SMILE_COLUMNS = ["x", "put_iv", "call_iv_alpha", "wing_order1", "wing_order2", "residual"]


def cmd_smile(args):
    law = _law(args)
    wing = asymptotics.WingExpansion.from_law(law)
    order2 = asymptotics.HigherOrderExpansion(wing)

    def row(x):
        put_iv = pricer.put_smile(law, x)
        try:
            call_iv = pricer.smile(law, x, args.alpha)
        except NonExistenceError:
            call_iv = math.nan
        if x > 0 and wing.m > 0:
            w1 = asymptotics.wing_value(wing, x)
            w2 = asymptotics.wing_value_order2(order2, x)
        else:
            w1 = w2 = math.nan
        return {"x": x, "put_iv": put_iv, "call_iv_alpha": call_iv, "wing_order1": w1,
                "wing_order2": w2, "residual": put_iv - w1}

    rows = _map(row, args.x)
    if args.format == "csv":
        _emit(args, None, SMILE_COLUMNS, rows)
    else:
        _emit(args, {"T": args.T, "alpha": args.alpha, "m_T": law.defect, "rows": rows})


def cmd_defect(args):
    law = _law(args)
    m = law.defect
    _emit(args, {"m_T": m, "n_T": norm_quantile(m)})


def cmd_boundary(args):
    law = _law(args)
    rows = []
    for a in args.alpha:
        b = pricer.existence_boundary(law, a)
        rows.append({"alpha": a, "x_star": b.x_star, "lower_bound": b.lower_bound,
                     "upper_bound": b.upper_bound, "sandwich_holds": b.sandwich_holds(), "m_T": b.m})
    _emit(args, rows[0] if len(rows) == 1 else rows, rows=rows if args.format == "csv" else None)


def cmd_detect(args):
    if args.input == "-":
        quotes = detector.read_quotes_csv(sys.stdin, args.T)
    else:
        try:
            with open(args.input, encoding="utf-8", newline="") as fh:
                quotes = detector.read_quotes_csv(fh, args.T)
        except OSError as exc:
            raise DomainError(f"cannot read {args.input}: {exc.strerror}") from exc
    cfg = detector.DetectConfig(
        x_min_wing=args.x_min_wing, flat_tol=args.flat_tol,
        t_threshold=args.t_threshold, min_wing_points=args.min_wing_points,
    )
    report = detector.detect(quotes, cfg).to_dict()
    if args.format == "csv":
        flat = {k: v for k, v in report.items() if not isinstance(v, (list, dict))}
        _emit(args, flat)
    else:
        _emit(args, report)


def cmd_mc(args):
    cfg = mcsim.McConfig(args.paths, args.steps, args.seed, tuple(args.z_levels))
    name, _, _ = args.model.partition(":")
    law = models.parse_model(args.model, args.T)
    if isinstance(law, models.CevLaw):
        if law.beta != 1.0 or law.s0 != 1.0:
            raise DomainError("exact path simulation is available for CEV with beta=1 and s0=1 only")
        paths = mcsim.simulate_cev1_paths(law.sigma, args.T, cfg)
    elif isinstance(law, models.LognormalLaw):
        paths = mcsim.simulate_lognormal_paths(law.sigma, args.T, cfg)
    else:
        raise DomainError(f"supremum estimator not available for model {name!r}")
    est = mcsim.estimate_pi(paths, cfg, min_exceedances=args.min_exceedances)
    payload = {
        "per_level": [{"z": z, "estimate": v} for z, v in est.pi_hat_per_level],
        "pi_hat": est.pi_hat,
        "std_err": est.std_err,
        "pi_hat_grid": est.pi_hat_grid,
        "defect_oracle": law.defect,
    }
    if args.format == "csv":
        _emit(args, None, ["z", "estimate"], payload["per_level"])
    else:
        _emit(args, payload)


def cmd_dual_check(args):
    pair = duality.cev_dual_pair(args.sigma, args.T)

    def row(x):
        out = {"x": x, "smile_reflection": duality.smile_reflection_check(pair, x)}
        for a in args.alpha:
            c, p = duality.dual_price_check(pair, x, a)
            out[f"call_res_alpha_{a:g}"] = c
            out[f"put_res_alpha_{a:g}"] = p
        return out

    rows = _map(row, args.x)
    if args.format == "csv":
        _emit(args, None, list(rows[0]), rows)
        return
    worst = max(abs(v) for r in rows for k, v in r.items() if k != "x")
    _emit(args, {"defect": pair.s_law.defect, "mass_at_zero": pair.m_law.mass_at_zero,
                 "max_abs_residual": worst, "rows": rows})


def cmd_classify(args):
    spec = models.QuadraticVolSpec(args.a, args.b, args.c, args.s0)
    _emit(args, {"a": args.a, "b": args.b, "c": args.c, "s0": args.s0,
                 "roots": list(spec.roots()), "class": models.classify_quadratic(spec).value})


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="slmiv", description="Smiles, defects and bubble diagnostics for positive local martingales.",
                allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True, T=True, fmt="json"):
        if model:
            sp.add_argument("--model", required=True, help="e.g. cev:beta=1,sigma=1,s0=1 or bridge:mu=0.4")
        if T:
            sp.add_argument("--T", type=_positive, required=True, help="maturity")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)
        sp.add_argument("--output", default=None, help="output path (default stdout)")

    sp = sub.add_parser("price", allow_abbrev=False, help="call, put and alpha-call prices")
    common(sp)
    sp.add_argument("--x", type=parse_grid, required=True)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("smile", allow_abbrev=False, help="put and alpha-call smiles with wing expansions")
    common(sp, fmt="csv")
    sp.add_argument("--x", type=parse_grid, required=True)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.set_defaults(func=cmd_smile)

    sp = sub.add_parser("defect", allow_abbrev=False, help="martingale defect and wing intercept")
    common(sp)
    sp.set_defaults(func=cmd_defect)

    sp = sub.add_parser("boundary", allow_abbrev=False, help="existence boundary of the alpha-call smile")
    common(sp)
    sp.add_argument("--alpha", type=_float_list, default=[0.0, 0.25, 0.5, 0.75])
    sp.set_defaults(func=cmd_boundary)

    sp = sub.add_parser("detect", allow_abbrev=False, help="bubble test on log_strike,implied_vol quotes")
    common(sp, model=False)
    sp.add_argument("--input", required=True, help="CSV file or - for stdin")
    sp.add_argument("--x-min-wing", type=float, default=2.0)
    sp.add_argument("--flat-tol", type=_positive, default=0.01)
    sp.add_argument("--t-threshold", type=_positive, default=3.0)
    sp.add_argument("--min-wing-points", type=int, default=4)
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("mc", allow_abbrev=False, help="Monte Carlo estimate of the defect from path suprema")
    common(sp)
    sp.add_argument("--paths", type=int, default=100000)
    sp.add_argument("--steps", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--z-levels", type=_float_list, default=[8.0, 16.0, 32.0, 64.0])
    sp.add_argument("--min-exceedances", type=float, default=50.0)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("dual-check", allow_abbrev=False, help="CEV beta=1 / absorbed BM duality residuals")
    common(sp, model=False)
    sp.add_argument("--sigma", type=_positive, default=1.0)
    sp.add_argument("--x", type=parse_grid, default=parse_grid("-2:4:0.25"))
    sp.add_argument("--alpha", type=_float_list, default=[0.0, 0.5, 1.0])
    sp.set_defaults(func=cmd_dual_check)

    sp = sub.add_parser("classify", allow_abbrev=False, help="martingale class of quadratic-volatility models")
    common(sp, model=False, T=False)
    for name in ("a", "b", "c"):
        sp.add_argument(f"--{name}", type=float, required=True)
    sp.add_argument("--s0", type=float, required=True)
    sp.set_defaults(func=cmd_classify)
    return p


def _fail(code, message, status):
    sys.stderr.write(f"{code}: {' '.join(str(message).split())}\n")
    return status


_NEGATIVE_VALUE = re.compile(r"^-[\d.]")
_VALUE_FLAGS = {"--x", "--T", "--alpha", "--a", "--b", "--c", "--x-min-wing"}


def _attach_negative_values(argv):
    """Rewrite ``--x -1:2:0.5`` as ``--x=-1:2:0.5`` so argparse does not read it as a flag."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and _NEGATIVE_VALUE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_attach_negative_values(argv))
        args.func(args)
    except UsageError as exc:
        return _fail(exc.code, exc, exc.exit_status)
    except SlmError as exc:
        return _fail(exc.code, exc, exc.exit_status)
    except ValueError as exc:
        return _fail("DomainError", exc, 3)
    except ArithmeticError as exc:
        return _fail("NumericalFailure", exc, 4)
    return 0
