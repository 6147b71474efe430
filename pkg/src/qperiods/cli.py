"""Command-line entry point.

    qperiods period     --catalog p2 --n-max 30 --out csv
    qperiods conifold   --catalog p1 --precision 512
    qperiods concentrate --catalog p2 --nu 0.25 --grid 20:160:geom4
    qperiods walk       --catalog p1 --n-max 400 --trials 100000 --seed 7

Exit codes: 0 success, 1 unreadable/malformed input or I/O failure,
2 input that is well-formed but mathematically out of range.
"""

import argparse
import csv
import hashlib
import io
import json
import sys

from mpmath import mp

from . import __version__, catalog
from ._mp import DEFAULT_PREC, fmt, to_mpf
from ._validation import check_nu_window_range, parse_grid_spec
from .concentration import ConcentrationConfig, default_grid, measure
from .conifold import find_conifold
from .exceptions import DomainValidationError, ModelFormatError, QPeriodsError
from .hypergeom import evaluate_and_measure, load_spec
from .laurent import load_model
from .location import LocationPolynomial
from .series import PERIOD_COLUMNS, PeriodOracle, TruncationPolicy, estimate_t_a_con, quantum_period
from .walk import fit_lclt, monte_carlo_return, reduce_to_index_one, step_distribution

SCHEMA = "v1"
EXIT_OK, EXIT_IO, EXIT_DOMAIN = 0, 1, 2
DEFAULT_T_N_MAX = 200


def _load_model(args):
    if args.catalog and args.model:
        raise DomainValidationError("give either --catalog or --model, not both")
    if args.catalog:
        entry = catalog.get(args.catalog)
        return entry.model, f"catalog:{entry.name}"
    if args.model:
        return load_model(args.model), args.model
    raise DomainValidationError("a model is required (--catalog or --model)")


def _header(args, model_hash):
    return {
        "tool": f"qperiods {__version__}",
        "command": args.command,
        "model_sha256": model_hash,
        "precision": args.precision,
        "seed": getattr(args, "seed", None),
    }


def _render(header, columns, rows, footer, payload, out_format):
    if out_format == "json":
        doc = {"schema": SCHEMA, "header": header, **payload}
        if columns:
            doc["columns"] = list(columns)
            doc["rows"] = [list(r) for r in rows]
        if footer:
            doc["summary"] = footer
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    if columns:
        w.writerow(columns)
        w.writerows(rows)
    for k, v in {**payload, **(footer or {})}.items():
        buf.write(f"# {k}={json.dumps(v) if isinstance(v, (list, dict)) else v}\n")
    return buf.getvalue()


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_period(args):
    f, source = _load_model(args)
    if args.n_max < 0:
        raise DomainValidationError("--n-max must be non-negative")
    seq = quantum_period(f, args.n_max, source_model=source)
    payload = {"index_r": seq.index_r}
    text = _render(_header(args, f.digest()), PERIOD_COLUMNS, seq.table_rows(), None, payload, args.out)
    _emit(text, args.output)


def cmd_conifold(args):
    f, _ = _load_model(args)
    with mp.workprec(args.precision):
        res = find_conifold(f, prec=args.precision)
        payload = {
            "point": [fmt(v) for v in res.point],
            "value": fmt(res.value),
            "hessian_log_det": fmt(res.hessian_log_det),
            "gradient_norm": fmt(res.gradient_norm, 10),
            "iterations": res.iterations,
        }
    out = "json" if args.out is None else args.out
    _emit(_render(_header(args, f.digest()), None, (), None, payload, out), args.output)


CONCENTRATION_COLUMNS = ("x", "n_minus", "n_plus", "peak_index", "head_ratio", "tail_ratio")


def _concentration_rows(report):
    return [
        (fmt(r.x, 20), r.n_minus, r.n_plus, r.peak_index, fmt(r.head_ratio, 20), fmt(r.tail_ratio, 20))
        for r in report.records
    ]


def _fit_summary(report):
    def side(fit):
        if fit is None:
            return None
        return {"alpha": f"{fit.alpha:.6g}", "beta": f"{fit.beta:.6g}", "residual": f"{fit.residual:.3g}",
                "points": fit.n_points}

    return {
        "verdict": report.verdict,
        "peak_onset_x": None if report.peak_onset is None else fmt(report.peak_onset, 20),
        "head_fit": side(report.head_fit),
        "tail_fit": side(report.tail_fit),
        "eventually_decreasing_x_p_ratio": {str(p): bool(v) for p, v in report.trend_by_p.items()},
    }


def cmd_concentrate(args):
    if args.nu is None:
        raise DomainValidationError("--nu is required")
    policy = TruncationPolicy(prec=args.precision)
    with mp.workprec(args.precision):
        nu = to_mpf(args.nu) if args.exploratory else check_nu_window_range(args.nu)
        grid = parse_grid_spec(args.grid) if args.grid else None
        if args.hypergeom:
            if args.catalog or args.model:
                raise DomainValidationError("--hypergeom cannot be combined with a Laurent model")
            spec = load_spec(args.hypergeom)
            model_hash = hashlib.sha256(
                json.dumps(spec.to_json_dict(), sort_keys=True).encode()
            ).hexdigest()
            report = evaluate_and_measure(spec, args.nu, grid, policy, exploratory=args.exploratory)
            payload = {"location_slope": fmt(spec.peak_coefficient, 20)}
        else:
            f, source = _load_model(args)
            model_hash = f.digest()
            n_max = args.n_max if args.n_max is not None else DEFAULT_T_N_MAX
            est = estimate_t_a_con(quantum_period(f, n_max, source_model=source), prec=args.precision)
            T = est.value
            config = ConcentrationConfig(LocationPolynomial.linear(T), T ** (-nu), nu)
            if grid is None:
                grid = default_grid(config)
            report = measure(PeriodOracle(f), config, grid, policy)
            payload = {"T_A_con": fmt(T, 20), "T_A_con_relative_gap": fmt(est.relative_gap, 6)}
    payload["nu"] = args.nu
    text = _render(
        _header(args, model_hash), CONCENTRATION_COLUMNS, _concentration_rows(report), _fit_summary(report),
        payload, args.out,
    )
    _emit(text, args.output)


WALK_COLUMNS = ("n", "q_n")


def cmd_walk(args):
    f, _ = _load_model(args)
    n_max = args.n_max if args.n_max is not None else 300
    with mp.workprec(args.precision):
        data = reduce_to_index_one(f, n_max, prec=args.precision)
        dist = step_distribution(data.g, data.conifold)
        fit = fit_lclt(data.q, dist.lattice_rank, prec=args.precision)
        payload = {
            "index_r": data.index_r,
            "lattice_rank": dist.lattice_rank,
            "T_g": fmt(data.T_g, 20),
            "c_hat": fmt(fit.c_hat, 20),
            "b_hat": fmt(fit.b_hat, 20),
            "m_over_2_check": f"{fit.m_over_2_check:.6f}",
            "residual_exponent": f"{fit.residual_exponent:.6f}",
            "n_min_fit": fit.n_min_fit,
        }
        if args.trials:
            steps = min(n_max, args.mc_steps)
            mc = monte_carlo_return(dist, steps, args.trials, args.seed)
            payload["monte_carlo"] = {
                "n_steps": steps,
                "trials": args.trials,
                "estimate": f"{mc.estimate:.8f}",
                "stderr": f"{mc.stderr:.8f}",
                "exact": fmt(data.q[steps], 12),
            }
        rows = [(n, fmt(v, 20)) for n, v in enumerate(data.q)]
    _emit(_render(_header(args, f.digest()), WALK_COLUMNS, rows, None, payload, args.out), args.output)


def build_parser():
    # argparse already exits 2 on usage errors, matching the domain-error code
    p = argparse.ArgumentParser(prog="qperiods", description="Quantum periods and series concentration.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default="csv"):
        sp.add_argument("--catalog", choices=sorted(catalog.CATALOG), help="built-in model")
        sp.add_argument("--model", help="model JSON file")
        sp.add_argument("--precision", type=int, default=DEFAULT_PREC, help="working precision in bits")
        sp.add_argument("--out", choices=("csv", "json"), default=out_default, help="report format")
        sp.add_argument("-o", "--output", help="write the report here instead of stdout")

    sp = sub.add_parser("period", help="exact quantum period coefficients")
    common(sp)
    sp.add_argument("--n-max", type=int, default=20)
    sp.set_defaults(func=cmd_period)

    sp = sub.add_parser("conifold", help="conifold point and value")
    common(sp, out_default=None)
    sp.set_defaults(func=cmd_conifold)

    sp = sub.add_parser("concentrate", help="head/tail mass around the predicted peak")
    common(sp)
    sp.add_argument("--hypergeom", help="hypergeometric series JSON file")
    sp.add_argument("--nu", help="window exponent (decimal string)")
    sp.add_argument("--grid", help="lo:hi:geomN or lo:hi:linN")
    sp.add_argument("--n-max", type=int, help=f"terms used to estimate T_A,con (default {DEFAULT_T_N_MAX})")
    sp.add_argument("--exploratory", action="store_true", help="allow nu outside (0, 1/2)")
    sp.set_defaults(func=cmd_concentrate)

    sp = sub.add_parser("walk", help="return probabilities, local CLT fit, Monte Carlo check")
    common(sp)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--trials", type=int, default=0, help="Monte Carlo trials (0 disables)")
    sp.add_argument("--mc-steps", type=int, default=20, help="walk length for the Monte Carlo check")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_walk)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.precision < 53:
        print("qperiods: --precision must be at least 53 bits", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        args.func(args)
    except ModelFormatError as exc:
        print(f"qperiods {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"qperiods {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (QPeriodsError, ValueError) as exc:
        print(f"qperiods {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
