"""Command-line front end: ``lyapbound bound|sweep|density|validate``."""

import argparse
import json
import logging
import sys

import pandas as pd
from sklearn.utils._param_validation import InvalidParameterError

from ._base import LyapBoundError, MapSpecError, SweepFailedError, ValidationFailedError, make_context
from ._bounds import adaptive_enclosure, lyapunov_enclosure, monte_carlo_check
from ._collocation import density_lyapunov, invariant_density
from .chebyshev_ops import clenshaw_eval, integrate
from .maps import builtin, load_map_config, validate_map
from .utils import (
    SWEEP_COLUMNS,
    RunManifest,
    enclosure_record,
    flatten_record,
    json_options,
    parameter_grid,
    read_manifest,
    resolve_workers,
    sweep,
    write_json,
    write_record_csv,
    write_table,
)

logger = logging.getLogger("lyapbound")

FAMILIES = ("lanford_family", "bent_tent")


###############################################################################
# Shared helpers


def _parse_params(pairs):
    params = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise MapSpecError(f"--param expects name=value, got {pair!r}")
        params[key.strip()] = value.strip()
    return params


def _load_map(args):
    """Map from ``--map``/``--config``; returns ``(spec, manifest map entry)``."""
    params = _parse_params(args.param)
    if args.config:
        if params:
            raise MapSpecError("--param applies to --map only; put parameters in the config file")
        spec, digest = load_map_config(args.config)
        expected = getattr(args, "expected_sha256", None)
        if expected and expected != digest:
            raise MapSpecError(f"{args.config} changed since the recorded run (sha256 {digest[:12]})")
        return spec, {"config": args.config, "sha256": digest}
    if not args.map:
        raise MapSpecError("give --map <name> or --config <path>")
    return builtin(args.map, params or None), {"builtin": args.map, "params": params}


def _options(args, keys=("refine_factor", "grid_factor", "tol", "max_iter", "workers")):
    opts = {}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def _emit(text, path):
    if path:
        with open(path, "w") as fp:
            fp.write(text)
    else:
        sys.stdout.write(text)


def _write_record(record, args):
    if args.format == "csv":
        if args.out:
            write_record_csv(record, args.out)
        else:
            pd.DataFrame([flatten_record(record)], dtype=object).to_csv(sys.stdout, index=False)
    elif args.out:
        write_json(record, args.out)
    else:
        _emit(json.dumps(record, indent=2) + "\n", None)


###############################################################################
# Commands


def _apply_manifest(args):
    manifest = read_manifest(args.from_manifest)
    if manifest.command != "bound":
        raise MapSpecError(f"manifest records command {manifest.command!r}, not 'bound'")
    source = manifest.map
    args.map, args.config = source.get("builtin"), source.get("config")
    args.param = [f"{k}={v}" for k, v in source.get("params", {}).items()]
    args.expected_sha256 = source.get("sha256")
    args.epsilon, args.nodes, args.digits = manifest.epsilon, manifest.m, manifest.digits
    for key, value in manifest.opts.items():
        setattr(args, key, value)
    args.target_digits = manifest.extra.get("target_digits")
    args.check_monte_carlo = manifest.extra.get("check_monte_carlo")
    logger.info(f"Re-running bound from manifest {args.from_manifest}")


def cmd_bound(args):
    if args.from_manifest:
        _apply_manifest(args)
    spec, map_entry = _load_map(args)
    opts = _options(args)
    if args.target_digits:
        enclosure = adaptive_enclosure(spec, args.target_digits, opts=opts)
        ctx = make_context(enclosure.digits)
    else:
        ctx = make_context(args.digits)
        enclosure = lyapunov_enclosure(spec, args.epsilon, args.nodes, ctx, opts)

    reports = None
    if args.check_monte_carlo:
        n_points, trials, seed = (int(v) for v in args.check_monte_carlo.split(","))
        reports = [
            monte_carlo_check(spec, t, poly, n_points, trials, seed, ctx, certificate=cert, opts=opts)
            for t, poly, cert in zip(
                (1 + enclosure.epsilon, 1 - enclosure.epsilon), enclosure.polynomials, enclosure.certificates
            )
        ]

    manifest = RunManifest(
        command="bound",
        map=map_entry,
        epsilon=f"1e-{args.target_digits}" if args.target_digits else str(args.epsilon),
        m=enclosure.m,
        digits=enclosure.digits,
        opts=json_options(opts),
        seed=None if not args.check_monte_carlo else int(args.check_monte_carlo.split(",")[2]),
        extra={"target_digits": args.target_digits, "check_monte_carlo": args.check_monte_carlo},
    )
    _write_record(enclosure_record(enclosure, ctx, manifest.finish(), reports), args)
    return 0


def cmd_sweep(args):
    ctx = make_context(args.digits)
    workers = resolve_workers(args.workers)
    c_values = parameter_grid(args.start, args.stop, args.count)
    opts = _options(args, keys=("tol", "max_iter"))
    table = sweep(args.family, c_values, args.epsilon, args.nodes, ctx, opts, workers=workers)
    manifest = RunManifest(
        command="sweep",
        map={"family": args.family, "from": str(args.start), "to": str(args.stop), "count": args.count},
        epsilon=str(args.epsilon),
        m=args.nodes,
        digits=args.digits,
        opts=json_options(opts),
        extra={"workers": workers},
    ).finish()
    if args.out:
        write_table(table, args.out, args.format, manifest)
    elif args.format == "json":
        payload = {"manifest": manifest.to_dict(), "rows": table.to_dict(orient="records")}
        _emit(json.dumps(payload, indent=2) + "\n", None)
    else:
        _emit(table[SWEEP_COLUMNS].to_csv(index=False), None)
    if not (table["status"] == "ok").any():
        raise SweepFailedError(f"no parameter of {args.family} produced an enclosure")
    return 0


def cmd_density(args):
    spec, map_entry = _load_map(args)
    ctx = make_context(args.digits)
    rho = invariant_density(spec, args.nodes, ctx, _options(args))
    quad = density_lyapunov(spec, rho, ctx)
    a, b = spec.interval_mpf(ctx)
    k = args.samples
    xs = [a + (b - a) * i / (k - 1) for i in range(k)] if k > 1 else [(a + b) / 2]
    samples = [{"x": ctx.to_digits(x), "rho": ctx.to_digits(clenshaw_eval(rho, x, ctx))} for x in xs]
    manifest = RunManifest(command="density", map=map_entry, m=args.nodes, digits=args.digits, extra={"samples": k})
    record = {
        "manifest": manifest.finish().to_dict(),
        "map": spec.describe(),
        "m": args.nodes,
        "digits": args.digits,
        "integral": ctx.to_digits(integrate(rho, ctx)),
        "lyapunov": ctx.to_digits(quad.value),
        "lyapunov_error": ctx.to_digits(quad.error),
        "coefficients": [ctx.to_digits(c) for c in rho.coeffs],
        "samples": samples,
    }
    if args.format == "csv":
        text = "# manifest " + json.dumps(record["manifest"], sort_keys=True) + "\n"
        text += pd.DataFrame(samples, columns=["x", "rho"]).to_csv(index=False)
        _emit(text, args.out)
    elif args.out:
        write_json(record, args.out)
    else:
        _emit(json.dumps(record, indent=2) + "\n", None)
    return 0


def cmd_validate(args):
    spec, _ = _load_map(args)
    report = validate_map(spec, args.grid, make_context(args.digits))
    lines = [report.summary(), *(f"  {msg}" for msg in report.messages), f"  note: {report.note}"]
    _emit("\n".join(lines) + "\n", None)
    if not report.passed:
        raise ValidationFailedError("; ".join(report.messages))
    return 0


###############################################################################
# Parser


def _add_map_source(p):
    group = p.add_mutually_exclusive_group()
    group.add_argument("--map", help="built-in map name")
    group.add_argument("--config", help="path of a TOML map definition")
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="built-in map parameter (repeatable)")


def _add_numerics(p, nodes=60, digits=60):
    p.add_argument("--nodes", type=int, default=nodes, help="collocation nodes m (default: %(default)s)")
    p.add_argument("--digits", type=int, default=digits, help="decimal working digits (default: %(default)s)")


def _add_iteration(p):
    p.add_argument("--tol", help="power iteration tolerance (default: 10^(-digits+20))")
    p.add_argument(
        "--max-iter", type=int, help="power iteration cap (default: follows the observed contraction rate)"
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="lyapbound", description="Certified Lyapunov exponent enclosures")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="enclose the Lyapunov exponent of one map")
    _add_map_source(p)
    p.add_argument("--epsilon", default="1e-3", help="pressure offset (default: %(default)s)")
    _add_numerics(p)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--check-monte-carlo", metavar="N,TRIALS,SEED", help="sample the certified ratios")
    p.add_argument("--target-digits", type=int, help="choose epsilon, digits and m for this many digits")
    p.add_argument("--from-manifest", help="re-run the run recorded in a JSON result file")
    p.add_argument("--refine-factor", type=int, help="certificate refinement K")
    p.add_argument("--grid-factor", type=int, help="certificate grid factor G")
    _add_iteration(p)
    p.add_argument("--workers", type=int, help="threads for the two pressure pipelines")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", help="enclosures over a parameter family")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--from", dest="start", required=True, help="first parameter")
    p.add_argument("--to", dest="stop", required=True, help="last parameter")
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--epsilon", default="1e-3")
    _add_numerics(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--workers", type=int, help="processes (default: $LYAPBOUND_WORKERS or min(4, cpus))")
    _add_iteration(p)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("density", help="sample the invariant density")
    _add_map_source(p)
    _add_numerics(p)
    _add_iteration(p)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("validate", help="check expansion and branch ranges on a grid")
    _add_map_source(p)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--digits", type=int, default=30)
    p.set_defaults(func=cmd_validate)
    return parser


def _report(reason, code, message):
    sys.stderr.write(f"error={reason} exit={code} message={json.dumps(str(message))}\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except LyapBoundError as exc:
        return _report(exc.reason, exc.exit_code, exc)
    except (InvalidParameterError, ValueError, OSError) as exc:
        return _report("invalid_argument", 2, exc)
