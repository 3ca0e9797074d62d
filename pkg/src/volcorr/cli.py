"""Command-line driver: ``volcorr {simulate, analytic, verify}``.

Every emitted document has the form ``{"manifest": ..., "results": ...}``.
The manifest holds the command, the complete resolved configuration and the
package version, so re-running it gives the same bytes.  Wall-clock time is
logged to stderr rather than written into outputs for the same reason.

Exit codes: 0 success, 1 numerical or tolerance failure, 2 usage error.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time

import numpy as np
import jsonschema

from . import __version__
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    IllConditionedError,
    QuadratureError,
)
from .kernel import centered_cross_moment, fredholm_det_truncated, quadratic_form_X
from .moments import DEFAULT_NODES, DEFAULT_V_RADIUS, even_moment
from .montecarlo import (
    RNG_ALGORITHM,
    SimConfig,
    gen_walk,
    histogram_from_samples,
    moments_from_samples,
    quantile_interval,
    simulate,
)
from .quadrature import QuadratureSpec, generating_lhs, generating_rhs, second_moment
from .specialfun import MgfPoint, cpair, eval_F

log = logging.getLogger("volcorr")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
RESAMPLE_LIMIT = 0.01
GENERATING_TOL = 1e-3
FORM_TOL = 1e-2
FREDHOLM_TOL = 1e-3

_NUM = {"type": "number"}
_NUMS = {"type": "array", "items": _NUM}
_INTEGRAL = {
    "type": "object",
    "required": ["value", "error_estimate", "truncation_tail", "evaluations"],
    "properties": {
        "value": _NUM,
        "error_estimate": {"type": "number", "minimum": 0},
        "truncation_tail": {"type": "number", "minimum": 0},
        "evaluations": {"type": "integer", "minimum": 0},
    },
}

SCHEMA = {
    "type": "object",
    "required": ["manifest", "results"],
    "additionalProperties": False,
    "properties": {
        "manifest": {
            "type": "object",
            "required": ["command", "config", "version", "outputs"],
            "properties": {
                "command": {"type": "string"},
                "config": {"type": "object"},
                "version": {"type": "string"},
                "outputs": {"type": "array", "items": {"type": "string"}},
            },
        },
        "results": {"type": "object"},
    },
}

RESULT_SCHEMAS = {
    "simulate": {
        "type": "object",
        "required": ["moments", "histogram", "interval_95", "resampled", "paths"],
        "properties": {
            "moments": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["order", "estimate", "std_error"],
                    "properties": {
                        "order": {"type": "integer", "minimum": 0},
                        "estimate": _NUM,
                        "std_error": {"type": "number", "minimum": 0},
                    },
                },
            },
            "histogram": {
                "type": "object",
                "required": ["edges", "counts"],
                "properties": {
                    "edges": _NUMS,
                    "counts": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                },
            },
            "interval_95": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            "resampled": {"type": "integer", "minimum": 0},
            "paths": {"type": "integer", "minimum": 1},
        },
    },
    "analytic second-moment": _INTEGRAL,
    "analytic mgf": _INTEGRAL,
    "analytic moment": {
        "allOf": [_INTEGRAL, {"required": ["n", "r_truncation", "r_tail"]}],
    },
    "verify": {
        "type": "object",
        "required": ["lhs", "rhs", "discrepancy", "tolerance", "passed"],
        "properties": {
            "lhs": _NUM,
            "rhs": _NUM,
            "discrepancy": {"type": "number", "minimum": 0},
            "tolerance": _NUM,
            "passed": {"type": "boolean"},
        },
    },
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by itself; keep that but route through main
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def validate(doc):
    """Check a document against the top-level and per-command schemas."""
    jsonschema.validate(doc, SCHEMA)
    cmd = doc["manifest"]["command"]
    key = "verify" if cmd.startswith("verify") else cmd
    if key in RESULT_SCHEMAS:
        jsonschema.validate(doc["results"], RESULT_SCHEMAS[key])


def make_doc(command, config, results):
    doc = {
        "manifest": {
            "command": command,
            "config": config,
            "version": __version__,
            "outputs": sorted(results),
        },
        "results": results,
    }
    validate(doc)
    return doc


def dumps(doc):
    # repr floats are the shortest strings that round-trip exactly
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


# ---- CSV ----------------------------------------------------------------

_CSV_FIELDS = ["record", "index", "estimate", "std_error", "lower", "upper", "count"]


def to_csv(doc):
    """Simulation document as CSV: one manifest comment line, then records.

    Record kinds: ``moment`` (index, estimate, std_error), ``bin`` (index,
    lower, upper, count), ``interval`` (lower, upper), ``meta`` (index names
    the field, value in ``count``).
    """
    res = doc["results"]
    buf = io.StringIO()
    buf.write("# manifest=" + json.dumps(doc["manifest"], sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=_CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in res["moments"]:
        w.writerow({"record": "moment", "index": row["order"],
                    "estimate": repr(row["estimate"]), "std_error": repr(row["std_error"])})
    edges = res["histogram"]["edges"]
    for i, c in enumerate(res["histogram"]["counts"]):
        w.writerow({"record": "bin", "index": i, "lower": repr(edges[i]),
                    "upper": repr(edges[i + 1]), "count": c})
    lo, hi = res["interval_95"]
    w.writerow({"record": "interval", "lower": repr(lo), "upper": repr(hi)})
    for key in ("resampled", "paths"):
        w.writerow({"record": "meta", "index": key, "count": res[key]})
    return buf.getvalue()


def from_csv(text):
    """Inverse of :func:`to_csv`."""
    first, _, body = text.partition("\n")
    if not first.startswith("# manifest="):
        raise ConfigurationError("CSV is missing its manifest line")
    manifest = json.loads(first[len("# manifest="):])
    moments, counts, edges = [], [], []
    res = {}
    for row in csv.DictReader(io.StringIO(body)):
        kind = row["record"]
        if kind == "moment":
            moments.append({"order": int(row["index"]), "estimate": float(row["estimate"]),
                            "std_error": float(row["std_error"])})
        elif kind == "bin":
            if not edges:
                edges.append(float(row["lower"]))
            edges.append(float(row["upper"]))
            counts.append(int(row["count"]))
        elif kind == "interval":
            res["interval_95"] = [float(row["lower"]), float(row["upper"])]
        elif kind == "meta":
            res[row["index"]] = int(row["count"])
    res["moments"] = moments
    res["histogram"] = {"edges": edges, "counts": counts}
    return {"manifest": manifest, "results": res}


# ---- commands ---------------------------------------------------------------

_SIM_DEFAULTS = {
    "n": 10_000,
    "paths": 10_000,
    "seed": 42,
    "workers": None,
    "max_moment": 10,
    "bins": 50,
    "step_dist": "gaussian",
    "format": "json",
    "out": None,
}


def _resolve_sim(args):
    conf = {}
    if args.config:
        try:
            with open(args.config) as fh:
                conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(conf, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(conf) - set(_SIM_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, default in _SIM_DEFAULTS.items():
        flag = getattr(args, key)
        out[key] = flag if flag is not None else conf.get(key, default)
    if out["workers"] is None:
        env = os.environ.get("VC_WORKERS")
        try:
            out["workers"] = int(env) if env else 1
        except ValueError as exc:
            raise UsageError(f"VC_WORKERS must be an integer, got {env!r}") from exc
    if out["format"] not in ("json", "csv"):
        raise UsageError(f"format must be json or csv, got {out['format']!r}")
    if not isinstance(out["bins"], int) or out["bins"] < 10:
        raise UsageError(f"bins must be an integer >= 10, got {out['bins']!r}")
    return out


def cmd_simulate(args):
    opts = _resolve_sim(args)
    cfg = SimConfig(n=opts["n"], paths=opts["paths"], seed=opts["seed"], workers=opts["workers"],
                    step_dist=opts["step_dist"], max_moment=opts["max_moment"])
    sim = simulate(cfg)
    table = moments_from_samples(sim.theta, cfg.max_moment)
    hist = histogram_from_samples(sim.theta, opts["bins"])
    lo, hi = quantile_interval(sim.theta, 0.95) if cfg.paths >= 100 else (-1.0, 1.0)
    results = {
        "moments": table.rows(),
        "histogram": {"edges": [float(e) for e in hist.bin_edges],
                      "counts": [int(c) for c in hist.counts]},
        "interval_95": [lo, hi],
        "resampled": sim.resampled,
        "paths": cfg.paths,
    }
    # workers does not change any output bit, so it stays out of the manifest
    config = {k: v for k, v in opts.items() if k not in ("out", "workers")}
    config["rng"] = RNG_ALGORITHM
    doc = make_doc("simulate", config, results)
    text = dumps(doc) if opts["format"] == "json" else to_csv(doc)
    _emit(text, opts["out"])
    if sim.resampled > RESAMPLE_LIMIT * cfg.paths:
        _diag(f"{sim.resampled} of {cfg.paths} replications were degenerate "
              f"(limit {100 * RESAMPLE_LIMIT:.0f}%)")
        return EXIT_NUMERIC
    return EXIT_OK


def _diag(msg):
    print(f"volcorr: {msg}", file=sys.stderr)


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _analytic_doc(name, config, results):
    sys.stdout.write(dumps(make_doc(f"analytic {name}", config, results)))


def cmd_second_moment(args):
    spec = QuadratureSpec(rel_tol=args.rel_tol, u_max=args.u_max)
    config = {"rel_tol": spec.rel_tol, "abs_tol": spec.abs_tol, "u_max": spec.u_max,
              "diag_eps": spec.diag_eps, "max_evals": spec.max_evals}
    try:
        res = second_moment(spec)
    except QuadratureError as exc:
        _diag(str(exc))
        _analytic_doc("second-moment", config, exc.result.to_dict())
        return EXIT_NUMERIC
    _analytic_doc("second-moment", config, res.to_dict())
    return EXIT_OK


def cmd_mgf(args):
    p = MgfPoint(args.beta1, args.beta2, args.a)
    c = cpair(p)
    results = {"value": eval_F(p), "error_estimate": 0.0, "truncation_tail": 0.0,
               "evaluations": 1, "c_plus": c.c_plus, "c_minus": c.c_minus}
    _analytic_doc("mgf", {"beta1": p.beta1, "beta2": p.beta2, "a": p.a}, results)
    return EXIT_OK


def cmd_moment(args):
    config = {"n": args.n, "r_max": args.r_max, "v_radius": args.v_radius,
              "node_count": DEFAULT_NODES}
    try:
        res = even_moment(args.n, r_max=args.r_max, v_radius=args.v_radius)
        code = EXIT_OK
    except QuadratureError as exc:
        _diag(str(exc))
        res, code = exc.result, EXIT_NUMERIC
    results = {
        "n": res.n,
        "order": 2 * res.n,
        "value": res.value if math.isfinite(res.value) else 0.0,
        "error_estimate": res.error_estimate,
        "truncation_tail": res.tail_estimate if math.isfinite(res.tail_estimate) else 1.0,
        "r_tail": res.tail_estimate if math.isfinite(res.tail_estimate) else 1.0,
        "r_truncation": res.r_truncation,
        "evaluations": res.evaluations,
        "method": res.method,
    }
    _analytic_doc("moment", config, results)
    return code


def _verdict(name, config, lhs, rhs, disc, tol, extra=None):
    passed = bool(disc <= tol)
    results = {"lhs": lhs, "rhs": rhs, "discrepancy": disc, "tolerance": tol, "passed": passed}
    results.update(extra or {})
    sys.stdout.write(dumps(make_doc(f"verify {name}", config, results)))
    if not passed:
        _diag(f"{name}: discrepancy {disc:.3e} exceeds {tol:.1e} (lhs={lhs!r}, rhs={rhs!r})")
    return EXIT_OK if passed else EXIT_NUMERIC


def cmd_generating(args):
    z = args.z
    rhs = generating_rhs(z)
    mu = [second_moment().value] + [even_moment(n).value for n in range(2, 6)]
    lhs = generating_lhs(z, mu)
    disc = abs(lhs - rhs.value) / abs(rhs.value)
    return _verdict("generating", {"z": z, "orders": [2, 4, 6, 8, 10]}, lhs, rhs.value, disc,
                    GENERATING_TOL, {"moments": mu, "rhs_error_estimate": rhs.error_estimate,
                                     "rhs_truncation_tail": rhs.truncation_tail})


def bridge_form_discrepancies(m, seed, pairs):
    """Relative |X12 - Y12| / |Y12| over ``pairs`` simulated path pairs."""
    cfg = SimConfig(n=m, paths=pairs, seed=seed)
    out = np.empty(pairs)
    for i in range(pairs):
        pp = gen_walk(cfg, i)
        x = quadratic_form_X(pp, 1, 2)
        y = centered_cross_moment(pp, 1, 2)
        out[i] = abs(x - y) / abs(y)
    return out


def cmd_bridge_form(args):
    rel = bridge_form_discrepancies(args.n, args.seed, args.pairs)
    med = float(np.median(rel))
    return _verdict("bridge-form", {"n": args.n, "seed": args.seed, "pairs": args.pairs},
                    med, 0.0, med, FORM_TOL, {"max_relative": float(rel.max())})


def cmd_fredholm(args):
    p = MgfPoint(args.beta1, args.beta2, args.a)
    prod = fredholm_det_truncated(p, args.terms)
    closed = eval_F(p) ** -2
    disc = abs(prod.value - closed) / closed
    return _verdict("fredholm", {"beta1": p.beta1, "beta2": p.beta2, "a": p.a, "terms": args.terms},
                    prod.value, closed, disc, FREDHOLM_TOL,
                    {"tail_estimate": prod.tail_estimate})


def build_parser():
    parser = _Parser(prog="volcorr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="Monte Carlo moments and histogram of theta")
    sim.add_argument("--n", type=int)
    sim.add_argument("--paths", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--workers", type=int, help="default: $VC_WORKERS or 1")
    sim.add_argument("--max-moment", dest="max_moment", type=int)
    sim.add_argument("--bins", type=int)
    sim.add_argument("--step-dist", dest="step_dist", choices=["gaussian", "rademacher"])
    sim.add_argument("--out")
    sim.add_argument("--format", choices=["json", "csv"])
    sim.add_argument("--config", help="JSON file with the same keys as the flags")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analytic", help="closed-form and quadrature values")
    asub = ana.add_subparsers(dest="what", required=True, parser_class=_Parser)
    sm = asub.add_parser("second-moment")
    sm.add_argument("--rel-tol", dest="rel_tol", type=float, default=QuadratureSpec.rel_tol)
    sm.add_argument("--u-max", dest="u_max", type=float, default=QuadratureSpec.u_max)
    sm.set_defaults(func=cmd_second_moment)
    mg = asub.add_parser("mgf")
    mg.add_argument("--beta1", type=float, required=True)
    mg.add_argument("--beta2", type=float, required=True)
    mg.add_argument("--a", type=float, required=True)
    mg.set_defaults(func=cmd_mgf)
    mo = asub.add_parser("moment")
    mo.add_argument("--n", type=int, required=True, help="moment order is 2n")
    mo.add_argument("--r-max", dest="r_max", type=int, default=40)
    mo.add_argument("--v-radius", dest="v_radius", type=float, default=DEFAULT_V_RADIUS)
    mo.set_defaults(func=cmd_moment)

    ver = sub.add_parser("verify", help="numerical identity checks")
    vsub = ver.add_subparsers(dest="what", required=True, parser_class=_Parser)
    ge = vsub.add_parser("generating")
    ge.add_argument("--z", type=float, required=True)
    ge.set_defaults(func=cmd_generating)
    p1 = vsub.add_parser("bridge-form", aliases=["prop1"])
    p1.add_argument("--n", type=int, default=2048, help="grid size m")
    p1.add_argument("--seed", type=int, default=7)
    p1.add_argument("--pairs", type=int, default=100)
    p1.set_defaults(func=cmd_bridge_form)
    fr = vsub.add_parser("fredholm")
    fr.add_argument("--beta1", type=float, required=True)
    fr.add_argument("--beta2", type=float, required=True)
    fr.add_argument("--a", type=float, required=True)
    fr.add_argument("--terms", type=int, default=10_000)
    fr.set_defaults(func=cmd_fredholm)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except UsageError as exc:
        print(f"volcorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, DomainError) as exc:
        print(f"volcorr: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, IllConditionedError, DegenerateInputError) as exc:
        print(f"volcorr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("wall-clock %.3f s", time.perf_counter() - t0)
    return code
