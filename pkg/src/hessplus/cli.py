"""Command line front end.

Exit codes: 0 success, 1 failing verification checks, 2 unparsable input,
3 an analysis stage raised (the stage is named on stderr).
"""

import argparse
import json
import math
import os
import sys
import tempfile
import time

from . import __version__
from .critical import find_critical_points
from .errors import EmptyComplementError, HessPlusError, ParseError
from .families import default_box
from .fieldspec import parse_field_spec
from .levelset import (
    DEFAULT_RESOLUTION,
    convexity_via_D,
    extract_level,
    first_convex_level,
    is_regular_level,
    level_verdict,
)
from .region import certify_complement_bounded, h_max_estimate, scan_complement


class StageError(Exception):
    def __init__(self, stage, err):
        self.stage = stage
        self.err = err
        super().__init__(f"stage '{stage}' failed: {type(err).__name__}: {err}")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ParseError:
        raise
    except Exception as err:
        raise StageError(name, err) from err


def _clean(obj):
    """Make a structure JSON-safe: tuples to lists, non-finite floats to strings, -0.0 to 0.0."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return obj + 0.0
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file in the same directory and a rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".hessplus-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text):
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _parse_box(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"box must be xmin,xmax,ymin,ymax, got {text!r}") from None
    if len(vals) != 4 or not (vals[1] > vals[0] and vals[3] > vals[2]):
        raise argparse.ArgumentTypeError(f"box must be xmin,xmax,ymin,ymax with xmin<xmax, ymin<ymax, got {text!r}")
    return vals


def _box_for(args, parsed):
    if args.box is not None:
        return args.box
    return default_box(parsed.family) if parsed.family is not None else default_box(None)


def _header(args, parsed, command):
    return {
        "tool": "hessplus",
        "version": __version__,
        "command": command,
        "input": args.spec,
        "parsed": parsed.text,
        "field_kind": parsed.field.kind,
        "seed": args.seed,
    }


# commands -----------------------------------------------------------------


def _critical_report(cs):
    d = cs.to_dict()
    d["mu_max"] = max(cs.values) if cs.values else None
    return d


def _certificate(parsed):
    if not parsed.certifiable:
        return {"status": "not-applicable", "reason": "field has no exact polynomial form"}
    target = parsed.family if parsed.family is not None else parsed.poly
    try:
        return certify_complement_bounded(target).to_dict()
    except HessPlusError as err:
        return {"status": "not-applicable", "reason": str(err)}


def cmd_analyze(args):
    t0 = time.perf_counter()
    timings = {}
    parsed = parse_field_spec(args.spec)
    f = parsed.field
    box = _box_for(args, parsed)
    report = _header(args, parsed, "analyze")
    report["box"] = list(box)
    report["resolution"] = args.res

    t = time.perf_counter()
    cs = _stage("critical", find_critical_points, f, box)
    timings["critical"] = time.perf_counter() - t
    report["critical_set"] = _critical_report(cs)
    report["critical_values"] = cs.values
    mu = max(cs.values) if cs.values else None
    report["mu_max"] = mu

    t = time.perf_counter()
    step = max(box[1] - box[0], box[3] - box[2]) / args.res
    comp = _stage("complement-scan", scan_complement, f, box, step)
    report["complement_scan"] = {"step": step, "grid_shape": list(comp.grid_shape), "points": len(comp), "bounding_box": comp.bounding_box()}
    try:
        h = _stage("h_max", h_max_estimate, f, comp)
        report["h_max"] = {"value": h.value, "argmax": list(h.argmax), "grid_resolution": h.grid_resolution, "lower_bound": h.lower_bound_flag}
        hmax = h.value
    except StageError as err:
        if not isinstance(err.err, EmptyComplementError):
            raise
        report["h_max"] = {"value": None, "note": str(err.err)}
        hmax = None
    timings["complement"] = time.perf_counter() - t

    t = time.perf_counter()
    report["certificate"] = _stage("certify", _certificate, parsed)
    timings["certify"] = time.perf_counter() - t

    t = time.perf_counter()
    report["levels"] = _stage("levels", _level_survey, args, f, box, cs, mu, hmax)
    timings["levels"] = time.perf_counter() - t
    if args.timings:
        timings["total"] = time.perf_counter() - t0
        report["timings"] = timings
    _emit(args, dumps(report))
    return 0


def _level_survey(args, f, box, cs, mu, hmax):
    """Probe levels around the critical range and bracket the first convex level."""
    top = max(v for v in (mu, hmax, 0.0) if v is not None)
    bottom = min(cs.values) if cs.values else 0.0
    hi = top + 1.0
    lo = bottom + 1e-2 * (hi - bottom)
    probes = sorted({lo, 0.5 * (lo + hi), hi, hi + 1.0, 2 * hi + 10.0})
    verdicts = [level_verdict(f, c, box, args.res, cs).to_dict() for c in probes]
    out = {"probes": verdicts, "all_probes_convex": all(v["convex"] for v in verdicts)}
    try:
        res = first_convex_level(f, lo, hi, args.tol, box, args.res, cs)
        out["first_convex_level"] = {"status": "bracketed", **res.to_dict()}
    except HessPlusError as err:
        out["first_convex_level"] = {"status": "not-bracketed", "reason": str(err), "lo": lo, "hi": hi}
    return out


def cmd_level(args):
    parsed = parse_field_spec(args.spec)
    f = parsed.field
    box = _box_for(args, parsed)
    curve = _stage("extract", extract_level, f, args.c, box, args.res)
    cs = _stage("critical", find_critical_points, f, box)
    report = _header(args, parsed, "level")
    report["curve"] = curve.summary()
    report["regular"] = _stage("regularity", is_regular_level, f, curve, cs)
    if any(curve.closed):
        report["convexity"] = _stage("convexity", convexity_via_D, f, curve).to_dict()
    for w in curve.warnings:
        print(f"warning: {w}", file=sys.stderr)
    fmt = args.format
    if fmt == "csv":
        _emit(args, curve.to_csv())
        print(dumps(report), end="", file=sys.stderr if not args.out else sys.stdout)
    elif fmt == "svg":
        _emit(args, curve.to_svg())
        print(dumps(report), end="", file=sys.stderr if not args.out else sys.stdout)
    else:
        _emit(args, dumps(report))
    return 0


def cmd_critical(args):
    parsed = parse_field_spec(args.spec)
    box = _box_for(args, parsed)
    cs = _stage("critical", find_critical_points, parsed.field, box)
    report = _header(args, parsed, "critical")
    report["critical_set"] = _critical_report(cs)
    _emit(args, dumps(report))
    return 0


def cmd_certify(args):
    parsed = parse_field_spec(args.spec)
    if not parsed.certifiable:
        raise StageError("certify", HessPlusError("field has no exact polynomial form to certify"))
    target = parsed.family if parsed.family is not None else parsed.poly
    cert = _stage("certify", certify_complement_bounded, target)
    report = _header(args, parsed, "certify")
    report["certificate"] = cert.to_dict()
    _emit(args, dumps(report))
    return 0


def cmd_first_convex(args):
    parsed = parse_field_spec(args.spec)
    box = _box_for(args, parsed)
    res = _stage("first-convex", first_convex_level, parsed.field, args.lo, args.hi, args.tol, box, args.res)
    report = _header(args, parsed, "first-convex")
    report["box"] = list(box)
    report["result"] = res.to_dict()
    _emit(args, dumps(report))
    return 0


def cmd_verify_paper(args):
    from .verify import run_suite, suite_report

    only = None
    if args.only:
        only = {int(v) for v in args.only.split(",")}
    results = run_suite(seed=args.seed, resolution=args.res, mutate_d_sign=args.mutate_d_sign, only=only)
    report = suite_report(results, seed=args.seed, timings=args.timings)
    _emit(args, dumps(report))
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAIL {r.id}: {r.name}: {json.dumps(_clean(r.detail), sort_keys=True)}", file=sys.stderr)
    return 1 if failed else 0


# parser -------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--box", type=_parse_box, default=None, help="xmin,xmax,ymin,ymax (write --box=-4,4,-4,4 for negative starts)")
    common.add_argument("--res", type=int, default=DEFAULT_RESOLUTION, help="grid cells per axis (default 600)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-2, help="bisection tolerance for level searches")
    common.add_argument("--out", default=None, help="write the main output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "svg"), default="json")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings (reports stop being byte-identical)")

    p = argparse.ArgumentParser(prog="hessplus", description="Positive-definite Hessian regions, critical sets and convex levels of plane fields.")
    p.add_argument("--version", action="version", version=f"hessplus {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="full report for one field")
    a.add_argument("spec")
    a.set_defaults(func=cmd_analyze)

    lv = sub.add_parser("level", parents=[common], help="extract and judge one level curve")
    lv.add_argument("spec")
    lv.add_argument("-c", type=float, required=True, help="the level value")
    lv.set_defaults(func=cmd_level)

    cr = sub.add_parser("critical", parents=[common], help="critical points and values")
    cr.add_argument("spec")
    cr.set_defaults(func=cmd_critical)

    ce = sub.add_parser("certify", parents=[common], help="certify that the non-convex region is bounded")
    ce.add_argument("spec")
    ce.set_defaults(func=cmd_certify)

    fc = sub.add_parser("first-convex", parents=[common], help="bisect for the first convex level")
    fc.add_argument("spec")
    fc.add_argument("--lo", type=float, required=True)
    fc.add_argument("--hi", type=float, required=True)
    fc.set_defaults(func=cmd_first_convex)

    vp = sub.add_parser("verify-paper", parents=[common], help="run the ground-truth suite")
    vp.add_argument("--only", default=None, help="comma-separated check ids")
    vp.add_argument("--mutate-d-sign", action="store_true", help=argparse.SUPPRESS)
    vp.set_defaults(func=cmd_verify_paper)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as err:
        print(err.annotated(), file=sys.stderr)
        return 2
    except StageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
