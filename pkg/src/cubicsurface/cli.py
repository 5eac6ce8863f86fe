"""Command-line interface: JSON reports on stdout (or --json), summaries on stderr.

Exit codes: 0 success, 1 usage error, 2 computation failure (a diagnostic JSON
report is still written).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict
from fractions import Fraction

import numpy as np

from .algebra import MONOMIAL_INDEX, CubicForm, ParseError, parse_cubic, parse_poly
from .discriminant import ResultantError, is_singular
from .eigen import EigenError, eigen_real_census, eigenpoints
from .lines import (LinesError, double_sixes, eckardt_points, find_lines, incidence_graph,
                    real_line_census, tritangent_planes)
from .normal_forms import NormalFormError, brundu_logar, cayley_salmon_all, pentahedral
from .solver import SolverError, TrackerConfig
from .tropical import (TropicalError, ValuationVector, is_tropically_smooth, regular_subdivision,
                       smoothness_search, valuation_vector, verify_lower_hull)

COMMANDS = ("lines", "incidence", "eckardt", "eigenpoints", "discriminant", "pentahedron",
            "cayley-salmon", "brundu-logar", "tropical", "smooth-search", "report")
THREADS_ENV = "CUBICSURFACE_THREADS"
REPORT_BL_CANDIDATES = 500

COMPUTATION_ERRORS = (LinesError, NormalFormError, SolverError, TropicalError, EigenError,
                      ResultantError)


class UsageError(Exception):
    pass


class ComputationFailure(Exception):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------------------
# deterministic JSON

def _format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        x = 0.0
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _scalar(obj):
    """JSON text for a scalar, or None if obj is a container."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    return None


def dumps(obj, indent: int = 0) -> str:
    """Serialize with 17 significant digits, -0.0 folded to 0.0, rationals as strings."""
    if isinstance(obj, (complex, np.complexfloating)):
        obj = [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    s = _scalar(obj)
    if s is not None:
        return s
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        parts = [dumps(v, indent + 1) for v in obj]
        flat = all("\n" not in p for p in parts)
        if flat and sum(len(p) + 2 for p in parts) < 120:
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(pad + p for p in parts) + "\n" + "  " * indent + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def residual_summary(results) -> dict:
    """Largest value under any key containing 'residual', per top-level section."""
    def walk(node, acc):
        if isinstance(node, dict):
            for k, v in node.items():
                if "residual" in k:
                    for x in _numbers(v):
                        acc.append(x)
                else:
                    walk(v, acc)
        elif isinstance(node, (list, tuple)):
            for v in node:
                walk(v, acc)
        return acc

    out = {}
    for key, section in results.items():
        vals = walk(section, [])
        if vals:
            out[key] = {"max": max(vals), "count": len(vals)}
    return out


def _numbers(v):
    if isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool):
        yield float(v)
    elif isinstance(v, (list, tuple)):
        for x in v:
            yield from _numbers(x)


# ---------------------------------------------------------------------------
# input

def _coefficient_name(name: str) -> int:
    name = name.strip()
    if name.lower().startswith("c") and name[1:].isdigit():
        k = int(name[1:])
        if not 1 <= k <= 20:
            raise UsageError(f"coefficient name out of range: {name}")
        return k - 1
    try:
        poly = parse_poly(name)
    except ParseError as exc:
        raise UsageError(f"bad coefficient name {name!r}: {exc}") from None
    if len(poly.terms) != 1 or list(poly.terms.values())[0] != 1:
        raise UsageError(f"coefficient name is not a monomial: {name}")
    exp = next(iter(poly.terms))
    if exp not in MONOMIAL_INDEX:
        raise UsageError(f"not a cubic monomial: {name}")
    return MONOMIAL_INDEX[exp]


def read_coefficients(path: str) -> CubicForm:
    """A JSON array of 20 rationals, or 20 lines 'name value' (name c1..c20 or a monomial)."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        if text.lstrip().startswith("["):
            data = json.loads(text)
            if not isinstance(data, list) or len(data) != 20:
                raise UsageError("coefficient array must have 20 entries")
            return CubicForm(tuple(Fraction(str(v)) for v in data))
        coeffs = [None] * 20
        for line in text.splitlines():
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise UsageError(f"expected 'name value', got {line.strip()!r}")
            k = _coefficient_name(parts[0])
            if coeffs[k] is not None:
                raise UsageError(f"coefficient {parts[0]} given twice")
            coeffs[k] = Fraction(parts[1])
        missing = [f"c{k + 1}" for k, c in enumerate(coeffs) if c is None]
        if missing:
            raise UsageError(f"missing coefficients: {', '.join(missing)}")
        return CubicForm(tuple(coeffs))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad coefficient file: {exc}") from None


def read_valuations(path: str) -> ValuationVector:
    """20 entries (rationals or 'inf') as a JSON array or whitespace separated."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        entries = json.loads(text) if text.lstrip().startswith("[") else text.split()
    except ValueError as exc:
        raise UsageError(f"bad valuation file: {exc}") from None
    if not isinstance(entries, list) or len(entries) != 20:
        raise UsageError(f"need 20 valuations, got {len(entries)}")
    try:
        return ValuationVector.parse([str(e) for e in entries])
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad valuation vector: {exc}") from None


def _surface(args) -> CubicForm | None:
    if args.poly is not None and args.coeffs is not None:
        raise UsageError("give either --poly or --coeffs, not both")
    if args.poly is not None:
        try:
            return parse_cubic(args.poly)
        except ParseError as exc:
            raise UsageError(f"cannot parse polynomial: {exc}") from None
        except ValueError as exc:
            raise UsageError(f"not a cubic form: {exc}") from None
    if args.coeffs is not None:
        return read_coefficients(args.coeffs)
    return None


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, math.isqrt(p) + 1))


# ---------------------------------------------------------------------------
# commands

def _lines(f, cfg):
    L = find_lines(f, cfg)
    if not L.complete:
        raise ComputationFailure("fewer than 27 lines found" if len(L) != 27 else
                                 "lines found with flags: " + "; ".join(L.flags),
                                 {"lines": L.to_json()})
    return L


def _census(L) -> dict:
    r, c = real_line_census(L)
    return {"real": r, "complex_pairs": c, "exact": True}


def cmd_lines(f, cfg, args) -> dict:
    L = _lines(f, cfg)
    return {**L.to_json(), "census": _census(L)}


def cmd_incidence(f, cfg, args) -> dict:
    L = _lines(f, cfg)
    g = incidence_graph(L)
    planes = tritangent_planes(L, g)
    sixes = double_sixes(g)
    return {"lines": L.to_json(), "graph": {**g.to_json(), "edge_count": len(g.edges),
                                            "regular": g.is_regular(10), "exact": True},
            "tritangent_planes": {"count": len(planes), "planes": [p.to_json() for p in planes]},
            "double_sixes": {"count": len(sixes), "sets": [d.to_json() for d in sixes],
                             "exact": True}}


def cmd_eckardt(f, cfg, args) -> dict:
    L = _lines(f, cfg)
    g = incidence_graph(L)
    planes = tritangent_planes(L, g)
    pts = eckardt_points(L, planes)
    return {"lines": {"count": len(L), "max_restriction_residual": max(L.residuals)},
            "eckardt_points": {"count": len(pts), "points": [p.to_json() for p in pts]}}


def cmd_eigenpoints(f, cfg, args) -> dict:
    E = eigenpoints(f, cfg)
    out = E.to_json()
    try:
        out["real_census"] = {"real": eigen_real_census(E), "exact": True}
    except EigenError as exc:
        out["real_census"] = {"real": None, "reason": str(exc)}
    return out


def cmd_discriminant(f, cfg, args) -> dict:
    rep = is_singular(f, TrackerConfig(**{**asdict(cfg), "max_failures": 8}), cfg.seed)
    out = rep.discriminant.to_json()
    rj = rep.to_json()
    out.update({"witnesses": rj["witnesses"], "witness_residuals": rj["witness_residuals"],
                "isolated": rep.isolated,
                "note": rep.note})
    return out


def cmd_pentahedron(f, cfg, args) -> dict:
    return pentahedral(f, cfg).to_json()


def cmd_cayley_salmon(f, cfg, args) -> dict:
    L = _lines(f, cfg)
    g = incidence_graph(L)
    planes = tritangent_planes(L, g)
    reps = cayley_salmon_all(f, L, planes, expect=None)
    return {"count": len(reps), "planes": [p.to_json() for p in planes],
            "representations": [r.to_json() for r in reps]}


def cmd_brundu_logar(f, cfg, args, max_candidates=None) -> dict:
    return brundu_logar(f, cfg=cfg, max_candidates=max_candidates).to_json()


def _tropical_core(v: ValuationVector, seed: int) -> dict:
    sub = regular_subdivision(v, seed)
    cert = is_tropically_smooth(sub)
    return {"smooth": cert.smooth, "cells": len(sub.cells), "exact": True,
            "certificate": cert.to_json(), "lower_hull_verified": verify_lower_hull(sub),
            "subdivision": sub.to_json()}


def cmd_tropical(f, cfg, args) -> dict:
    v = read_valuations(args.valuations) if args.valuations else valuation_vector(f, args.prime)
    return _tropical_core(v, cfg.seed)


def cmd_smooth_search(f, cfg, args) -> dict:
    threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    res = smoothness_search(f, args.prime, args.budget, cfg.seed, threads=threads)
    return {**res.to_json(), "exact": True}


COMMAND_TABLE = {
    "lines": cmd_lines, "incidence": cmd_incidence, "eckardt": cmd_eckardt,
    "eigenpoints": cmd_eigenpoints, "discriminant": cmd_discriminant,
    "pentahedron": cmd_pentahedron, "cayley-salmon": cmd_cayley_salmon,
    "brundu-logar": cmd_brundu_logar, "tropical": cmd_tropical,
    "smooth-search": cmd_smooth_search,
}


def _section(fn):
    try:
        return {"status": "ok", **fn()}
    except (ComputationFailure, *COMPUTATION_ERRORS) as exc:
        diag = getattr(exc, "diagnostics", None) or getattr(exc, "stats", None) or {}
        return {"status": "failed", "error": str(exc), "diagnostics": diag}


def cmd_report(f, cfg, args) -> dict:
    """Everything applicable; each section records its own status."""
    out = {"discriminant": _section(lambda: cmd_discriminant(f, cfg, args))}
    if out["discriminant"].get("singular"):
        skip = {"status": "skipped", "reason": "singular surface"}
        for key in ("lines", "eigenpoints", "pentahedron", "cayley_salmon", "brundu_logar"):
            out[key] = dict(skip)
    else:
        state = {}

        def geometry():
            L = _lines(f, cfg)
            g = incidence_graph(L)
            planes = tritangent_planes(L, g)
            sixes = double_sixes(g)
            pts = eckardt_points(L, planes)
            state.update(L=L, g=g, planes=planes)
            return {**L.to_json(), "census": _census(L),
                    "graph": {**g.to_json(), "edge_count": len(g.edges),
                              "regular": g.is_regular(10), "exact": True},
                    "tritangent_planes": {"count": len(planes),
                                          "planes": [p.to_json() for p in planes]},
                    "double_sixes": {"count": len(sixes), "sets": [d.to_json() for d in sixes],
                                     "exact": True},
                    "eckardt_points": {"count": len(pts), "points": [p.to_json() for p in pts]}}

        def cayley():
            if "planes" not in state:
                raise ComputationFailure("no line configuration")
            reps = cayley_salmon_all(f, state["L"], state["planes"], expect=None)
            return {"count": len(reps), "representations": [r.to_json() for r in reps]}

        def bl():
            if "L" not in state:
                raise ComputationFailure("no line configuration")
            return brundu_logar(f, state["L"], state["g"], cfg,
                                max_candidates=REPORT_BL_CANDIDATES).to_json()

        out["lines"] = _section(geometry)
        out["eigenpoints"] = _section(lambda: cmd_eigenpoints(f, cfg, args))
        out["pentahedron"] = _section(lambda: cmd_pentahedron(f, cfg, args))
        out["cayley_salmon"] = _section(cayley)
        out["brundu_logar"] = _section(bl)
    out["tropical"] = _section(lambda: {"prime": args.prime,
                                        **_tropical_core(valuation_vector(f, args.prime),
                                                         cfg.seed)})
    return out


# ---------------------------------------------------------------------------
# driver

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


HELP = {
    "lines": "the 27 lines in Pluecker coordinates",
    "incidence": "incidence graph, tritangent planes and double-sixes",
    "eckardt": "Eckardt points",
    "eigenpoints": "eigenpoints of the cubic form",
    "discriminant": "exact discriminant and singular points",
    "pentahedron": "Sylvester pentahedral form",
    "cayley-salmon": "the 120 Cayley-Salmon representations",
    "brundu-logar": "Brundu-Logar normal form",
    "tropical": "regular subdivision and tropical smoothness",
    "smooth-search": "search transforms for a tropically smooth model",
    "report": "all of the above in one JSON report",
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--poly", help="cubic form, e.g. 'x^3+y^3+z^3+w^3'")
    common.add_argument("--coeffs", metavar="FILE",
                        help="20 coefficients: JSON array or lines 'name value'")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--tol", type=float, default=1e-10,
                        help="relative Newton residual required of solutions")
    common.add_argument("--prime", type=int, default=2,
                        help="prime for valuations (default 2)")
    common.add_argument("--json", metavar="OUT", help="write the JSON report here")
    common.add_argument("--no-timing", action="store_true",
                        help="report wall_time as null (byte-stable output)")
    parser = _Parser(prog="cubicsurface", description="Computations on cubic surfaces.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=HELP[name])
        if name == "tropical":
            p.add_argument("--valuations", metavar="FILE",
                           help="explicit valuation vector (20 rationals or 'inf')")
        if name == "smooth-search":
            p.add_argument("--budget", type=int, default=10)
    return parser


def _summary(command: str, results: dict) -> str:
    bits = []
    for key in ("count", "real_count", "value", "singular", "smooth", "cells", "residual",
                "status"):
        if key in results:
            bits.append(f"{key}={results[key]}")
    if command == "report":
        bits = [f"{k}:{v.get('status')}" for k, v in results.items()]
    return f"{command}: " + (", ".join(bits) if bits else "done")


def _emit(report: dict, path: str | None):
    text = dumps(report) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    start = time.perf_counter()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        if not _is_prime(args.prime):
            raise UsageError(f"--prime must be prime, got {args.prime}")
        if getattr(args, "budget", 1) < 1:
            raise UsageError("--budget must be at least 1")
        f = _surface(args)
        if f is None and not (args.command == "tropical" and args.valuations):
            raise UsageError("an input surface is required (--poly or --coeffs)")
        cfg = TrackerConfig(seed=args.seed, newton_tol=args.tol)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    config = {"newton_tol": cfg.newton_tol, "prime": args.prime}
    if hasattr(args, "budget"):
        config["budget"] = args.budget
    report = {
        "command": args.command,
        "input": ({"coefficients": f.to_json(), "polynomial": str(f)} if f is not None
                  else {"coefficients": None, "polynomial": None}),
        "seed": args.seed,
        "config": config,
    }
    if getattr(args, "valuations", None):
        report["input"]["valuations"] = read_valuations(args.valuations).to_json()["values"]
    code = 0
    try:
        fn = cmd_report if args.command == "report" else COMMAND_TABLE[args.command]
        results = fn(f, cfg, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ComputationFailure, *COMPUTATION_ERRORS) as exc:
        diag = getattr(exc, "diagnostics", None) or getattr(exc, "stats", None) or {}
        results = {"error": str(exc), "diagnostics": diag}
        code = 2
    report["results"] = results
    report["residual_summary"] = residual_summary(results)
    report["wall_time"] = None if args.no_timing else time.perf_counter() - start
    report["status"] = "ok" if code == 0 else "failed"
    _emit(report, args.json)
    if code:
        print(f"{args.command}: FAILED: {results['error']}", file=sys.stderr)
    else:
        print(_summary(args.command, results), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
