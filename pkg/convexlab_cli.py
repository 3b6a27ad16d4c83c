#!/usr/bin/env python3
"""
convexlab - Command-line interface

Batch analyses of convex domains: pointwise convexity verdicts and contact
orders, strong convexification, hulls and extreme points, exhaustion
functions, boundary bumping and Minkowski gauges.

Reports are JSON (schema 1) on stdout or in --out; --csv emits point data
for external plotting instead. Logs go to stderr.

Exit codes:
    0  the analysis passed
    1  usage error (unknown domain, bad parameter, off-boundary point ...)
    2  a mathematically meaningful negative (not convex, flat point, infeasible bump ...)

Usage:
    python convexlab_cli.py classify em:2 --points 100
    For complete usage examples, run: python convexlab_cli.py --help
"""

# Standard library imports
import argparse
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

# Set up path before any other imports to fix module resolution
script_dir = os.path.dirname(os.path.abspath(__file__))
if script_dir not in sys.path:
    sys.path.insert(0, script_dir)

import numpy as np

from src.common.config import get_config, load_config, pick, set_config
from src.common.partition import ordered_map
from src.common.seed import set_seed
from src.core.bump import GraphDomain2D, bump_order_choice, bump_result, flatcap_graph
from src.core.convexity import (
    ConvexityClass,
    classify_point,
    geometric_convexity_oracle,
    strong_convexify,
)
from src.core.exhaust import exhaustion_grid, max_exhaustion, neg_log_distance_field, sublevel_decomposition
from src.core.hulls import (
    CompactSet,
    FunctionFamily,
    chord_witness,
    f_hull,
    interior_samples,
    is_extreme,
    minkowski_gauge,
    support_function,
)
from src.core.order import contact_order
from src.core.reports import AnalysisReport, point_record
from src.domains.domain import DomainSpec, sample_boundary
from src.domains.gallery import GALLERY, get_domain, get_gallery_item, list_gallery
from src.utils.constants import EXIT_GEOMETRY, EXIT_OK, EXIT_USAGE, get_default_config_path
from src.utils.debug import Debug
from src.utils.errors import (
    ConvexLabError,
    GeometricFailure,
    InvalidParameterError,
    NotOnBoundaryError,
)

debug = Debug(enabled=False)


class Output:
    """Report text plus the exit code it implies."""

    def __init__(self, text: str, code: int = EXIT_OK, path: Optional[str] = None):
        self.text = text
        self.code = code
        self.path = path


def parse_vector(text: str, name: str) -> np.ndarray:
    """'0.5,1' -> array([0.5, 1.0])"""
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise InvalidParameterError(f"--{name} expects comma-separated numbers, got '{text}'", {name: text})


def _emit(report: AnalysisReport, args: argparse.Namespace, csv_text: Optional[str] = None) -> Output:
    if args.format == "csv":
        if csv_text is None:
            raise InvalidParameterError(f"'{args.command}' has no CSV output")
        return Output(csv_text, EXIT_OK if report.passed else EXIT_GEOMETRY)
    return Output(report.to_json(), EXIT_OK if report.passed else EXIT_GEOMETRY)


# =============================================================================
# Commands
# =============================================================================

def cmd_classify(args: argparse.Namespace) -> Output:
    """Pointwise verdicts and orders on boundary samples plus the global segment oracle."""
    shape = get_gallery_item(args.domain)
    count = int(pick(args.points, "cli", "points"))
    report = AnalysisReport.for_shape("classify", shape, points=count, seed=args.seed)
    rows: List[List[Any]] = []
    if isinstance(shape, DomainSpec):
        debug.start_timer("classify")
        points = sample_boundary(shape, count, args.seed, debug=debug)

        def analyse(bp):
            verdict = classify_point(shape, bp)
            order = None
            if verdict.convexity_class is not ConvexityClass.NOT_CONVEX:
                order = contact_order(shape, bp, seed=args.seed, check_convex=False)
            return bp, verdict, order

        for bp, verdict, order in ordered_map(analyse, points):
            report.add_point(point_record(verdict, order, bp.normal))
            rows.append(list(bp.location) + [verdict.convexity_class.value, order.label if order else ""])
        debug.end_timer("classify", f"Classified {len(points)} boundary points")
        counts = {c.value: sum(1 for p in report.points if p["class"] == c.value) for c in ConvexityClass}
        report.set("classes", counts)
    oracle = geometric_convexity_oracle(shape, seed=args.seed)
    report.set("oracle", oracle.to_dict())
    if not oracle.convex:
        report.fail({"kind": "NotConvex", "message": "Segment oracle found a violation"})
    header = ",".join([f"x{i + 1}" for i in range(shape.dim)] + ["class", "order"])
    csv_text = "\n".join([header] + [",".join(str(v) for v in row) for row in rows]) + "\n"
    return _emit(report, args, csv_text)


def cmd_convexify(args: argparse.Namespace) -> Output:
    d = get_domain(args.domain)
    report = AnalysisReport.for_shape("convexify", d, seed=args.seed,
                                      boundary_samples=int(pick(args.points, "convexity", "boundary_samples")))
    result = strong_convexify(d, boundary_samples=args.points, debug=debug)
    report.set("convexification", result.to_dict())
    return _emit(report, args)


def cmd_hull(args: argparse.Namespace) -> Output:
    shape = get_gallery_item(args.domain)
    count = int(pick(args.points, "cli", "hull_points"))
    K = CompactSet(interior_samples(shape, count, seed=args.seed), "K")
    family = FunctionFamily.continuous() if args.family == "continuous" else FunctionFamily.real_linear()
    report = AnalysisReport.for_shape("hull", shape, points=count, seed=args.seed, family=family.kind.value,
                                      grid=int(pick(args.grid, "hulls", "grid")))
    hull = f_hull(shape, K, family, grid=args.grid)
    hull.label = "hull"
    report.set("hull", {"K": K.points, "size": len(hull)})
    return _emit(report, args, K.to_csv() + hull.to_csv().split("\n", 1)[1])


def cmd_extreme(args: argparse.Namespace) -> Output:
    shape = get_gallery_item(args.domain)
    if args.point is None:
        raise InvalidParameterError("extreme needs --point")
    P = parse_vector(args.point, "point")
    report = AnalysisReport.for_shape("extreme", shape, point=P, seed=args.seed)
    result = is_extreme(shape, P)
    record = result.to_dict()
    if not result.extreme:
        record["chord"] = chord_witness(shape, P, result.a, result.b)
    report.set("extreme", record)
    try:
        report.set("support", support_function(shape, P).to_dict())
    except GeometricFailure as e:
        report.set("support", e.to_dict())
    return _emit(report, args)


def cmd_exhaust(args: argparse.Namespace) -> Output:
    shape = get_gallery_item(args.domain)
    levels = parse_vector(args.levels, "levels").tolist() if args.levels else pick(None, "cli", "exhaust_levels")
    report = AnalysisReport.for_shape("exhaust", shape, levels=levels, kind=args.kind, seed=args.seed)
    if args.kind == "neg-log":
        E = neg_log_distance_field(shape)
    else:
        E = max_exhaustion(shape, debug=debug)
        report.set("checks", E.checks)
    if args.format == "csv":
        return _emit(report, args, exhaustion_grid(E))
    decomposition = sublevel_decomposition(E, levels, debug=debug)
    report.set("sublevels", decomposition.to_dict())
    report.set("domains", [dom.to_json() for dom in decomposition])
    return _emit(report, args)


def _graph_for(name: str, at: np.ndarray) -> GraphDomain2D:
    if name == "flatcap":
        g = flatcap_graph(float(at[0]))
    else:
        g = GraphDomain2D.from_separable(get_domain(name), float(at[0]))
    top = float(g.value(at[0])[0])
    if abs(top - at[1]) > 1e-9 * max(1.0, abs(top)):
        raise NotOnBoundaryError("--at must lie on the upper boundary graph",
                                 {"at": at.tolist(), "graph_value": top})
    return g


def cmd_bump(args: argparse.Namespace) -> Output:
    if args.at is None:
        raise InvalidParameterError("bump needs --at")
    at = parse_vector(args.at, "at")
    g = _graph_for(args.domain, at)
    eps = float(pick(args.eps, "bump", "default_eps"))
    report = AnalysisReport.for_shape("bump", g.ambient, at=at, eps=eps, target_order=args.target_order)
    if args.target_order:
        result = bump_order_choice(g, float(at[0]), args.target_order, eps, debug=debug)
    else:
        result = bump_result(g, float(at[0]), eps, debug=debug)
    report.set("bump", result.to_dict())
    return _emit(report, args, result.polyline_csv())


def cmd_gauge(args: argparse.Namespace) -> Output:
    shape = get_gallery_item(args.domain)
    if args.point is None:
        raise InvalidParameterError("gauge needs --point")
    x = parse_vector(args.point, "point")
    report = AnalysisReport.for_shape("gauge", shape, point=x)
    value = minkowski_gauge(shape, x)
    report.set("gauge", {"value": value, "inside": value < 1.0})
    return _emit(report, args)


def cmd_gallery(args: argparse.Namespace) -> Output:
    entries = {name: {"description": GALLERY[name.split(":")[0]].description,
                      "category": GALLERY[name.split(":")[0]].category,
                      "convex": GALLERY[name.split(":")[0]].convex} for name in list_gallery()}
    report = AnalysisReport("gallery", {"name": "gallery", "dim": None})
    report.set("entries", entries)
    csv_text = "name,category,convex\n" + "".join(f"{n},{e['category']},{e['convex']}\n" for n, e in entries.items())
    return _emit(report, args, csv_text)


COMMANDS: Dict[str, Callable[[argparse.Namespace], Output]] = {
    "classify": cmd_classify,
    "convexify": cmd_convexify,
    "hull": cmd_hull,
    "extreme": cmd_extreme,
    "exhaust": cmd_exhaust,
    "bump": cmd_bump,
    "gauge": cmd_gauge,
    "gallery": cmd_gallery,
}


class CliParser(argparse.ArgumentParser):
    """Argument errors are usage errors: exit 1, not argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    """Subcommand parser; every command shares the common options."""
    usage_examples = """
Examples:

  Verdicts and orders on 100 boundary points:
    convexlab classify em:2 --points 100

  Strong convexification:
    convexlab convexify distorted-ball

  Extreme point probe with a witness chord:
    convexlab extreme square --point 0.5,1

  Smoothed sublevel domains of the exhaustion function:
    convexlab exhaust ball2 --levels 0.5,1,2

  Bump the boundary outward near a point, dumping the polyline:
    convexlab bump em:2 --at 0,1 --eps 0.01 --csv
"""
    common = CliParser(add_help=False)
    options = common.add_argument_group("Common options")
    options.add_argument("--config", type=str, default=None,
                         help="YAML configuration (may start with __inherit__: main.yaml)")
    options.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                         help="Override one configuration value; repeatable")
    options.add_argument("--seed", type=int, default=None, help="Sampling seed (default from config)")
    options.add_argument("--points", type=int, default=None, help="Sample count for the command")
    options.add_argument("--out", type=str, default=None, help="Write the report here instead of stdout")
    fmt = options.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json", help="JSON report (default)")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv", help="CSV point data")
    options.add_argument("--debug", action="store_true", help="Verbose logging on stderr")

    parser = CliParser(
        prog="convexlab",
        description="convexlab - numerical analysis of convex domains",
        epilog=usage_examples,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], allow_abbrev=False)
        if name != "gallery":
            p.add_argument("domain", type=str, help="Gallery name (ball2, em:3, square ...) or a DomainSpec JSON file")
        if name == "hull":
            p.add_argument("--family", choices=["real-linear", "continuous"], default="real-linear")
            p.add_argument("--grid", type=int, default=None)
        if name in ("extreme", "gauge"):
            p.add_argument("--point", type=str, default=None, help="Comma-separated coordinates")
        if name == "exhaust":
            p.add_argument("--levels", type=str, default=None, help="Comma-separated increasing levels")
            p.add_argument("--kind", choices=["max", "neg-log"], default="max")
        if name == "bump":
            p.add_argument("--at", type=str, default=None, help="Boundary point x1,x2 on the upper graph")
            p.add_argument("--eps", type=float, default=None, help="Hausdorff budget")
            p.add_argument("--target-order", dest="target_order", type=int, default=None)
        p.set_defaults(format="json")
    return parser


# =============================================================================
# Main Entry Point
# =============================================================================

def run(argv: Optional[Sequence[str]] = None) -> Output:
    """
    Parse, configure and dispatch; toolkit errors become JSON error reports.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    debug.enabled = args.debug

    config_path = args.config or get_default_config_path()
    try:
        set_config(load_config(config_path, args.overrides))
    except Exception as e:
        debug.log(f"Cannot load configuration '{config_path}': {e}", level="ERROR", category="setup", force=True)
        return Output("", EXIT_USAGE)
    args.seed = int(args.seed if args.seed is not None else get_config().seed)
    set_seed(args.seed)

    if debug.enabled:
        debug.print_header(cli=True)
    debug.log("Arguments:", category="setup")
    for key, value in vars(args).items():
        debug.log(f"{key}: {value}", category="none", indent_level=1)

    debug.start_timer("total")
    try:
        output = COMMANDS[args.command](args)
    except ConvexLabError as e:
        level = "WARNING" if isinstance(e, GeometricFailure) else "ERROR"
        debug.log(f"{e.kind}: {e.message}", level=level, category="error", force=True)
        report = AnalysisReport(args.command, {"name": getattr(args, "domain", None)}, {"seed": args.seed})
        report.fail(e.to_dict())
        output = Output(report.to_json(), e.exit_code)
    finally:
        set_config(None)
        debug.end_timer("total", f"Total '{args.command}' time", show_breakdown=True)
        if debug.enabled:
            debug.print_footer()
        debug.clear_history()
    output.path = args.out
    return output


def main(argv: Optional[Sequence[str]] = None) -> int:
    output = run(argv)
    if output.text:
        if output.path:
            with open(output.path, "w", encoding="utf-8") as handle:
                handle.write(output.text)
        else:
            sys.stdout.write(output.text)
    return output.code


if __name__ == "__main__":
    sys.exit(main())
