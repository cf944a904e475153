"""
Command-line front end.

Usage:
    python launcher.py bounds --n 3 --m 3 --M 1 --L 2 --exact
    python launcher.py curve --n 3 --m 3 --M 1 --vary L --exact --format csv
    python launcher.py verify --n 3 --m 3 --M 1 --L 2
    python launcher.py solve-graph graph.txt

Reports go to stdout (or ``--out``); logs go to stderr.  Exit codes:
0 success, 2 invalid input, 3 solver guard, 4 verification or bound
failure, 1 anything unexpected.
"""
import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

from version import __version__
from src.bounds import (
    RateReport,
    demand_rate,
    gap_report,
    write_reports_csv,
    write_reports_json,
)
from src.caching import (
    RequestMatrix,
    SystemParams,
    load_request_matrix,
    memory_share_points,
    place_caches,
)
from src.codec import round_trip
from src.coloring import exact_local_chromatic, fractional_local_chromatic, local_chromatic_ilp
from src.conflict_graph import read_edge_list
from src.demands import canonical_request_matrices, random_request_matrix
from src.utils.common import (
    Settings,
    load_config,
    parse_rational,
    resolve_settings,
    validate_field_degree,
)
from src.utils.errors import (
    CodedCachingError,
    GraphFormatError,
    InstanceTooLargeError,
    InvalidParamsError,
    exit_code_for,
)
from src.utils.limits import (
    EXIT_OK,
    EXIT_UNEXPECTED,
    VERIFY_EXHAUSTIVE_LIMIT,
    VERIFY_SAMPLES,
)
from src.utils.log import setup_logging
from src.utils.workers import resolve_worker_count

log = logging.getLogger("cli")

WORST_CASE = "worst-case"
RANDOM = "random"


@dataclass(frozen=True)
class RunConfig:
    """Validated options of one CLI invocation."""
    command: str
    params: Optional[SystemParams] = None
    demand_source: str = WORST_CASE
    seed: int = 0
    exact: bool = False
    envelope: bool = False
    output_format: str = "json"
    out: Optional[str] = None
    settings: Settings = field(default_factory=Settings)
    workers: int = 1
    vary: Optional[str] = None
    values: Sequence[Fraction] = ()
    graph_path: Optional[str] = None
    ilp: bool = False

    @property
    def single_demand(self) -> bool:
        return self.demand_source != WORST_CASE


# ── Demand Sources ───────────────────────────────────────────

def _demands_for(config: RunConfig, params: SystemParams) -> Optional[RequestMatrix]:
    """Single request matrix named by the run, or None for the worst case."""
    if config.demand_source == WORST_CASE:
        return None
    if config.demand_source == RANDOM:
        return random_request_matrix(params.n, params.m, params.L, config.seed)
    F = load_request_matrix(config.demand_source, params.m)
    F.check_params(params)
    return F


# ── Output ───────────────────────────────────────────────────

def _emit(config: RunConfig, write: Callable[[io.TextIOBase], None]) -> None:
    if config.out:
        with open(config.out, "w", newline="") as f:
            write(f)
        log.info("Wrote %s", config.out)
    else:
        write(sys.stdout)


def _emit_reports(config: RunConfig, reports: List[RateReport], comment: str) -> None:
    if config.output_format == "csv":
        _emit(config, lambda s: write_reports_csv(reports, s, config.seed, comment))
    else:
        _emit(config, lambda s: write_reports_json(reports, s, config.seed))


def _emit_record(config: RunConfig, record: Dict[str, object]) -> None:
    def write(stream):
        if config.output_format == "csv":
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(list(record))
            writer.writerow(["" if v is None else v for v in record.values()])
        else:
            json.dump(record, stream, indent=2, sort_keys=True)
            stream.write("\n")
    _emit(config, write)


def _report(config: RunConfig, params: SystemParams) -> RateReport:
    s = config.settings
    demands = _demands_for(config, params)
    return gap_report(
        params,
        use_exact=config.exact or demands is not None,
        demands=demands,
        with_random=config.exact and demands is None,
        max_vertices=s.max_exact_vertices,
        workers=config.workers,
        random_trials=s.random_trials,
        random_field_degree=s.random_field_degree,
        seed=config.seed,
        with_envelope=config.envelope,
    )


# ── Commands ─────────────────────────────────────────────────

def cmd_bounds(config: RunConfig) -> int:
    """Write the rate report of one parameter point."""
    report = _report(config, config.params)
    _emit_reports(config, [report], "coded-groupcast bounds")
    return EXIT_OK


def cmd_curve(config: RunConfig) -> int:
    """Write one report per value of L or M."""
    base = config.params
    reports = []
    for value in config.values:
        if config.vary == "L":
            params = base.with_requests(int(value))
        else:
            params = base.with_memory(value)
        log.info("Curve point %s=%s", config.vary, value, extra=params.as_dict())
        reports.append(_report(config, params))
    _emit_reports(config, reports, f"coded-groupcast curve vary={config.vary}")
    return EXIT_OK


def _verify_demands(config: RunConfig, params: SystemParams) -> List[RequestMatrix]:
    single = _demands_for(config, params)
    if single is not None:
        return [single]
    demands = canonical_request_matrices(params.n, params.m, params.L)
    if len(demands) <= VERIFY_EXHAUSTIVE_LIMIT:
        return demands
    log.info("%d canonical demands; sampling %d", len(demands), VERIFY_SAMPLES)
    return [random_request_matrix(params.n, params.m, params.L, config.seed + i)
            for i in range(VERIFY_SAMPLES)]


def cmd_verify(config: RunConfig) -> int:
    """Encode and decode every demand (or a seeded sample) at every user.

    A decode mismatch raises ``UndecodableError`` (exit 4).
    """
    s = config.settings
    params = config.params
    checked = users = packets = longest = 0
    worst_rate = Fraction(0)
    vertex_rate: Optional[Fraction] = Fraction(0)
    q_used = s.field_degree
    for M_i, weight in memory_share_points(params):
        point = params.with_memory(M_i)
        placement = place_caches(point)
        for F in _verify_demands(config, point):
            result = round_trip(placement, F, q=s.field_degree, width=s.verify_width,
                                seed=config.seed + checked, max_vertices=s.max_exact_vertices)
            checked += 1
            users += result.users_checked
            packets += result.packets_checked
            longest = max(longest, result.codeword_length)
            worst_rate = max(worst_rate, result.rate)
            q_used = max(q_used, result.q)
            if vertex_rate is not None:
                try:
                    vertex_rate = max(vertex_rate, demand_rate(point, F, s.max_exact_vertices))
                except InstanceTooLargeError:
                    vertex_rate = None
    summary = {
        "status": "pass",
        "n": params.n, "m": params.m, "M": str(params.M), "L": params.L,
        "demands": checked,
        "users_checked": users,
        "packets_checked": packets,
        "max_codeword_length": longest,
        "max_codeword_rate": str(worst_rate),
        "max_vertex_rate": None if vertex_rate is None else str(vertex_rate),
        "q": q_used,
        "width": s.verify_width,
        "seed": config.seed,
    }
    log.info("Verified %d demand(s), %d packets decoded", checked, packets,
             extra=params.as_dict())
    _emit_record(config, summary)
    return EXIT_OK


def cmd_solve_graph(config: RunConfig) -> int:
    """Print chi_l and the fractional value of an edge-list digraph."""
    s = config.settings
    if config.graph_path in (None, "-"):
        g = read_edge_list(sys.stdin)
    else:
        try:
            with open(config.graph_path, "r") as f:
                g = read_edge_list(f)
        except OSError as e:
            raise GraphFormatError(f"cannot read {config.graph_path}: {e}") from e
    exact = exact_local_chromatic(g, packet_consistent=False, max_vertices=s.max_exact_vertices)
    fractional = fractional_local_chromatic(g, max_vertices=s.max_lp_vertices,
                                            max_sets=s.max_independent_sets)
    record: Dict[str, object] = {
        "vertices": len(g),
        "edges": g.edge_count,
        "chi_l": exact.chi_l,
        "fractional": str(fractional.value),
        "colors": list(exact.coloring.colors),
    }
    if config.ilp:
        record["chi_l_ilp"] = local_chromatic_ilp(g, max_vertices=s.max_ilp_vertices,
                                                  max_sets=s.max_independent_sets)
    if config.output_format == "csv":
        record["colors"] = " ".join(str(c) for c in exact.coloring.colors)
    _emit_record(config, record)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "bounds": cmd_bounds,
    "curve": cmd_curve,
    "verify": cmd_verify,
    "solve-graph": cmd_solve_graph,
}


# ── Argument Parsing ─────────────────────────────────────────

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="Output format (default json)")
    p.add_argument("--out", default=None, help="Write output to this path instead of stdout")
    p.add_argument("--max-vertices", type=int, default=None,
                   help="Exact-solver size guard (overrides config)")
    p.add_argument("--config", default=None, help="Path to config.json")
    p.add_argument("--debug", action="store_true", help="Enable debug-level logging")
    p.add_argument("--log-file", default=None, help="Also log to this rotating file")


def _add_params(p: argparse.ArgumentParser, need_L: bool = True) -> None:
    p.add_argument("--n", type=int, required=True, help="Number of users")
    p.add_argument("--m", type=int, required=True, help="Number of files")
    p.add_argument("--M", required=True, help="Cache size in files (e.g. 1, 0.5, 3/4)")
    p.add_argument("--L", type=int, required=need_L, default=None,
                   help="Requests per user")
    p.add_argument("--exact", action="store_true",
                   help="Compute the exact worst-case rate and the random-linear baseline")
    p.add_argument("--envelope", action="store_true",
                   help="With --exact, also report the convex envelope over every integer t")
    p.add_argument("--demands", default=WORST_CASE,
                   help="Request matrix file (.json/.csv), 'random', or 'worst-case' (default)")
    p.add_argument("--seed", type=int, default=0, help="Seed for random demands and symbols")
    p.add_argument("--q", type=int, default=None, help="Field degree for GF(2^q) (default 8)")
    p.add_argument("--workers", type=int, default=None, help="Sweep worker processes")


def _parse_args(argv=None):
    """Parse CLI arguments."""
    parser = argparse.ArgumentParser(
        prog="coded-groupcast",
        description="Multiple-groupcast coded caching: rates, bounds and codec checks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bounds = sub.add_parser("bounds", help="Rate report for one parameter point")
    _add_params(p_bounds)
    _add_common(p_bounds)

    p_curve = sub.add_parser("curve", help="Rate reports across L or M")
    _add_params(p_curve, need_L=False)
    p_curve.add_argument("--vary", choices=("L", "M"), required=True,
                         help="Parameter to sweep")
    p_curve.add_argument("--values", default=None,
                         help="Comma-separated grid (default: 1..m for L, integer-t points for M)")
    _add_common(p_curve)

    p_verify = sub.add_parser("verify", help="Encode/decode round trip for every demand")
    _add_params(p_verify)
    _add_common(p_verify)

    p_graph = sub.add_parser("solve-graph", help="chi_l and fractional value of an edge list")
    p_graph.add_argument("graph", nargs="?", default="-",
                         help="Edge-list file ('-' for stdin)")
    p_graph.add_argument("--ilp", action="store_true",
                         help="Cross-check with the 0/1 cover program")
    _add_common(p_graph)

    return parser.parse_args(argv)


def _curve_values(args, params: SystemParams) -> List[Fraction]:
    if args.values:
        try:
            values = [parse_rational(v) for v in args.values.split(",") if v.strip()]
        except ValueError as e:
            raise InvalidParamsError(f"--values: {e}") from e
    elif args.vary == "L":
        values = [Fraction(L) for L in range(1, params.m + 1)]
    else:
        values = [params.memory_at(t) for t in range(params.n + 1)]
    if args.vary == "L" and any(v.denominator != 1 for v in values):
        raise InvalidParamsError("--values for L must be integers")
    return values


def build_run_config(args, cfg: Optional[dict] = None) -> RunConfig:
    """Validate parsed arguments against config and model constraints.

    Raises:
        InvalidParamsError: anything out of range, before any computation.
    """
    settings = resolve_settings(
        cfg,
        max_exact_vertices=args.max_vertices,
        field_degree=getattr(args, "q", None),
        workers=getattr(args, "workers", None),
    )
    ok, err = validate_field_degree(settings.field_degree)
    if not ok:
        raise InvalidParamsError(err)
    if settings.max_exact_vertices < 1:
        raise InvalidParamsError("--max-vertices must be positive")

    params = None
    values: List[Fraction] = []
    if args.command != "solve-graph":
        try:
            M = parse_rational(args.M)
        except ValueError as e:
            raise InvalidParamsError(f"--M: {e}") from e
        L = args.L if args.L is not None else 1
        params = SystemParams(args.n, args.m, M, L)
        if args.command == "curve":
            values = _curve_values(args, params)
            for v in values:
                if args.vary == "L":
                    params.with_requests(int(v))
                else:
                    params.with_memory(v)

    return RunConfig(
        command=args.command,
        params=params,
        demand_source=getattr(args, "demands", WORST_CASE),
        seed=getattr(args, "seed", 0),
        exact=getattr(args, "exact", False),
        envelope=getattr(args, "envelope", False),
        output_format=args.format,
        out=args.out,
        settings=settings,
        workers=resolve_worker_count(settings.workers),
        vary=getattr(args, "vary", None),
        values=tuple(values),
        graph_path=getattr(args, "graph", None),
        ilp=getattr(args, "ilp", False),
    )


# ── Entry Point ──────────────────────────────────────────────

def main(argv=None) -> int:
    """CLI entry point; returns the process exit code."""
    args = _parse_args(argv)
    cfg = load_config(fallback={}, path=args.config)
    settings = resolve_settings(cfg)
    level = logging.DEBUG if args.debug else getattr(logging, settings.log_level, logging.INFO)
    setup_logging(level=level, log_file=args.log_file, structured=settings.structured_logging)

    try:
        config = build_run_config(args, cfg)
        return COMMANDS[config.command](config)
    except CodedCachingError as e:
        if args.debug:
            log.exception("%s failed", args.command)
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except Exception as e:
        log.exception("Unexpected failure in %s", args.command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
