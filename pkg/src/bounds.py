"""
Rate bounds for the multiple-groupcast caching scheme.

Achievable rates (file units on the shared link):

    r_mn          single-request envelope of min((n-t)/(t+1), m - M)
    r_direct      L * r_mn, serving the L requests one after another
    r_lc_ub       envelope of min(L(n-t)/(t+1), m - M)
    r_exact       worst-case chi_l / C(n, t) at integer t, shared between
                  the two adjacent integer-t points otherwise
    r_exact_env   lower convex hull of the r_exact points, evaluated at M
    r_rand        worst-case random linear coding length / C(n, t)

and the cut-set converse r_lb.  The envelopes are lower convex hulls
over the integer-t memory points M_t = t m / n.

``gap_report`` collects everything into a ``RateReport`` and checks

    r_lb <= r_exact <= r_lc_point,   r_lb <= r_exact_env <= r_lc_ub <= r_direct,
    r_achievable / r_lb <= 18

before returning it, where r_lc_point is min(L(n-t)/(t+1), m - M_t)
shared over the same adjacent points as r_exact.
"""
import csv
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

from src.caching import RequestMatrix, SystemParams, memory_share_points, place_caches
from src.codec import random_linear_rate
from src.coloring import exact_local_chromatic
from src.conflict_graph import build_conflict_graph
from src.demands import canonical_request_matrices
from src.utils.errors import BoundViolationError, InvalidParamsError
from src.utils.limits import (
    CSV_DECIMALS,
    GAP_CEILING,
    MAX_EXACT_VERTICES,
    RANDOM_FIELD_DEGREE,
    RANDOM_TRIALS,
)
from src.utils.workers import parallel_map

log = logging.getLogger("bounds")

Point = Tuple[Fraction, Fraction]

RATE_COLUMNS = ("r_exact", "r_mn", "r_direct", "r_lc_ub", "r_rand", "r_lb", "gap", "r_exact_env")
CSV_COLUMNS = ("n", "m", "M", "L") + RATE_COLUMNS


# ── Rational hulls ───────────────────────────────────────────

def _cross(o: Point, a: Point, b: Point) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_convex_hull(points: Iterable[Point]) -> List[Point]:
    """Lower hull of *points*, sorted by x (monotone chain, exact)."""
    best: Dict[Fraction, Fraction] = {}
    for x, y in points:
        x, y = Fraction(x), Fraction(y)
        if x not in best or y < best[x]:
            best[x] = y
    hull: List[Point] = []
    for p in sorted(best.items()):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def interpolate(hull: Sequence[Point], x) -> Fraction:
    """Piecewise-linear value of *hull* at *x*.

    Raises:
        ValueError: *x* outside the hull's x range, or empty hull.
    """
    x = Fraction(x)
    if not hull:
        raise ValueError("cannot interpolate an empty hull")
    if x < hull[0][0] or x > hull[-1][0]:
        raise ValueError(f"x={x} outside [{hull[0][0]}, {hull[-1][0]}]")
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    return hull[0][1]


def _formula_points(params: SystemParams, L: int) -> List[Point]:
    n, m = params.n, params.m
    points = []
    for t in range(n + 1):
        M_t = params.memory_at(t)
        points.append((M_t, min(Fraction(L * (n - t), t + 1), m - M_t)))
    return points


# ── Formula bounds ───────────────────────────────────────────

def rate_mn(params: SystemParams) -> Fraction:
    """Single-request rate envelope at ``params.M``."""
    return interpolate(lower_convex_hull(_formula_points(params, 1)), params.M)


def rate_direct(params: SystemParams) -> Fraction:
    return params.L * rate_mn(params)


def rate_lc_ub(params: SystemParams) -> Fraction:
    """Envelope of min(L(n-t)/(t+1), m - M) at ``params.M``."""
    return interpolate(lower_convex_hull(_formula_points(params, params.L)), params.M)


def rate_lc_point(params: SystemParams) -> Fraction:
    """min(L(n-t)/(t+1), m - M_t) at integer t, adjacent memory sharing otherwise.

    Upper bound on ``achievable_rate_exact`` for the worst case, which
    shares memory the same way.
    """
    total = Fraction(0)
    for M_i, weight in memory_share_points(params):
        t = params.with_memory(M_i).t_int
        total += weight * min(Fraction(params.L * (params.n - t), t + 1), params.m - M_i)
    return total


def rate_lower_bound(params: SystemParams) -> Fraction:
    """Cut-set lower bound.

    max over s = 1..min(floor(m/L), n) of  L s - s M / floor(floor(m/L) / s),
    clamped at 0, against (m - M) / ceil(m / L).
    """
    n, m, M, L = params.n, params.m, params.M, params.L
    groups = m // L
    cut = Fraction(0)
    for s in range(1, min(groups, n) + 1):
        cut = max(cut, L * s - s * M / (groups // s))
    return max(cut, (m - M) / ceil(Fraction(m, L)))


# ── Exact rates ──────────────────────────────────────────────

def _demand_chi_l(job: Tuple[SystemParams, Tuple[Tuple[int, ...], ...], int]) -> int:
    params, requests, max_vertices = job
    F = RequestMatrix(m=params.m, requests=requests)
    g = build_conflict_graph(place_caches(params), F)
    return exact_local_chromatic(g, packet_consistent=False, max_vertices=max_vertices).chi_l


def _demand_random_nu(job: Tuple[SystemParams, Tuple[Tuple[int, ...], ...], int, int, int]) -> Fraction:
    params, requests, trials, q, seed = job
    F = RequestMatrix(m=params.m, requests=requests)
    g = build_conflict_graph(place_caches(params), F)
    return random_linear_rate(g, trials=trials, q=q, seed=seed)


def demand_rate(params: SystemParams, F: RequestMatrix,
                max_vertices: int = MAX_EXACT_VERTICES) -> Fraction:
    """chi_l(F) / C(n, t) at an integer-t point (vertex-level coloring)."""
    F.check_params(params)
    if params.t_int == params.n:
        return Fraction(0)
    chi_l = _demand_chi_l((params, F.requests, max_vertices))
    return Fraction(chi_l, params.packets_per_file)


@lru_cache(maxsize=512)
def _worst_case_chi_l(params: SystemParams, max_vertices: int, workers: int) -> int:
    demands = canonical_request_matrices(params.n, params.m, params.L)
    log.info("Worst-case sweep over %d canonical demands (t=%d)", len(demands), params.t_int,
             extra={**params.as_dict(), "t": params.t_int, "workers": workers})
    jobs = [(params, F.requests, max_vertices) for F in demands]
    return max(parallel_map(_demand_chi_l, jobs, workers))


def worst_case_point_rate(params: SystemParams, max_vertices: int = MAX_EXACT_VERTICES,
                          workers: int = 1) -> Fraction:
    """max over demands of chi_l / C(n, t), at integer t.

    Raises:
        InvalidParamsError: t is not an integer.
        InstanceTooLargeError: some demand needs a search beyond the guard.
    """
    t = params.t_int
    if t == params.n:
        return Fraction(0)
    return Fraction(_worst_case_chi_l(params, max_vertices, workers), params.packets_per_file)


def worst_case_random_rate(params: SystemParams, trials: int = RANDOM_TRIALS,
                           q: int = RANDOM_FIELD_DEGREE, seed: int = 0,
                           workers: int = 1) -> Fraction:
    """Worst-case random linear coding rate; adjacent memory sharing at fractional t."""
    total = Fraction(0)
    for M_i, weight in memory_share_points(params):
        point = params.with_memory(M_i)
        if point.t_int == point.n or weight == 0:
            continue
        demands = canonical_request_matrices(point.n, point.m, point.L)
        jobs = [(point, F.requests, trials, q, seed) for F in demands]
        total += weight * max(parallel_map(_demand_random_nu, jobs, workers))
    return total


def exact_rate_curve(params: SystemParams, max_vertices: int = MAX_EXACT_VERTICES,
                     workers: int = 1) -> List[Point]:
    """Worst-case point values at every integer-t memory point."""
    return [
        (params.memory_at(t),
         worst_case_point_rate(params.with_memory(params.memory_at(t)), max_vertices, workers))
        for t in range(params.n + 1)
    ]


def achievable_rate_exact(params: SystemParams, demands: Optional[RequestMatrix] = None,
                          max_vertices: int = MAX_EXACT_VERTICES, workers: int = 1) -> Fraction:
    """Rate of the local-coloring scheme.

    At integer t this is ``worst_case_point_rate`` (or ``demand_rate``
    for the single request matrix *demands*).  At fractional t the two
    adjacent integer-t points of ``memory_share_points`` are combined;
    no other memory point is solved.
    """
    if demands is not None:
        demands.check_params(params)
    total = Fraction(0)
    for M_i, weight in memory_share_points(params):
        if not weight:
            continue
        point = params.with_memory(M_i)
        if demands is None:
            total += weight * worst_case_point_rate(point, max_vertices, workers)
        else:
            total += weight * demand_rate(point, demands, max_vertices)
    return total


def worst_case_rate_envelope(params: SystemParams, max_vertices: int = MAX_EXACT_VERTICES,
                             workers: int = 1) -> Fraction:
    """Lower convex hull of ``exact_rate_curve`` at M.

    Solves the worst case at every integer t, so the size guard applies
    to all of them.
    """
    return interpolate(lower_convex_hull(exact_rate_curve(params, max_vertices, workers)), params.M)


def direct_gain(params: SystemParams, max_vertices: int = MAX_EXACT_VERTICES,
                workers: int = 1) -> Fraction:
    """r_direct / r_exact for the worst case; 1 when both vanish."""
    exact = achievable_rate_exact(params, None, max_vertices, workers)
    direct = rate_direct(params)
    if exact == 0:
        if direct == 0:
            return Fraction(1)
        raise InvalidParamsError("exact rate is 0 but the direct scheme is not")
    return direct / exact


# ── Reports ──────────────────────────────────────────────────

@dataclass(frozen=True)
class RateReport:
    params: SystemParams
    r_mn: Fraction
    r_direct: Fraction
    r_lc_ub: Fraction
    r_lb: Fraction
    gap: Fraction
    r_exact: Optional[Fraction] = None
    r_rand: Optional[Fraction] = None
    worst_case: bool = True
    r_exact_env: Optional[Fraction] = None

    def rates(self) -> Dict[str, Optional[Fraction]]:
        return {name: getattr(self, name) for name in RATE_COLUMNS}

    def to_dict(self) -> Dict[str, object]:
        """JSON-ready dict; rationals become ``"p/q"`` strings."""
        data: Dict[str, object] = {
            "n": self.params.n, "m": self.params.m,
            "M": str(self.params.M), "L": self.params.L,
        }
        for name, value in self.rates().items():
            data[name] = None if value is None else str(value)
        data["worst_case"] = self.worst_case
        return data

    def csv_row(self) -> List[str]:
        row = [str(self.params.n), str(self.params.m), str(self.params.M), str(self.params.L)]
        for value in self.rates().values():
            if value is None:
                row += ["", ""]
            else:
                row += [str(value), f"{float(value):.{CSV_DECIMALS}f}"]
        return row


def check_report(report: RateReport) -> None:
    """Raise BoundViolationError unless the rate ordering and the gap hold."""
    problems = []
    if report.r_lc_ub > report.r_direct:
        problems.append(f"r_lc_ub {report.r_lc_ub} > r_direct {report.r_direct}")
    if report.r_exact is not None and report.worst_case:
        lc_point = rate_lc_point(report.params)
        if not report.r_lb <= report.r_exact <= lc_point:
            problems.append(
                f"r_lb {report.r_lb} <= r_exact {report.r_exact} <= r_lc_point {lc_point} fails"
            )
    if report.r_exact_env is not None:
        if not report.r_lb <= report.r_exact_env <= report.r_lc_ub:
            problems.append(
                f"r_lb {report.r_lb} <= r_exact_env {report.r_exact_env} "
                f"<= r_lc_ub {report.r_lc_ub} fails"
            )
        if report.r_exact is not None and report.r_exact_env > report.r_exact:
            problems.append(f"r_exact_env {report.r_exact_env} > r_exact {report.r_exact}")
    if report.worst_case and report.gap > GAP_CEILING:
        problems.append(f"gap {report.gap} exceeds {GAP_CEILING}")
    if problems:
        raise BoundViolationError(
            f"bounds violated at n={report.params.n}, m={report.params.m}, "
            f"M={report.params.M}, L={report.params.L}: " + "; ".join(problems)
        )


def gap_report(params: SystemParams, use_exact: bool, demands: Optional[RequestMatrix] = None,
               with_random: Optional[bool] = None, max_vertices: int = MAX_EXACT_VERTICES,
               workers: int = 1, random_trials: int = RANDOM_TRIALS,
               random_field_degree: int = RANDOM_FIELD_DEGREE, seed: int = 0,
               with_envelope: bool = False) -> RateReport:
    """All computable rates at *params* and the certified gap.

    The gap is r_exact / r_lb when r_exact is computed, else
    r_lc_ub / r_lb, and 1 when both sides are 0.  The ordering checks of
    ``check_report`` run on worst-case reports; a single demand matrix
    (*demands*) only gets the r_lc_ub <= r_direct check.  r_exact_env
    is computed only on request (*with_envelope*, worst case), since it
    solves every integer-t point.
    """
    with_random = use_exact if with_random is None else with_random
    r_exact = achievable_rate_exact(params, demands, max_vertices, workers) if use_exact else None
    r_exact_env = None
    if use_exact and with_envelope and demands is None:
        r_exact_env = worst_case_rate_envelope(params, max_vertices, workers)
    r_rand = None
    if with_random:
        r_rand = worst_case_random_rate(params, random_trials, random_field_degree, seed, workers)
    r_lc = rate_lc_ub(params)
    r_lb = rate_lower_bound(params)
    achieved = r_exact if r_exact is not None else r_lc
    if r_lb == 0:
        if achieved != 0:
            raise BoundViolationError(f"lower bound is 0 but the achievable rate is {achieved}")
        gap = Fraction(1)
    else:
        gap = achieved / r_lb
    report = RateReport(
        params=params, r_mn=rate_mn(params), r_direct=rate_direct(params), r_lc_ub=r_lc,
        r_lb=r_lb, gap=gap, r_exact=r_exact, r_rand=r_rand, worst_case=demands is None,
        r_exact_env=r_exact_env,
    )
    check_report(report)
    log.debug("Rate report %s", report.to_dict(), extra=params.as_dict())
    return report


# ── Writers ──────────────────────────────────────────────────

def write_reports_json(reports: Sequence[RateReport], stream: TextIO, seed: Optional[int] = None) -> None:
    payload: Dict[str, object] = {"reports": [r.to_dict() for r in reports]}
    if seed is not None:
        payload["seed"] = seed
    json.dump(payload, stream, indent=2, sort_keys=True)
    stream.write("\n")


def write_reports_csv(reports: Sequence[RateReport], stream: TextIO, seed: Optional[int] = None,
                      comment: str = "coded-groupcast rates") -> None:
    """Header comment with the seed, then one row per report.

    Each rate column is followed by a ``<name>_decimal`` column.
    """
    stream.write(f"# {comment} seed={'' if seed is None else seed}\n")
    header = list(CSV_COLUMNS[:4])
    for name in RATE_COLUMNS:
        header += [name, f"{name}_decimal"]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for report in reports:
        writer.writerow(report.csv_row())

