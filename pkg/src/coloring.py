"""
Directed local chromatic number: exact search, 0/1 cover oracle, LP
relaxation, and greedy colorings.

chi_l(g) is the minimum, over proper colorings of the undirected closure,
of the largest number of distinct colors any vertex sees in its closed
out-neighborhood.  It is the number of coded transmissions the delivery
phase needs.

Three independent routes compute it:

* ``exact_local_chromatic`` -- branch-and-bound over colorings
  (optionally over packet classes, so every packet keeps one color);
* ``local_chromatic_ilp`` -- exhaustive search over partitions into
  independent sets (the 0/1 cover program);
* ``fractional_local_chromatic`` -- the LP relaxation of the cover
  program, solved exactly over the rationals.

Solvers are single-threaded and hold no shared state.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms.approximation import clique as approx_clique

from src.conflict_graph import ConflictGraph, closed_out_neighborhood, packet_classes
from src.utils.errors import InfeasibleProgramError, InstanceTooLargeError
from src.utils.exact_lp import minimize
from src.utils.limits import (
    MAX_EXACT_VERTICES,
    MAX_ILP_VERTICES,
    MAX_INDEPENDENT_SETS,
    MAX_LP_VERTICES,
)

log = logging.getLogger("coloring")


@dataclass(frozen=True)
class Coloring:
    """Per-vertex colors in 1..palette_size, every color used."""
    colors: Tuple[int, ...]

    @property
    def palette_size(self) -> int:
        return max(self.colors) if self.colors else 0


@dataclass(frozen=True)
class LocalColoringResult:
    coloring: Coloring
    chi_l: int
    optimal: bool = True
    packet_consistent: bool = True

    @property
    def palette_size(self) -> int:
        return self.coloring.palette_size


@dataclass(frozen=True)
class FractionalResult:
    """LP optimum and an optimal weighting of independent sets."""
    value: Fraction
    weights: Dict[FrozenSet[int], Fraction] = field(hash=False)


# ── Evaluation helpers ───────────────────────────────────────

def normalize_colors(colors: Sequence[int]) -> Tuple[int, ...]:
    """Relabel colors to 1..k in order of first appearance."""
    mapping: Dict[int, int] = {}
    out = []
    for c in colors:
        if c not in mapping:
            mapping[c] = len(mapping) + 1
        out.append(mapping[c])
    return tuple(out)


def is_proper(g: ConflictGraph, colors: Sequence[int]) -> bool:
    if len(colors) != len(g):
        return False
    return all(colors[v] != colors[w] for v in range(len(g)) for w in g.adjacency[v])


def is_packet_consistent(g: ConflictGraph, colors: Sequence[int]) -> bool:
    return all(len({colors[v] for v in cls}) == 1 for cls in packet_classes(g))


def local_chromatic_value(g: ConflictGraph, colors: Sequence[int]) -> int:
    """max over v of the number of distinct colors in N+(v); 0 for no vertices."""
    if len(colors) != len(g):
        raise ValueError(f"{len(colors)} colors for a {len(g)}-vertex graph")
    return max((len({colors[w] for w in closed_out_neighborhood(g, v)})
                for v in range(len(g))), default=0)


def clique_lower_bound(g: ConflictGraph) -> int:
    """Largest clique found inside any closed out-neighborhood.

    Every vertex of such a clique needs its own color, all visible from
    v, so the size bounds chi_l from below.  Cliques come from networkx's
    approximation, which always returns a genuine clique.
    """
    if len(g) == 0:
        return 0
    undirected = g.undirected()
    best = 1
    seen = set()
    for v in range(len(g)):
        hood = closed_out_neighborhood(g, v)
        if hood in seen or len(hood) <= best:
            continue
        seen.add(hood)
        clique = approx_clique.max_clique(undirected.subgraph(sorted(hood)))
        best = max(best, len(clique))
    return best


def _result(g, colors, optimal, packet_consistent) -> LocalColoringResult:
    colors = normalize_colors(colors)
    return LocalColoringResult(
        coloring=Coloring(colors),
        chi_l=local_chromatic_value(g, colors),
        optimal=optimal,
        packet_consistent=packet_consistent,
    )


# ── Greedy ───────────────────────────────────────────────────

def greedy_local_coloring(g: ConflictGraph, packet_consistent: bool = True) -> LocalColoringResult:
    """Proper coloring by a greedy order; chi_l evaluated exactly.

    Packet-consistent mode colors whole packet classes, largest closed
    out-neighborhood first.  Vertex mode uses networkx's DSATUR greedy.
    """
    if len(g) == 0:
        return LocalColoringResult(Coloring(()), 0, optimal=True,
                                   packet_consistent=packet_consistent)
    if not packet_consistent:
        assignment = nx.greedy_color(g.undirected(), strategy="saturation_largest_first")
        return _result(g, [assignment[v] for v in range(len(g))], False, False)

    classes = packet_classes(g)
    hood_size = [len(closed_out_neighborhood(g, v)) for v in range(len(g))]
    order = sorted(range(len(classes)),
                   key=lambda i: (-max(hood_size[v] for v in classes[i]), classes[i][0]))
    colors = [0] * len(g)
    for i in order:
        members = classes[i]
        taken = {colors[w] for v in members for w in g.adjacency[v] if colors[w]}
        c = 1
        while c in taken:
            c += 1
        for v in members:
            colors[v] = c
    return _result(g, colors, False, True)


def _distinct_class_coloring(g: ConflictGraph) -> LocalColoringResult:
    """One color per packet class (every requested packet sent alone)."""
    colors = [0] * len(g)
    for i, members in enumerate(packet_classes(g), start=1):
        for v in members:
            colors[v] = i
    return _result(g, colors, False, True)


# ── Exact branch-and-bound ───────────────────────────────────

class _LocalColoringSearch:
    """Branch-and-bound over unit colorings minimizing the visible-color peak.

    A unit is a set of vertices forced to share a color (a packet class
    in packet-consistent mode, a single vertex otherwise).  Colors are
    tried in ascending order with at most one fresh color per branch, and
    a branch is cut as soon as some vertex sees as many colors as the
    best complete coloring found so far.
    """

    def __init__(self, g: ConflictGraph, units: Sequence[Tuple[int, ...]]):
        self.g = g
        self.units = list(units)
        self.unit_of = [0] * len(g)
        for i, members in enumerate(self.units):
            for v in members:
                self.unit_of[v] = i
        self.unit_adj = [
            sorted({self.unit_of[w] for v in members for w in g.adjacency[v]})
            for members in self.units
        ]
        # Vertices whose closed out-neighborhood meets the unit, with multiplicity
        self.observers = [
            [x for v in members for x in (v,) + g.in_edges[v]]
            for members in self.units
        ]
        self.color = [-1] * len(self.units)
        self.seen: List[Dict[int, int]] = [dict() for _ in range(len(g))]
        self.visible = [0] * len(g)
        self.nbr_colors: List[Dict[int, int]] = [dict() for _ in self.units]
        self.nodes = 0
        self.best_value = 0
        self.best_colors: List[int] = []
        self.lower_bound = 0

    def _assign(self, u: int, c: int) -> int:
        peak = 0
        for x in self.observers[u]:
            counts = self.seen[x]
            k = counts.get(c, 0)
            if k == 0:
                self.visible[x] += 1
            counts[c] = k + 1
            if self.visible[x] > peak:
                peak = self.visible[x]
        for w in self.unit_adj[u]:
            d = self.nbr_colors[w]
            d[c] = d.get(c, 0) + 1
        self.color[u] = c
        return peak

    def _unassign(self, u: int, c: int) -> None:
        for x in self.observers[u]:
            counts = self.seen[x]
            k = counts[c] - 1
            if k == 0:
                del counts[c]
                self.visible[x] -= 1
            else:
                counts[c] = k
        for w in self.unit_adj[u]:
            d = self.nbr_colors[w]
            k = d[c] - 1
            if k == 0:
                del d[c]
            else:
                d[c] = k
        self.color[u] = -1

    def _select(self) -> int:
        # DSATUR: most distinct neighbor colors, then most neighbors, then lowest index
        best, key = -1, None
        for u in range(len(self.units)):
            if self.color[u] >= 0:
                continue
            k = (len(self.nbr_colors[u]), len(self.unit_adj[u]), -u)
            if key is None or k > key:
                best, key = u, k
        return best

    def _recurse(self, depth: int, palette: int) -> bool:
        self.nodes += 1
        if depth == len(self.units):
            value = max(self.visible) if self.visible else 0
            if value < self.best_value:
                self.best_value = value
                self.best_colors = list(self.color)
            return self.best_value <= self.lower_bound
        u = self._select()
        forbidden = self.nbr_colors[u]
        for c in range(palette + 1):
            if c in forbidden:
                continue
            peak = self._assign(u, c)
            stop = False
            if peak < self.best_value:
                stop = self._recurse(depth + 1, max(palette, c + 1))
            self._unassign(u, c)
            if stop:
                return True
        return False

    def solve(self, initial_unit_colors: List[int], initial_value: int,
              lower_bound: int) -> Tuple[List[int], int]:
        self.best_colors = list(initial_unit_colors)
        self.best_value = initial_value
        self.lower_bound = lower_bound
        if initial_value > lower_bound:
            self._recurse(0, 0)
        return self.best_colors, self.best_value


def exact_local_chromatic(g: ConflictGraph, packet_consistent: bool = True,
                          max_vertices: int = MAX_EXACT_VERTICES) -> LocalColoringResult:
    """Optimal local coloring of *g*.

    With *packet_consistent*, all vertices of one packet share a color and
    the search runs over packet classes; chi_l is still evaluated on the
    directed vertex graph.  The search is skipped when the clique lower
    bound already meets the best starting coloring.

    Raises:
        InstanceTooLargeError: a search is needed and the graph has more
            than *max_vertices* units.
    """
    if len(g) == 0:
        return LocalColoringResult(Coloring(()), 0, optimal=True,
                                   packet_consistent=packet_consistent)

    units = packet_classes(g) if packet_consistent else [(v,) for v in range(len(g))]
    candidates = [greedy_local_coloring(g, True), _distinct_class_coloring(g)]
    if not packet_consistent:
        candidates.append(greedy_local_coloring(g, False))
    start = min(candidates, key=lambda r: r.chi_l)
    lower = clique_lower_bound(g)
    log.debug("Local coloring bounds: lower %d, upper %d, %d units",
              lower, start.chi_l, len(units),
              extra={"vertices": len(g), "chi_l": start.chi_l})

    if start.chi_l <= lower:
        return LocalColoringResult(start.coloring, start.chi_l, optimal=True,
                                   packet_consistent=packet_consistent)
    if len(units) > max_vertices:
        raise InstanceTooLargeError(
            f"instance too large for exact solver: {len(units)} "
            f"{'packet classes' if packet_consistent else 'vertices'} exceed the guard of "
            f"{max_vertices} (bounds {lower}..{start.chi_l})"
        )

    search = _LocalColoringSearch(g, units)
    unit_colors = [start.coloring.colors[members[0]] - 1 for members in units]
    best_units, value = search.solve(unit_colors, start.chi_l, lower)
    colors = [0] * len(g)
    for i, members in enumerate(units):
        for v in members:
            colors[v] = best_units[i]
    result = _result(g, colors, True, packet_consistent)
    log.debug("Exact local coloring: chi_l=%d after %d nodes", value, search.nodes,
              extra={"vertices": len(g), "chi_l": value})
    return result


def best_available_coloring(g: ConflictGraph, packet_consistent: bool = True,
                            max_vertices: int = MAX_EXACT_VERTICES) -> LocalColoringResult:
    """Exact result within the guard, greedy (with a warning) beyond it."""
    try:
        return exact_local_chromatic(g, packet_consistent, max_vertices)
    except InstanceTooLargeError as e:
        log.warning("Falling back to greedy coloring: %s", e)
        return greedy_local_coloring(g, packet_consistent)


# ── Independent sets ─────────────────────────────────────────

def independent_sets(g: ConflictGraph,
                     max_sets: int = MAX_INDEPENDENT_SETS) -> List[FrozenSet[int]]:
    """Every nonempty independent set of the undirected closure.

    Sorted by (size, members).  Enumerated as the cliques of the
    complement graph.

    Raises:
        InstanceTooLargeError: more than *max_sets* sets exist.
    """
    complement = nx.complement(g.undirected())
    found = []
    for clique in nx.enumerate_all_cliques(complement):
        found.append(frozenset(clique))
        if len(found) > max_sets:
            raise InstanceTooLargeError(
                f"instance too large: more than {max_sets} independent sets"
            )
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def _guard(g: ConflictGraph, max_vertices: int, what: str) -> None:
    if len(g) > max_vertices:
        raise InstanceTooLargeError(
            f"instance too large for {what}: {len(g)} vertices exceed the guard of {max_vertices}"
        )


# ── 0/1 cover program ────────────────────────────────────────

def local_chromatic_ilp(g: ConflictGraph, max_vertices: int = MAX_ILP_VERTICES,
                        max_sets: int = MAX_INDEPENDENT_SETS) -> int:
    """Optimal k of: min k, sum_{I meets N+(v)} x_I <= k, sum_{I contains v} x_I >= 1.

    Solved by exhaustive search over partitions of the vertices into
    independent sets (any optimal cover shrinks to a partition).
    """
    if len(g) == 0:
        return 0
    _guard(g, max_vertices, "the cover program")
    n = len(g)
    sets = [sum(1 << v for v in s) for s in independent_sets(g, max_sets)]
    hood = [sum(1 << w for w in closed_out_neighborhood(g, v)) for v in range(n)]
    hits = {s: [x for x in range(n) if s & hood[x]] for s in sets}
    containing = [[s for s in sets if s >> v & 1] for v in range(n)]

    greedy = greedy_local_coloring(g, packet_consistent=False)
    best = [greedy.chi_l]

    def recurse(uncovered: int, counts: List[int]) -> None:
        if not uncovered:
            best[0] = min(best[0], max(counts))
            return
        v = (uncovered & -uncovered).bit_length() - 1
        for s in containing[v]:
            if s & ~uncovered:
                continue
            new_counts = list(counts)
            peak = 0
            for x in hits[s]:
                new_counts[x] += 1
                if new_counts[x] > peak:
                    peak = new_counts[x]
            if max(peak, max(counts)) < best[0]:
                recurse(uncovered & ~s, new_counts)

    recurse((1 << n) - 1, [0] * n)
    return best[0]


# ── LP relaxation ────────────────────────────────────────────

def fractional_local_chromatic(g: ConflictGraph, max_vertices: int = MAX_LP_VERTICES,
                               max_sets: int = MAX_INDEPENDENT_SETS) -> FractionalResult:
    """Exact optimum of the cover program with x_I relaxed to [0, 1]."""
    if len(g) == 0:
        return FractionalResult(Fraction(0), {})
    _guard(g, max_vertices, "the LP relaxation")
    n = len(g)
    sets = independent_sets(g, max_sets)
    hoods = [closed_out_neighborhood(g, v) for v in range(n)]

    # Variables: one weight per set, then k
    nvars = len(sets) + 1
    rows, senses, rhs = [], [], []
    for v in range(n):
        row = [1 if s & hoods[v] else 0 for s in sets] + [-1]
        rows.append(row)
        senses.append("<=")
        rhs.append(0)
    for v in range(n):
        rows.append([1 if v in s else 0 for s in sets] + [0])
        senses.append(">=")
        rhs.append(1)
    for i in range(len(sets)):
        rows.append([1 if j == i else 0 for j in range(len(sets))] + [0])
        senses.append("<=")
        rhs.append(1)
    cost = [0] * (nvars - 1) + [1]

    lp = minimize(cost, rows, senses, rhs)
    weights = {s: x for s, x in zip(sets, lp.solution[:-1]) if x > 0}
    peak = max(sum(w for s, w in weights.items() if s & hoods[v]) for v in range(n))
    if peak != lp.value:
        raise InfeasibleProgramError(
            f"LP weights give a neighborhood load of {peak}, optimum is {lp.value}"
        )
    log.debug("Fractional local chromatic %s over %d independent sets", lp.value, len(sets),
              extra={"vertices": n})
    return FractionalResult(value=lp.value, weights=weights)
