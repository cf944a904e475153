"""
Directed conflict graph on (packet, requester) vertices.

Every packet a user requests but does not cache becomes its own vertex,
even when several users want the same packet.  A directed edge v2 -> v1
means v1's packet is unknown to v2's requester (not cached there and not
the packet v2 itself wants), so v1 interferes with v2.

The graph keeps both views: sorted successor lists for the closed
out-neighborhoods, and the symmetric closure for proper coloring.
Arbitrary digraphs (no packet identities) load through the edge-list
format, which makes the coloring module usable as a plain index-coding
solver.
"""
import io
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import networkx as nx

from src.caching import CachePlacement, PacketLabel, RequestMatrix, SystemParams, requested_vertices
from src.utils.errors import GraphFormatError

log = logging.getLogger("conflict_graph")

EDGE_LIST_HEADER = "# coded-groupcast conflict graph"


@dataclass(frozen=True, order=True)
class Vertex:
    """A requested packet *rho* at requester *mu*."""
    rho: PacketLabel
    mu: int

    def __str__(self):
        return f"{self.rho}@{self.mu}"


@dataclass(frozen=True)
class ConflictGraph:
    """Immutable digraph; ``out_edges[v]`` lists the successors of v."""
    out_edges: Tuple[Tuple[int, ...], ...]
    vertices: Tuple[Vertex, ...] = ()
    params: Optional[SystemParams] = None
    names: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        size = len(self.out_edges)
        normalized = []
        for v, succ in enumerate(self.out_edges):
            succ = tuple(sorted(set(int(w) for w in succ)))
            for w in succ:
                if w == v:
                    raise GraphFormatError(f"self-loop at vertex {v}")
                if w < 0 or w >= size:
                    raise GraphFormatError(f"edge {v}->{w} leaves the {size}-vertex range")
            normalized.append(succ)
        object.__setattr__(self, "out_edges", tuple(normalized))
        if self.vertices and len(self.vertices) != size:
            raise GraphFormatError(
                f"{len(self.vertices)} vertex identities for {size} vertices"
            )

    @classmethod
    def from_edges(cls, count: int, edges: Iterable[Tuple[int, int]],
                   names: Sequence[str] = ()) -> "ConflictGraph":
        """Build an arbitrary digraph on vertices 0..count-1."""
        succ: List[List[int]] = [[] for _ in range(count)]
        for u, v in edges:
            if not (0 <= u < count and 0 <= v < count):
                raise GraphFormatError(f"edge {u}->{v} leaves the {count}-vertex range")
            succ[u].append(v)
        return cls(out_edges=tuple(tuple(s) for s in succ), names=tuple(names))

    def __len__(self):
        return len(self.out_edges)

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.out_edges)

    @cached_property
    def in_edges(self) -> Tuple[Tuple[int, ...], ...]:
        """Predecessor lists: ``in_edges[w]`` holds every v with v -> w."""
        preds: List[List[int]] = [[] for _ in range(len(self))]
        for v, succ in enumerate(self.out_edges):
            for w in succ:
                preds[w].append(v)
        return tuple(tuple(p) for p in preds)

    @cached_property
    def adjacency(self) -> Tuple[FrozenSet[int], ...]:
        """Undirected neighbor sets (edge directions ignored)."""
        nbrs = [set(s) for s in self.out_edges]
        for v, succ in enumerate(self.out_edges):
            for w in succ:
                nbrs[w].add(v)
        return tuple(frozenset(s) for s in nbrs)

    def packet_of(self, v: int) -> Optional[PacketLabel]:
        return self.vertices[v].rho if self.vertices else None

    def label(self, v: int) -> str:
        if self.names:
            return self.names[v]
        if self.vertices:
            return str(self.vertices[v])
        return str(v)

    def undirected(self) -> nx.Graph:
        """networkx view of the symmetric closure, nodes 0..len-1."""
        g = nx.Graph()
        g.add_nodes_from(range(len(self)))
        for v, succ in enumerate(self.out_edges):
            g.add_edges_from((v, w) for w in succ)
        return g


# ── Operations ───────────────────────────────────────────────

def build_conflict_graph(placement: CachePlacement, F: RequestMatrix) -> ConflictGraph:
    """Conflict graph of demand *F* under *placement*.

    Vertices are sorted by (requester, file, subset).
    """
    pairs = requested_vertices(placement, F)
    vertices = tuple(Vertex(rho=label, mu=u) for u, label in pairs)
    out_edges = []
    for v2 in vertices:
        out_edges.append(tuple(
            i for i, v1 in enumerate(vertices)
            if v1.rho != v2.rho and not v1.rho.cached_by(v2.mu)
        ))
    g = ConflictGraph(out_edges=tuple(out_edges), vertices=vertices, params=placement.params)
    log.debug("Conflict graph: %d vertices, %d directed edges", len(g), g.edge_count,
              extra={"vertices": len(g), "demand": F.requests})
    return g


def closed_out_neighborhood(g: ConflictGraph, v: int) -> FrozenSet[int]:
    """{v} together with every successor of v."""
    if v < 0 or v >= len(g):
        raise IndexError(f"vertex {v} out of range for {len(g)}-vertex graph")
    return frozenset((v,) + g.out_edges[v])


def packet_classes(g: ConflictGraph) -> List[Tuple[int, ...]]:
    """Partition of the vertices by packet, ordered by smallest member.

    Graphs without packet identities give singleton classes.
    """
    if not g.vertices:
        return [(v,) for v in range(len(g))]
    by_packet: Dict[PacketLabel, List[int]] = {}
    for i, vertex in enumerate(g.vertices):
        by_packet.setdefault(vertex.rho, []).append(i)
    return sorted((tuple(members) for members in by_packet.values()), key=lambda c: c[0])


def requested_packets(g: ConflictGraph) -> List[PacketLabel]:
    """Distinct packets of the graph (the requested set S), sorted."""
    return sorted({v.rho for v in g.vertices})


# ── Edge-list I/O ────────────────────────────────────────────

def write_edge_list(g: ConflictGraph, stream: TextIO) -> None:
    """Write *g* as ``# vertices N`` / ``# v i label`` headers plus ``u v`` lines."""
    stream.write(EDGE_LIST_HEADER + "\n")
    stream.write(f"# vertices {len(g)}\n")
    for v in range(len(g)):
        stream.write(f"# v {v} {g.label(v)}\n")
    for v, succ in enumerate(g.out_edges):
        for w in succ:
            stream.write(f"{v} {w}\n")


def edge_list_text(g: ConflictGraph) -> str:
    buf = io.StringIO()
    write_edge_list(g, buf)
    return buf.getvalue()


def read_edge_list(source: Union[TextIO, str]) -> ConflictGraph:
    """Parse the edge-list format into a digraph without packet identities.

    Without a ``# vertices`` header the count is one more than the
    largest index seen.

    Raises:
        GraphFormatError: malformed lines, bad indices or self-loops.
    """
    text = source if isinstance(source, str) else source.read()
    count = None
    names: Dict[int, str] = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            tokens = line[1:].split(None, 2)
            try:
                if tokens and tokens[0] == "vertices":
                    count = int(tokens[1])
                elif tokens and tokens[0] == "v":
                    names[int(tokens[1])] = tokens[2] if len(tokens) > 2 else tokens[1]
            except (IndexError, ValueError) as e:
                raise GraphFormatError(f"line {lineno}: bad header {raw!r}") from e
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as e:
            raise GraphFormatError(f"line {lineno}: non-integer vertex in {raw!r}") from e
        if u < 0 or v < 0:
            raise GraphFormatError(f"line {lineno}: negative vertex index")
        edges.append((u, v))

    if count is None:
        indices = [i for e in edges for i in e] + list(names)
        count = max(indices) + 1 if indices else 0
    if count < 0:
        raise GraphFormatError("vertex count must be non-negative")
    label_list = tuple(names.get(i, str(i)) for i in range(count)) if names else ()
    return ConflictGraph.from_edges(count, edges, names=label_list)
