"""
Finite-field MDS encoding and per-user decoding of the coded multicast.

Packets carry rows of GF(2^q) symbols (``width`` symbols each, so one
run checks ``width`` independent scalar assignments).  The transmitter
gives each color a column of a Vandermonde generator and sends

    X = sum over requested packets s of  v_{color(s)} * w_s

which has one row per generator row, nu = chi_l.  A user cancels what it
caches and solves the remaining system by Gaussian elimination; every
requested packet must come out uniquely determined.

Fields use the lexicographically smallest irreducible polynomial of
degree q, so symbols are reproducible across implementations.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence

import galois
import numpy as np

from src.caching import CachePlacement, PacketLabel, RequestMatrix, SystemParams, requested_vertices
from src.coloring import LocalColoringResult, best_available_coloring, is_packet_consistent
from src.conflict_graph import (
    ConflictGraph,
    build_conflict_graph,
    packet_classes,
    requested_packets,
)
from src.utils.common import validate_field_degree
from src.utils.errors import (
    FieldTooSmallError,
    InvalidParamsError,
    MissingSymbolError,
    UndecodableError,
)
from src.utils.limits import (
    DEFAULT_FIELD_DEGREE,
    MAX_EXACT_VERTICES,
    MAX_FIELD_DEGREE,
    RANDOM_EXTRA_ROWS,
    RANDOM_FIELD_DEGREE,
    RANDOM_TRIALS,
    VERIFY_WIDTH,
)

log = logging.getLogger("codec")


@lru_cache(maxsize=None)
def field_for(q: int):
    """GF(2^q) class built on the lexicographically smallest irreducible polynomial."""
    ok, err = validate_field_degree(q)
    if not ok:
        raise InvalidParamsError(err)
    poly = galois.irreducible_poly(2, q, method="min")
    return galois.GF(2 ** q, irreducible_poly=poly)


def field_degree_for(ncols: int, q: int = DEFAULT_FIELD_DEGREE) -> int:
    """Smallest degree >= q whose field has more than *ncols* elements."""
    while 2 ** q <= ncols:
        q += 1
    if q > MAX_FIELD_DEGREE:
        raise FieldTooSmallError(
            f"{ncols} generator columns need more than GF(2^{MAX_FIELD_DEGREE})"
        )
    return q


def _plain(array) -> np.ndarray:
    """Integer ndarray view of a field array."""
    return np.asarray(array.view(np.ndarray), dtype=np.int64)


def _determined_columns(rref, ncoeff: int) -> Dict[int, int]:
    """Map column j -> row i whose coefficient part is exactly e_j."""
    coeff = _plain(rref[:, :ncoeff])
    found = {}
    for i, row in enumerate(coeff):
        nz = np.flatnonzero(row)
        if len(nz) == 1:
            found.setdefault(int(nz[0]), i)
    return found


# ── Types ────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """nu x |c| Vandermonde matrix; column c-1 is the coding vector of color c."""
    matrix: galois.FieldArray
    q: int

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def column(self, color: int) -> galois.FieldArray:
        return self.matrix[:, color - 1]


@dataclass(frozen=True, eq=False)
class Codeword:
    """Transmitted block: ``symbols`` is nu x width over GF(2^q)."""
    symbols: galois.FieldArray
    q: int
    packets_per_file: int

    @property
    def length(self) -> int:
        return self.symbols.shape[0]

    @property
    def width(self) -> int:
        return self.symbols.shape[1]

    @property
    def rate(self) -> Fraction:
        """File units on the shared link: nu / C(n, t)."""
        return Fraction(self.length, self.packets_per_file)


@dataclass(frozen=True)
class RoundTripResult:
    """Outcome of encoding one demand and decoding it at every user."""
    codeword_length: int
    rate: Fraction
    q: int
    users_checked: int
    packets_checked: int


# ── Generator ────────────────────────────────────────────────

def build_mds_generator(k: int, ncols: int, q: int = DEFAULT_FIELD_DEGREE) -> GeneratorMatrix:
    """Rows alpha_j^i (i < k) over the first *ncols* nonzero field elements.

    Any k columns form a square Vandermonde matrix on distinct points, so
    every set of at most k columns is linearly independent.

    Raises:
        FieldTooSmallError: 2^q <= ncols.
    """
    if k < 0 or ncols < 0 or k > ncols:
        raise InvalidParamsError(f"need 0 <= k <= ncols, got k={k}, ncols={ncols}")
    GF = field_for(q)
    if 2 ** q <= ncols:
        raise FieldTooSmallError(
            f"GF(2^{q}) has {2 ** q - 1} nonzero elements but {ncols} columns were "
            f"requested; use q >= {field_degree_for(ncols, q)}"
        )
    alphas = GF(np.arange(1, ncols + 1))
    rows = [_plain(alphas ** i) for i in range(k)]
    matrix = GF(np.array(rows, dtype=np.int64).reshape(k, ncols))
    return GeneratorMatrix(matrix=matrix, q=q)


# ── Encoding ─────────────────────────────────────────────────

def _packet_colors(g: ConflictGraph, col: LocalColoringResult) -> Dict[PacketLabel, int]:
    if not g.vertices and len(g):
        raise InvalidParamsError("encoding needs a conflict graph with packet identities")
    if not is_packet_consistent(g, col.coloring.colors):
        raise InvalidParamsError("encoding needs a packet-consistent coloring")
    return {g.vertices[cls[0]].rho: col.coloring.colors[cls[0]] for cls in packet_classes(g)}


def _symbol_width(symbols: Mapping[PacketLabel, galois.FieldArray]) -> int:
    widths = {np.atleast_1d(row).shape[0] for row in symbols.values()}
    if len(widths) > 1:
        raise InvalidParamsError(f"packet symbol rows have mixed widths {sorted(widths)}")
    return widths.pop() if widths else 1


def _row(symbols, label, GF) -> galois.FieldArray:
    try:
        row = symbols[label]
    except KeyError:
        raise MissingSymbolError(f"no symbols for packet {label}") from None
    return GF(np.atleast_1d(_plain(GF(row))))


def encode(g: ConflictGraph, col: LocalColoringResult, gen: GeneratorMatrix,
           symbols: Mapping[PacketLabel, galois.FieldArray]) -> Codeword:
    """Multicast codeword for the demand behind *g*.

    Raises:
        InvalidParamsError: coloring not packet-consistent, or the
            generator shape does not match (chi_l rows, |c| columns).
        MissingSymbolError: a requested packet has no symbols.
    """
    colors = _packet_colors(g, col)
    if gen.cols != col.palette_size or gen.rows != col.chi_l:
        raise InvalidParamsError(
            f"generator is {gen.rows}x{gen.cols}, coloring needs "
            f"{col.chi_l}x{col.palette_size}"
        )
    GF = field_for(gen.q)
    width = _symbol_width(symbols)
    X = GF.Zeros((gen.rows, width))
    for label in sorted(colors):
        vector = gen.column(colors[label])
        X = X + vector[:, np.newaxis] * _row(symbols, label, GF)[np.newaxis, :]
    packets_per_file = g.params.packets_per_file if g.params else 1
    log.debug("Encoded %d packets into %d x %d symbols", len(colors), gen.rows, width)
    return Codeword(symbols=X, q=gen.q, packets_per_file=packets_per_file)


# ── Decoding ─────────────────────────────────────────────────

def decode_user(u: int, X: Codeword, placement: CachePlacement,
                symbols_cached: Mapping[PacketLabel, galois.FieldArray],
                g: ConflictGraph, col: LocalColoringResult, gen: GeneratorMatrix,
                F: RequestMatrix) -> Dict[PacketLabel, galois.FieldArray]:
    """Recover every packet user *u* requests and does not cache.

    Cached contributions are subtracted, then the residual system over
    the uncached packets is row-reduced; a requested packet is accepted
    only when a reduced row isolates it.

    Raises:
        UndecodableError: some requested packet is not uniquely determined.
        MissingSymbolError: *symbols_cached* lacks a cached packet in use.
    """
    if u < 1 or u > placement.params.n:
        raise InvalidParamsError(f"user {u} outside 1..{placement.params.n}")
    wanted = [label for user, label in requested_vertices(placement, F) if user == u]
    if not wanted:
        return {}

    colors = _packet_colors(g, col)
    GF = field_for(X.q)
    residual = X.symbols.copy()
    unknown: List[PacketLabel] = []
    for label in sorted(colors):
        if label.cached_by(u):
            vector = gen.column(colors[label])
            residual = residual - vector[:, np.newaxis] * _row(symbols_cached, label, GF)[np.newaxis, :]
        else:
            unknown.append(label)

    A = GF(np.array([_plain(gen.column(colors[s])) for s in unknown], dtype=np.int64).T
           .reshape(gen.rows, len(unknown)))
    augmented = GF(np.hstack((_plain(A), _plain(residual))))
    rref = augmented.row_reduce(ncols=len(unknown))
    pivots = _determined_columns(rref, len(unknown))

    decoded = {}
    missing = []
    for label in wanted:
        i = pivots.get(unknown.index(label))
        if i is None:
            missing.append(label)
        else:
            decoded[label] = rref[i, len(unknown):]
    if missing:
        raise UndecodableError(
            f"user {u} cannot isolate {len(missing)} packet(s): "
            + ", ".join(str(s) for s in missing),
            user=u, packets=missing,
        )
    return decoded


def cached_symbols(user: int, symbols: Mapping[PacketLabel, galois.FieldArray]
                   ) -> Dict[PacketLabel, galois.FieldArray]:
    """Restrict a full symbol map to what *user* stores."""
    return {label: row for label, row in symbols.items() if label.cached_by(user)}


# ── Random linear baseline ───────────────────────────────────

def random_linear_rate(g: ConflictGraph, trials: int = RANDOM_TRIALS,
                       q: int = RANDOM_FIELD_DEGREE, seed: int = 0) -> Fraction:
    """Smallest nu for which seeded random nu x |S| codes decode everywhere.

    Every trial draws a fresh random matrix over GF(2^q); nu counts as
    sufficient only if every user isolates all its requested packets in
    every trial.  Returns nu / C(n, t).
    """
    if len(g) == 0:
        return Fraction(0)
    if not g.vertices or g.params is None:
        raise InvalidParamsError("random linear coding needs a conflict graph with packet identities")
    GF = field_for(q)
    packets = requested_packets(g)
    index = {s: j for j, s in enumerate(packets)}
    users = sorted({v.mu for v in g.vertices})
    views = []
    for u in users:
        unknown = [j for j, s in enumerate(packets) if not s.cached_by(u)]
        wanted = sorted({index[v.rho] for v in g.vertices if v.mu == u})
        views.append((unknown, [unknown.index(j) for j in wanted]))

    rng = np.random.default_rng(seed)
    seeds = [int(s) for s in rng.integers(0, 2 ** 31 - 1, size=trials)]
    start = max(len(w) for _, w in views)
    for nu in range(start, len(packets) + RANDOM_EXTRA_ROWS + 1):
        if all(_random_trial_decodes(GF, nu, len(packets), views, s) for s in seeds):
            log.debug("Random linear coding decodes with nu=%d over %d packets", nu, len(packets))
            return Fraction(nu, g.params.packets_per_file)
    raise UndecodableError(f"random linear coding failed up to nu={len(packets) + RANDOM_EXTRA_ROWS}")


def _random_trial_decodes(GF, nu, npackets, views, seed) -> bool:
    A = GF.Random((nu, npackets), seed=seed)
    for unknown, wanted in views:
        sub = A[:, unknown]
        pivots = _determined_columns(sub.row_reduce(), len(unknown))
        if any(j not in pivots for j in wanted):
            return False
    return True


# ── Symbol sources ───────────────────────────────────────────

def random_packet_symbols(labels: Sequence[PacketLabel], GF, width: int = 1,
                          seed: Optional[int] = None) -> Dict[PacketLabel, galois.FieldArray]:
    """Seeded uniform symbols, one row of *width* per label."""
    block = GF.Random((len(labels), width), seed=seed)
    return {label: block[i] for i, label in enumerate(labels)}


def all_packet_labels(placement: CachePlacement) -> List[PacketLabel]:
    return [label for f in range(1, placement.params.m + 1) for label in placement.labels_of(f)]


def packet_symbols_from_bytes(data: bytes, file_id: int, params: SystemParams,
                              GF) -> Dict[PacketLabel, galois.FieldArray]:
    """Split *data* into C(n, t) equal zero-padded chunks of GF(2^q) symbols.

    Bits are read most significant first, q bits per symbol.
    """
    from src.caching import place_caches
    labels = place_caches(params).labels_of(file_id)
    q = GF.degree
    bits = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
    per_packet_bits = max(1, -(-len(bits) // (len(labels) * q))) * q
    padded = np.zeros(per_packet_bits * len(labels), dtype=np.uint8)
    padded[:len(bits)] = bits
    weights = 1 << np.arange(q - 1, -1, -1, dtype=np.int64)
    values = padded.reshape(-1, q).astype(np.int64) @ weights
    block = GF(values.reshape(len(labels), -1))
    return {label: block[i] for i, label in enumerate(labels)}


def file_bytes_from_packets(symbols: Mapping[PacketLabel, galois.FieldArray], file_id: int,
                            params: SystemParams, GF, length: int) -> bytes:
    """Inverse of ``packet_symbols_from_bytes``, truncated to *length* bytes."""
    from src.caching import place_caches
    labels = place_caches(params).labels_of(file_id)
    q = GF.degree
    values = np.concatenate([_plain(_row(symbols, label, GF)) for label in labels])
    bits = ((values[:, np.newaxis] >> np.arange(q - 1, -1, -1)) & 1).astype(np.uint8).ravel()
    return np.packbits(bits).tobytes()[:length]


def load_packet_symbols(paths: Sequence[str], params: SystemParams,
                        GF) -> Dict[PacketLabel, galois.FieldArray]:
    """Read one binary file per library file (``paths[f-1]`` is file f).

    Shorter files are zero-padded to the widest packet.
    """
    if len(paths) != params.m:
        raise InvalidParamsError(f"need {params.m} library files, got {len(paths)}")
    per_file = []
    for f, path in enumerate(paths, start=1):
        with open(path, "rb") as fh:
            per_file.append(packet_symbols_from_bytes(fh.read(), f, params, GF))
    width = max(_symbol_width(s) for s in per_file)
    symbols = {}
    for chunk in per_file:
        for label, row in chunk.items():
            padded = np.zeros(width, dtype=np.int64)
            padded[:row.shape[0]] = _plain(row)
            symbols[label] = GF(padded)
    return symbols


# ── Hex export ───────────────────────────────────────────────

def codeword_to_hex(X: Codeword) -> str:
    """Header ``# q=.. rows=.. width=.. packets_per_file=..`` then one hex row per line."""
    digits = -(-X.q // 4)
    lines = [f"# q={X.q} rows={X.length} width={X.width} packets_per_file={X.packets_per_file}"]
    for row in _plain(X.symbols):
        lines.append(" ".join(format(int(v), f"0{digits}x") for v in row))
    return "\n".join(lines) + "\n"


def codeword_from_hex(text: str) -> Codeword:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise InvalidParamsError("codeword hex text needs a '# q=...' header")
    try:
        header = dict(item.split("=", 1) for item in lines[0][1:].split())
        q, rows, width = int(header["q"]), int(header["rows"]), int(header["width"])
        per_file = int(header.get("packets_per_file", 1))
        values = [[int(tok, 16) for tok in ln.split()] for ln in lines[1:]]
    except (KeyError, ValueError) as e:
        raise InvalidParamsError(f"malformed codeword hex text: {e}") from e
    if len(values) != rows or any(len(r) != width for r in values):
        raise InvalidParamsError(f"codeword body does not match rows={rows} width={width}")
    GF = field_for(q)
    block = GF(np.array(values, dtype=np.int64).reshape(rows, width))
    return Codeword(symbols=block, q=q, packets_per_file=per_file)


# ── Round trip ───────────────────────────────────────────────

def round_trip(placement: CachePlacement, F: RequestMatrix, q: int = DEFAULT_FIELD_DEGREE,
               width: int = VERIFY_WIDTH, seed: int = 0,
               max_vertices: int = MAX_EXACT_VERTICES) -> RoundTripResult:
    """Encode demand *F* with random symbols and decode it at every user.

    Raises:
        UndecodableError: a user fails to isolate, or recovers wrong symbols.
    """
    g = build_conflict_graph(placement, F)
    col = best_available_coloring(g, packet_consistent=True, max_vertices=max_vertices)
    q = field_degree_for(col.palette_size, q)
    GF = field_for(q)
    gen = build_mds_generator(col.chi_l, col.palette_size, q)
    symbols = random_packet_symbols(all_packet_labels(placement), GF, width, seed)
    X = encode(g, col, gen, symbols)

    checked = 0
    for u in range(1, placement.params.n + 1):
        decoded = decode_user(u, X, placement, cached_symbols(u, symbols), g, col, gen, F)
        for label, row in decoded.items():
            if not np.array_equal(_plain(row), _plain(symbols[label])):
                raise UndecodableError(f"user {u} decoded wrong symbols for {label}",
                                       user=u, packets=[label])
            checked += 1
    return RoundTripResult(
        codeword_length=X.length,
        rate=X.rate,
        q=q,
        users_checked=placement.params.n,
        packets_checked=checked,
    )
