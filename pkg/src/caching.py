"""
Core model: system parameters, packet labels, request matrices and the
combinatorial cache placement.

Every file is split into C(n, t) packets labelled by the t-subsets of
users (t = nM/m); user u caches exactly the packets whose label contains
u.  Non-integer t is never placed directly -- rates at such M come from
the two bracketing integer-t points (``memory_share_points``).

All types are immutable; all operations are pure.
"""
import csv
import io
import json
import logging
import numbers
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb, floor
from typing import Dict, FrozenSet, List, Optional, Tuple

from src.utils.common import parse_rational, validate_params
from src.utils.errors import InvalidParamsError, RequestMatrixError

log = logging.getLogger("caching")


def _file_index(value, what: str) -> int:
    """*value* as an int; bools, floats and strings are rejected."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise RequestMatrixError(f"{what} must be an integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class SystemParams:
    """(n users, m files, cache size M in file units, L requests per user)."""
    n: int
    m: int
    M: Fraction
    L: int

    def __post_init__(self):
        ok, err = validate_params(self.n, self.m, self.M, self.L)
        if not ok:
            raise InvalidParamsError(err)
        object.__setattr__(self, "M", parse_rational(self.M))

    @property
    def t(self) -> Fraction:
        """Derived placement parameter nM/m, in [0, n]."""
        return Fraction(self.n) * self.M / self.m

    @property
    def has_integer_t(self) -> bool:
        return self.t.denominator == 1

    @property
    def t_int(self) -> int:
        if not self.has_integer_t:
            raise InvalidParamsError(
                f"t = nM/m = {self.t} is not an integer; use memory_share_points() "
                "to split M into integer-t placements"
            )
        return int(self.t)

    @property
    def packets_per_file(self) -> int:
        """C(n, t) for integer t."""
        return comb(self.n, self.t_int)

    def with_memory(self, M) -> "SystemParams":
        return SystemParams(self.n, self.m, parse_rational(M), self.L)

    def with_requests(self, L: int) -> "SystemParams":
        return SystemParams(self.n, self.m, self.M, L)

    def memory_at(self, t: int) -> Fraction:
        """Cache size M_t = t m / n of the integer-t point *t*."""
        return Fraction(t * self.m, self.n)

    def as_dict(self) -> Dict[str, object]:
        return {"n": self.n, "m": self.m, "M": self.M, "L": self.L}


@dataclass(frozen=True, order=True)
class PacketLabel:
    """Packet of *file* (1-based) labelled by the sorted user *subset*."""
    file: int
    subset: Tuple[int, ...]

    def __str__(self):
        users = ",".join(str(u) for u in self.subset)
        return f"W{self.file}[{users}]"

    def cached_by(self, user: int) -> bool:
        return user in self.subset


@dataclass(frozen=True)
class RequestMatrix:
    """Per-user ordered lists of L distinct requested file ids (1-based)."""
    m: int
    requests: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "m", _file_index(self.m, "m"))
        rows = tuple(
            tuple(_file_index(f, f"user {u} file id") for f in row)
            for u, row in enumerate(self.requests, start=1)
        )
        object.__setattr__(self, "requests", rows)
        if not rows:
            raise RequestMatrixError("request matrix needs at least one user")
        L = len(rows[0])
        for u, row in enumerate(rows, start=1):
            if len(row) != L:
                raise RequestMatrixError(
                    f"user {u} requests {len(row)} files, expected L={L}"
                )
            if L == 0:
                raise RequestMatrixError("each user must request at least one file")
            for f in row:
                if f < 1 or f > self.m:
                    raise RequestMatrixError(
                        f"user {u} requests file {f}, outside 1..{self.m}"
                    )
            if len(set(row)) != len(row):
                raise RequestMatrixError(f"user {u} repeats a file in {list(row)}")

    @property
    def n(self) -> int:
        return len(self.requests)

    @property
    def L(self) -> int:
        return len(self.requests[0])

    def files_of(self, user: int) -> Tuple[int, ...]:
        return self.requests[user - 1]

    def check_params(self, params: SystemParams) -> None:
        if (self.n, self.m, self.L) != (params.n, params.m, params.L):
            raise RequestMatrixError(
                f"request matrix is n={self.n}, m={self.m}, L={self.L} but "
                f"parameters are n={params.n}, m={params.m}, L={params.L}"
            )

    def to_dict(self) -> Dict[str, object]:
        return {"n": self.n, "m": self.m, "L": self.L,
                "requests": [list(row) for row in self.requests]}


@dataclass(frozen=True)
class CachePlacement:
    """Symbolic cache contents: ``caches[u-1]`` is the label set of user u."""
    params: SystemParams
    caches: Tuple[FrozenSet[PacketLabel], ...]

    def cache(self, user: int) -> FrozenSet[PacketLabel]:
        return self.caches[user - 1]

    def labels_of(self, file: int) -> Tuple[PacketLabel, ...]:
        """All C(n, t) labels of *file*, in lexicographic subset order."""
        users = range(1, self.params.n + 1)
        return tuple(PacketLabel(file, s) for s in combinations(users, self.params.t_int))


# ── Operations ───────────────────────────────────────────────

def place_caches(params: SystemParams) -> CachePlacement:
    """Return the subset placement for integer t = nM/m.

    Raises:
        InvalidParamsError: t is not an integer.
    """
    t = params.t_int
    users = range(1, params.n + 1)
    subsets = list(combinations(users, t))
    caches = []
    for u in users:
        caches.append(frozenset(
            PacketLabel(f, s) for f in range(1, params.m + 1) for s in subsets if u in s
        ))
    log.debug("Placed caches: t=%d, %d packets per file, %d cached per user",
              t, len(subsets), len(caches[0]) if caches else 0,
              extra={"n": params.n, "m": params.m, "M": params.M, "t": t})
    return CachePlacement(params=params, caches=tuple(caches))


def requested_vertices(placement: CachePlacement,
                       F: RequestMatrix) -> List[Tuple[int, PacketLabel]]:
    """(user, label) for every requested packet the user does not cache.

    Ordered by (user, file, subset); length L n C(n-1, t).
    """
    params = placement.params
    F.check_params(params)
    pairs = []
    for u in range(1, params.n + 1):
        for f in sorted(F.files_of(u)):
            for label in placement.labels_of(f):
                if not label.cached_by(u):
                    pairs.append((u, label))
    return pairs


def memory_share_points(params: SystemParams) -> List[Tuple[Fraction, Fraction]]:
    """Integer-t memory points bracketing M with convex weights.

    Returns ``[(M, 1)]`` when t is an integer, else
    ``[(M_lo, w_lo), (M_hi, w_hi)]`` with ``w_lo M_lo + w_hi M_hi = M``.
    """
    t = params.t
    if t.denominator == 1:
        return [(params.M, Fraction(1))]
    lo = floor(t)
    w_hi = t - lo
    return [(params.memory_at(lo), 1 - w_hi), (params.memory_at(lo + 1), w_hi)]


# ── Request Matrix I/O ───────────────────────────────────────

def request_matrix_from_json(text: str) -> RequestMatrix:
    """Parse ``{"n":..,"m":..,"L":..,"requests":[[..],..]}``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise RequestMatrixError(f"invalid JSON request matrix: {e}") from e
    if not isinstance(data, dict) or "requests" not in data or "m" not in data:
        raise RequestMatrixError("request matrix JSON needs 'm' and 'requests'")
    try:
        F = RequestMatrix(m=data["m"], requests=data["requests"])
    except (TypeError, ValueError) as e:
        if isinstance(e, RequestMatrixError):
            raise
        raise RequestMatrixError(f"malformed requests: {e}") from e
    for key, actual in (("n", F.n), ("L", F.L)):
        if key in data and data[key] != actual:
            raise RequestMatrixError(f"declared {key}={data[key]} but requests give {actual}")
    return F


def request_matrix_from_csv(text: str, m: int) -> RequestMatrix:
    """Parse one comma-separated row of file ids per user."""
    rows = []
    for record in csv.reader(io.StringIO(text)):
        cells = [c.strip() for c in record if c.strip()]
        if not cells or cells[0].startswith("#"):
            continue
        try:
            rows.append(tuple(int(c) for c in cells))
        except ValueError as e:
            raise RequestMatrixError(f"non-integer file id in CSV row {record}") from e
    return RequestMatrix(m=m, requests=tuple(rows))


def load_request_matrix(path: str, m: Optional[int] = None) -> RequestMatrix:
    """Load a request matrix from a ``.json`` or ``.csv`` file.

    CSV files carry no library size, so *m* is required for them.
    """
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise RequestMatrixError(f"cannot read request matrix {path}: {e}") from e
    if path.lower().endswith(".json"):
        F = request_matrix_from_json(text)
        if m is not None and F.m != m:
            raise RequestMatrixError(f"{path} declares m={F.m}, expected m={m}")
        return F
    if m is None:
        raise RequestMatrixError("CSV request matrices need the library size m")
    return request_matrix_from_csv(text, m)
