"""
Demand matrices for worst-case sweeps.

The subset placement is symmetric under relabelling users and under
relabelling files, and the conflict graph only sees each user's request
*set*, so a sweep needs one representative per orbit:

    canonical form = min over file permutations of the sorted tuple of
                     sorted request rows

Usage:
    from src.demands import canonical_request_matrices

    for F in canonical_request_matrices(3, 3, 2):
        ...
"""
import logging
from itertools import combinations, combinations_with_replacement, permutations, product
from math import comb
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.caching import RequestMatrix
from src.utils.errors import InvalidParamsError

log = logging.getLogger("demands")

Rows = Tuple[Tuple[int, ...], ...]


def _check(n: int, m: int, L: int) -> None:
    if n < 1 or m < 1:
        raise InvalidParamsError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if L < 1 or L > m:
        raise InvalidParamsError(f"need 1 <= L <= m, got L={L}, m={m}")


def all_request_matrices(n: int, m: int, L: int) -> Iterator[RequestMatrix]:
    """Every demand, each user's row taken as a sorted L-subset of files."""
    _check(n, m, L)
    rows = list(combinations(range(1, m + 1), L))
    for choice in product(rows, repeat=n):
        yield RequestMatrix(m=m, requests=choice)


def count_request_matrices(n: int, m: int, L: int) -> int:
    """C(m, L)^n, the size of ``all_request_matrices``."""
    _check(n, m, L)
    return comb(m, L) ** n


def _relabel(rows: Sequence[Sequence[int]], perm: Sequence[int]) -> Rows:
    # perm[f-1] is the new id of file f
    return tuple(sorted(tuple(sorted(perm[f - 1] for f in row)) for row in rows))


def canonical_form(requests: Sequence[Sequence[int]], m: int) -> Rows:
    """Smallest relabelling of *requests* under user and file permutations."""
    return min(_relabel(requests, [p + 1 for p in perm]) for perm in permutations(range(m)))


def is_canonical(requests: Sequence[Sequence[int]], m: int) -> bool:
    me = _relabel(requests, list(range(1, m + 1)))
    return tuple(tuple(r) for r in requests) == me and canonical_form(requests, m) == me


def canonical_request_matrices(n: int, m: int, L: int) -> List[RequestMatrix]:
    """One demand per symmetry orbit, in sorted order."""
    _check(n, m, L)
    rows = list(combinations(range(1, m + 1), L))
    found = []
    for multiset in combinations_with_replacement(rows, n):
        if is_canonical(multiset, m):
            found.append(multiset)
    found.sort()
    log.debug("%d canonical demands of %d (n=%d, m=%d, L=%d)",
              len(found), count_request_matrices(n, m, L), n, m, L)
    return [RequestMatrix(m=m, requests=rows_) for rows_ in found]


def random_request_matrix(n: int, m: int, L: int, seed: Optional[int] = None) -> RequestMatrix:
    """Each user draws L distinct files uniformly, in draw order."""
    _check(n, m, L)
    rng = np.random.default_rng(seed)
    rows = tuple(tuple(int(f) + 1 for f in rng.choice(m, size=L, replace=False)) for _ in range(n))
    return RequestMatrix(m=m, requests=rows)
