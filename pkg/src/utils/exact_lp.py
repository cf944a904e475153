"""
Exact linear programming over the rationals.

A dense two-phase simplex on ``fractions.Fraction`` tableaux with Bland's
rule, so it terminates and returns optimal values with no rounding.  Meant
for the small covering programs of the coloring module (a few dozen rows,
a few thousand columns at most).

Usage:
    from src.utils.exact_lp import minimize

    result = minimize(cost=[1, 1], rows=[[1, 2]], senses=[">="], rhs=[4])
    result.value  # Fraction(2, 1)
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from src.utils.errors import InfeasibleProgramError

log = logging.getLogger("exact_lp")

_SENSES = ("<=", ">=", "==")


@dataclass(frozen=True)
class LinearProgramResult:
    """Optimal value and one optimal vertex of ``min c.x, A x (<=,>=,==) b, x >= 0``."""
    value: Fraction
    solution: Tuple[Fraction, ...]
    pivots: int


class _Tableau:
    """Simplex tableau with basis bookkeeping.  Rows are lists of Fractions."""

    def __init__(self, rows: List[List[Fraction]], basis: List[int]):
        self.rows = rows
        self.basis = basis
        self.pivots = 0

    def pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        piv = prow[c]
        if piv != 1:
            prow = [x / piv for x in prow]
            self.rows[r] = prow
        nonzero = [j for j, x in enumerate(prow) if x]
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            factor = row[c]
            if not factor:
                continue
            for j in nonzero:
                row[j] -= factor * prow[j]
        self.basis[r] = c
        self.pivots += 1

    def reduced_costs(self, cost: Sequence[Fraction]) -> List[Fraction]:
        """Objective row: reduced costs followed by minus the objective value."""
        obj = list(cost) + [Fraction(0)]
        for i, b in enumerate(self.basis):
            cb = obj_coeff(cost, b)
            if not cb:
                continue
            row = self.rows[i]
            for j, x in enumerate(row):
                if x:
                    obj[j] -= cb * x
        return obj

    def run(self, cost: Sequence[Fraction], allowed: Sequence[bool]) -> List[Fraction]:
        """Iterate to optimality under Bland's rule; return the final objective row."""
        obj = self.reduced_costs(cost)
        while True:
            entering = next(
                (j for j in range(len(cost)) if allowed[j] and obj[j] < 0), None,
            )
            if entering is None:
                return obj
            leaving = None
            best_ratio = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a <= 0:
                    continue
                ratio = row[-1] / a
                if (best_ratio is None or ratio < best_ratio
                        or (ratio == best_ratio and self.basis[i] < self.basis[leaving])):
                    best_ratio = ratio
                    leaving = i
            if leaving is None:
                raise InfeasibleProgramError("linear program is unbounded")
            self.pivot(leaving, entering)
            # Objective row update, same elimination as the tableau rows
            factor = obj[entering]
            prow = self.rows[leaving]
            for j, x in enumerate(prow):
                if x:
                    obj[j] -= factor * x


def obj_coeff(cost: Sequence[Fraction], j: int) -> Fraction:
    return cost[j] if j < len(cost) else Fraction(0)


def minimize(cost, rows, senses, rhs) -> LinearProgramResult:
    """Solve ``min cost.x`` subject to ``rows[i].x senses[i] rhs[i]``, ``x >= 0``.

    Args:
        cost: Objective coefficients, one per variable.
        rows: Dense constraint rows, each the same length as *cost*.
        senses: ``"<="``, ``">="`` or ``"=="`` per row.
        rhs: Right-hand sides.

    Raises:
        InfeasibleProgramError: no feasible point, or unbounded below.
        ValueError: malformed input.
    """
    nvars = len(cost)
    if not (len(rows) == len(senses) == len(rhs)):
        raise ValueError("rows, senses and rhs must have equal length")
    for sense in senses:
        if sense not in _SENSES:
            raise ValueError(f"sense must be one of {_SENSES}, got {sense!r}")

    # Normalize to b >= 0
    norm_rows, norm_senses, norm_rhs = [], [], []
    for row, sense, b in zip(rows, senses, rhs):
        if len(row) != nvars:
            raise ValueError("every row must have one coefficient per variable")
        row = [Fraction(x) for x in row]
        b = Fraction(b)
        if b < 0:
            row = [-x for x in row]
            b = -b
            sense = {"<=": ">=", ">=": "<=", "==": "=="}[sense]
        norm_rows.append(row)
        norm_senses.append(sense)
        norm_rhs.append(b)

    nrows = len(norm_rows)
    n_slack = sum(1 for s in norm_senses if s != "==")
    n_art = sum(1 for s in norm_senses if s != "<=")
    ncols = nvars + n_slack + n_art
    art_start = nvars + n_slack

    tableau_rows = []
    basis = []
    slack_j = nvars
    art_j = art_start
    for row, sense, b in zip(norm_rows, norm_senses, norm_rhs):
        full = row + [Fraction(0)] * (ncols - nvars) + [b]
        if sense == "<=":
            full[slack_j] = Fraction(1)
            basis.append(slack_j)
            slack_j += 1
        else:
            if sense == ">=":
                full[slack_j] = Fraction(-1)
                slack_j += 1
            full[art_j] = Fraction(1)
            basis.append(art_j)
            art_j += 1
        tableau_rows.append(full)

    tab = _Tableau(tableau_rows, basis)

    # Phase 1: drive artificials to zero
    if n_art:
        phase1_cost = [Fraction(0)] * art_start + [Fraction(1)] * n_art
        obj = tab.run(phase1_cost, [True] * ncols)
        if -obj[-1] != 0:
            raise InfeasibleProgramError("linear program is infeasible")
        for i in reversed(range(len(tab.rows))):
            if tab.basis[i] < art_start:
                continue
            col = next((j for j in range(art_start) if tab.rows[i][j] != 0), None)
            if col is None:
                del tab.rows[i]
                del tab.basis[i]
            else:
                tab.pivot(i, col)

    # Phase 2: artificial columns may no longer enter
    phase2_cost = [Fraction(c) for c in cost] + [Fraction(0)] * (ncols - nvars)
    allowed = [j < art_start for j in range(ncols)]
    tab.run(phase2_cost, allowed)

    solution = [Fraction(0)] * nvars
    for i, b in enumerate(tab.basis):
        if b < nvars:
            solution[b] = tab.rows[i][-1]
    value = sum((Fraction(c) * x for c, x in zip(cost, solution)), Fraction(0))
    log.debug("LP solved: %d rows, %d columns, %d pivots, value %s",
              nrows, ncols, tab.pivots, value)
    return LinearProgramResult(value=value, solution=tuple(solution), pivots=tab.pivots)
