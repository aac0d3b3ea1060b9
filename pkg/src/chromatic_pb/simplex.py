"""Exact rational simplex for small packing LPs.

Solves ``max c.y  s.t.  A y <= b, y >= 0`` with ``b >= 0`` over
:class:`fractions.Fraction`, so the slack basis is feasible and no phase one
is needed.  Bland's rule guarantees termination.  The optimal dual vector
(one entry per constraint row) is read off the final objective row.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class UnboundedLP(ArithmeticError):
    pass


@dataclass(frozen=True)
class LPSolution:
    value: Fraction
    primal: list[Fraction]
    dual: list[Fraction]
    pivots: int


def solve_packing_lp(
    A: Sequence[Sequence[int | Fraction]],
    b: Sequence[int | Fraction],
    c: Sequence[int | Fraction],
) -> LPSolution:
    n_rows = len(A)
    n_cols = len(c)
    if len(b) != n_rows or any(len(row) != n_cols for row in A):
        raise ValueError("inconsistent LP dimensions")
    if any(Fraction(v) < 0 for v in b):
        raise ValueError("right-hand side must be nonnegative")

    width = n_cols + n_rows + 1
    # Rows: constraints with slack identity; last column is the RHS.
    tableau = []
    for i, row in enumerate(A):
        t = [Fraction(v) for v in row] + [Fraction(0)] * n_rows + [Fraction(b[i])]
        t[n_cols + i] = Fraction(1)
        tableau.append(t)
    # Objective row holds reduced costs -c; optimal when none is negative.
    obj = [-Fraction(v) for v in c] + [Fraction(0)] * (n_rows + 1)
    basis = [n_cols + i for i in range(n_rows)]

    pivots = 0
    while True:
        entering = next((j for j in range(width - 1) if obj[j] < 0), None)
        if entering is None:
            break
        leaving = None
        best = None
        for i in range(n_rows):
            a = tableau[i][entering]
            if a > 0:
                ratio = tableau[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    best = ratio
                    leaving = i
        if leaving is None:
            raise UnboundedLP(f"objective unbounded along column {entering}")

        prow = tableau[leaving]
        piv = prow[entering]
        if piv != 1:
            prow = [v / piv for v in prow]
            tableau[leaving] = prow
        nz = [j for j, v in enumerate(prow) if v != 0]
        for i in range(n_rows):
            if i == leaving:
                continue
            row = tableau[i]
            f = row[entering]
            if f != 0:
                for j in nz:
                    row[j] -= f * prow[j]
        f = obj[entering]
        for j in nz:
            obj[j] -= f * prow[j]
        basis[leaving] = entering
        pivots += 1

    primal = [Fraction(0)] * n_cols
    for i, var in enumerate(basis):
        if var < n_cols:
            primal[var] = tableau[i][-1]
    dual = [obj[n_cols + i] for i in range(n_rows)]
    return LPSolution(value=obj[-1], primal=primal, dual=dual, pivots=pivots)
