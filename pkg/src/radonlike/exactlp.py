"""Exact rational feasibility for small convex-combination problems.

Solves ``A theta = b, theta >= 0`` over ``Fraction`` with a phase-one simplex
and Bland's rule.  Sizes here are tiny (tens of lattice points, a dozen
rows), so a dense tableau is perfectly adequate.
"""
from __future__ import annotations

from fractions import Fraction


def feasible_point(A, b):
    """Return an exact nonnegative solution of ``A theta = b`` or ``None``."""
    m = len(A)
    N = len(A[0]) if m else 0
    rows = []
    for i in range(m):
        r = [Fraction(x) for x in A[i]]
        rhs = Fraction(b[i])
        if rhs < 0:
            r = [-x for x in r]
            rhs = -rhs
        art = [Fraction(0)] * m
        art[i] = Fraction(1)
        rows.append(r + art + [rhs])
    basis = [N + i for i in range(m)]
    ncol = N + m
    # objective: minimize the sum of artificials, reduced costs in row form
    obj = [Fraction(0)] * (ncol + 1)
    for r in rows:
        for j in range(ncol + 1):
            obj[j] -= r[j]
    for j in range(N, ncol):
        obj[j] = Fraction(0)
    while True:
        enter = next((j for j in range(ncol) if obj[j] < 0), None)
        if enter is None:
            break
        best, leave = None, None
        for i, r in enumerate(rows):
            if r[enter] > 0:
                ratio = r[-1] / r[enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            break                      # unbounded direction cannot occur in phase one
        piv = rows[leave][enter]
        rows[leave] = [x / piv for x in rows[leave]]
        for i in range(m):
            if i != leave and rows[i][enter] != 0:
                f = rows[i][enter]
                rows[i] = [a - f * c for a, c in zip(rows[i], rows[leave])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [a - f * c for a, c in zip(obj, rows[leave])]
        basis[leave] = enter
    if -obj[-1] != 0:
        return None
    theta = [Fraction(0)] * N
    for i, j in enumerate(basis):
        if j < N:
            theta[j] = rows[i][-1]
        elif rows[i][-1] != 0:
            return None
    return theta
