"""Exact rational linear algebra helpers.

Classification decisions (eigenvalue coincidence, family membership) are
discontinuous, so they are made over ``fractions.Fraction`` whenever the
inputs are rational.  These helpers operate on plain nested lists/tuples and
never convert to floats, so Fractions survive end to end.  They also work on
floats, which is occasionally convenient.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

SNAP_MAX_DENOMINATOR = 10**6


def to_fraction(x, max_denominator: int = SNAP_MAX_DENOMINATOR) -> Fraction:
    """Convert a number to a Fraction, snapping floats to denominator <= 1e6."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    f = Fraction(x)
    snapped = f.limit_denominator(max_denominator)
    return snapped


def frac_matrix(A) -> list[list[Fraction]]:
    return [[to_fraction(x) for x in row] for row in A]


def frac_vector(v) -> list[Fraction]:
    return [to_fraction(x) for x in v]


def mat_vec(A, v):
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    return [
        [sum(A[i][t] * B[t][j] for t in range(k)) for j in range(m)]
        for i in range(n)
    ]


def mat_identity(n, one=Fraction(1)):
    zero = one - one
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_det(A):
    n = len(A)
    if n == 1:
        return A[0][0]
    if n == 2:
        return A[0][0] * A[1][1] - A[0][1] * A[1][0]
    if n == 3:
        return (
            A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1])
            - A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0])
            + A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0])
        )
    raise ValueError("mat_det supports sizes 1..3")


def mat_inv(A):
    """Gauss-Jordan inverse; exact for Fraction entries.

    Raises ZeroDivisionError on singular input (exact test for Fractions).
    """
    n = len(A)
    M = [list(row) + list(ident_row) for row, ident_row in zip(A, mat_identity(n))]
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if M[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            raise ZeroDivisionError("singular matrix")
        M[col], M[pivot] = M[pivot], M[col]
        pv = M[col][col]
        M[col] = [x / pv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                factor = M[r][col]
                M[r] = [x - factor * y for x, y in zip(M[r], M[col])]
    return [row[n:] for row in M]


def ratsqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    q = Fraction(q)
    if q < 0:
        raise ValueError("ratsqrt of negative rational")
    if q == 0:
        return Fraction(0)
    num = math.isqrt(q.numerator)
    den = math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def is_rational_input(values: Sequence) -> bool:
    """True when every value is an int or Fraction (exact path applies)."""
    return all(isinstance(v, (int, Fraction)) for v in values)
