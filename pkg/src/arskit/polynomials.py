"""Small multivariate polynomials over exact or float coefficients.

Used for singular-locus determinants and tangency systems; degrees stay tiny
(at most 2 in practice), so a monomial dict is all that is needed.  The
coefficient type is whatever arithmetic the inputs carry, so Fractions give
exact zero tests.
"""

from __future__ import annotations

from fractions import Fraction


class CoordPoly:
    """Polynomial in ``nvars`` coordinates as {exponent tuple: coefficient}."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict | None = None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for mono, coeff in terms.items():
                if coeff != 0:
                    self.terms[tuple(mono)] = coeff

    @classmethod
    def constant(cls, nvars: int, value) -> "CoordPoly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "CoordPoly":
        mono = tuple(1 if i == index else 0 for i in range(nvars))
        return cls(nvars, {mono: 1})

    def _coerce(self, other) -> "CoordPoly":
        if isinstance(other, CoordPoly):
            return other
        return CoordPoly.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            terms[mono] = terms.get(mono, 0) + coeff
        return CoordPoly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return CoordPoly(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, CoordPoly):
            return CoordPoly(self.nvars,
                             {m: c * other for m, c in self.terms.items()})
        terms: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                terms[mono] = terms.get(mono, 0) + c1 * c2
        return CoordPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __call__(self, coords):
        total = 0
        for mono, coeff in self.terms.items():
            val = coeff
            for exp, x in zip(mono, coords):
                for _ in range(exp):
                    val = val * x
            total = total + val
        return total

    def partial(self, index: int) -> "CoordPoly":
        terms: dict = {}
        for mono, coeff in self.terms.items():
            e = mono[index]
            if e == 0:
                continue
            lowered = tuple(x - 1 if i == index else x for i, x in enumerate(mono))
            terms[lowered] = terms.get(lowered, 0) + e * coeff
        return CoordPoly(self.nvars, terms)

    def substitute(self, assignments: dict) -> "CoordPoly":
        """Substitute polynomials (or scalars) for some variables."""
        result = CoordPoly.constant(self.nvars, 0)
        for mono, coeff in self.terms.items():
            term = CoordPoly.constant(self.nvars, coeff)
            for i, exp in enumerate(mono):
                base = assignments.get(i, CoordPoly.variable(self.nvars, i))
                if not isinstance(base, CoordPoly):
                    base = CoordPoly.constant(self.nvars, base)
                for _ in range(exp):
                    term = term * base
            result = result + term
        return result

    def coefficient(self, mono) -> object:
        return self.terms.get(tuple(mono), 0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def to_float(self) -> "CoordPoly":
        return CoordPoly(self.nvars, {m: float(c) for m, c in self.terms.items()})

    def to_fraction(self) -> "CoordPoly":
        return CoordPoly(self.nvars,
                         {m: Fraction(c).limit_denominator(10**12)
                          if isinstance(c, float) else Fraction(c)
                          for m, c in self.terms.items()})

    def __repr__(self):
        names = "xyz"[: self.nvars]
        parts = []
        for mono in sorted(self.terms, key=lambda m: (sum(m), m), reverse=True):
            coeff = self.terms[mono]
            body = "".join(
                f"{names[i]}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(mono) if e
            )
            parts.append(f"{coeff}{'*' if body else ''}{body}")
        return " + ".join(parts) if parts else "0"


def poly_det(matrix: list[list[CoordPoly]]) -> CoordPoly:
    """Determinant of a small matrix of polynomials (sizes 2 and 3)."""
    n = len(matrix)
    m = matrix
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if n == 3:
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )
    raise ValueError("poly_det supports sizes 2 and 3")
