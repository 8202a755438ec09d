"""Lie algebra layer for aff(2) and heis(3).

Structure constants, brackets, derivations, automorphisms, matrix
exponentials and 2x2 eigenstructure classification.  Everything here is pure
and works on plain sequences; functions preserve Fraction entries where the
operation is rational (bracket, conjugation) and return numpy arrays where it
is not (exp).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np
from scipy.linalg import expm

from .exact import (
    frac_matrix,
    is_rational_input,
    mat_det,
    mat_inv,
    mat_mul,
    ratsqrt,
    to_fraction,
)

GroupTag = Literal["aff2", "heis3"]

STRUCT_TOL = 1e-12


@dataclass(frozen=True)
class LieAlgebraModel:
    group_tag: GroupTag
    dim: int
    basis_labels: tuple[str, ...]
    # structure_constants[k][i][j] = coefficient of basis k in [e_i, e_j]
    structure_constants: tuple


def _aff2_constants():
    c = [[[0] * 2 for _ in range(2)] for _ in range(2)]
    c[1][0][1] = 1   # [X, Y] = Y
    c[1][1][0] = -1
    return tuple(tuple(tuple(row) for row in mat) for mat in c)


def _heis3_constants():
    c = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    c[2][0][1] = 1   # [X, Y] = Z
    c[2][1][0] = -1
    return tuple(tuple(tuple(row) for row in mat) for mat in c)


AFF2 = LieAlgebraModel("aff2", 2, ("X", "Y"), _aff2_constants())
HEIS3 = LieAlgebraModel("heis3", 3, ("X", "Y", "Z"), _heis3_constants())

_MODELS = {"aff2": AFF2, "heis3": HEIS3}


def algebra_model(tag: GroupTag) -> LieAlgebraModel:
    try:
        return _MODELS[tag]
    except KeyError:
        raise ValueError(f"unknown group tag: {tag!r}") from None


def bracket(model: LieAlgebraModel, u: Sequence, v: Sequence):
    """Lie bracket of coordinate vectors via the structure constants."""
    n = model.dim
    if len(u) != n or len(v) != n:
        raise ValueError(f"expected vectors of length {n}")
    c = model.structure_constants
    return tuple(
        sum(c[k][i][j] * u[i] * v[j] for i in range(n) for j in range(n))
        for k in range(n)
    )


def _basis(model, i):
    return tuple(1 if j == i else 0 for j in range(model.dim))


def leibniz_residual(model: LieAlgebraModel, D) -> float:
    """Max violation of D[u,v] = [Du,v] + [u,Dv] over basis pairs."""
    n = model.dim
    D = np.asarray(D, dtype=float)
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            ei, ej = _basis(model, i), _basis(model, j)
            lhs = D @ np.asarray(bracket(model, ei, ej), dtype=float)
            rhs = np.asarray(bracket(model, D[:, i], ej), dtype=float)
            rhs = rhs + np.asarray(bracket(model, ei, D[:, j]), dtype=float)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def is_derivation(model: LieAlgebraModel, D, tol: float = STRUCT_TOL) -> bool:
    D = np.asarray(D, dtype=float)
    if D.shape != (model.dim, model.dim):
        raise ValueError(f"expected a {model.dim}x{model.dim} matrix")
    return leibniz_residual(model, D) <= tol


@dataclass(frozen=True)
class DerivationSpace:
    """Free-parameter pattern of the derivations of one algebra."""

    group_tag: GroupTag
    param_names: tuple[str, ...]
    pattern: str

    def construct(self, **params):
        """Build the derivation matrix from named parameters (default 0)."""
        unknown = set(params) - set(self.param_names)
        if unknown:
            raise ValueError(f"unknown derivation parameters: {sorted(unknown)}")
        p = {name: params.get(name, 0) for name in self.param_names}
        if self.group_tag == "aff2":
            return ((0, 0), (p["a"], p["b"]))
        return (
            (p["a"], p["b"], 0),
            (p["c"], p["d"], 0),
            (p["e"], p["f"], p["a"] + p["d"]),
        )


def derivation_space(model: LieAlgebraModel) -> DerivationSpace:
    if model.group_tag == "aff2":
        return DerivationSpace("aff2", ("a", "b"), "[[0,0],[a,b]]")
    return DerivationSpace(
        "heis3", ("a", "b", "c", "d", "e", "f"),
        "[[a,b,0],[c,d,0],[e,f,a+d]]",
    )


def derivation_params(model: LieAlgebraModel, D) -> dict:
    """Read the free parameters back out of a derivation matrix."""
    if model.group_tag == "aff2":
        return {"a": D[1][0], "b": D[1][1]}
    return {
        "a": D[0][0], "b": D[0][1],
        "c": D[1][0], "d": D[1][1],
        "e": D[2][0], "f": D[2][1],
    }


def is_automorphism(model: LieAlgebraModel, P, tol: float = 1e-9) -> bool:
    """True iff P is invertible and preserves brackets on basis pairs."""
    n = model.dim
    P = np.asarray(P, dtype=float)
    if P.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix")
    if abs(np.linalg.det(P)) <= tol:
        return False
    scale = max(1.0, float(np.max(np.abs(P))) ** 2)
    for i in range(n):
        for j in range(i + 1, n):
            ei, ej = _basis(model, i), _basis(model, j)
            lhs = P @ np.asarray(bracket(model, ei, ej), dtype=float)
            rhs = np.asarray(bracket(model, P[:, i], P[:, j]), dtype=float)
            if np.max(np.abs(lhs - rhs)) > tol * scale:
                return False
    return True


def conjugate_derivation(P, D):
    """P D P^{-1}; exact when both matrices have Fraction/int entries."""
    flat = [x for row in P for x in row] + [x for row in D for x in row]
    if not is_rational_input(flat):
        P = np.asarray(P, dtype=float)
        D = np.asarray(D, dtype=float)
        return P @ D @ np.linalg.inv(P)
    Pf = frac_matrix(P)
    Df = frac_matrix(D)
    if mat_det(Pf) == 0:
        raise ZeroDivisionError("singular conjugating matrix")
    return tuple(tuple(row) for row in mat_mul(mat_mul(Pf, Df), mat_inv(Pf)))


def exp_tD(D, t: float) -> np.ndarray:
    """Matrix exponential exp(t D)."""
    D = np.asarray(D, dtype=float)
    return expm(t * D)


@dataclass(frozen=True)
class EigenStructure:
    """2x2 real eigenstructure: one of real-distinct / jordan / complex.

    A repeated eigenvalue with a diagonalizable (scalar) matrix is reported
    as real-distinct with l1 == l2.  For the complex kind the matrix is
    similar to [[a,-b],[b,a]] with b > 0.
    """

    kind: Literal["real-distinct", "jordan", "complex"]
    l1: object = None
    l2: object = None
    a: object = None
    b: object = None
    boundary: bool = False  # discriminant within tolerance of zero


def eigen2x2(A, tol: float = 1e-9) -> EigenStructure:
    """Classify a real 2x2 matrix; exact over Fractions, tolerant over floats.

    Tie-break: |discriminant| < tol * ||A||^2 is treated as a repeated root.
    """
    rows = [list(r) for r in A]
    exact = all(isinstance(x, (int, Fraction)) for row in rows for x in row)
    if exact:
        a, b = to_fraction(rows[0][0]), to_fraction(rows[0][1])
        c, d = to_fraction(rows[1][0]), to_fraction(rows[1][1])
        disc = (a - d) ** 2 + 4 * b * c
        if disc > 0:
            r = ratsqrt(disc)
            tr = a + d
            if r is not None:
                return EigenStructure("real-distinct", l1=(tr + r) / 2, l2=(tr - r) / 2)
            rf = float(disc) ** 0.5
            return EigenStructure(
                "real-distinct", l1=(float(tr) + rf) / 2, l2=(float(tr) - rf) / 2
            )
        if disc < 0:
            q = ratsqrt(-disc)
            re = (a + d) / 2
            if q is not None:
                return EigenStructure("complex", a=re, b=q / 2)
            return EigenStructure("complex", a=re, b=float(-disc) ** 0.5 / 2)
        lam = (a + d) / 2
        if b == 0 and c == 0 and a == d:
            return EigenStructure("real-distinct", l1=lam, l2=lam)
        return EigenStructure("jordan", l1=lam)

    M = np.asarray(rows, dtype=float)
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    disc = (a - d) ** 2 + 4 * b * c
    scale = max(1.0, float(np.sum(M * M)))
    boundary = abs(disc) < tol * scale
    if not boundary and disc > 0:
        r = disc**0.5
        return EigenStructure("real-distinct", l1=(a + d + r) / 2, l2=(a + d - r) / 2)
    if not boundary and disc < 0:
        return EigenStructure("complex", a=(a + d) / 2, b=(-disc) ** 0.5 / 2)
    lam = (a + d) / 2
    nilpotent = M - lam * np.eye(2)
    if np.max(np.abs(nilpotent)) <= tol * max(1.0, abs(lam)):
        return EigenStructure("real-distinct", l1=lam, l2=lam, boundary=boundary)
    return EigenStructure("jordan", l1=lam, boundary=boundary)
