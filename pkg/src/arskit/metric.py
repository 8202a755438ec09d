"""Almost-Riemannian structures: validation, singular locus, norm.

An ARS is one linear field (derivation D) plus dim-1 left-invariant frame
fields declared orthonormal together with it.  The frame degenerates on the
singular locus Z (zero set of the frame determinant); the subgroup Z_X of
zeros of the linear field is where left translations are isometries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import (
    GroupTag,
    algebra_model,
    bracket,
    conjugate_derivation,
    is_automorphism,
)
from .exact import is_rational_input
from .group import (
    GroupPoint,
    TangentVector,
    group_exp,
    group_log,
    identity,
    invariant_field_at,
)
from .linfield import LinearField, eval_linear, linear_field
from .polynomials import CoordPoly, poly_det

DEFAULT_TOL = 1e-9
RANK_RCOND = 1e-10

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Validity:
    rank_condition_ok: bool
    open_dense_ok: bool
    messages: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.rank_condition_ok and self.open_dense_ok


@dataclass(frozen=True)
class ARSSpec:
    group_tag: GroupTag
    D: tuple
    frame: tuple  # dim-1 algebra vectors, declared orthonormal with the field

    @property
    def dim(self) -> int:
        return algebra_model(self.group_tag).dim

    @property
    def field(self) -> LinearField:
        return linear_field(self.group_tag, self.D)

    @property
    def is_exact(self) -> bool:
        flat = [x for row in self.D for x in row]
        flat += [x for vec in self.frame for x in vec]
        return is_rational_input(flat)


def make_ars(tag: GroupTag, D, frame, require_valid: bool = True) -> ARSSpec:
    """Build an ARS spec; by default reject specs violating the definition."""
    spec = ARSSpec(tag, tuple(tuple(r) for r in D), tuple(tuple(v) for v in frame))
    model = algebra_model(tag)
    if len(spec.frame) != model.dim - 1:
        raise ValueError(f"{tag} needs {model.dim - 1} frame vectors")
    linear_field(tag, spec.D)  # derivation check
    if require_valid:
        v = validate(spec)
        if not v.ok:
            raise ValueError("invalid ARS: " + "; ".join(v.messages))
    return spec


def field_component_polys(tag: GroupTag, D) -> list[CoordPoly]:
    """Coordinate components of the linear field as polynomials."""
    if tag == "aff2":
        a, b = D[1][0], D[1][1]
        x = CoordPoly.variable(2, 0)
        y = CoordPoly.variable(2, 1)
        return [CoordPoly.constant(2, 0), a * x + b * y - a]
    a, b = D[0][0], D[0][1]
    c, d = D[1][0], D[1][1]
    e, f = D[2][0], D[2][1]
    half = HALF if is_rational_input([a, b, c, d, e, f]) else 0.5
    x = CoordPoly.variable(3, 0)
    y = CoordPoly.variable(3, 1)
    z = CoordPoly.variable(3, 2)
    return [
        a * x + b * y,
        c * x + d * y,
        e * x + f * y + (a + d) * z + (half * c) * (x * x) + (half * b) * (y * y),
    ]


def frame_component_polys(tag: GroupTag, Y: Sequence) -> list[CoordPoly]:
    """Components of the left-invariant field with identity value Y."""
    if tag == "aff2":
        u, v = Y
        x = CoordPoly.variable(2, 0)
        return [u * x, v * x]
    u, v, w = Y
    x = CoordPoly.variable(3, 0)
    return [CoordPoly.constant(3, u), CoordPoly.constant(3, v), w + v * x]


def singular_poly(spec: ARSSpec) -> CoordPoly:
    """Frame determinant as a polynomial (aff2: positive factor x stripped).

    Columns are ordered (Y_1, ..., Y_{n-1}, field), which on heis3 with the
    standard frame {X, Y} gives e*x + f*y + (a+d)z - c/2 x^2 + b/2 y^2 - d*xy.
    """
    tag = spec.group_tag
    cols = [frame_component_polys(tag, Y) for Y in spec.frame]
    cols.append(field_component_polys(tag, spec.D))
    n = spec.dim
    det = poly_det([[cols[j][i] for j in range(n)] for i in range(n)])
    if tag == "aff2":
        det = _strip_x(det)
    return det


def _strip_x(p: CoordPoly) -> CoordPoly:
    """Divide by x when every monomial carries it (aff2 chart has x > 0)."""
    if not p.terms or any(m[0] == 0 for m in p.terms):
        return p
    return CoordPoly(p.nvars, {(m[0] - 1,) + m[1:]: c for m, c in p.terms.items()})


def validate(spec: ARSSpec) -> Validity:
    """Check the rank condition and the open-dense (nondegenerate) condition.

    Rank condition: span of the frame, its brackets, and its D-images must be
    the whole algebra (full rank is reached after one step for these groups).
    Open-dense: the singular-locus polynomial must not vanish identically.
    """
    model = algebra_model(spec.group_tag)
    msgs = []
    vecs = [list(Y) for Y in spec.frame]
    for i, Yi in enumerate(spec.frame):
        for Yj in spec.frame[i + 1:]:
            vecs.append(list(bracket(model, Yi, Yj)))
    D = np.asarray(spec.D, dtype=float)
    for Y in spec.frame:
        vecs.append(list(D @ np.asarray(Y, dtype=float)))
    rank = np.linalg.matrix_rank(np.asarray(vecs, dtype=float).T, tol=1e-10)
    rank_ok = rank == model.dim
    if not rank_ok:
        msgs.append("rank condition fails: frame + brackets + D-images "
                    f"span only {rank} of {model.dim} dimensions")
    frame_rank = np.linalg.matrix_rank(
        np.asarray(spec.frame, dtype=float).T, tol=1e-10)
    if frame_rank != len(spec.frame):
        rank_ok = False
        msgs.append("frame vectors are linearly dependent")
    poly = singular_poly(spec)
    if spec.is_exact:
        open_ok = not poly.is_zero()
    else:
        open_ok = not poly.is_zero(tol=1e-12)
    if not open_ok:
        msgs.append("frame determinant vanishes identically "
                    "(no Riemannian points)")
    return Validity(rank_ok, open_ok, tuple(msgs))


def frame_at(spec: ARSSpec, g: GroupPoint) -> np.ndarray:
    """Matrix whose columns are the field and frame values at g."""
    cols = [eval_linear(spec.field, g).coords]
    cols += [invariant_field_at(Y, g).coords for Y in spec.frame]
    return np.asarray(cols, dtype=float).T


def _local_tol(g: GroupPoint, tol: float) -> float:
    scale = 1.0 + max(abs(float(c)) for c in g.coords)
    return tol * scale


def in_Z(spec: ARSSpec, g: GroupPoint, tol: float = DEFAULT_TOL) -> bool:
    """Membership in the singular locus (frame drops rank)."""
    p = singular_poly(spec).to_float()
    return abs(p([float(c) for c in g.coords])) <= _local_tol(g, tol)


def in_ZX(spec: ARSSpec, g: GroupPoint, tol: float = DEFAULT_TOL) -> bool:
    """Membership in the zero set of the linear field (always inside Z)."""
    v = np.asarray(eval_linear(spec.field, g).coords, dtype=float)
    return float(np.linalg.norm(v)) <= _local_tol(g, tol)


def ars_norm(spec: ARSSpec, V: TangentVector) -> float:
    """Almost-Riemannian norm of a tangent vector.

    Minimum Euclidean length of coefficient vectors c with frame(g) c = V,
    computed as the minimum-norm least-squares solution; math.inf when V is
    not in the column span (the point is singular and V leaves the
    distribution).
    """
    if V.base.group_tag != spec.group_tag:
        raise ValueError("vector base and spec live on different groups")
    A = frame_at(spec, V.base)
    v = np.asarray(V.coords, dtype=float)
    c, *_ = np.linalg.lstsq(A, v, rcond=RANK_RCOND)
    residual = float(np.linalg.norm(A @ c - v))
    if residual > 1e-8 * (1.0 + float(np.linalg.norm(v))):
        return math.inf
    return float(np.linalg.norm(c))


def is_left_translation_isometry(spec: ARSSpec, g: GroupPoint,
                                 tol: float = DEFAULT_TOL) -> bool:
    """L_g is an isometry exactly when the linear field vanishes at g."""
    return in_ZX(spec, g, tol)


@dataclass(frozen=True)
class GroupAutomorphism:
    """Group automorphism lifted from a Lie algebra automorphism."""

    group_tag: GroupTag
    P: tuple

    def __call__(self, g: GroupPoint) -> GroupPoint:
        P = np.asarray(self.P, dtype=float)
        if self.group_tag == "aff2":
            x, y = (float(c) for c in g.coords)
            c, d = P[1, 0], P[1, 1]
            return GroupPoint("aff2", (x, c * (x - 1) + d * y))
        Y = np.asarray(group_log(g), dtype=float)
        return group_exp("heis3", P @ Y)

    def jacobian(self, g: GroupPoint) -> np.ndarray:
        P = np.asarray(self.P, dtype=float)
        if self.group_tag == "aff2":
            return np.array([[1.0, 0.0], [P[1, 0], P[1, 1]]])
        x, y, _ = (float(c) for c in g.coords)
        J_log = np.array([[1, 0, 0], [0, 1, 0], [-y / 2, -x / 2, 1]], dtype=float)
        u, v, _ = P @ np.asarray(group_log(g), dtype=float)
        J_exp = np.array([[1, 0, 0], [0, 1, 0], [v / 2, u / 2, 1]], dtype=float)
        return J_exp @ P @ J_log

    def push_forward(self, V: TangentVector) -> TangentVector:
        return TangentVector(self(V.base), tuple(self.jacobian(V.base) @
                                                 np.asarray(V.coords, float)))


def lift_automorphism(tag: GroupTag, P) -> GroupAutomorphism:
    """Lift an algebra automorphism to the (simply connected) group.

    aff2 uses the closed-form lift; heis3 goes through exp o P o log, which
    is a global polynomial diffeomorphism.
    """
    model = algebra_model(tag)
    if not is_automorphism(model, P):
        raise ValueError("matrix is not a Lie algebra automorphism")
    return GroupAutomorphism(tag, tuple(tuple(row) for row in P))


def _default_sample_points(tag: GroupTag) -> list[GroupPoint]:
    if tag == "aff2":
        grid = [(0.6, -0.9), (1.4, 0.3), (2.2, 1.1), (0.9, 2.0), (3.1, -0.4)]
        return [GroupPoint("aff2", p) for p in grid]
    grid = [(0.7, -0.5, 0.9), (-1.2, 0.8, 0.3), (0.4, 1.6, -1.1),
            (2.0, -0.3, 0.6), (-0.8, -1.4, 1.7)]
    return [GroupPoint("heis3", p) for p in grid]


def _span_matches(P: np.ndarray, frame_a, frame_b, tol: float) -> bool:
    B = np.asarray(frame_b, dtype=float).T
    for Y in frame_a:
        v = P @ np.asarray(Y, dtype=float)
        coeff, *_ = np.linalg.lstsq(B, v, rcond=None)
        if np.linalg.norm(B @ coeff - v) > tol * (1 + np.linalg.norm(v)):
            return False
    return True


def isometry_candidate_check(
    spec_a: ARSSpec,
    spec_b: ARSSpec,
    P,
    sample_points: Sequence[GroupPoint] | None = None,
    tol: float = 1e-6,
    rng: np.random.Generator | None = None,
) -> bool:
    """Test whether the algebra automorphism P lifts to an isometry.

    Checks the three identity-fixing isometry conditions: the lifted map
    sends the distribution of spec_a onto that of spec_b, conjugates the
    derivation onto +-D', and preserves the norm at sample points.
    """
    if spec_a.group_tag != spec_b.group_tag:
        raise ValueError("specs live on different groups")
    tag = spec_a.group_tag
    phi = lift_automorphism(tag, P)  # raises if P is not an automorphism
    Pm = np.asarray(P, dtype=float)

    if not _span_matches(Pm, spec_a.frame, spec_b.frame, tol):
        return False

    conj = np.asarray(conjugate_derivation(P, spec_a.D), dtype=float)
    Db = np.asarray(spec_b.D, dtype=float)
    scale = 1.0 + float(np.max(np.abs(Db)))
    if (np.max(np.abs(conj - Db)) > tol * scale
            and np.max(np.abs(conj + Db)) > tol * scale):
        return False

    if sample_points is None:
        sample_points = _default_sample_points(tag)
    rng = rng or np.random.default_rng(20240817)
    for g in sample_points:
        if in_Z(spec_a, g, tol=1e-6):
            continue  # compare only where both norms are finite and smooth
        for _ in range(4):
            V = TangentVector(g, tuple(rng.normal(size=spec_a.dim)))
            na = ars_norm(spec_a, V)
            nb = ars_norm(spec_b, phi.push_forward(V))
            if not math.isfinite(na) or not math.isfinite(nb):
                return False
            if abs(na - nb) > tol * (1.0 + na):
                return False
    return True
