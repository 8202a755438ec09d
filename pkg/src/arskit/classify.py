"""Canonical forms of simple almost-Riemannian structures.

Three normalization levels are implemented per family: the isometry class
(exact automorphism conjugation), the class up to a global rescaling, and
the class up to a deformation of the metric on the distribution.  The
deformed level lands on a finite table of rows; the stored rows carry the
geometric invariants (singular locus, tangency set, component counts) and
are re-verified against the metric and geodesy modules in the tests.

Float inputs are snapped to rationals (denominator <= 1e6) before any
branching, so classification decisions are exact; square roots introduced
by rotations or eigenvalues fall back to floats only inside the recorded
normalizing matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import conjugate_derivation, eigen2x2
from .exact import (
    frac_matrix,
    frac_vector,
    is_rational_input,
    mat_det,
    mat_inv,
    mat_mul,
    mat_vec,
    ratsqrt,
    to_fraction,
)
from .metric import ARSSpec

F = Fraction
_FLOAT_TOL = 1e-9


# ---------------------------------------------------------------------------
# traces and classes


@dataclass(frozen=True)
class TraceStep:
    """One normalization step.

    Kinds: "automorphism" (conjugate the derivation by `matrix`, map the
    frame through it), "rescaling" (multiply the derivation and the frame by
    `scalar`), "sign-flip" (`target` is "field" for D -> -D or "frame:i" for
    Y_i -> -Y_i), "frame-rotation" (replace the frame by `matrix` times the
    frame; an orthogonal change of orthonormal frame inside the
    distribution), and "metric-deformation" (declare the vectors in `matrix`
    to be the new orthonormal frame; this is the step that changes the
    metric on the distribution).
    """

    kind: str
    matrix: tuple | None = None
    scalar: object = None
    target: str | None = None
    note: str = ""


@dataclass(frozen=True)
class NormalizationTrace:
    steps: tuple = ()

    def extend(self, *steps: TraceStep) -> "NormalizationTrace":
        return NormalizationTrace(self.steps + tuple(steps))


@dataclass(frozen=True)
class ZXSet:
    """Zero set of the linear field: a subgroup (point/line/curve/plane)."""

    kind: str
    description: str
    samples: tuple = ()


@dataclass(frozen=True)
class CanonicalClass:
    group_tag: str
    level: str              # isometry | rescaled | deformed
    family: str             # e.g. "aff2", "heis-sub (iii)", "heis-nonsub 1.i.1"
    parameters: dict
    invariants: dict
    D: tuple
    frame: tuple
    trace: NormalizationTrace = field(default_factory=NormalizationTrace)
    diagnostics: tuple = ()


@dataclass(frozen=True)
class IsometryGroupDescriptor:
    """Isometries fixing nothing (translations) and fixing the identity."""

    translations: ZXSet
    generators: tuple          # nontrivial stabilizer elements, as matrices
    continuous_family: bool = False
    kind: str = "translations-only"
    notes: tuple = ()


def _neg_matrix(D):
    return tuple(tuple(-x for x in row) for row in D)


def _conj(P, D):
    out = conjugate_derivation(P, D)
    if isinstance(out, np.ndarray):
        return tuple(tuple(float(x) for x in row) for row in out)
    return out


def _apply_matrix(P, vec):
    flat = [x for row in P for x in row] + list(vec)
    if is_rational_input(flat):
        return tuple(mat_vec(frac_matrix(P), frac_vector(vec)))
    Pf = np.asarray(P, dtype=float)
    return tuple(float(x) for x in Pf @ np.asarray(vec, dtype=float))


def apply_trace(spec: ARSSpec, trace: NormalizationTrace) -> ARSSpec:
    """Replay a normalization trace on a spec; exact on rational steps."""
    D = spec.D
    frame = list(spec.frame)
    for step in trace.steps:
        if step.kind == "automorphism":
            D = _conj(step.matrix, D)
            frame = [_apply_matrix(step.matrix, v) for v in frame]
        elif step.kind == "rescaling":
            lam = step.scalar
            D = tuple(tuple(lam * x for x in row) for row in D)
            frame = [tuple(lam * x for x in v) for v in frame]
        elif step.kind == "sign-flip":
            if step.target == "field":
                D = _neg_matrix(D)
            else:
                i = int(step.target.split(":")[1])
                frame[i] = tuple(-x for x in frame[i])
        elif step.kind == "frame-rotation":
            R = step.matrix
            new = []
            for i in range(len(frame)):
                acc = None
                for j, v in enumerate(frame):
                    term = tuple(R[i][j] * x for x in v)
                    acc = term if acc is None else tuple(
                        a + b for a, b in zip(acc, term))
                new.append(acc)
            frame = new
        elif step.kind == "metric-deformation":
            frame = [tuple(v) for v in step.matrix]
        else:
            raise ValueError(f"unknown trace step kind: {step.kind!r}")
    return ARSSpec(spec.group_tag, D, tuple(frame))


def _snap_spec(spec: ARSSpec) -> tuple[ARSSpec, bool]:
    """Snap float entries to rationals so branching is exact."""
    if spec.is_exact:
        D = tuple(tuple(to_fraction(x) for x in row) for row in spec.D)
        frame = tuple(tuple(to_fraction(x) for x in v) for v in spec.frame)
        return ARSSpec(spec.group_tag, D, frame), False
    D = tuple(tuple(to_fraction(float(x)) for x in row) for row in spec.D)
    frame = tuple(tuple(to_fraction(float(x)) for x in v)
                  for v in spec.frame)
    return ARSSpec(spec.group_tag, D, frame), True


def _sqrt(q):
    """Exact square root when rational, float otherwise."""
    q = to_fraction(q) if not isinstance(q, float) else q
    if isinstance(q, Fraction):
        r = ratsqrt(q)
        if r is not None:
            return r
        return math.sqrt(float(q))
    return math.sqrt(q)


# ---------------------------------------------------------------------------
# zero set of the linear field


def zx_set(tag: str, D) -> ZXSet:
    """Solve field(g) = 0 exactly for a rational derivation matrix."""
    D = frac_matrix(D)
    if tag == "aff2":
        a, b = D[1][0], D[1][1]
        # zeros of a(x-1) + b y on the half plane x > 0
        if b == 0 and a == 0:
            return ZXSet("plane", "the whole group", ((F(2), F(0)),))
        if b == 0:
            return ZXSet("line", "{(1, y)}", ((F(1), F(1)), (F(1), F(-2))))
        pts = tuple((F(x), a * (1 - F(x)) / b) for x in (F(1, 2), 2, 3))
        return ZXSet("curve", f"{{(x, {a}*(1 - x)/{b})}}", pts)

    a, b = D[0][0], D[0][1]
    c, d = D[1][0], D[1][1]
    e, f = D[2][0], D[2][1]
    tr = a + d
    A = [[a, b], [c, d]]
    detA = mat_det(A)

    def third(x, y, z):
        return e * x + f * y + tr * z + c * x * x / 2 + b * y * y / 2

    if detA != 0:
        if tr != 0:
            return ZXSet("point", "{(0, 0, 0)}", ((F(0), F(0), F(0)),))
        return ZXSet("line", "{(0, 0, z)}",
                     ((F(0), F(0), F(0)), (F(0), F(0), F(1))))
    if A != [[0, 0], [0, 0]]:
        # rank one: kernel line (u, v) t
        u, v = (b, -a) if (a, b) != (0, 0) else (d, -c)
        # third component along the kernel: q(t) + tr * z
        q2 = (c * u * u + b * v * v) / 2
        q1 = e * u + f * v
        if tr != 0:
            pts = tuple(
                (u * t, v * t, -(q1 * t + q2 * t * t) / tr)
                for t in (F(0), F(1), F(-1))
            )
            return ZXSet("curve",
                         f"{{({u}t, {v}t, -({q1}t + {q2}t^2)/{tr})}}", pts)
        if q1 == 0 and q2 == 0:
            pts = ((F(0), F(0), F(0)), (u, v, F(0)), (F(0), F(0), F(1)))
            return ZXSet("plane", f"{{({u}t, {v}t, z)}}", pts)
        # roots of q(t) = 0 give vertical lines
        roots = [F(0)] if q2 == 0 else (
            [F(0), -q1 / q2] if q1 != 0 else [F(0)])
        pts = []
        for t in roots:
            pts += [(u * t, v * t, F(0)), (u * t, v * t, F(1))]
        return ZXSet("line", "{(0, 0, z)}" if roots == [F(0)]
                     else f"vertical lines over t in {roots}", tuple(pts))
    # A = 0: zeros of e x + f y (+ tr z, but tr = 0 here)
    if e == 0 and f == 0:
        return ZXSet("plane", "the whole group", ((F(1), F(1), F(1)),))
    u, v = (f, -e)
    pts = ((F(0), F(0), F(0)), (u, v, F(0)), (u, v, F(1)),
           (F(0), F(0), F(1)))
    return ZXSet("plane", f"{{x,y,z: {e}x + {f}y = 0}}", pts)


# ---------------------------------------------------------------------------
# Aff+(2)


def _aff2_data(spec: ARSSpec):
    (alpha, beta), = spec.frame
    a, b = spec.D[1][0], spec.D[1][1]
    return alpha, beta, a, b


def aff2_isometry_class(spec: ARSSpec):
    """Canonical isometry class on Aff+(2): frame alpha*X, D = [[0,0],[1,b]].

    Returns (CanonicalClass, NormalizationTrace) with alpha > 0 and b >= 0.
    """
    if spec.group_tag != "aff2":
        raise ValueError("aff2_isometry_class needs an aff2 spec")
    spec, snapped = _snap_spec(spec)
    alpha, beta, a, b = _aff2_data(spec)
    if alpha * (a * alpha + b * beta) == 0:
        raise ValueError("rank condition fails: alpha (a alpha + b beta) = 0")

    steps = []
    diagnostics = ("input snapped to rational entries",) if snapped else ()
    if alpha < 0:
        steps.append(TraceStep("sign-flip", target="frame:0",
                               note="make alpha positive"))
        alpha, beta = -alpha, -beta
    if b < 0:
        steps.append(TraceStep("sign-flip", target="field",
                               note="make b nonnegative (field -> -field)"))
        a, b = -a, -b
    k = a * alpha + b * beta
    P = ((F(1), F(0)), (-beta / k, alpha / k))
    steps.append(TraceStep("automorphism", matrix=P,
                           note="send the frame vector to alpha X"))
    D_can = ((F(0), F(0)), (F(1), b))
    frame_can = ((alpha, F(0)),)
    trace = NormalizationTrace(tuple(steps))
    zx = zx_set("aff2", D_can)
    cls = CanonicalClass(
        "aff2", "isometry", "aff2",
        parameters={"alpha": alpha, "b": b},
        invariants={"eigenvalues": (F(0), b),
                    "Z": f"{{x + {b}y = 1}}" if b else "{x = 1}",
                    "Z_X": zx},
        D=D_can, frame=frame_can, trace=trace, diagnostics=diagnostics,
    )
    return cls, trace


def aff2_rescaled_class(cls: CanonicalClass) -> CanonicalClass:
    """Rescaled class: frame X, D = [[0,0],[1,b/alpha]]."""
    if cls.level != "isometry" or cls.group_tag != "aff2":
        raise ValueError("expected an aff2 isometry-level class")
    alpha = cls.parameters["alpha"]
    b = cls.parameters["b"] / alpha
    steps = (
        TraceStep("rescaling", scalar=1 / alpha,
                  note="global rescaling to a unit frame vector"),
        TraceStep("automorphism", matrix=((F(1), F(0)), (F(0), alpha)),
                  note="restore the (2,1) entry of D to 1"),
    )
    D_can = ((F(0), F(0)), (F(1), b))
    zx = zx_set("aff2", D_can)
    return CanonicalClass(
        "aff2", "rescaled", "aff2",
        parameters={"b": b},
        invariants={"eigenvalues": (F(0), b),
                    "Z": f"{{x + {b}y = 1}}" if b else "{x = 1}",
                    "Z_X": zx},
        D=D_can, frame=((F(1), F(0)),),
        trace=cls.trace.extend(*steps), diagnostics=cls.diagnostics,
    )


def aff2_deformed_class(cls: CanonicalClass) -> CanonicalClass:
    """Deformed class: b in {0, 1}; b = 0 iff Z is a normal subgroup."""
    if cls.group_tag != "aff2":
        raise ValueError("expected an aff2 class")
    if cls.level == "isometry":
        cls = aff2_rescaled_class(cls)
    b = cls.parameters["b"]
    steps = []
    b_def = F(0) if b == 0 else F(1)
    D_can = ((F(0), F(0)), (F(1), b_def))
    if b not in (0, 1):
        steps.append(TraceStep("automorphism",
                               matrix=((F(1), F(0)), (F(0), b)),
                               note="stretch Y: D becomes [[0,0],[b,b]]"))
        steps.append(TraceStep("rescaling", scalar=1 / b,
                               note="rescale the derivation to [[0,0],[1,1]]"))
        steps.append(TraceStep(
            "metric-deformation", matrix=((F(1), F(0)),),
            note="deform the metric: declare X a unit vector again"))
    zx = zx_set("aff2", D_can)
    return CanonicalClass(
        "aff2", "deformed", "aff2",
        parameters={"b": b_def},
        invariants={"eigenvalues": (F(0), b_def),
                    "Z": "{x + y = 1}" if b_def else "{x = 1}",
                    "Z_X": zx,
                    "Z_normal": b_def == 0},
        D=D_can, frame=((F(1), F(0)),),
        trace=cls.trace.extend(*steps), diagnostics=cls.diagnostics,
    )


def aff2_isometry_group(spec: ARSSpec) -> IsometryGroupDescriptor:
    """Isometry group descriptor: translations by Z_X plus the stabilizer.

    The identity stabilizer is trivial for b != 0.  For b = 0 the flip
    diag(1, -1) conjugates D to -D and preserves the frame span, hence is an
    isometry; the published statement omits it, so it is reported with a
    note.
    """
    cls, _ = aff2_isometry_class(spec)
    b = cls.parameters["b"]
    zx = cls.invariants["Z_X"]
    if b == 0:
        return IsometryGroupDescriptor(
            translations=zx,
            generators=(((F(1), F(0)), (F(0), F(-1))),),
            kind="discrete",
            notes=("diag(1,-1) sends the field to its negative and "
                   "preserves the norm; the published statement lists "
                   "translations only",),
        )
    return IsometryGroupDescriptor(translations=zx, generators=(),
                                   kind="translations-only")


# ---------------------------------------------------------------------------
# Heisenberg: common helpers


def heis_delta_is_subalgebra(spec: ARSSpec, tol: float = _FLOAT_TOL) -> bool:
    """True iff [B1, B2] lies in span(B1, B2).

    On heis(3) the bracket of the frame is (a1 b2 - b1 a2) Z, and Z lies in
    the distribution exactly when the xy projections of the frame are
    dependent; both reduce to the same 2x2 determinant.
    """
    if spec.group_tag != "heis3":
        raise ValueError("heis_delta_is_subalgebra needs a heis3 spec")
    (a1, b1, _), (a2, b2, _) = spec.frame
    mu = a1 * b2 - b1 * a2
    if spec.is_exact:
        return mu == 0
    scale = 1.0 + max(abs(float(v)) for vec in spec.frame for v in vec) ** 2
    return abs(float(mu)) <= tol * scale


def _pee(eps, epsp):
    """The sign automorphism diag(eps, eps*epsp, epsp)."""
    z = F(0)
    return ((F(eps), z, z), (z, F(eps * epsp), z), (z, z, F(epsp)))


def _heis_params(D) -> dict:
    return {"a": D[0][0], "b": D[0][1], "c": D[1][0], "d": D[1][1],
            "e": D[2][0], "f": D[2][1]}


# ---------------------------------------------------------------------------
# Heisenberg, distribution a subalgebra


def heis_sub_isometry_class(spec: ARSSpec):
    """Canonical class with frame {X, Z}: D = [[0,b,0],[c,d,0],[0,f,d]].

    Normalized so that c > 0 and d, f >= 0; b keeps its sign.
    """
    if spec.group_tag != "heis3":
        raise ValueError("heis_sub_isometry_class needs a heis3 spec")
    spec, snapped = _snap_spec(spec)
    if not heis_delta_is_subalgebra(spec):
        raise ValueError("distribution is not a subalgebra; use the "
                         "non-subalgebra classifier")
    diagnostics = ("input snapped to rational entries",) if snapped else ()
    B1, B2 = [frac_vector(v) for v in spec.frame]
    steps = []

    # rotate the orthonormal frame so the second vector is proportional to Z
    a1, b1 = B1[0], B1[1]
    a2, b2 = B2[0], B2[1]
    k = (a2, -a1) if (a1, a2) != (0, 0) else (b2, -b1)
    s0 = k[0] * B1[2] + k[1] * B2[2]
    if _is_zero(s0):
        raise ValueError("frame vectors are linearly dependent")
    p, q = k[0] / s0, k[1] / s0          # Z = p B1 + q B2
    r = _sqrt(p * p + q * q)             # 1/r is the norm of Z
    R = ((q / r, -p / r), (p / r, q / r))
    if R != ((1, 0), (0, 1)):
        steps.append(TraceStep("frame-rotation", matrix=R,
                               note="rotate the frame so Y_2 = Z / |Z|"))
    u1 = tuple((q * x1 - p * x2) / r for x1, x2 in zip(B1, B2))
    w = mat_vec(frac_matrix(spec.D), u1) if not isinstance(r, float) else \
        tuple(float(x) for x in
              np.asarray(spec.D, float) @ np.asarray(u1, float))

    M = [[u1[0], w[0]], [u1[1], w[1]]]
    detM = M[0][0] * M[1][1] - M[0][1] * M[1][0]
    if _is_zero(detM):
        raise ValueError("rank condition fails: D u1 stays in the "
                         "distribution (canonical c would be 0)")
    s = r * detM
    Minv = ((M[1][1] / detM, -M[0][1] / detM),
            (-M[1][0] / detM, M[0][0] / detM))
    A = ((Minv[0][0], Minv[0][1]),
         (s * Minv[1][0], s * Minv[1][1]))
    # bottom row (eps0, zeta0, r): solve M^T (eps0, zeta0) = -r (u1_z, w_z)
    rhs = (-r * u1[2], -r * w[2])
    det_t = M[0][0] * M[1][1] - M[1][0] * M[0][1]
    eps0 = (rhs[0] * M[1][1] - rhs[1] * M[1][0]) / det_t
    zeta0 = (M[0][0] * rhs[1] - M[0][1] * rhs[0]) / det_t
    P = ((A[0][0], A[0][1], 0), (A[1][0], A[1][1], 0), (eps0, zeta0, r))
    steps.append(TraceStep("automorphism", matrix=P,
                           note="map the frame to {X, Z}"))
    D1 = _conj(P, spec.D)
    pr = _heis_params(D1)
    b, c, d, f = (_clean(pr[k]) for k in "bcdf")

    if d < 0 and not _is_zero(d):
        steps.append(TraceStep("sign-flip", target="field",
                               note="make d nonnegative"))
        b, c, d, f = -b, -c, -d, -f
    epsp = -1 if c < 0 else 1
    eps = -1 if f < 0 else 1
    if (eps, epsp) != (1, 1):
        steps.append(TraceStep("automorphism", matrix=_pee(eps, epsp),
                               note=f"sign fix eps={eps}, eps'={epsp}"))
        b, c, f = epsp * b, epsp * c, eps * f
        if eps == -1:
            steps.append(TraceStep("sign-flip", target="frame:0",
                                   note="restore +X"))
        if epsp == -1:
            steps.append(TraceStep("sign-flip", target="frame:1",
                                   note="restore +Z"))

    z = F(0)
    D_can = ((z, b, z), (c, d, z), (z, f, d))
    frame_can = ((F(1), z, z), (z, z, F(1)))
    trace = NormalizationTrace(tuple(steps))
    eig = eigen2x2(((F(0), b), (c, d)) if not isinstance(b, float)
                   else ((0.0, float(b)), (float(c), float(d))))
    cls = CanonicalClass(
        "heis3", "isometry", "heis-sub",
        parameters={"b": b, "c": c, "d": d, "f": f},
        invariants={"eigenvalues": eig, "Z_X": zx_set("heis3", D_can)
                    if not isinstance(b, float) else None},
        D=D_can, frame=frame_can, trace=trace, diagnostics=diagnostics,
    )
    return cls, trace


SUB_ROWS = {
    "i": {"d": F(1), "f": F(0), "b": "b > -1/4, b != 0",
          "Z": "x + y = 0", "zx_kind": "point",
          "eigenvalues": "l = (1 +- sqrt(1 + 4b))/2"},
    "ii": {"d": F(1), "f": F(0), "b": "b < -1/4",
           "Z": "x + y = 0", "zx_kind": "point",
           "eigenvalues": "l = (1 +- sqrt(-(1 + 4b)) i)/2"},
    "iii": {"d": F(1), "f": F(1), "b": F(0),
            "Z": "x + y = 0", "zx_kind": "curve",
            "zx_samples": ((F(1), F(-1), F(1, 2)), (F(-1), F(1), F(-3, 2))),
            "eigenvalues": "0, 1"},
    "iv": {"d": F(1), "f": F(0), "b": F(0),
           "Z": "x + y = 0", "zx_kind": "curve",
           "zx_samples": ((F(1), F(-1), F(-1, 2)), (F(-1), F(1), F(-1, 2))),
           "eigenvalues": "0, 1"},
    "v": {"d": F(0), "f": F(0), "b": F(1),
          "Z": "x = 0", "zx_kind": "line",
          "zx_samples": ((F(0), F(0), F(0)), (F(0), F(0), F(2))),
          "eigenvalues": "+-1"},
    "vi": {"d": F(0), "f": F(0), "b": F(-1),
           "Z": "x = 0", "zx_kind": "line",
           "zx_samples": ((F(0), F(0), F(0)), (F(0), F(0), F(2))),
           "eigenvalues": "+-i"},
    "vii": {"d": F(0), "f": F(1), "b": F(0),
            "Z": "x = 0", "zx_kind": "line",
            "zx_samples": ((F(0), F(0), F(0)), (F(0), F(0), F(2))),
            "eigenvalues": "0, 0"},
    "viii": {"d": F(0), "f": F(0), "b": F(0),
             "Z": "x = 0", "zx_kind": "plane",
             "zx_samples": ((F(0), F(0), F(0)), (F(0), F(1), F(0)),
                            (F(0), F(1), F(2))),
             "eigenvalues": "0, 0"},
}


def heis_sub_deformed_class(cls: CanonicalClass) -> CanonicalClass:
    """Rescale c -> 1 and deform to a table row (i)..(viii)."""
    if cls.family != "heis-sub" or cls.level != "isometry":
        raise ValueError("expected a heis-sub isometry-level class")
    b, c, d, f = (_clean(cls.parameters[k]) for k in "bcdf")
    z = F(0)
    steps = []
    diagnostics = list(cls.diagnostics)

    # rescale: conjugate by diag(c, 1, c), then declare {X, Z} orthonormal
    # again (a global metric rescaling by 1/c)
    if c != 1:
        steps.append(TraceStep("automorphism",
                               matrix=((c, z, z), (z, F(1), z), (z, z, c)),
                               note="normalize c to 1"))
        steps.append(TraceStep("metric-deformation",
                               matrix=((F(1), z, z), (z, z, F(1))),
                               note=f"global metric rescaling by 1/{c}"))
        b, f = c * b, c * f

    if not _is_zero(d):
        steps.append(TraceStep("rescaling", scalar=1 / d,
                               note="rescale so d = 1"))
        steps.append(TraceStep("automorphism",
                               matrix=((1 / d, z, z), (z, F(1), z),
                                       (z, z, 1 / d)),
                               note="restore c = 1"))
        steps.append(TraceStep("metric-deformation",
                               matrix=((F(1), z, z), (z, z, F(1))),
                               note="declare {X, Z} orthonormal again"))
        b, f, d = b / d ** 2, f / d ** 2, F(1)
        if not _is_zero(b):
            if not _is_zero(f):
                eps0 = -f / b
                steps.append(TraceStep(
                    "automorphism",
                    matrix=((F(1), z, z), (z, F(1), z), (eps0, eps0, F(1))),
                    note="kill f using the inner automorphism"))
                f = F(0)
            boundary = b == F(-1, 4)
            row = "ii" if b < F(-1, 4) else "i"
            if boundary:
                diagnostics.append("boundary case b = -1/4: repeated real "
                                   "eigenvalue 1/2, reported as row (i)")
            params = {"b": b, "d": F(1), "f": F(0)}
        elif not _is_zero(f):
            alpha = 1 / f
            steps.append(TraceStep(
                "automorphism",
                matrix=((alpha, z, z), (z, alpha, z), (z, z, alpha ** 2)),
                note="normalize f to 1"))
            f = F(1)
            row, params = "iii", {"b": F(0), "d": F(1), "f": F(1)}
        else:
            row, params = "iv", {"b": F(0), "d": F(1), "f": F(0)}
    else:
        if not _is_zero(b):
            if not _is_zero(f):
                eps0 = -f / b
                steps.append(TraceStep(
                    "automorphism",
                    matrix=((F(1), z, z), (z, F(1), z), (eps0, z, F(1))),
                    note="kill f using the inner automorphism"))
                f = F(0)
            t = _sqrt(abs(b))
            if t != 1:
                steps.append(TraceStep(
                    "automorphism",
                    matrix=((F(1) if not isinstance(t, float) else 1.0, z, z),
                            (z, t, z), (z, z, t)),
                    note="scale |b| to 1"))
                steps.append(TraceStep("rescaling", scalar=1 / t,
                                       note="restore c = 1"))
                steps.append(TraceStep(
                    "metric-deformation",
                    matrix=((F(1), z, z), (z, z, F(1))),
                    note="declare {X, Z} orthonormal again"))
            row = "v" if b > 0 else "vi"
            b = F(1) if b > 0 else F(-1)
            params = {"b": b, "d": F(0), "f": F(0)}
        elif not _is_zero(f):
            alpha, delta = f, f ** 3
            steps.append(TraceStep(
                "automorphism",
                matrix=((alpha, z, z), (z, delta, z), (z, z, alpha * delta)),
                note="move toward f = 1"))
            steps.append(TraceStep("rescaling", scalar=1 / f ** 2,
                                   note="finish normalizing f to 1"))
            steps.append(TraceStep(
                "metric-deformation",
                matrix=((F(1), z, z), (z, z, F(1))),
                note="declare {X, Z} orthonormal again"))
            row, params = "vii", {"b": F(0), "d": F(0), "f": F(1)}
        else:
            row, params = "viii", {"b": F(0), "d": F(0), "f": F(0)}

    steps.append(TraceStep(
        "metric-deformation", matrix=((F(1), z, z), (z, z, F(1))),
        note="declare the canonical frame {X, Z} orthonormal"))
    b, d, f = params["b"], params["d"], params["f"]
    D_can = ((z, b, z), (F(1), d, z), (z, f, d))
    table = SUB_ROWS[row]
    eig = eigen2x2(((F(0), b), (F(1), d)))
    return CanonicalClass(
        "heis3", "deformed", f"heis-sub ({row})",
        parameters=params,
        invariants={"eigenvalues": eig, "Z": table["Z"],
                    "Z_X": zx_set("heis3", D_can), "row": row,
                    "table": table},
        D=D_can, frame=((F(1), z, z), (z, z, F(1))),
        trace=cls.trace.extend(*steps), diagnostics=tuple(diagnostics),
    )


def heis_sub_isometry_group(cls: CanonicalClass) -> IsometryGroupDescriptor:
    """Stabilizer = the sign automorphisms with P D P^-1 = +-D.

    Branches exactly on (d != 0, f != 0): identity only; {P_{eps,1}};
    {I, P_{-1,-1}}; all four.
    """
    if not cls.family.startswith("heis-sub"):
        raise ValueError("expected a heis-sub class")
    b, d, f = cls.parameters["b"], cls.parameters["d"], cls.parameters["f"]
    c = cls.parameters.get("c", F(1))
    gens = []
    for eps in (1, -1):
        for epsp in (1, -1):
            if (eps, epsp) == (1, 1):
                continue
            # action on the entries: (b, c, f) -> (eps' b, eps' c, eps f)
            for sigma in (1, -1):
                if (epsp * b == sigma * b and epsp * c == sigma * c
                        and eps * f == sigma * f and d == sigma * d):
                    gens.append(_pee(eps, epsp))
                    break
    kind = "translations-only" if not gens else "discrete"
    return IsometryGroupDescriptor(
        translations=cls.invariants.get("Z_X") or zx_set("heis3", cls.D),
        generators=tuple(gens), kind=kind,
    )


# ---------------------------------------------------------------------------
# Heisenberg, distribution not a subalgebra


def _rotation_auto(cth, sth):
    one = F(1) if not isinstance(cth, float) else 1.0
    z = one - one
    return ((cth, -sth, z), (sth, cth, z), (z, z, one))


def heis_nonsub_isometry_class(spec: ARSSpec):
    """Canonical class with frame {X, Y}: e = 0 and c, f >= 0."""
    if spec.group_tag != "heis3":
        raise ValueError("heis_nonsub_isometry_class needs a heis3 spec")
    spec, snapped = _snap_spec(spec)
    if heis_delta_is_subalgebra(spec):
        raise ValueError("distribution is a subalgebra; use the "
                         "subalgebra classifier")
    diagnostics = ["input snapped to rational entries"] if snapped else []
    B1, B2 = [frac_vector(v) for v in spec.frame]
    mu = B1[0] * B2[1] - B1[1] * B2[0]
    M3 = [[B1[0], B2[0], 0], [B1[1], B2[1], 0], [B1[2], B2[2], 1]]
    N = [[F(1), 0, 0], [0, F(1), 0], [0, 0, 1 / mu]]
    P = tuple(tuple(row) for row in mat_mul(N, mat_inv(M3)))
    steps = [TraceStep("automorphism", matrix=P,
                       note="map the frame to {X, Y}")]
    D1 = _conj(P, spec.D)
    pr = _heis_params(D1)
    a, b, c, d, e, f = (pr[k] for k in "abcdef")

    if (e, f) != (0, 0):
        r = _sqrt(e * e + f * f)
        cth, sth = f / r, e / r
        if (cth, sth) != (1, 0):
            Pr = _rotation_auto(cth, sth)
            steps.append(TraceStep("automorphism", matrix=Pr,
                                   note="rotate so e = 0"))
            steps.append(TraceStep(
                "frame-rotation", matrix=((cth, -sth), (sth, cth)),
                note="rotate the orthonormal frame back to {X, Y}"))
            D1 = _conj(Pr, ((a, b, 0), (c, d, 0), (e, f, a + d)))
            pr = _heis_params(D1)
            a, b, c, d, e, f = (pr[k] for k in "abcdef")
            if not isinstance(r, float):
                e = F(0)

    epsp = -1 if c < 0 else 1
    eps = -1 if f < 0 else 1
    if (eps, epsp) != (1, 1):
        steps.append(TraceStep("automorphism", matrix=_pee(eps, epsp),
                               note=f"sign fix eps={eps}, eps'={epsp}"))
        b, c = epsp * b, epsp * c
        e, f = eps * epsp * e, eps * f
        if eps == -1:
            steps.append(TraceStep("sign-flip", target="frame:0",
                                   note="restore +X"))
        if eps * epsp == -1:
            steps.append(TraceStep("sign-flip", target="frame:1",
                                   note="restore +Y"))

    if b == 0 and c == 0 and f == 0 and a + d == 0:
        raise ValueError("excluded by the classification: b = c = f = 0 "
                         "requires a + d != 0")

    z = F(0) if not isinstance(a, float) else 0.0
    one = F(1) if not isinstance(a, float) else 1.0
    D_can = ((a, b, z), (c, d, z), (e, f, a + d))
    frame_can = ((one, z, z), (z, one, z))
    trace = NormalizationTrace(tuple(steps))
    eig = eigen2x2(((a, b), (c, d)))
    cls = CanonicalClass(
        "heis3", "isometry", "heis-nonsub",
        parameters={"a": a, "b": b, "c": c, "d": d, "e": e, "f": f},
        invariants={"eigenvalues": eig,
                    "Z_X": zx_set("heis3", D_can)
                    if not isinstance(a, float) else None},
        D=D_can, frame=frame_can, trace=trace,
        diagnostics=tuple(diagnostics),
    )
    return cls, trace


def _tang_point(*coords):
    return {"kind": "isolated points", "points": (tuple(coords),)}


NONSUB_ROWS = {
    # family 1: diagonalizable block diag(1, l2) (or diag(1, 0), diag(0, 0))
    "1.i.1": {"pattern": (1, 1), "locus": "submanifold", "components": 2,
              "tangency": lambda p: _tang_point(
                  F(-1), 1 / p["l2"], -1 / (p["l2"] * (1 + p["l2"])))},
    "1.i.2": {"pattern": (1, 0), "locus": "submanifold", "components": 2,
              "tangency": lambda p: _tang_point(F(0), 1 / p["l2"], F(0))},
    "1.i.3": {"pattern": (0, 0), "locus": "submanifold", "components": 2,
              "tangency": lambda p: _tang_point(F(0), F(0), F(0))},
    "1.ii.1": {"pattern": (1, 1), "locus": "submanifold", "components": 3,
               "tangency": lambda p: {"kind": "empty"}},
    "1.ii.2": {"pattern": (1, 0), "locus": "not-a-submanifold",
               "components": 4,
               "tangency": lambda p: {"kind": "line",
                                      "base": (F(0), F(-1), F(0)),
                                      "direction": (F(0), F(0), F(1))},
               "notes": ("published line (0, 1, z) has a sign slip; the "
                         "tangency line is (0, -1, z)",)},
    "1.iii.1": {"pattern": (1, 1), "locus": "submanifold", "components": 2,
                "tangency": lambda p: {"kind": "empty"}},
    "1.iii.2": {"pattern": (0, 1), "locus": "submanifold", "components": 2,
                "tangency": lambda p: {"kind": "line",
                                       "base": (F(-1), F(0), F(0)),
                                       "direction": (F(0), F(1), F(-1))}},
    "1.iii.3": {"pattern": (1, 0), "locus": "submanifold", "components": 2,
                "tangency": lambda p: {"kind": "empty"}},
    "1.iii.4": {"pattern": (0, 0), "locus": "not-a-submanifold",
                "components": 2,
                "tangency": lambda p: {"kind": "line",
                                       "base": (F(0), F(0), F(0)),
                                       "direction": (F(0), F(1), F(0))}},
    "1.iv.1": {"pattern": (0, 1), "locus": "Lie-subgroup", "components": 2,
               "tangency": lambda p: {"kind": "empty"}},
    # family 2: Jordan block [[l1, 1], [0, l1]]
    "2.i.1": {"pattern": (1, 1), "locus": "submanifold", "components": 2,
              "tangency": lambda p: _tang_point(
                  -1 / p["l1"] - 1 / p["l1"] ** 2, 1 / p["l1"],
                  -1 / (4 * p["l1"] ** 2) - 1 / (2 * p["l1"]))},
    "2.i.2": {"pattern": (0, 1), "locus": "submanifold", "components": 2,
              "tangency": lambda p: _tang_point(F(-1), F(0), F(0))},
    "2.i.3": {"pattern": (1, 0), "locus": "submanifold", "components": 2,
              "tangency": lambda p: _tang_point(F(-1), F(1), F(-1, 4))},
    "2.i.4": {"pattern": (0, 0), "locus": "submanifold", "components": 2,
              "tangency": lambda p: _tang_point(F(0), F(0), F(0))},
    "2.ii.1": {"pattern": (1, 1), "locus": "submanifold", "components": 2,
               "tangency": lambda p: {"kind": "empty"},
               "notes": ("published table prints l1 in R* for the 2.ii "
                         "rows; the Jordan case 2.ii has l1 = 0",)},
    "2.ii.2": {"pattern": (0, 1), "locus": "not-a-submanifold",
               "components": 3,
               "tangency": lambda p: {"kind": "empty"},
               "notes": ("published table prints l1 = 1 for this row; the "
                         "Jordan case 2.ii has l1 = 0",)},
    "2.ii.3": {"pattern": (1, 0), "locus": "submanifold", "components": 2,
               "tangency": lambda p: {"kind": "empty"},
               "notes": ("published table prints l1 = 1 for this row; the "
                         "Jordan case 2.ii has l1 = 0",)},
    "2.ii.4": {"pattern": (0, 0), "locus": "Lie-subgroup", "components": 2,
               "tangency": lambda p: {"kind": "all-of-Z"},
               "notes": ("published table prints l1 = 1 for this row; the "
                         "Jordan case 2.ii has l1 = 0",)},
    # family 3: conformal block [[a, -b], [b, a]]
    "3.i.1": {"pattern": (0, 1), "locus": "submanifold", "components": 2,
              "tangency": lambda p: _tang_point(
                  -1 / (1 + p["b"] ** 2), p["b"] / (1 + p["b"] ** 2),
                  _three_i_z(p["b"]))},
    "3.i.2": {"pattern": (0, 0), "locus": "submanifold", "components": 2,
              "tangency": lambda p: _tang_point(F(0), F(0), F(0))},
    "3.ii.1": {"pattern": (0, 1), "locus": "submanifold", "components": 2,
               "tangency": lambda p: {"kind": "empty"}},
    "3.ii.2": {"pattern": (0, 0), "locus": "Lie-subgroup", "components": 1,
               "tangency": lambda p: {"kind": "line",
                                      "base": (F(0), F(0), F(0)),
                                      "direction": (F(0), F(0), F(1))}},
}


def _three_i_z(b):
    """z coordinate of the 3.i.1 tangency point, from p(x, y, z) = 0."""
    # canonical 3.i.1: A = [[1, -b], [b, 1]], (e, f) = (0, 1)
    den = 1 + b * b
    x, y = -1 / den, b / den
    # p = y + 2z - (b/2) x^2 - (b/2) y^2 - x y  (entries a=1, b_D=-b, c=b, d=1)
    return (b / 2 * (x * x + y * y) + x * y - y) / 2


def _swap_step():
    z = F(0)
    return TraceStep("automorphism",
                     matrix=((z, F(1), z), (F(1), z, z), (z, z, F(-1))),
                     note="swap X and Y")


def _diag_step(p, q, note):
    z = F(0) if not (isinstance(p, float) or isinstance(q, float)) else 0.0
    return TraceStep("automorphism",
                     matrix=((p, z, z), (z, q, z), (z, z, p * q)), note=note)


def _flip_field_step(note="field sign flip"):
    return TraceStep("sign-flip", target="field", note=note)


class _Reducer:
    """Tracks the derivation through the deformed-level moves."""

    def __init__(self, D, steps):
        self.D = D
        self.steps = list(steps)

    def auto(self, step: TraceStep):
        self.steps.append(step)
        self.D = _conj(step.matrix, self.D)

    def flip(self, note="field sign flip"):
        self.steps.append(_flip_field_step(note))
        self.D = _neg_matrix(self.D)

    def rescale(self, lam, note):
        self.steps.append(TraceStep("rescaling", scalar=lam, note=note))
        self.D = tuple(tuple(lam * x for x in row) for row in self.D)

    def deform(self, note):
        z = F(0)
        self.steps.append(TraceStep(
            "metric-deformation",
            matrix=((F(1), z, z), (z, F(1), z)), note=note))

    @property
    def params(self):
        return _heis_params(self.D)


def _eigvec(A, lam):
    v = (A[0][1], lam - A[0][0])
    if v == (0, 0) or (isinstance(v[0], float)
                       and abs(v[0]) + abs(v[1]) < _FLOAT_TOL):
        v = (lam - A[1][1], A[1][0])
    return v


def _block_conj_step(V, note):
    """Automorphism from a 2x2 basis change V (columns): M = V^-1."""
    if is_rational_input([x for row in V for x in row]):
        M = mat_inv(frac_matrix(V))
        detM = mat_det(M)
        z = F(0)
    else:
        M = np.linalg.inv(np.asarray(V, dtype=float))
        detM = float(np.linalg.det(M))
        M = [[float(x) for x in row] for row in M]
        z = 0.0
    return TraceStep("automorphism",
                     matrix=((M[0][0], M[0][1], z), (M[1][0], M[1][1], z),
                             (z, z, detM)), note=note)


def _is_zero(x):
    if isinstance(x, float):
        return abs(x) < _FLOAT_TOL
    return x == 0


def _clean(x):
    """Clamp float noise to an exact zero so branching stays consistent."""
    if isinstance(x, float) and abs(x) < _FLOAT_TOL:
        return 0.0
    return x


def heis_nonsub_deformed_class(cls: CanonicalClass) -> CanonicalClass:
    """Reduce the block to D1/D2/D3 form and land on a table row."""
    if cls.family != "heis-nonsub" or cls.level != "isometry":
        raise ValueError("expected a heis-nonsub isometry-level class")
    a, b, c, d = (cls.parameters[k] for k in "abcd")
    A = ((a, b), (c, d))
    eig = eigen2x2(A)
    red = _Reducer(cls.D, [])
    red.deform("deformation level: frame distortions are allowed")
    diagnostics = list(cls.diagnostics)

    if eig.kind == "real-distinct":
        label, params = _reduce_diagonalizable(red, A, eig, diagnostics)
    elif eig.kind == "jordan":
        label, params = _reduce_jordan(red, A, eig, diagnostics)
    else:
        label, params = _reduce_conformal(red, A, eig, diagnostics)

    red.deform("declare the canonical frame {X, Y} orthonormal")
    table = NONSUB_ROWS[label]
    diagnostics.extend(table.get("notes", ()))
    D_can = red.D
    z = F(0)
    eig_can = eigen2x2(((D_can[0][0], D_can[0][1]),
                        (D_can[1][0], D_can[1][1])))
    invariants = {
        "eigenvalues": eig_can,
        "locus": table["locus"],
        "components": table["components"],
        "tangency": table["tangency"](params),
        "row": label,
    }
    try:
        invariants["Z_X"] = zx_set("heis3", D_can)
    except (TypeError, ValueError):
        invariants["Z_X"] = None
    return CanonicalClass(
        "heis3", "deformed", f"heis-nonsub {label}",
        parameters=params, invariants=invariants,
        D=D_can, frame=((F(1), z, z), (z, F(1), z)),
        trace=cls.trace.extend(*red.steps), diagnostics=tuple(diagnostics),
    )


def _reduce_diagonalizable(red, A, eig, diagnostics):
    scalar = _is_zero(A[0][1]) and _is_zero(A[1][0]) and \
        _is_zero(A[0][0] - A[1][1])
    if not scalar and not _is_zero(eig.l1 - eig.l2):
        v1, v2 = _eigvec(A, eig.l1), _eigvec(A, eig.l2)
        red.auto(_block_conj_step(((v1[0], v2[0]), (v1[1], v2[1])),
                                  "diagonalize the block"))
    p = red.params
    m1, m2, e, f = p["a"], p["d"], p["e"], p["f"]

    if _is_zero(m1) and _is_zero(m2):
        # family 1.iv: zero block
        if _is_zero(e) and _is_zero(f):
            raise ValueError("zero derivation does not define an ARS")
        if not _is_zero(e):
            r = _sqrt(e * e + f * f)
            red.auto(TraceStep("automorphism",
                               matrix=_rotation_auto(f / r, e / r),
                               note="rotate (e, f) to (0, r)"))
        p = red.params
        f = p["f"]
        red.auto(_diag_step(1 / f, F(1), "normalize f to 1"))
        return "1.iv.1", {"e": F(0), "f": F(1)}

    one_zero = _is_zero(m1) != _is_zero(m2)
    opposite = (not one_zero) and _is_zero(m1 + m2)

    if one_zero:
        if _is_zero(m1):
            red.auto(_swap_step())
        p = red.params
        if p["a"] < 0:
            red.flip("make the nonzero eigenvalue positive")
        p = red.params
        red.rescale(1 / p["a"], "rescale so l1 = 1")
        p = red.params
        e, f = p["e"], p["f"]
        qe = 1 / e if not _is_zero(e) else F(1)
        pf = 1 / f if not _is_zero(f) else F(1)
        if (qe, pf) != (1, 1):
            red.auto(_diag_step(pf, qe, "scale e, f to 1"))
        pat = (0 if _is_zero(e) else 1, 0 if _is_zero(f) else 1)
        label = {(1, 1): "1.iii.1", (0, 1): "1.iii.2",
                 (1, 0): "1.iii.3", (0, 0): "1.iii.4"}[pat]
        return label, {"l1": F(1), "l2": F(0),
                       "e": F(pat[0]), "f": F(pat[1])}

    if opposite:
        if _is_zero(e) and _is_zero(f):
            raise ValueError("excluded by the classification: opposite "
                             "eigenvalues need (e, f) != (0, 0)")
        if _is_zero(e):
            red.auto(_swap_step())
        p = red.params
        if p["a"] < 0:
            red.flip("make l1 positive")
        p = red.params
        red.rescale(1 / p["a"], "rescale so (l1, l2) = (1, -1)")
        p = red.params
        e, f = p["e"], p["f"]
        qe = 1 / e if not _is_zero(e) else F(1)
        pf = 1 / f if not _is_zero(f) else F(1)
        if (qe, pf) != (1, 1):
            red.auto(_diag_step(pf, qe, "scale e, f to 1"))
        pat = (1, 0 if _is_zero(f) else 1)
        label = "1.ii.1" if pat == (1, 1) else "1.ii.2"
        return label, {"l1": F(1), "l2": F(-1),
                       "e": F(1), "f": F(pat[1])}

    # family 1.i: both eigenvalues nonzero, sum nonzero
    if _is_zero(e) and not _is_zero(f):
        red.auto(_swap_step())
    else:
        p = red.params
        if abs(p["a"]) > abs(p["d"]):
            red.auto(_swap_step())   # convention |l2| >= |l1| = 1
    p = red.params
    if p["a"] < 0:
        red.flip("make l1 positive")
    p = red.params
    red.rescale(1 / p["a"], "rescale so l1 = 1")
    p = red.params
    e, f, l2 = p["e"], p["f"], p["d"]
    qe = 1 / e if not _is_zero(e) else F(1)
    pf = 1 / f if not _is_zero(f) else F(1)
    if (qe, pf) != (1, 1):
        red.auto(_diag_step(pf, qe, "scale e, f to 1"))
    pat = (0 if _is_zero(e) else 1, 0 if _is_zero(f) else 1)
    label = {(1, 1): "1.i.1", (1, 0): "1.i.2", (0, 0): "1.i.3"}[pat]
    return label, {"l1": F(1), "l2": l2, "e": F(pat[0]), "f": F(pat[1])}


def _reduce_jordan(red, A, eig, diagnostics):
    lam = eig.l1
    v = (A[0][0] - lam, A[1][0])
    w = (F(1), F(0))
    if _is_zero(v[0]) and _is_zero(v[1]):
        v = (A[0][1], A[1][1] - lam)
        w = (F(0), F(1))
    red.auto(_block_conj_step(((v[0], w[0]), (v[1], w[1])),
                              "put the block in Jordan form"))
    p = red.params
    lam, e, f = p["a"], p["e"], p["f"]

    if not _is_zero(lam):
        if not _is_zero(e) and not _is_zero(f):
            mu = abs(f / e)
            if mu != 1:
                red.rescale(mu, "match |e| and |f|")
                red.auto(_diag_step(F(1), mu,
                                    "restore the Jordan unit entry"))
            p = red.params
            alpha = 1 / p["e"]
            red.auto(_diag_step(alpha, alpha, "scale e to 1"))
            p = red.params
            if p["f"] < 0:
                red.flip("flip the sign of f")
                red.auto(_diag_step(F(1), F(-1),
                                    "restore the Jordan unit entry"))
            p = red.params
            return "2.i.1", {"l1": p["a"], "e": F(1), "f": F(1)}
        if lam < 0:
            red.flip("make l1 positive")
            red.auto(_diag_step(F(1), F(-1),
                                "restore the Jordan unit entry"))
        p = red.params
        lam0 = p["a"]
        red.rescale(1 / lam0, "rescale so l1 = 1")
        red.auto(_diag_step(F(1), 1 / lam0, "restore the Jordan unit entry"))
        p = red.params
        e, f = p["e"], p["f"]
        if not _is_zero(e):
            alpha = 1 / e
            red.auto(_diag_step(alpha, alpha, "scale e to 1"))
            return "2.i.3", {"l1": F(1), "e": F(1), "f": F(0)}
        if not _is_zero(f):
            alpha = 1 / f
            red.auto(_diag_step(alpha, alpha, "scale f to 1"))
            return "2.i.2", {"l1": F(1), "e": F(0), "f": F(1)}
        return "2.i.4", {"l1": F(1), "e": F(0), "f": F(0)}

    # nilpotent Jordan block, l1 = 0
    if not _is_zero(e) and not _is_zero(f):
        mu = abs(f / e)
        if mu != 1:
            red.rescale(mu, "match |e| and |f|")
            red.auto(_diag_step(F(1), mu,
                                "restore the Jordan unit entry"))
        p = red.params
        alpha = 1 / p["e"]
        red.auto(_diag_step(alpha, alpha, "scale e to 1"))
        p = red.params
        if p["f"] < 0:
            red.flip("flip the sign of f")
            red.auto(_diag_step(F(1), F(-1),
                                "restore the Jordan unit entry"))
        return "2.ii.1", {"l1": F(0), "e": F(1), "f": F(1)}
    if not _is_zero(e):
        alpha = 1 / e
        red.auto(_diag_step(alpha, alpha, "scale e to 1"))
        return "2.ii.3", {"l1": F(0), "e": F(1), "f": F(0)}
    if not _is_zero(f):
        alpha = 1 / f
        red.auto(_diag_step(alpha, alpha, "scale f to 1"))
        return "2.ii.2", {"l1": F(0), "e": F(0), "f": F(1)}
    return "2.ii.4", {"l1": F(0), "e": F(0), "f": F(0)}


def _reduce_conformal(red, A, eig, diagnostics):
    in_form = _is_zero(A[0][0] - A[1][1]) and _is_zero(A[0][1] + A[1][0])
    if not in_form:
        q = A[0][1]
        u = (q, eig.a - A[0][0])
        w = (0 * q, eig.b)
        red.auto(_block_conj_step(((w[0], u[0]), (w[1], u[1])),
                                  "put the block in conformal form"))
    p = red.params
    if p["c"] < 0:
        # orient to [[a, -b], [b, a]] with rotation speed b = entry c > 0
        red.auto(_diag_step(F(1), F(-1), "orient the rotation part"))
        p = red.params

    if not _is_zero(p["a"]):
        if p["a"] < 0:
            red.flip("make the real part positive")
            red.auto(_diag_step(F(1), F(-1), "restore the orientation"))
        p = red.params
        red.rescale(1 / p["a"], "rescale so a = 1")
        p = red.params
        bpar = p["c"]
        e, f = p["e"], p["f"]
        if not (_is_zero(e) and _is_zero(f)):
            r = _sqrt(e * e + f * f)
            rho = 1 / r
            cth, sth = f / r, e / r
            red.auto(TraceStep(
                "automorphism",
                matrix=((rho * cth, -rho * sth, 0 * cth),
                        (rho * sth, rho * cth, 0 * cth),
                        (0 * cth, 0 * cth, rho * rho)),
                note="conformal move sending (e, f) to (0, 1)"))
            return "3.i.1", {"a": F(1), "b": bpar, "e": F(0), "f": F(1)}
        return "3.i.2", {"a": F(1), "b": bpar, "e": F(0), "f": F(0)}

    red.rescale(1 / p["c"], "rescale so b = 1")
    p = red.params
    e, f = p["e"], p["f"]
    if not (_is_zero(e) and _is_zero(f)):
        r = _sqrt(e * e + f * f)
        rho = 1 / r
        cth, sth = f / r, e / r
        red.auto(TraceStep(
            "automorphism",
            matrix=((rho * cth, -rho * sth, 0 * cth),
                    (rho * sth, rho * cth, 0 * cth),
                    (0 * cth, 0 * cth, rho * rho)),
            note="conformal move sending (e, f) to (0, 1)"))
        return "3.ii.1", {"a": F(0), "b": F(1), "e": F(0), "f": F(1)}
    return "3.ii.2", {"a": F(0), "b": F(1), "e": F(0), "f": F(0)}


def _solve_rotation_system(rows):
    """Solve linear rows (Ac, As, rhs) intersected with the unit circle.

    Returns ("none", []), ("points", [(c, s), ...]) or ("circle", []).
    """
    from .geodesy import _quadratic_roots

    # plain Gaussian elimination on a 2-column system
    mat = [list(r) for r in rows]
    pivot_rows = []
    for col in (0, 1):
        sel = None
        for i, r in enumerate(mat):
            if i in [pr[0] for pr in pivot_rows]:
                continue
            if not _is_zero(r[col]):
                sel = i
                break
        if sel is None:
            continue
        pivot_rows.append((sel, col))
        pv = mat[sel][col]
        mat[sel] = [x / pv for x in mat[sel]]
        for i, r in enumerate(mat):
            if i != sel and not _is_zero(r[col]):
                fac = r[col]
                mat[i] = [x - fac * y for x, y in zip(r, mat[sel])]
    # consistency
    for i, r in enumerate(mat):
        if i in [pr[0] for pr in pivot_rows]:
            continue
        if _is_zero(r[0]) and _is_zero(r[1]) and not _is_zero(r[2]):
            return "none", []
    rank = len(pivot_rows)
    if rank == 2:
        sol = [None, None]
        for i, col in pivot_rows:
            sol[col] = mat[i][2]
        c0, s0 = sol
        if _is_zero(c0 * c0 + s0 * s0 - 1):
            return "points", [(c0, s0)]
        return "none", []
    if rank == 0:
        return "circle", []
    # rank 1: line of solutions; parametrize and intersect the circle
    i, col = pivot_rows[0]
    if col == 0:
        # c = rhs - beta s  with beta = mat[i][1]
        beta, rhs = mat[i][1], mat[i][2]
        # (rhs - beta s)^2 + s^2 = 1
        roots = _quadratic_roots(beta * beta + 1, -2 * beta * rhs,
                                 rhs * rhs - 1)
        if roots == "all":
            return "circle", []
        return "points", [((rhs - beta * s), s) for s in roots]
    beta, rhs = mat[i][0], mat[i][2]
    roots = _quadratic_roots(beta * beta + 1, -2 * beta * rhs, rhs * rhs - 1)
    if roots == "all":
        return "circle", []
    return "points", [(c, rhs - beta * c) for c in roots]


def heis_nonsub_isometry_group(cls: CanonicalClass) -> IsometryGroupDescriptor:
    """Stabilizer: rotations P_{theta,eps} with P D P^-1 = +-D.

    Solved as a linear system in (cos theta, sin theta) intersected with the
    unit circle, for each sign pair (eps, sigma).
    """
    if not cls.family.startswith("heis-nonsub"):
        raise ValueError("expected a heis-nonsub class")
    pr = _heis_params(cls.D)
    p0, q0 = pr["a"], pr["b"]
    r0, t0 = pr["c"], pr["d"]
    e0, f0 = pr["e"], pr["f"]

    gens = []
    continuous = False
    notes = []
    for eps in (1, -1):
        for sigma in (1, -1):
            rows = [
                (p0 * (1 - sigma), -(eps * r0 + sigma * q0), 0 * p0),
                (q0 * (1 - sigma * eps), eps * (sigma * p0 - t0), 0 * p0),
                (r0 * (eps - sigma), p0 - sigma * t0, 0 * p0),
                (eps * t0 * (1 - sigma), q0 + sigma * eps * r0, 0 * p0),
                (sigma * e0, sigma * f0, eps * e0),
                (sigma * eps * f0, -sigma * eps * e0, eps * f0),
            ]
            kind, sols = _solve_rotation_system(rows)
            if kind == "circle":
                continuous = True
                notes.append(f"continuous rotation family (eps={eps}, "
                             f"sigma={sigma})")
                continue
            for (cth, sth) in sols:
                if eps == 1 and sigma == 1 and _is_zero(cth - 1) \
                        and _is_zero(sth):
                    continue   # the identity
                z = 0 * cth
                gens.append(((cth, -eps * sth, z), (sth, eps * cth, z),
                             (z, z, 0 * cth + eps)))
    if continuous:
        kind = "continuous"
    elif gens:
        kind = "discrete"
    else:
        kind = "translations-only"
    try:
        zx = cls.invariants.get("Z_X") or zx_set("heis3", cls.D)
    except (TypeError, ValueError):
        zx = ZXSet("unknown", "not computed (irrational entries)")
    return IsometryGroupDescriptor(
        translations=zx, generators=tuple(gens),
        continuous_family=continuous, kind=kind, notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# dispatcher


def classify(spec: ARSSpec) -> dict:
    """Full classification report: all levels plus the isometry group."""
    if spec.group_tag == "aff2":
        iso, trace = aff2_isometry_class(spec)
        resc = aff2_rescaled_class(iso)
        defo = aff2_deformed_class(resc)
        group = aff2_isometry_group(spec)
        return {"isometry": iso, "rescaled": resc, "deformed": defo,
                "group": group, "trace": defo.trace}
    if heis_delta_is_subalgebra(spec):
        iso, trace = heis_sub_isometry_class(spec)
        defo = heis_sub_deformed_class(iso)
        group = heis_sub_isometry_group(defo)
        return {"isometry": iso, "rescaled": None, "deformed": defo,
                "group": group, "trace": defo.trace}
    iso, trace = heis_nonsub_isometry_class(spec)
    defo = heis_nonsub_deformed_class(iso)
    group = heis_nonsub_isometry_group(defo)
    return {"isometry": iso, "rescaled": None, "deformed": defo,
            "group": group, "trace": defo.trace}
