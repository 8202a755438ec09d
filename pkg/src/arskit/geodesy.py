"""Normal geodesics, tangency points and locus geometry.

The normal Hamiltonian H = 1/2<lam, X(g)>^2 + 1/2 sum <lam, Y_i(g)>^2 is
integrated with RK4 using closed-form partials (every frame entry is a
polynomial of degree at most 2).  Tangency points of the distribution with
the singular locus solve two linear equations plus the quadratic locus
equation, so they are found exactly.  Component counting of G minus the
locus is a corner-sign flood fill over a box grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import ndimage

from .exact import ratsqrt, to_fraction
from .group import GroupPoint
from .metric import ARSSpec, frame_at, singular_poly
from .polynomials import CoordPoly

SIGN_TOL = 1e-12


@dataclass(frozen=True)
class CotangentState:
    point: GroupPoint
    covector: tuple

    def __post_init__(self):
        if len(self.covector) != self.point.dim:
            raise ValueError("covector length must match the point dimension")


@dataclass(frozen=True)
class GeodesicTrace:
    times: tuple
    points: tuple          # GroupPoint per sample
    covectors: tuple
    energies: tuple        # H per sample
    step: float
    method: str = "rk4"
    truncated: bool = False

    @property
    def energy_drift(self) -> float:
        h0 = self.energies[0]
        return max(abs(h - h0) for h in self.energies)

    def state(self, i: int) -> CotangentState:
        return CotangentState(self.points[i], self.covectors[i])


def hamiltonian(spec: ARSSpec, state: CotangentState) -> float:
    """Normal Hamiltonian 1/2 sum of squared pairings with the frame."""
    A = frame_at(spec, state.point)
    lam = np.asarray(state.covector, dtype=float)
    return 0.5 * float(np.sum((lam @ A) ** 2))


def _frame_jacobians(spec: ARSSpec, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Frame values and their coordinate Jacobians at x, stacked.

    Returns (V, J) with V[k] the k-th frame field value and J[k] its
    Jacobian; index 0 is the linear field.
    """
    n = spec.dim
    k = 1 + len(spec.frame)
    V = np.zeros((k, n))
    J = np.zeros((k, n, n))
    D = np.asarray(spec.D, dtype=float)
    if spec.group_tag == "aff2":
        a, b = D[1, 0], D[1, 1]
        V[0] = (0.0, a * (x[0] - 1.0) + b * x[1])
        J[0] = ((0.0, 0.0), (a, b))
        for i, (u, v) in enumerate(spec.frame, start=1):
            V[i] = (x[0] * u, x[0] * v)
            J[i] = ((u, 0.0), (v, 0.0))
        return V, J
    a, b = D[0, 0], D[0, 1]
    c, d = D[1, 0], D[1, 1]
    e, f = D[2, 0], D[2, 1]
    V[0] = (
        a * x[0] + b * x[1],
        c * x[0] + d * x[1],
        e * x[0] + f * x[1] + (a + d) * x[2]
        + 0.5 * c * x[0] ** 2 + 0.5 * b * x[1] ** 2,
    )
    J[0] = ((a, b, 0.0), (c, d, 0.0), (e + c * x[0], f + b * x[1], a + d))
    for i, (u, v, w) in enumerate(spec.frame, start=1):
        V[i] = (u, v, w + x[0] * v)
        J[i][2, 0] = v
    return V, J


def _canonical_rhs(spec: ARSSpec, x: np.ndarray, lam: np.ndarray):
    V, J = _frame_jacobians(spec, x)
    h = V @ lam                      # pairings <lam, V_k>
    xdot = h @ V
    lamdot = -np.einsum("k,kij,i->j", h, J, lam)
    return xdot, lamdot


def _rhs_factory(spec: ARSSpec):
    """Specialized right-hand side of the canonical Hamiltonian system.

    Same quantity as _canonical_rhs, with the frame Jacobian contractions
    written out per group in scalar arithmetic (the state has 2 or 3
    coordinates, so plain floats beat small numpy arrays by a wide margin).
    The closures also report the energy 1/2 sum h_k^2 of the last call.
    """
    D = [[float(v) for v in row] for row in spec.D]
    frame = [tuple(float(v) for v in Y) for Y in spec.frame]
    if spec.group_tag == "aff2":
        a, b = D[1][0], D[1][1]
        (u1, v1), = frame

        def rhs(x, lam):
            f0 = a * (x[0] - 1.0) + b * x[1]
            h0 = f0 * lam[1]
            h1 = x[0] * (u1 * lam[0] + v1 * lam[1])
            xdot = (h1 * x[0] * u1,
                    h0 * f0 + h1 * x[0] * v1)
            g0 = h0 * lam[1]
            lamdot = (-(a * g0 + h1 * (u1 * lam[0] + v1 * lam[1])),
                      -b * g0)
            return xdot, lamdot, 0.5 * (h0 * h0 + h1 * h1)

        return rhs
    a, b = D[0][0], D[0][1]
    c, d = D[1][0], D[1][1]
    e, f = D[2][0], D[2][1]
    tr = a + d
    (u1, v1, w1), (u2, v2, w2) = frame

    def rhs(x, lam):
        x0, x1, x2 = x
        l0, l1, l2 = lam
        f0 = a * x0 + b * x1
        f1 = c * x0 + d * x1
        f2 = (e * x0 + f * x1 + tr * x2
              + 0.5 * c * x0 * x0 + 0.5 * b * x1 * x1)
        h0 = f0 * l0 + f1 * l1 + f2 * l2
        h1 = u1 * l0 + v1 * l1 + (w1 + x0 * v1) * l2
        h2 = u2 * l0 + v2 * l1 + (w2 + x0 * v2) * l2
        xdot = (h0 * f0 + h1 * u1 + h2 * u2,
                h0 * f1 + h1 * v1 + h2 * v2,
                h0 * f2 + h1 * (w1 + x0 * v1) + h2 * (w2 + x0 * v2))
        gi = (h1 * v1 + h2 * v2) * l2
        lamdot = (-(h0 * (a * l0 + c * l1 + (e + c * x0) * l2) + gi),
                  -h0 * (b * l0 + d * l1 + (f + b * x1) * l2),
                  -h0 * tr * l2)
        return xdot, lamdot, 0.5 * (h0 * h0 + h1 * h1 + h2 * h2)

    return rhs


def geodesic_shoot(spec: ARSSpec, state0: CotangentState, T: float,
                   steps: int) -> GeodesicTrace:
    """Integrate the canonical system of the normal Hamiltonian with RK4.

    On aff2 the trajectory is truncated with a flag if it leaves the chart
    x > 0.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    h = T / steps
    x = tuple(float(c) for c in state0.point.coords)
    lam = tuple(float(c) for c in state0.covector)
    tag = spec.group_tag
    rhs = _rhs_factory(spec)

    times = [0.0]
    points = [GroupPoint(tag, x)]
    covectors = [lam]
    energies = [rhs(x, lam)[2]]
    truncated = False

    def step_to(x, lam, kx, kl, dt):
        return (tuple(a + dt * b for a, b in zip(x, kx)),
                tuple(a + dt * b for a, b in zip(lam, kl)))

    for i in range(steps):
        k1x, k1l, _ = rhs(x, lam)
        k2x, k2l, _ = rhs(*step_to(x, lam, k1x, k1l, 0.5 * h))
        k3x, k3l, _ = rhs(*step_to(x, lam, k2x, k2l, 0.5 * h))
        k4x, k4l, _ = rhs(*step_to(x, lam, k3x, k3l, h))
        x = tuple(a + (h / 6.0) * (p + 2 * q + 2 * r + s)
                  for a, p, q, r, s in zip(x, k1x, k2x, k3x, k4x))
        lam = tuple(a + (h / 6.0) * (p + 2 * q + 2 * r + s)
                    for a, p, q, r, s in zip(lam, k1l, k2l, k3l, k4l))
        if not all(math.isfinite(v) for v in x + lam):
            truncated = True
            break
        if tag == "aff2" and x[0] <= 0:
            truncated = True
            break
        times.append((i + 1) * h)
        points.append(GroupPoint(tag, x))
        covectors.append(lam)
        energies.append(rhs(x, lam)[2])

    return GeodesicTrace(tuple(times), tuple(points), tuple(covectors),
                         tuple(energies), h, truncated=truncated)


@dataclass(frozen=True)
class TangencyReport:
    """Solution set of {locus = 0, both frame directions tangent to it}."""

    kind: str  # empty | points | line | curve | all-of-Z
    points: tuple = ()
    base: tuple | None = None       # line support point
    direction: tuple | None = None  # line direction
    description: str = ""


def _linear_coeffs(p: CoordPoly) -> tuple | None:
    """(c0, cx, cy, cz) of an affine 3-variable polynomial, or None."""
    if p.degree() > 1:
        return None
    return (p.coefficient((0, 0, 0)), p.coefficient((1, 0, 0)),
            p.coefficient((0, 1, 0)), p.coefficient((0, 0, 1)))


def _affine_solve(rows: list[tuple]):
    """Solve the affine system {c0 + cx x + cy y + cz z = 0 per row}.

    Returns (particular point, list of direction vectors spanning the
    solution set) or None when inconsistent.  Exact over Fractions.
    """
    mat = [[to_fraction(r[1]), to_fraction(r[2]), to_fraction(r[3]),
            -to_fraction(r[0])] for r in rows]
    pivots = []
    row = 0
    for col in range(3):
        piv = next((r for r in range(row, len(mat)) if mat[r][col] != 0), None)
        if piv is None:
            continue
        mat[row], mat[piv] = mat[piv], mat[row]
        mat[row] = [v / mat[row][col] for v in mat[row]]
        for r in range(len(mat)):
            if r != row and mat[r][col] != 0:
                factor = mat[r][col]
                mat[r] = [v - factor * w for v, w in zip(mat[r], mat[row])]
        pivots.append(col)
        row += 1
    for r in range(row, len(mat)):
        if mat[r][3] != 0:
            return None
    point = [Fraction(0)] * 3
    for r, col in enumerate(pivots):
        point[col] = mat[r][3]
    free = [c for c in range(3) if c not in pivots]
    dirs = []
    for fcol in free:
        d = [Fraction(0)] * 3
        d[fcol] = Fraction(1)
        for r, col in enumerate(pivots):
            d[col] = -mat[r][fcol]
        dirs.append(tuple(d))
    return tuple(point), dirs


def _restrict(p: CoordPoly, base, dirs) -> CoordPoly:
    """Restriction of p to the affine subspace base + span(dirs).

    The result uses the first len(dirs) variables as parameters.
    """
    assignments = {}
    for coord in range(3):
        expr = CoordPoly.constant(3, base[coord])
        for j, d in enumerate(dirs):
            expr = expr + d[coord] * CoordPoly.variable(3, j)
        assignments[coord] = expr
    return p.substitute(assignments)


def _quadratic_roots(c2, c1, c0):
    """Real roots of c2 t^2 + c1 t + c0, exact when the data allows."""
    if c2 == 0:
        if c1 == 0:
            return None if c0 != 0 else "all"
        return [-to_fraction(c0) / to_fraction(c1)] if not isinstance(c0, float) \
            else [-c0 / c1]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    if isinstance(disc, float):
        r = math.sqrt(disc)
        return sorted({(-c1 - r) / (2 * c2), (-c1 + r) / (2 * c2)})
    disc = to_fraction(disc)
    r = ratsqrt(disc)
    if r is None:
        rf = math.sqrt(float(disc))
        return sorted({(float(-c1) - rf) / (2 * float(c2)),
                       (float(-c1) + rf) / (2 * float(c2))})
    c1f, c2f = to_fraction(c1), to_fraction(c2)
    return sorted({(-c1f - r) / (2 * c2f), (-c1f + r) / (2 * c2f)})


def tangency_points(spec: ARSSpec) -> TangencyReport:
    """Points of the singular locus where the distribution is tangent to it.

    Solves {p = 0, <dp, B_1> = 0, <dp, B_2> = 0} for the locus polynomial p.
    The two pairing conditions are affine, so the solution set is an exact
    affine subspace intersected with the quadric p = 0.
    """
    if spec.group_tag != "heis3":
        raise ValueError("tangency analysis is defined for heis3 specs")
    from .classify import heis_delta_is_subalgebra
    if heis_delta_is_subalgebra(spec):
        return TangencyReport("empty", description="distribution is a "
                              "subalgebra, never tangent to the locus")

    p = singular_poly(spec)
    if spec.is_exact:
        p = p.to_fraction()
    grad = [p.partial(i) for i in range(3)]
    rows = []
    for Y in spec.frame:
        u, v, w = (to_fraction(c) if spec.is_exact else c for c in Y)
        x = CoordPoly.variable(3, 0)
        pairing = u * grad[0] + v * grad[1] + (w + v * x) * grad[2]
        coeffs = _linear_coeffs(pairing)
        if coeffs is None:
            raise AssertionError("tangency pairing should be affine")
        if any(c != 0 for c in coeffs):
            rows.append(coeffs)

    if not rows:
        return TangencyReport("all-of-Z", description="every locus point is "
                              "a tangency point: " + repr(p) + " = 0")
    sol = _affine_solve(rows)
    if sol is None:
        return TangencyReport("empty", description="tangency conditions "
                              "are inconsistent")
    base, dirs = sol

    if len(dirs) == 0:
        val = p(base)
        if val == 0:
            return TangencyReport("points", points=(tuple(base),))
        return TangencyReport("empty", description="unique candidate misses "
                              "the locus")

    if len(dirs) == 1:
        q = _restrict(p, base, dirs)
        c2 = q.coefficient((2, 0, 0))
        c1 = q.coefficient((1, 0, 0))
        c0 = q.coefficient((0, 0, 0))
        roots = _quadratic_roots(c2, c1, c0)
        if roots == "all":
            return TangencyReport("line", base=tuple(base),
                                  direction=dirs[0])
        if not roots:
            return TangencyReport("empty", description="tangency line misses "
                                  "the locus")
        pts = tuple(tuple(b + t * d for b, d in zip(base, dirs[0]))
                    for t in roots)
        return TangencyReport("points", points=pts)

    # two-parameter solution set (one or both pairing conditions degenerate)
    q = _restrict(p, base, dirs)
    if q.is_zero():
        return TangencyReport("all-of-Z", description="the locus is contained"
                              " in the tangency plane")
    if q.degree() <= 1:
        coeffs = _linear_coeffs(q)
        c0, cs, ct = coeffs[0], coeffs[1], coeffs[2]
        if cs == 0 and ct == 0:
            return TangencyReport("empty", description="tangency plane misses"
                                  " the locus")
        if cs != 0:
            s0 = -to_fraction(c0) / to_fraction(cs) if not isinstance(c0, float) \
                else -c0 / cs
            b3 = tuple(b + s0 * d for b, d in zip(base, dirs[0]))
            ratio = to_fraction(ct) / to_fraction(cs) if not isinstance(ct, float) \
                else ct / cs
            return TangencyReport(
                "line", base=b3,
                direction=tuple(d1 - ratio * d0
                                for d0, d1 in zip(dirs[0], dirs[1])))
        t0 = -to_fraction(c0) / to_fraction(ct)
        b3 = tuple(b + t0 * d for b, d in zip(base, dirs[1]))
        return TangencyReport("line", base=b3, direction=dirs[0])
    return TangencyReport("curve", description="conic tangency set: "
                          + repr(q) + " = 0 in plane coordinates")


def tangency_residual(spec: ARSSpec, point) -> float:
    """Max violation of the tangency equations at a point."""
    p = singular_poly(spec).to_float()
    grad = [p.partial(i) for i in range(3)]
    pt = [float(c) for c in point]
    worst = abs(p(pt))
    for Y in spec.frame:
        u, v, w = (float(c) for c in Y)
        vec = (u, v, w + v * pt[0])
        worst = max(worst, abs(sum(vec[i] * grad[i](pt) for i in range(3))))
    return worst


@dataclass(frozen=True)
class ComponentCount:
    count: int
    positive: int
    negative: int
    resolution: int
    stable: bool
    box: tuple
    box_local: bool = True


def _normalize_box(spec: ARSSpec, box) -> tuple:
    dim = spec.dim
    if np.isscalar(box[0]):
        bounds = [tuple(box)] * dim
    else:
        bounds = [tuple(b) for b in box]
    if len(bounds) != dim:
        raise ValueError(f"box needs {dim} axis bounds")
    if spec.group_tag == "aff2":
        lo, hi = bounds[0]
        bounds[0] = (max(lo, 1e-6), hi)  # chart requires x > 0
    for lo, hi in bounds:
        if not lo < hi:
            raise ValueError("box bounds must satisfy lo < hi")
    return tuple(bounds)


def _grid_values(poly: CoordPoly, bounds, res: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, res + 1) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return poly(mesh)


def _count_components(vals: np.ndarray, dim: int) -> tuple[int, int]:
    tol = SIGN_TOL * (1.0 + float(np.max(np.abs(vals))))
    pos = vals > tol
    neg = vals < -tol
    lo_slice, hi_slice = slice(None, -1), slice(1, None)
    counts = []
    for mask in (pos, neg):
        cells = None
        for shifts in np.ndindex(*(2,) * dim):
            idx = tuple(hi_slice if s else lo_slice for s in shifts)
            block = mask[idx]
            cells = block if cells is None else (cells & block)
        _, n = ndimage.label(cells)
        counts.append(n)
    return counts[0], counts[1]


def connected_components(spec: ARSSpec, box=(-3.0, 3.0),
                         resolution: int = 64) -> ComponentCount:
    """Count connected components of G minus the singular locus in a box.

    Cells whose corner signs are not all strictly positive or all strictly
    negative are left unassigned, so thin zero sets never bridge regions.
    The count is box-local; stability is checked by doubling the resolution.
    """
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    bounds = _normalize_box(spec, box)
    poly = singular_poly(spec).to_float()
    dim = spec.dim

    vals = _grid_values(poly, bounds, resolution)
    npos, nneg = _count_components(vals, dim)
    vals2 = _grid_values(poly, bounds, 2 * resolution)
    npos2, nneg2 = _count_components(vals2, dim)
    stable = (npos, nneg) == (npos2, nneg2)
    return ComponentCount(npos + nneg, npos, nneg, resolution, stable,
                          bounds)


def locus_sample(spec: ARSSpec, box=(-3.0, 3.0),
                 resolution: int = 64) -> np.ndarray:
    """Points near the singular locus, by sign-change interpolation on edges."""
    bounds = _normalize_box(spec, box)
    poly = singular_poly(spec).to_float()
    dim = spec.dim
    axes = [np.linspace(lo, hi, resolution + 1) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = poly(mesh)
    pts = []
    for axis in range(dim):
        lo_idx = tuple(slice(None, -1) if i == axis else slice(None)
                       for i in range(dim))
        hi_idx = tuple(slice(1, None) if i == axis else slice(None)
                       for i in range(dim))
        v0, v1 = vals[lo_idx], vals[hi_idx]
        crossing = (v0 * v1 <= 0) & (np.abs(v0 - v1) > 0)
        where = np.nonzero(crossing)
        if where[0].size == 0:
            continue
        t = v0[where] / (v0[where] - v1[where])
        coords = []
        for i in range(dim):
            c = mesh[i][lo_idx][where]
            if i == axis:
                step = (bounds[i][1] - bounds[i][0]) / resolution
                c = c + t * step
            coords.append(c)
        pts.append(np.column_stack(coords))
    if not pts:
        return np.empty((0, dim))
    return np.unique(np.vstack(pts), axis=0)
