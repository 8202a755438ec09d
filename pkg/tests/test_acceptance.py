"""Acceptance gate: ten end-to-end criteria, one printed pass/fail line each.

Each test prints "Cn <title>: PASS|FAIL (elapsed)" outside pytest capture
(via capfd.disabled) and enforces the stated tolerance and runtime budget.
"""

import math
import time
from contextlib import contextmanager
from fractions import Fraction as F

import numpy as np

from arskit.algebra import (
    algebra_model,
    conjugate_derivation,
    derivation_space,
)
from arskit.classify import (
    NONSUB_ROWS,
    _pee,
    aff2_deformed_class,
    aff2_isometry_class,
    heis_sub_deformed_class,
    heis_sub_isometry_class,
    heis_sub_isometry_group,
    zx_set,
)
from arskit.geodesy import (
    CotangentState,
    connected_components,
    geodesic_shoot,
    tangency_points,
)
from arskit.group import (
    GroupPoint,
    TangentVector,
    group_exp,
    invariant_field_at,
    left_translation_diff,
    multiply,
)
from arskit.linfield import check_TgF, flow, flow_ode, linear_field
from arskit.metric import (
    ars_norm,
    frame_at,
    in_Z,
    in_ZX,
    isometry_candidate_check,
    make_ars,
    singular_poly,
)

from rows import nonsub_row_spec, sub_row_spec

RNG = np.random.default_rng(20240817)


@contextmanager
def criterion(label, budget, capfd):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = time.perf_counter() - t0
        ok = ok and dt < budget
        line = f"{label}: {'PASS' if ok else 'FAIL'} ({dt:.2f}s)"
        with capfd.disabled():
            print(line, flush=True)
    assert dt < budget, f"{label}: runtime {dt:.2f}s over budget {budget}s"


def _rand_frac(lo=-5, hi=5, nonzero=False):
    while True:
        q = F(int(RNG.integers(lo, hi + 1)), int(RNG.integers(1, 6)))
        if q != 0 or not nonzero:
            return q


# ---------------------------------------------------------------------------
# C1: norm dichotomy at the singular locus


def test_c1_norm_dichotomy(capfd):
    with criterion("C1 norm dichotomy", 1.0, capfd):
        D = ((1, 0, 0), (0, 0, 0), (1, 1, 1))
        spec = make_ars("heis3", D, ((1, 0, 0), (0, 1, 0)))
        g = GroupPoint("heis3", (1.0, 0.0, -1.0))
        assert in_Z(spec, g) and not in_ZX(spec, g)
        v = invariant_field_at((1, 0, 0), g)
        assert abs(ars_norm(spec, v) - 1 / math.sqrt(2)) < 1e-9
        # the limit of norms along Riemannian approach points is 1, not 1/sqrt(2)
        g_eps = GroupPoint("heis3", (1.0 + 1e-6, 0.0, -1.0))
        assert not in_Z(spec, g_eps)
        v_eps = invariant_field_at((1, 0, 0), g_eps)
        assert abs(ars_norm(spec, v_eps) - 1.0) < 1e-3
        # at a Z_X point the value and the Riemannian limit agree
        g0 = GroupPoint("heis3", (0.0, 1.0, -1.0))
        assert in_ZX(spec, g0)
        n0 = ars_norm(spec, invariant_field_at((1, 0, 0), g0))
        g0e = GroupPoint("heis3", (1e-6, 1.0, -1.0))
        n0e = ars_norm(spec, invariant_field_at((1, 0, 0), g0e))
        assert abs(n0 - n0e) < 1e-3
        # Z_X is the curve {(0, y, -y)}
        zx = zx_set("heis3", D)
        for y in (F(1), F(-2), F(1, 3)):
            assert in_ZX(spec, GroupPoint("heis3", (0, y, -y)))
        assert not in_ZX(spec, GroupPoint("heis3", (0, 1.0, -0.9)))
        for sample in zx.samples:
            assert sample[0] == 0 and sample[2] == -sample[1]


# ---------------------------------------------------------------------------
# C2: closed-form flow vs direct integration


def test_c2_flow_identity(capfd):
    with criterion("C2 flow identity", 5.0, capfd):
        for tag in ("aff2", "heis3"):
            model = algebra_model(tag)
            space = derivation_space(model)
            for _ in range(25):
                params = {k: float(RNG.uniform(-1, 1))
                          for k in space.param_names}
                field = linear_field(tag, space.construct(**params))
                Y = RNG.uniform(-1, 1, size=model.dim)
                g = group_exp(tag, tuple(Y))
                t = float(RNG.uniform(-5, 5))
                closed = np.asarray(flow(field, t, g).coords, float)
                direct = np.asarray(flow_ode(field, t, g).coords, float)
                scale = 1.0 + np.linalg.norm(closed)
                assert np.linalg.norm(closed - direct) < 1e-6 * scale


# ---------------------------------------------------------------------------
# C3: differential identity of a linear field


def test_c3_differential_identity(capfd):
    with criterion("C3 differential identity", 5.0, capfd):
        axes = {"aff2": (np.linspace(0.4, 2.8, 5), np.linspace(-2, 2, 5)),
                "heis3": tuple(np.linspace(-2, 2, 5) for _ in range(3))}
        for tag, grid in axes.items():
            model = algebra_model(tag)
            space = derivation_space(model)
            for _ in range(10):
                params = {k: float(RNG.uniform(-1, 1))
                          for k in space.param_names}
                field = linear_field(tag, space.construct(**params))
                for coords in np.stack(np.meshgrid(*grid), -1).reshape(-1, model.dim):
                    g = GroupPoint(tag, tuple(coords))
                    assert check_TgF(field, g) <= 1e-6


# ---------------------------------------------------------------------------
# C4: left translations are isometries exactly on Z_X


def _push_norm_gap(spec, g, h, v):
    J = np.asarray(left_translation_diff(g), float)
    before = ars_norm(spec, TangentVector(h, tuple(v)))
    after = ars_norm(spec, TangentVector(multiply(g, h), tuple(J @ v)))
    return before, after


def test_c4_translation_isometry(capfd):
    with criterion("C4 translation isometry criterion", 5.0, capfd):
        D = ((1, 0, 0), (0, 0, 0), (1, 1, 1))
        spec = make_ars("heis3", D, ((1, 0, 0), (0, 1, 0)))

        def riemannian_point():
            while True:
                h = GroupPoint("heis3", tuple(RNG.uniform(-2, 2, size=3)))
                if not in_Z(spec, h):
                    return h

        for _ in range(20):
            t = float(RNG.uniform(-2, 2))
            g = GroupPoint("heis3", (0.0, t, -t))
            assert in_ZX(spec, g)
            for _ in range(10):
                h = riemannian_point()
                v = RNG.uniform(-1, 1, size=3)
                before, after = _push_norm_gap(spec, g, h, v)
                assert abs(before - after) <= 1e-9 * (1 + before)

        for _ in range(20):
            g = GroupPoint("heis3", tuple(RNG.uniform(0.5, 2, size=3)))
            assert not in_ZX(spec, g)
            worst = 0.0
            for _ in range(10):
                h = riemannian_point()
                v = RNG.uniform(-1, 1, size=3)
                before, after = _push_norm_gap(spec, g, h, v)
                if math.isfinite(before) and math.isfinite(after):
                    worst = max(worst, abs(before - after) / (1 + before))
            assert worst > 1e-6, "no violating vector found off Z_X"


# ---------------------------------------------------------------------------
# C5: Aff+(2) classification on random input


def _replay_derivation(D, trace):
    cur = tuple(tuple(F(x) for x in row) for row in D)
    for step in trace.steps:
        if step.kind == "automorphism":
            cur = tuple(tuple(r) for r in
                        conjugate_derivation(step.matrix, cur))
        elif step.kind == "sign-flip" and step.target == "field":
            cur = tuple(tuple(-x for x in row) for row in cur)
        elif step.kind == "rescaling":
            cur = tuple(tuple(step.scalar * x for x in row) for row in cur)
    return cur


def test_c5_aff2_classification(capfd):
    with criterion("C5 aff2 classification", 5.0, capfd):
        done = 0
        while done < 100:
            alpha, beta = _rand_frac(nonzero=True), _rand_frac()
            a, b = _rand_frac(nonzero=True), _rand_frac()
            if alpha * (a * alpha + b * beta) == 0:
                continue
            spec = make_ars("aff2", ((0, 0), (a, b)), ((alpha, beta),))
            iso, trace = aff2_isometry_class(spec)
            assert iso.parameters["alpha"] > 0 and iso.parameters["b"] >= 0
            # the recorded steps conjugate D exactly onto [[0,0],[1,b]]
            assert _replay_derivation(spec.D, trace) == iso.D
            assert iso.D == ((F(0), F(0)), (F(1), iso.parameters["b"]))
            defo = aff2_deformed_class(iso)
            assert defo.parameters["b"] in (F(0), F(1))
            assert (defo.parameters["b"] == 0) == (b == 0)
            assert defo.invariants["Z_normal"] == (b == 0)
            done += 1


# ---------------------------------------------------------------------------
# C6: Heisenberg subalgebra table


def test_c6_heis_subalgebra_table(capfd):
    with criterion("C6 heis subalgebra table", 5.0, capfd):
        group_sizes = {"i": 1, "ii": 1, "iii": 0, "iv": 1,
                       "v": 3, "vi": 3, "vii": 1, "viii": 3}
        for label in ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii"):
            spec, params = sub_row_spec(label)
            defo = heis_sub_deformed_class(heis_sub_isometry_class(spec)[0])
            assert defo.invariants["row"] == label

            # eigenvalues of [[0, b], [1, d]]: l = (d +- sqrt(d^2 + 4b))/2
            b, d = defo.parameters["b"], defo.parameters["d"]
            eig = defo.invariants["eigenvalues"]
            disc = float(d * d + 4 * b)
            if disc < 0:
                assert eig.kind == "complex"
            elif eig.kind == "jordan":
                assert abs(disc) < 1e-12
                assert abs(float(eig.l1) - float(d) / 2) < 1e-12
            else:
                roots = sorted(((float(d) + s * math.sqrt(disc)) / 2
                                for s in (1, -1)))
                got = sorted((float(eig.l1), float(eig.l2)))
                assert np.allclose(roots, got, atol=1e-12)

            # recompute Z from the canonical spec: x + y = 0 or x = 0
            canon = make_ars("heis3", defo.D, defo.frame)
            p = singular_poly(canon)
            cx = p.coefficient((1, 0, 0))
            cy = p.coefficient((0, 1, 0))
            want = defo.invariants["Z"]
            assert (want == "x + y = 0") == (cy == cx != 0)
            assert (want == "x = 0") == (cy == 0 != cx)

            desc = heis_sub_isometry_group(defo)
            assert len(desc.generators) == group_sizes[label], label

        # exact anchor: b = 2 gives l1 = 2, l2 = -1
        spec, _ = sub_row_spec("i", b=F(2))
        defo = heis_sub_deformed_class(heis_sub_isometry_class(spec)[0])
        eig = defo.invariants["eigenvalues"]
        assert {eig.l1, eig.l2} == {F(2), F(-1)}


# ---------------------------------------------------------------------------
# C7: Heisenberg non-subalgebra tables (tangency + components)


def _points_match(got, want):
    if len(got) != len(want):
        return False
    for w in want:
        wf = [float(c) for c in w]
        if not any(np.allclose(wf, [float(c) for c in g], atol=1e-12)
                   for g in got):
            return False
    return True


def _lines_match(base1, dir1, base2, dir2):
    d1, d2 = np.asarray(dir1, float), np.asarray(dir2, float)
    if np.linalg.norm(np.cross(d1, d2)) > 1e-12:
        return False
    diff = np.asarray(base1, float) - np.asarray(base2, float)
    return np.linalg.norm(np.cross(diff, d1)) < 1e-12


def test_c7_heis_nonsubalgebra_tables(capfd):
    with criterion("C7 heis non-subalgebra tables", 60.0, capfd):
        for label, row in NONSUB_ROWS.items():
            spec, params = nonsub_row_spec(label)
            want = row["tangency"](params)
            got = tangency_points(spec)
            if want["kind"] == "empty":
                assert got.kind == "empty", label
            elif want["kind"] == "isolated points":
                assert got.kind == "points", label
                assert _points_match(got.points, want["points"]), label
            elif want["kind"] == "line":
                assert got.kind == "line", label
                assert _lines_match(got.base, got.direction,
                                    want["base"], want["direction"]), label
            else:
                assert got.kind == "all-of-Z", label

            count = connected_components(spec, box=(-3, 3), resolution=64)
            assert count.count == row["components"], label
            assert count.stable, label

        # exact anchor: 1.i.1 with l2 = 2 has the single tangency point
        spec, _ = nonsub_row_spec("1.i.1")
        assert tangency_points(spec).points == ((F(-1), F(1, 2), F(-1, 6)),)


# ---------------------------------------------------------------------------
# C8: geodesic integrity


def test_c8_geodesic_integrity(capfd):
    with criterion("C8 geodesic integrity", 10.0, capfd):
        spec = make_ars("heis3", ((1, 0, 0), (0, 2, 0), (1, 1, 3)),
                        ((1, 0, 0), (0, 1, 0)))
        p = singular_poly(spec).to_float()
        starts = 0
        while starts < 20:
            x = RNG.uniform(-1, 1, size=3)
            if abs(p(list(x))) < 0.3:
                continue
            lam = RNG.uniform(-1, 1, size=3)
            lam /= np.linalg.norm(lam)
            state = CotangentState(GroupPoint("heis3", tuple(x)), tuple(lam))
            trace = geodesic_shoot(spec, state, 1.0, 1000)
            assert not trace.truncated
            assert trace.energy_drift <= 1e-7
            starts += 1

        state = CotangentState(GroupPoint("heis3", (0.5, 0.5, 0.5)),
                               (0.3, -0.4, 0.2))
        ref = np.asarray(geodesic_shoot(spec, state, 1.0, 8000)
                         .points[-1].coords)
        errs = [np.linalg.norm(np.asarray(
            geodesic_shoot(spec, state, 1.0, n).points[-1].coords) - ref)
            for n in (100, 200)]
        assert 12 <= errs[0] / errs[1] <= 20


# ---------------------------------------------------------------------------
# C9: ars_norm vs a brute-force coefficient-grid oracle


def _grid_min_norm(A, v):
    """Brute-force minimal coefficient norm over {c : A c = v}.

    Parameterize the solution set as cp + N t (N spans the kernel of A,
    cp a deliberately non-minimal particular solution) and grid-search the
    free parameters t with a zooming refinement.
    """
    U, s, Vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-9 * max(1.0, s[0])))
    if rank < A.shape[0]:
        off_span = np.linalg.norm(U[:, rank:].T @ v)
        if off_span > 1e-6 * (1 + np.linalg.norm(v)):
            return math.inf
    cp = Vt[:rank].T @ ((U[:, :rank].T @ v) / s[:rank])
    N = Vt[rank:].T
    k = N.shape[1]
    if k == 0:
        return float(np.linalg.norm(cp))
    cp = cp + N @ RNG.uniform(-2, 2, size=k)  # spoil minimality on purpose
    center, width = np.zeros(k), 12.0
    for _ in range(10):
        axes = [np.linspace(c - width / 2, c + width / 2, 15) for c in center]
        T = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")],
                     axis=1)
        norms = np.linalg.norm(cp[None, :] + T @ N.T, axis=1)
        center = T[int(np.argmin(norms))]
        width *= 0.3
    return float(np.linalg.norm(cp + N @ center))


def _random_spec(tag):
    model = algebra_model(tag)
    space = derivation_space(model)
    while True:
        params = {k: float(RNG.uniform(-2, 2)) for k in space.param_names}
        D = space.construct(**params)
        frame = (((1, 0),) if tag == "aff2"
                 else ((1, 0, 0), (0, 1, 0)))
        spec = make_ars(tag, D, frame, require_valid=False)
        if abs(np.asarray(D, float)).sum() > 0.5:
            return spec, params


def _singular_point(spec, params):
    if spec.group_tag == "aff2":
        a, b = params["a"], params["b"]
        x = float(RNG.uniform(0.3, 2.0))
        y = a * (1 - x) / b if b != 0 else float(RNG.uniform(-2, 2))
        return GroupPoint("aff2", (x, y) if b != 0 else (1.0, y))
    tr = params["a"] + params["d"]
    if abs(tr) < 0.2:
        return None
    x, y = RNG.uniform(-1.5, 1.5, size=2)
    num = (params["e"] * x + params["f"] * y - params["c"] / 2 * x * x
           + params["b"] / 2 * y * y - params["d"] * x * y)
    return GroupPoint("heis3", (x, y, -num / tr))


def test_c9_oracle_equivalence(capfd):
    with criterion("C9 oracle equivalence", 30.0, capfd):
        done = 0
        while done < 50:
            tag = "aff2" if done % 2 == 0 else "heis3"
            spec, params = _random_spec(tag)
            singular = done % 5 == 0
            if singular:
                g = _singular_point(spec, params)
                if g is None:
                    continue
                assert in_Z(spec, g, tol=1e-6)
            else:
                coords = RNG.uniform(-1.5, 1.5, size=len(spec.frame[0]))
                if tag == "aff2":
                    coords[0] = abs(coords[0]) + 0.2
                g = GroupPoint(tag, tuple(coords))
            A = frame_at(spec, g)
            if singular and done % 10 == 0:
                v = RNG.uniform(-2, 2, size=A.shape[0])  # typically off-span
            else:
                c_true = RNG.uniform(-1.5, 1.5, size=A.shape[1])
                v = A @ c_true
            got = ars_norm(spec, TangentVector(g, tuple(v)))
            want = _grid_min_norm(A, v)
            if math.isinf(want) or math.isinf(got):
                assert math.isinf(want) == math.isinf(got)
            else:
                assert abs(got - want) < 1e-2
            done += 1


# ---------------------------------------------------------------------------
# C10: generic subalgebra spec admits no nontrivial sign isometry


def test_c10_isometry_group_genericity(capfd):
    with criterion("C10 isometry-group genericity", 2.0, capfd):
        draw = lambda: F(int(RNG.integers(1, 20)), 10)  # in [0.1, 1.9]
        b, d, f = draw(), draw(), draw()
        D = ((F(0), b, F(0)), (F(1), d, F(0)), (F(0), f, d))
        spec = make_ars("heis3", D, ((1, 0, 0), (0, 0, 1)))
        for eps in (1, -1):
            for epsp in (1, -1):
                if (eps, epsp) == (1, 1):
                    continue
                assert not isometry_candidate_check(spec, spec,
                                                    _pee(eps, epsp))
