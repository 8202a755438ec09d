"""Linear fields: evaluation, flow identities, differential identity."""

import numpy as np
import pytest

from arskit.group import GroupPoint, group_exp, multiply
from arskit.linfield import (
    check_TgF,
    eval_linear,
    flow,
    flow_ode,
    linear_field,
)

RNG = np.random.default_rng(20240817)


def _random_field(tag):
    if tag == "aff2":
        a, b = RNG.uniform(-1, 1, 2)
        return linear_field("aff2", ((0, 0), (a, b)))
    a, b, c, d, e, f = RNG.uniform(-1, 1, 6)
    return linear_field("heis3", ((a, b, 0), (c, d, 0), (e, f, a + d)))


def _random_point(tag):
    if tag == "aff2":
        return GroupPoint("aff2", (float(RNG.uniform(0.3, 2.5)),
                                   float(RNG.uniform(-1.5, 1.5))))
    return GroupPoint("heis3", tuple(RNG.uniform(-1.5, 1.5, 3)))


def test_rejects_non_derivation():
    with pytest.raises(ValueError):
        linear_field("aff2", ((1, 0), (0, 1)))
    with pytest.raises(ValueError):
        linear_field("heis3", ((1, 0, 0), (0, 1, 0), (0, 0, 5)))


def test_vanishes_at_identity():
    fa = _random_field("aff2")
    fh = _random_field("heis3")
    assert np.allclose(eval_linear(fa, GroupPoint("aff2", (1, 0))).coords, 0)
    assert np.allclose(
        eval_linear(fh, GroupPoint("heis3", (0, 0, 0))).coords, 0)


def test_flow_formula_on_exponentials():
    # flow_t(exp Y) = exp(e^{tD} Y) is the defining closed form; cross-check
    # it against direct RK4 integration of the coordinate ODE
    for tag in ("aff2", "heis3"):
        for _ in range(10):
            field = _random_field(tag)
            n = 2 if tag == "aff2" else 3
            Y = tuple(RNG.uniform(-0.8, 0.8, n))
            t = float(RNG.uniform(-2, 2))
            g = group_exp(tag, Y)
            closed = flow(field, t, g)
            integrated = flow_ode(field, t, g)
            assert np.allclose(closed.coords, integrated.coords, atol=1e-7)


def test_flow_is_automorphic():
    # the flow of a linear field is a one-parameter automorphism group:
    # flow_t(g h) = flow_t(g) flow_t(h)
    for tag in ("aff2", "heis3"):
        field = _random_field(tag)
        t = 0.8
        g, h = _random_point(tag), _random_point(tag)
        lhs = flow(field, t, multiply(g, h))
        rhs = multiply(flow(field, t, g), flow(field, t, h))
        assert np.allclose(lhs.coords, rhs.coords, atol=1e-10)


def test_flow_group_property():
    field = _random_field("heis3")
    g = _random_point("heis3")
    one = flow(field, 0.9, flow(field, 0.6, g))
    two = flow(field, 1.5, g)
    assert np.allclose(one.coords, two.coords, atol=1e-10)


def test_differential_identity_residual():
    for tag in ("aff2", "heis3"):
        for _ in range(5):
            field = _random_field(tag)
            g = _random_point(tag)
            assert check_TgF(field, g) < 1e-6
