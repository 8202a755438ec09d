"""Linear vector fields on Aff+(2) and Heis(3).

A linear field vanishes at the identity and its flow is a one-parameter
group of automorphisms; it is encoded by its derivation matrix D (sign
convention D = -ad of the field on left-invariant vectors, the one that makes
the flow formula flow_t(exp Y) = exp(e^{tD} Y) hold with no sign).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import (
    GroupTag,
    algebra_model,
    bracket,
    exp_tD,
    is_derivation,
)
from .group import (
    GroupPoint,
    TangentVector,
    group_exp,
    group_log,
    inverse,
    left_translation_diff,
)


@dataclass(frozen=True)
class LinearField:
    group_tag: GroupTag
    D: tuple  # derivation matrix, rows of tuples

    def __post_init__(self):
        model = algebra_model(self.group_tag)
        if not is_derivation(model, self.D, tol=1e-9):
            raise ValueError("matrix is not a derivation of the algebra")

    @property
    def params(self) -> dict:
        D = self.D
        if self.group_tag == "aff2":
            return {"a": D[1][0], "b": D[1][1]}
        return {"a": D[0][0], "b": D[0][1], "c": D[1][0], "d": D[1][1],
                "e": D[2][0], "f": D[2][1]}


def linear_field(tag: GroupTag, D) -> LinearField:
    return LinearField(tag, tuple(tuple(row) for row in D))


def eval_linear(field: LinearField, g: GroupPoint) -> TangentVector:
    """Value of the linear field at g, in coordinates."""
    p = field.params
    if field.group_tag == "aff2":
        x, y = g.coords
        return TangentVector(g, (0 * x, p["a"] * (x - 1) + p["b"] * y))
    x, y, z = g.coords
    a, b, c, d, e, f = (p[k] for k in "abcdef")
    vz = e * x + f * y + (a + d) * z + c * x * x / 2 + b * y * y / 2
    return TangentVector(g, (a * x + b * y, c * x + d * y, vz))


def F_map(field: LinearField, g: GroupPoint) -> tuple:
    """Pull the field value at g back to the identity by L_{g^{-1}}."""
    v = np.asarray(eval_linear(field, g).coords, dtype=float)
    J = left_translation_diff(inverse(g))
    return tuple(J @ v)


def ad_matrix(tag: GroupTag, v: Sequence) -> np.ndarray:
    """Matrix of w -> [v, w] in the canonical basis."""
    model = algebra_model(tag)
    n = model.dim
    cols = []
    for j in range(n):
        ej = tuple(1 if i == j else 0 for i in range(n))
        cols.append(bracket(model, tuple(v), ej))
    return np.asarray(cols, dtype=float).T


def flow(field: LinearField, t: float, g: GroupPoint) -> GroupPoint:
    """Flow through g for time t, via the closed form exp(e^{tD} log g)."""
    Y = np.asarray(group_log(g), dtype=float)
    return group_exp(field.group_tag, exp_tD(field.D, t) @ Y)


def flow_ode(field: LinearField, t: float, g: GroupPoint,
             steps: int | None = None) -> GroupPoint:
    """Flow by RK4 integration of the coordinate ODE; cross-check path."""
    if steps is None:
        steps = max(64, int(np.ceil(abs(t) / 0.01)))
    h = t / steps
    x = np.asarray(g.coords, dtype=float)

    def rhs(x):
        gx = GroupPoint(field.group_tag, tuple(x))
        return np.asarray(eval_linear(field, gx).coords, dtype=float)

    for _ in range(steps):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return GroupPoint(field.group_tag, tuple(x))


def check_TgF(field: LinearField, g: GroupPoint, step: float = 1e-5) -> float:
    """Residual of the differential identity T_gF = (D + ad(F_g)) o TL_{g^-1}.

    The left side is a central finite-difference Jacobian of F_map; the
    return value is the max-entry difference.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    n = algebra_model(field.group_tag).dim
    x0 = np.asarray(g.coords, dtype=float)
    num = np.empty((n, n))
    for j in range(n):
        dx = np.zeros(n)
        dx[j] = step
        fp = np.asarray(F_map(field, GroupPoint(field.group_tag, tuple(x0 + dx))))
        fm = np.asarray(F_map(field, GroupPoint(field.group_tag, tuple(x0 - dx))))
        num[:, j] = (fp - fm) / (2 * step)
    D = np.asarray(field.D, dtype=float)
    Fg = F_map(field, g)
    analytic = (D + ad_matrix(field.group_tag, Fg)) @ left_translation_diff(inverse(g))
    return float(np.max(np.abs(num - analytic)))
