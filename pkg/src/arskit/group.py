"""Coordinate models of the groups Aff+(2) and Heis(3).

Aff+(2) is the half plane {(x, y): x > 0} with the affine product; Heis(3)
is R^3 with the unitriangular product.  Products, inverses and the Heisenberg
exp/log are polynomial, so they stay exact on Fraction coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import GroupTag, LieAlgebraModel, algebra_model

_EXPM1_SWITCH = 1e-8


@dataclass(frozen=True)
class GroupPoint:
    group_tag: GroupTag
    coords: tuple

    def __post_init__(self):
        n = algebra_model(self.group_tag).dim
        if len(self.coords) != n:
            raise ValueError(f"{self.group_tag} points need {n} coordinates")
        if self.group_tag == "aff2" and not self.coords[0] > 0:
            raise ValueError("aff2 points require x > 0")

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class TangentVector:
    base: GroupPoint
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != self.base.dim:
            raise ValueError("tangent vector length must match the point")


def point(tag: GroupTag, coords: Sequence) -> GroupPoint:
    return GroupPoint(tag, tuple(coords))


def identity(tag: GroupTag) -> GroupPoint:
    if tag == "aff2":
        return GroupPoint("aff2", (1, 0))
    return GroupPoint("heis3", (0, 0, 0))


def multiply(g: GroupPoint, h: GroupPoint) -> GroupPoint:
    if g.group_tag != h.group_tag:
        raise ValueError("group tags differ")
    if g.group_tag == "aff2":
        x, y = g.coords
        xp, yp = h.coords
        return GroupPoint("aff2", (x * xp, x * yp + y))
    x, y, z = g.coords
    xp, yp, zp = h.coords
    return GroupPoint("heis3", (x + xp, y + yp, z + zp + x * yp))


def inverse(g: GroupPoint) -> GroupPoint:
    if g.group_tag == "aff2":
        x, y = g.coords
        return GroupPoint("aff2", (1 / x, -y / x))
    x, y, z = g.coords
    return GroupPoint("heis3", (-x, -y, -z + x * y))


def _expm1_over(u: float) -> float:
    """(e^u - 1)/u with the analytic limit at u = 0."""
    if abs(u) < _EXPM1_SWITCH:
        return 1.0 + u / 2.0 + u * u / 6.0
    return math.expm1(u) / u


def group_exp(model: LieAlgebraModel | GroupTag, Y: Sequence) -> GroupPoint:
    """Lie group exponential of an algebra vector, in closed form."""
    tag = model if isinstance(model, str) else model.group_tag
    if tag == "aff2":
        u, v = Y
        return GroupPoint("aff2", (math.exp(u), v * _expm1_over(float(u))))
    u, v, w = Y
    # polynomial, so exact on rational input
    half = 0.5 if isinstance(u, float) or isinstance(v, float) else Fraction(1, 2)
    return GroupPoint("heis3", (u, v, w + u * v * half))


def group_log(g: GroupPoint) -> tuple:
    """Inverse of group_exp; both groups have a global diffeomorphic exp."""
    if g.group_tag == "aff2":
        x, y = g.coords
        u = math.log(x)
        return (u, float(y) / _expm1_over(u))
    x, y, z = g.coords
    half = 0.5 if isinstance(x, float) or isinstance(y, float) else Fraction(1, 2)
    return (x, y, z - x * y * half)


def left_translation_diff(g: GroupPoint):
    """Jacobian of the left translation L_g (constant in these coordinates)."""
    if g.group_tag == "aff2":
        x, _ = g.coords
        return np.array([[x, 0.0], [0.0, x]], dtype=float)
    x = g.coords[0]
    return np.array([[1.0, 0, 0], [0, 1.0, 0], [0, x, 1.0]], dtype=float)


def invariant_field_at(Y: Sequence, g: GroupPoint) -> TangentVector:
    """Value at g of the left-invariant field with value Y at the identity."""
    if g.group_tag == "aff2":
        x, _ = g.coords
        u, v = Y
        return TangentVector(g, (x * u, x * v))
    x = g.coords[0]
    u, v, w = Y
    return TangentVector(g, (u, v, w + x * v))
