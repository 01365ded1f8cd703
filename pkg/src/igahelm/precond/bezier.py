"""Bernstein polynomials and rational Bezier curves."""
from __future__ import annotations

from math import comb

import numpy as np


def bernstein(j: int, n: int, t):
    """Bernstein polynomial C(n, j) t^j (1 - t)^(n - j)."""
    t = np.asarray(t, dtype=float)
    return comb(n, j) * t**j * (1.0 - t) ** (n - j)


def rational_bezier_eval(control_points, weights, t):
    """Point on the rational Bezier curve with the given control points.

    ``control_points`` may be scalars or vectors (stacked along axis 0).
    """
    P = np.asarray(control_points, dtype=complex if np.iscomplexobj(control_points) else float)
    w = np.asarray(weights, dtype=float)
    if P.shape[0] != w.size:
        raise ValueError("control points and weights must have equal length")
    n = w.size - 1
    b = np.array([w[j] * bernstein(j, n, t) for j in range(n + 1)])
    denom = b.sum()
    if abs(denom) < 1e-14:
        raise ZeroDivisionError("degenerate rational Bezier denominator")
    return np.tensordot(b, P, axes=(0, 0)) / denom


def bezier_stencil_weights(weights=(0.5, 1.5, 0.5), t: float = 0.5) -> np.ndarray:
    """Coefficients multiplying each control point at parameter ``t``.

    For the quadratic curve with weights (1/2, 3/2, 1/2) at t = 1/2 these are
    (1/8, 6/8, 1/8), the even-row prolongation weights.
    """
    unit = np.eye(len(weights))
    return np.array([rational_bezier_eval(unit[j], weights, t) for j in range(len(weights))])
