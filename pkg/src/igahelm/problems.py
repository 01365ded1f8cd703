"""Model Helmholtz problems on the unit interval and unit square.

Conventions: the operator is -Laplace(u) - k^2 u, Robin edges carry
du/dn - i k u = 0, and Dirichlet data is either 0 or 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

PI = math.pi

# Default 4x4 multiplier table of the step wave number: row r is the
# horizontal layer y in [r/4, (r+1)/4), column c is x in [c/4, (c+1)/4).
# Sixteen distinct values spanning [1/2, 3/2], increasing layer by layer.
DEFAULT_STEP_TABLE = tuple(
    tuple(0.5 + (4 * r + c) / 15.0 for c in (0, 2, 1, 3)) for r in (0, 2, 3, 1)
)


class ResonanceError(ValueError):
    """Raised when a series term is (numerically) at resonance."""


@dataclass(frozen=True)
class WaveNumberField:
    """Constant wave number or a 4x4 piecewise-constant step field."""

    base_k: float
    kind: str = "constant"
    grid_values: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if self.base_k < 0:
            raise ValueError("wave number must be non-negative")
        if self.kind not in ("constant", "step2d"):
            raise ValueError(f"unknown wave-number field kind {self.kind!r}")
        if self.kind == "step2d":
            table = np.asarray(self.grid_values, dtype=float)
            if table.shape != (4, 4):
                raise ValueError("step field needs a 4x4 multiplier table")
            if table.min() < 0.5 - 1e-12 or table.max() > 1.5 + 1e-12:
                raise ValueError("step multipliers must lie in [1/2, 3/2]")

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, x, y=None):
        return step_wavenumber(x, y, self)


def step_field(base_k: float, table=DEFAULT_STEP_TABLE) -> WaveNumberField:
    grid = tuple(tuple(float(v) for v in row) for row in table)
    return WaveNumberField(base_k=base_k, kind="step2d", grid_values=grid)


def step_wavenumber(x, y, field: WaveNumberField):
    """Evaluate the wave number at ``(x, y)``; works elementwise on arrays."""
    x = np.asarray(x, dtype=float)
    if field.kind == "constant":
        return np.full(np.broadcast(x, 0.0 if y is None else y).shape, field.base_k)[()]
    y = np.asarray(y, dtype=float)
    table = np.asarray(field.grid_values)
    cx = np.clip(np.floor(4.0 * x).astype(int), 0, 3)
    cy = np.clip(np.floor(4.0 * y).astype(int), 0, 3)
    return (field.base_k * table[cy, cx])[()]


def exact_mp1a(x, k: float):
    """Plane wave e^{ikx}."""
    return np.exp(1j * k * np.asarray(x, dtype=float))


def _guard(denominators: np.ndarray, k: float, rtol: float) -> None:
    if np.min(np.abs(denominators)) < rtol * max(1.0, k * k):
        raise ResonanceError(f"k = {k} is at resonance with a retained series term")


def greens_1d(x, x_src: float, k: float, J: int = 100_000, rtol: float = 1e-10):
    """Truncated sine series of the 1D Dirichlet Green's function.

    2 * sum_{j<=J} sin(j pi x) sin(j pi x_src) / (j^2 pi^2 - k^2)
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    j = np.arange(1, J + 1, dtype=float)
    denom = (j * PI) ** 2 - k * k
    _guard(denom, k, rtol)
    coef = 2.0 * np.sin(j * PI * x_src) / denom
    out = np.empty(x.shape)
    chunk = max(1, 2_000_000 // J)
    flat = x.ravel()
    res = out.ravel()
    for s in range(0, flat.size, chunk):
        res[s:s + chunk] = np.sin(np.outer(flat[s:s + chunk], j * PI)) @ coef
    return out.reshape(x.shape)


def greens_1d_closed(x, x_src: float, k: float):
    """Closed form sin(k x<) sin(k (1 - x>)) / (k sin k); k = 0 gives x<(1 - x>)."""
    x = np.asarray(x, dtype=float)
    lo = np.minimum(x, x_src)
    hi = np.maximum(x, x_src)
    if k == 0:
        return lo * (1.0 - hi)
    return np.sin(k * lo) * np.sin(k * (1.0 - hi)) / (k * np.sin(k))


def _greens_1d_any(x, x_src, kappa2):
    """Green's function of -u'' - kappa2 u = delta on [0, 1], kappa2 of any sign."""
    lo = np.minimum(x, x_src)
    hi = np.maximum(x, x_src)
    if kappa2 > 0:
        s = math.sqrt(kappa2)
        return np.sin(s * lo) * np.sin(s * (1 - hi)) / (s * math.sin(s))
    if kappa2 < 0:
        s = math.sqrt(-kappa2)
        # sinh(s lo) sinh(s (1 - hi)) / (s sinh s) without overflow
        num = np.exp(s * (lo - hi)) * (1 - np.exp(-2 * s * lo)) * (1 - np.exp(-2 * s * (1 - hi)))
        return num / (2.0 * s * (1.0 - math.exp(-2.0 * s)))
    return lo * (1.0 - hi)


def greens_2d(x, y, x_src: float, y_src: float, k: float, I: int = 1000, J: int = 1000,
              rtol: float = 1e-10):
    """Truncated double sine series of the 2D Dirichlet Green's function."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x, y = np.broadcast_arrays(x, y)
    i = np.arange(1, I + 1, dtype=float)
    j = np.arange(1, J + 1, dtype=float)
    denom = (i[:, None] * PI) ** 2 + (j[None, :] * PI) ** 2 - k * k
    _guard(denom, k, rtol)
    coef = 4.0 * np.outer(np.sin(i * PI * x_src), np.sin(j * PI * y_src)) / denom
    out = np.empty(x.size)
    for m, (xm, ym) in enumerate(zip(x.ravel(), y.ravel())):
        out[m] = np.sin(i * PI * xm) @ coef @ np.sin(j * PI * ym)
    return out.reshape(x.shape)


def greens_2d_semi(x, y, x_src: float, y_src: float, k: float, I: int = 2000):
    """Single series in x with the y-sum done in closed form.

    Used as an independent check on :func:`greens_2d` and for error norms;
    converges exponentially away from the source line y = y_src.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x, y = np.broadcast_arrays(x, y)
    total = np.zeros(x.shape)
    for i in range(1, I + 1):
        wx = 2.0 * math.sin(i * PI * x_src)
        if wx == 0.0:
            continue
        total += wx * np.sin(i * PI * x) * _greens_1d_any(y, y_src, k * k - (i * PI) ** 2)
    return total


def resolution_for(k: float, kh_target: float) -> int:
    """Smallest element count with k * h <= kh_target on the unit interval."""
    if k <= 0 or kh_target <= 0:
        raise ValueError("k and kh_target must be positive")
    return max(1, math.ceil(k / kh_target - 1e-9))


EDGES_1D = ("left", "right")
EDGES_2D = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class ModelProblem:
    """Geometry, coefficients, source and boundary conditions of a problem.

    ``bc`` maps each edge to ``"dirichlet"`` or ``"robin"``; ``dirichlet_value``
    maps Dirichlet edges to their (constant) data, default 0.
    """

    id: str
    dim: int
    wave: WaveNumberField
    bc: dict
    source: tuple[float, ...] | None = None
    dirichlet_value: dict = field(default_factory=dict)
    exact: Callable | None = field(default=None, compare=False)

    @property
    def k(self) -> float:
        return self.wave.base_k

    @property
    def robin_edges(self) -> tuple[str, ...]:
        return tuple(e for e, t in self.bc.items() if t == "robin")

    @property
    def dirichlet_edges(self) -> tuple[str, ...]:
        return tuple(e for e, t in self.bc.items() if t == "dirichlet")


def mp1a(k: float) -> ModelProblem:
    return ModelProblem(
        id="MP1A", dim=1, wave=WaveNumberField(k),
        bc={"left": "dirichlet", "right": "robin"},
        dirichlet_value={"left": 1.0},
        exact=lambda x: exact_mp1a(x, k),
    )


def mp1b(k: float, x_src: float = 0.5) -> ModelProblem:
    return ModelProblem(
        id="MP1B", dim=1, wave=WaveNumberField(k),
        bc={"left": "dirichlet", "right": "dirichlet"},
        source=(x_src,),
        exact=lambda x: greens_1d_closed(x, x_src, k),
    )


def mp2a(k: float, robin_edges: tuple[str, ...] = ()) -> ModelProblem:
    bc = {e: ("robin" if e in robin_edges else "dirichlet") for e in EDGES_2D}
    exact = None
    if not robin_edges:
        exact = lambda x, y: greens_2d_semi(x, y, 0.5, 0.5, k)  # noqa: E731
    return ModelProblem(id="MP2A", dim=2, wave=WaveNumberField(k), bc=bc,
                        source=(0.5, 0.5), exact=exact)


def mp2b(k: float, table=DEFAULT_STEP_TABLE) -> ModelProblem:
    return ModelProblem(id="MP2B", dim=2, wave=step_field(k, table),
                        bc={e: "dirichlet" for e in EDGES_2D}, source=(0.5, 0.5))


def make_problem(problem_id: str, k: float, **kwargs) -> ModelProblem:
    factories = {"MP1A": mp1a, "MP1B": mp1b, "MP2A": mp2a, "MP2B": mp2b}
    key = problem_id.upper().replace("-", "").replace("_", "")
    if key not in factories:
        raise KeyError(f"unknown problem {problem_id!r}")
    return factories[key](k, **kwargs)
