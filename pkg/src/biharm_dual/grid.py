"""Rectangular grids, nodal fields and the quadrature used everywhere else.

Only interior nodes are stored. Both boundary conditions impose ``u = 0`` on
the boundary, so boundary values are implicit zeros. Unknowns are ordered
row-major: node ``(i, j)`` (``i`` along x, ``j`` along y) lives at index
``j * nx + i``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BC",
    "Grid2D",
    "Field",
    "integrate",
    "inner",
    "split",
    "lp_norm",
]


class BC(str, enum.Enum):
    NAVIER = "navier"
    DIRICHLET = "dirichlet"

    @classmethod
    def parse(cls, value: "BC | str") -> "BC":
        if isinstance(value, BC):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown boundary condition {value!r} (expected 'navier' or 'dirichlet')"
            ) from None


@dataclass(frozen=True)
class Grid2D:
    """Uniform grid of ``nx * ny`` interior nodes on ``[0, lx] x [0, ly]``."""

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0
    bc: BC = BC.NAVIER
    hx: float = field(init=False)
    hy: float = field(init=False)

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx and ny must be integers")
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"need nx >= 3 and ny >= 3, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError(f"side lengths must be positive, got {self.lx}, {self.ly}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))
        object.__setattr__(self, "bc", BC.parse(self.bc))
        object.__setattr__(self, "hx", self.lx / (self.nx + 1))
        object.__setattr__(self, "hy", self.ly / (self.ny + 1))

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape ``(ny, nx)`` of a reshaped field."""
        return (self.ny, self.nx)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened node coordinates ``(x, y)`` in storage order."""
        x = self.hx * np.arange(1, self.nx + 1)
        y = self.hy * np.arange(1, self.ny + 1)
        X, Y = np.meshgrid(x, y)
        return X.ravel(), Y.ravel()

    def describe(self) -> str:
        return (
            f"{self.nx}x{self.ny} grid on [0,{self.lx:g}]x[0,{self.ly:g}] "
            f"(hx={self.hx:.6g}, hy={self.hy:.6g}, bc={self.bc.value})"
        )

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.size))

    def from_function(self, func) -> "Field":
        """Sample ``func(x, y)`` at the interior nodes."""
        x, y = self.coordinates()
        return Field(self, np.asarray(func(x, y), dtype=float))

    def sine_mode(self, kx: int = 1, ky: int = 1) -> "Field":
        """Discrete Dirichlet sine mode ``sin(kx pi x / lx) sin(ky pi y / ly)``."""
        return self.from_function(
            lambda x, y: np.sin(kx * math.pi * x / self.lx) * np.sin(ky * math.pi * y / self.ly)
        )


class Field:
    """Real values on the interior nodes of a grid.

    The value array is copied on construction and marked read-only.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid2D, values):
        arr = np.array(values, dtype=float).ravel()
        if arr.shape != (grid.size,):
            raise ValueError(f"field has {arr.size} values, grid {grid.nx}x{grid.ny} needs {grid.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.flags.writeable = False
        self.grid = grid
        self.values = arr

    def __repr__(self):
        return f"Field({self.grid.nx}x{self.grid.ny}, max|.|={self.max_abs():.4g})"

    def as_array(self) -> np.ndarray:
        """View with shape ``(ny, nx)``."""
        return self.values.reshape(self.grid.shape)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValueError("incompatible grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values + other.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values - other.values)
        return NotImplemented

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            return NotImplemented
        return Field(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__


def _same_grid(f1: Field, f2: Field) -> None:
    if f1.grid != f2.grid:
        raise ValueError("incompatible grids")


def integrate(f1: Field) -> float:
    """Scaled nodal sum ``hx * hy * sum(values)``."""
    return f1.grid.cell_area * float(np.sum(f1.values))


def inner(f1: Field, f2: Field) -> float:
    """Discrete L2 pairing; symmetric bit-for-bit under argument swap."""
    _same_grid(f1, f2)
    return f1.grid.cell_area * float(np.sum(f1.values * f2.values))


def split(w: Field) -> tuple[Field, Field]:
    """Pointwise positive and negative parts ``(max(w, 0), min(w, 0))``."""
    return Field(w.grid, np.maximum(w.values, 0.0)), Field(w.grid, np.minimum(w.values, 0.0))


def lp_norm(w: Field, r: float) -> float:
    if r < 1:
        raise ValueError(f"lp_norm needs r >= 1, got {r}")
    return (w.grid.cell_area * float(np.sum(np.abs(w.values) ** r))) ** (1.0 / r)
