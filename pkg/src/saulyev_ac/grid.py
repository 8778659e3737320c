"""Periodic uniform grids, grid functions and discrete calculus.

Grid functions are stored flat in row-major (lexicographic) order, so in 2D
the node ``(i, j)`` lives at ``i * M + j``.  The central-difference Laplacian
is split into an upper part ``A`` and a lower part ``B`` such that a sweep in
increasing lexicographic order sees every ``B`` neighbour already updated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GridMismatchError(ValueError):
    """Raised when two fields living on different grids are combined."""


def wrap(i: int, M: int) -> int:
    """Periodic index wrap, always returning a value in ``[0, M)``."""
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    return i % M


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on ``[0, L)^dim`` with ``M`` points per axis."""

    dim: int
    M: int
    L: float = 2.0 * math.pi

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"only 1D and 2D grids are supported, got dim={self.dim}")
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"M must be an integer >= 2, got {self.M}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"L must be positive and finite, got {self.L}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def size(self) -> int:
        return self.M**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def nodes(self) -> np.ndarray:
        """1D array of node coordinates ``x_i = i h``."""
        return np.arange(self.M) * self.h

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays with ``indexing='ij'``, each of shape :attr:`shape`."""
        x = self.nodes()
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.size))

    def full(self, value: float) -> "Field":
        return Field(self, np.full(self.size, float(value)))

    def from_function(self, func) -> "Field":
        """Sample ``func(*coords)`` at the grid nodes."""
        vals = np.broadcast_to(np.asarray(func(*self.mesh()), dtype=float), self.shape)
        return Field(self, vals.ravel().copy())


@dataclass
class Field:
    """Real grid function: a :class:`Grid` plus ``M**dim`` samples."""

    grid: Grid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64).reshape(-1)
        if data.size != self.grid.size:
            raise ValueError(
                f"field has {data.size} samples, grid {self.grid} needs {self.grid.size}"
            )
        self.data = data

    @property
    def array(self) -> np.ndarray:
        """View of the samples with shape ``grid.shape``."""
        return self.data.reshape(self.grid.shape)

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.data - other.data)

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.data + other.data)


@dataclass
class GradientField:
    """Per-axis periodic forward differences of a field."""

    grid: Grid
    components: tuple[np.ndarray, ...]


def _check_same_grid(v: Field, w: Field) -> None:
    if v.grid != w.grid:
        raise GridMismatchError(f"grid mismatch: {v.grid} vs {w.grid}")


def inner_product(v: Field, w: Field) -> float:
    """Discrete L2 inner product ``h^d * sum(v * w)``."""
    _check_same_grid(v, w)
    return v.grid.cell_volume * float(np.dot(v.data, w.data))


def l2_norm(v: Field) -> float:
    return math.sqrt(inner_product(v, v))


def sup_norm(v: Field) -> float:
    return float(np.max(np.abs(v.data))) if v.data.size else 0.0


def forward_gradient(v: Field) -> GradientField:
    a = v.array
    h = v.grid.h
    comps = tuple(
        ((np.roll(a, -1, axis=ax) - a) / h).ravel() for ax in range(v.grid.dim)
    )
    return GradientField(v.grid, comps)


def gradient_inner_product(g1: GradientField, g2: GradientField) -> float:
    if g1.grid != g2.grid:
        raise GridMismatchError(f"grid mismatch: {g1.grid} vs {g2.grid}")
    return g1.grid.cell_volume * sum(
        float(np.dot(a, b)) for a, b in zip(g1.components, g2.components)
    )


def laplacian(v: Field) -> Field:
    """Periodic 3-point (1D) / 5-point (2D) central-difference Laplacian."""
    a = v.array
    out = np.zeros_like(a)
    for ax in range(v.grid.dim):
        out += np.roll(a, 1, axis=ax) - 2.0 * a + np.roll(a, -1, axis=ax)
    return Field(v.grid, (out / v.grid.h**2).ravel())


def laplacian_split(v: Field, part: str) -> Field:
    """Upper (``"A"``) or lower (``"B"``) triangular part of the Laplacian.

    Part A couples each node to its ``+1`` neighbour along every axis, except
    that index 0 takes its periodic ``M-1`` neighbour and index ``M-1`` has no
    off-diagonal entry.  Part B is the mirror image.  Both carry ``-1/h^2``
    per axis on the diagonal, so ``A + B`` is the full Laplacian.
    """
    part = part.upper()
    if part not in ("A", "B"):
        raise ValueError(f"part must be 'A' or 'B', got {part!r}")
    a = v.array
    M = v.grid.M
    out = -float(v.grid.dim) * a.copy()
    for ax in range(v.grid.dim):
        nb = np.zeros_like(a)
        # move the split axis to the front so the slicing reads the same for each axis
        src = np.moveaxis(a, ax, 0)
        dst = np.moveaxis(nb, ax, 0)
        if part == "A":
            dst[: M - 1] = src[1:]
            dst[0] += src[M - 1]
        else:
            dst[1:] = src[: M - 1]
            dst[M - 1] += src[0]
        out += nb
    return Field(v.grid, (out / v.grid.h**2).ravel())


def difference_matrices(M: int, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense 1D matrices ``(D_h, D_a, D_b)`` with ``D_h = D_a + D_b``.

    ``D_a`` holds the superdiagonal plus the ``(0, M-1)`` corner; ``D_b`` the
    subdiagonal plus the ``(M-1, 0)`` corner.
    """
    Da = -np.eye(M)
    Db = -np.eye(M)
    for i in range(M - 1):
        Da[i, i + 1] += 1.0
        Db[i + 1, i] += 1.0
    if M > 1:
        Da[0, M - 1] += 1.0
        Db[M - 1, 0] += 1.0
    Da /= h * h
    Db /= h * h
    return Da + Db, Da, Db


def vectorized_operator(D: np.ndarray, dim: int) -> np.ndarray:
    """Lift a 1D matrix to act on flat row-major fields: ``D u + u D^T`` in 2D."""
    if dim == 1:
        return D.copy()
    I = np.eye(D.shape[0])
    return np.kron(D, I) + np.kron(I, D)
