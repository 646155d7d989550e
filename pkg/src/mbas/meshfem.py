"""Q1 finite-element assembly on the uniform unit-square mesh.

Dirichlet nodes are eliminated; unknowns are the interior nodes ordered
lexicographically, row (y) major then column (x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from mbas.errors import ParameterError
from mbas.sparsekit import CsrMatrix

__all__ = ["Grid", "assemble_mass", "assemble_stiffness", "assemble_target"]

# local node order: (0,0), (1,0), (1,1), (0,1), counter-clockwise
_MASS_REF = np.array(
    [[4.0, 2.0, 1.0, 2.0],
     [2.0, 4.0, 2.0, 1.0],
     [1.0, 2.0, 4.0, 2.0],
     [2.0, 1.0, 2.0, 4.0]]
) / 36.0
_STIFF_REF = np.array(
    [[4.0, -1.0, -2.0, -1.0],
     [-1.0, 4.0, -1.0, -2.0],
     [-2.0, -1.0, 4.0, -1.0],
     [-1.0, -2.0, -1.0, 4.0]]
) / 6.0


@dataclass(frozen=True)
class Grid:
    """Uniform square mesh with ``2**level`` cells per side."""

    level: int

    def __post_init__(self):
        if int(self.level) != self.level or self.level < 1:
            raise ParameterError(f"mesh level must be an integer >= 1, got {self.level!r}")

    @property
    def n(self) -> int:
        return 2 ** self.level

    @property
    def h(self) -> float:
        # a power of two, so exact in binary floating point
        return 2.0 ** (-self.level)

    @property
    def m(self) -> int:
        return (self.n - 1) ** 2

    def interior_coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """x and y of every unknown, in unknown order."""
        ticks = np.arange(1, self.n) * self.h
        y, x = np.meshgrid(ticks, ticks, indexing="ij")
        return x.ravel(), y.ravel()

    def fully_interior(self) -> np.ndarray:
        """Mask of unknowns whose eight neighbours are all unknowns too."""
        idx = np.arange(1, self.n)
        jj, ii = np.meshgrid(idx, idx, indexing="ij")
        inner = (ii > 1) & (ii < self.n - 1) & (jj > 1) & (jj < self.n - 1)
        return inner.ravel()


def _assemble(grid: Grid, element: np.ndarray) -> CsrMatrix:
    n = grid.n
    ex, ey = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    ex, ey = ex.ravel(), ey.ravel()
    # global (x, y) node indices of the four corners of every cell
    cx = np.stack([ex, ex + 1, ex + 1, ex], axis=1)
    cy = np.stack([ey, ey, ey + 1, ey + 1], axis=1)
    interior = (cx > 0) & (cx < n) & (cy > 0) & (cy < n)
    dof = np.where(interior, (cy - 1) * (n - 1) + (cx - 1), -1)

    rows = np.repeat(dof, 4, axis=1)
    cols = np.tile(dof, (1, 4))
    vals = np.broadcast_to(element.ravel(), rows.shape)
    keep = (rows >= 0) & (cols >= 0)
    a = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(grid.m, grid.m)).tocsr()
    a.sum_duplicates()
    # duplicate sums may round differently for (i,j) and (j,i)
    a = (a + a.T) * 0.5
    return CsrMatrix.from_scipy(a)


def assemble_mass(grid: Grid) -> CsrMatrix:
    """Consistent Q1 mass matrix."""
    return _assemble(grid, _MASS_REF * grid.h**2)


def assemble_stiffness(grid: Grid) -> CsrMatrix:
    """Q1 Laplacian; in two dimensions the element matrix does not depend on h."""
    return _assemble(grid, _STIFF_REF)


def target_function(x, y):
    """Desired state: ``(2x-1)^2 (2y-1)^2`` on the open quadrant (0,1/2)^2, zero elsewhere."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    inside = (x > 0) & (x < 0.5) & (y > 0) & (y < 0.5)
    return np.where(inside, (2 * x - 1) ** 2 * (2 * y - 1) ** 2, 0.0)


def assemble_target(grid: Grid) -> np.ndarray:
    """Nodal interpolant of the desired state at the unknowns."""
    x, y = grid.interior_coordinates()
    return target_function(x, y)
