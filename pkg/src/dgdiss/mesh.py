"""Periodic Cartesian meshes of the d-dimensional box (d = 1, 2, 3).

Cells are congruent axis-aligned lines/squares/cubes indexed
lexicographically by multi-index (last axis fastest, C order).  Every facet
is interior by periodicity and is identified with the *top* face of exactly
one cell along its axis, so the global facet index is

    facet_index = axis * n_cells + plus_cell

The facet normal is the positive axis direction e_axis.  The cell on the
negative side of the normal (the one whose top face the facet is) supplies
the "+" trace, the cell on the positive side supplies the "-" trace, and
jumps are plus minus minus throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Facet", "PeriodicCartesianMesh", "build_mesh", "facet_length_scale"]


@dataclass(frozen=True)
class Facet:
    """One interior facet: two adjacent cells and the positive-axis normal."""

    index: int
    axis: int
    plus_cell: int
    minus_cell: int
    normal: tuple[float, ...]


@dataclass(frozen=True)
class PeriodicCartesianMesh:
    """Axis-aligned periodic box decomposed into congruent cells."""

    dim: int
    cells_per_axis: tuple[int, ...]
    box_length: tuple[float, ...]
    h_axis: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be in {{1,2,3}}, got {self.dim}")
        if len(self.cells_per_axis) != self.dim or len(self.box_length) != self.dim:
            raise ValueError("cells_per_axis and box_length must have one entry per axis")
        if any(n < 1 or n != int(n) for n in self.cells_per_axis):
            raise ValueError(f"cells_per_axis must be positive integers, got {self.cells_per_axis}")
        if any(not (L > 0.0) for L in self.box_length):
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        object.__setattr__(
            self, "h_axis", tuple(L / n for L, n in zip(self.box_length, self.cells_per_axis))
        )

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells_per_axis))

    @property
    def n_facets(self) -> int:
        return self.dim * self.n_cells

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h_axis))

    def isotropic(self) -> bool:
        h0 = self.h_axis[0]
        return all(math.isclose(h, h0, rel_tol=1e-12) for h in self.h_axis)

    # -- index maps (lexicographic, last axis fastest) -----------------------

    def cell_index(self, multi) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.cells_per_axis, mode="wrap"))

    def cell_multi_index(self, index: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.cells_per_axis))

    def cell_origin(self, index: int) -> np.ndarray:
        multi = np.asarray(self.cell_multi_index(index), dtype=float)
        return multi * np.asarray(self.h_axis)

    # -- facet tables ---------------------------------------------------------

    def neighbor_cells(self, axis: int) -> np.ndarray:
        """Flat index of the cell one step up along `axis` for every cell."""
        grid = np.arange(self.n_cells).reshape(self.cells_per_axis)
        return np.roll(grid, -1, axis=axis).ravel()

    def previous_cells(self, axis: int) -> np.ndarray:
        grid = np.arange(self.n_cells).reshape(self.cells_per_axis)
        return np.roll(grid, 1, axis=axis).ravel()

    def facet(self, index: int) -> Facet:
        if not 0 <= index < self.n_facets:
            raise IndexError(f"facet index {index} out of range [0, {self.n_facets})")
        axis, plus_cell = divmod(index, self.n_cells)
        minus_cell = int(self.neighbor_cells(axis)[plus_cell])
        normal = tuple(1.0 if i == axis else 0.0 for i in range(self.dim))
        return Facet(index, axis, plus_cell, minus_cell, normal)

    def facets(self):
        for i in range(self.n_facets):
            yield self.facet(i)

    def facet_area(self, axis: int) -> float:
        """Measure of one facet perpendicular to `axis` (1 in 1D)."""
        return float(np.prod([h for i, h in enumerate(self.h_axis) if i != axis]))


def build_mesh(dim: int, cells_per_axis, box_length) -> PeriodicCartesianMesh:
    """Build a periodic Cartesian mesh; rejects invalid dimensions and sizes.

    `cells_per_axis` and `box_length` accept scalars (broadcast to all axes)
    or one value per axis.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be in {{1,2,3}}, got {dim}")
    cells = np.atleast_1d(np.asarray(cells_per_axis))
    lengths = np.atleast_1d(np.asarray(box_length, dtype=float))
    if cells.size == 1:
        cells = np.repeat(cells, dim)
    if lengths.size == 1:
        lengths = np.repeat(lengths, dim)
    return PeriodicCartesianMesh(dim, tuple(int(n) for n in cells), tuple(float(L) for L in lengths))


def facet_length_scale(mesh: PeriodicCartesianMesh, facet: Facet, rule=None) -> float:
    """Return the facet length scale h_F.

    On isotropic meshes h_F equals the common cell width.  Anisotropic meshes
    carry no canonical choice, so they require an explicit `rule(mesh, facet)`
    override; dissipation-threshold guarantees are void in that case.
    """
    if rule is not None:
        return float(rule(mesh, facet))
    if not mesh.isotropic():
        raise ValueError(
            "anisotropic mesh has no default facet length scale; "
            "pass an explicit rule(mesh, facet) override"
        )
    return mesh.h_axis[0]
