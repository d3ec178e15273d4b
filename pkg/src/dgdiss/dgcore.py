"""Broken Q_k spaces on periodic Cartesian meshes: fields, traces, gradients.

Coefficient layout is (cell, component, mode) with cells and modes ordered
lexicographically (C order, last axis fastest).  This layout is fixed; the
field snapshot format records it as `layout_version` 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import Facet, PeriodicCartesianMesh
from .polybasis import (
    TensorBasis,
    diff_matrix,
    endpoint_values,
    eval_legendre,
    gauss_rule,
    grad_basis_modes,
    mass_diagonal,
)

__all__ = [
    "DgSpace",
    "DgField",
    "GradField",
    "FacetTracePair",
    "project_initial",
    "broken_gradient",
    "facet_traces",
    "kinetic_energy",
    "save_field",
    "load_field",
]

LAYOUT_VERSION = 1


@dataclass(frozen=True)
class DgSpace:
    """Broken tensor-Legendre space of order k with 1 or dim components."""

    mesh: PeriodicCartesianMesh
    order: int
    num_components: int = 1

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.num_components not in (1, self.mesh.dim):
            raise ValueError(
                f"num_components must be 1 or dim={self.mesh.dim}, got {self.num_components}"
            )

    @cached_property
    def basis(self) -> TensorBasis:
        return TensorBasis(self.mesh.dim, self.order)

    @property
    def n_modes(self) -> int:
        return self.basis.n_modes

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_cells * self.num_components * self.n_modes

    @cached_property
    def cell_mass(self) -> np.ndarray:
        """Diagonal cell mass: vol(K) * prod_i 1/(2 m_i + 1), per flat mode."""
        return self.mesh.cell_volume * self.basis.mass_ref

    @cached_property
    def grad_modes(self):
        return grad_basis_modes(self.mesh.dim, self.order)

    def grad_shape(self, axis: int) -> tuple[int, ...]:
        """Mode tensor shape of gradient component `axis` (order k-1 along it)."""
        k = self.order
        return tuple(k if i == axis else k + 1 for i in range(self.mesh.dim))

    @cached_property
    def grad_mass(self) -> list[np.ndarray]:
        """Flattened diagonal mass of each gradient component space."""
        masses = []
        for axis in range(self.mesh.dim):
            diag = None
            for i in range(self.mesh.dim):
                k_i = self.order - 1 if i == axis else self.order
                d = mass_diagonal(k_i) if k_i >= 0 else np.zeros(0)
                diag = d if diag is None else np.multiply.outer(diag, d)
            masses.append(self.mesh.cell_volume * diag.reshape(-1))
        return masses

    def zero_field(self) -> "DgField":
        return DgField(self, np.zeros((self.mesh.n_cells, self.num_components, self.n_modes)))


class DgField:
    """Modal coefficients of one broken field; treated as an immutable value."""

    def __init__(self, space: DgSpace, coefficients: np.ndarray):
        coefficients = np.asarray(coefficients, dtype=float)
        expected = (space.mesh.n_cells, space.num_components, space.n_modes)
        if coefficients.shape != expected:
            raise ValueError(f"coefficient shape {coefficients.shape} != {expected}")
        self.space = space
        self.coefficients = coefficients
        self.coefficients.setflags(write=False)

    def with_coefficients(self, coefficients: np.ndarray) -> "DgField":
        return DgField(self.space, np.array(coefficients, dtype=float))

    def norm_sq(self) -> float:
        """Exact squared L2 norm through the diagonal mass."""
        return float(np.einsum("ncm,m->", self.coefficients**2, self.space.cell_mass))

    def __add__(self, other: "DgField") -> "DgField":
        return DgField(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other: "DgField") -> "DgField":
        return DgField(self.space, self.coefficients - other.coefficients)

    def __rmul__(self, a: float) -> "DgField":
        return DgField(self.space, float(a) * self.coefficients)

    def mode_tensor(self) -> np.ndarray:
        """View shaped (n_cells, num_components, k+1, ..., k+1)."""
        shp = (self.space.mesh.n_cells, self.space.num_components) + self.space.basis.shape
        return self.coefficients.reshape(shp)

    def eval_on_reference_points(self, ref_points: np.ndarray) -> np.ndarray:
        """Values at the same reference points in every cell.

        ref_points has shape (npts, dim); the result (n_cells, ncomp, npts).
        """
        vals = self.space.basis.eval_at(ref_points)  # (n_modes, npts)
        return np.einsum("ncm,mq->ncq", self.coefficients, vals)


class GradField:
    """Per-axis modal coefficients in the mixed-degree gradient space."""

    def __init__(self, space: DgSpace, comps: list[np.ndarray]):
        self.space = space
        self.comps = comps  # axis a: (n_cells, ncomp, *space.grad_shape(a))

    def component_flat(self, axis: int) -> np.ndarray:
        n_cells = self.space.mesh.n_cells
        ncomp = self.space.num_components
        return self.comps[axis].reshape(n_cells, ncomp, -1)

    def norm_sq(self) -> float:
        total = 0.0
        for axis in range(self.space.mesh.dim):
            flat = self.component_flat(axis)
            total += np.einsum("ncm,m->", flat**2, self.space.grad_mass[axis])
        return float(total)

    def inner(self, other: "GradField") -> float:
        total = 0.0
        for axis in range(self.space.mesh.dim):
            a = self.component_flat(axis)
            b = other.component_flat(axis)
            total += np.einsum("ncm,ncm,m->", a, b, self.space.grad_mass[axis])
        return float(total)

    def __sub__(self, other: "GradField") -> "GradField":
        return GradField(self.space, [a - b for a, b in zip(self.comps, other.comps)])


@dataclass(frozen=True)
class FacetTracePair:
    """Two-sided traces at the facet quadrature points, per component."""

    facet: Facet
    plus_values: np.ndarray   # (ncomp, n_qpts), trace from the negative side of n_F
    minus_values: np.ndarray  # (ncomp, n_qpts), trace from the positive side

    @property
    def jump(self) -> np.ndarray:
        return self.plus_values - self.minus_values

    @property
    def average(self) -> np.ndarray:
        return 0.5 * (self.plus_values + self.minus_values)


# ---------------------------------------------------------------------------
# quadrature defaults: volume exact for degree 2k+2, facets for 2k+1
# ---------------------------------------------------------------------------

def volume_rule_points(order: int, extra: int = 0):
    return gauss_rule(order + 2 + extra)


def facet_rule_points(order: int, extra: int = 0):
    return gauss_rule(order + 1 + extra)


def reference_grid(dim: int, rule) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss grid on [0,1]^dim: points (npts, dim) and weights (npts,)."""
    axes = [rule.nodes] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wts = np.ones(1)
    for _ in range(dim):
        wts = np.multiply.outer(wts, rule.weights).reshape(-1)
    return pts, wts


def project_initial(space: DgSpace, u0, extra_quadrature: int = 0) -> DgField:
    """Element-wise L2 projection of a callable onto the broken space.

    `u0` must accept points of shape (npts, dim) and return (npts,) for a
    scalar space or (npts, num_components) for a vector space.
    """
    mesh = space.mesh
    rule = volume_rule_points(space.order, extra_quadrature)
    ref_pts, ref_wts = reference_grid(mesh.dim, rule)
    basis_vals = space.basis.eval_at(ref_pts)  # (n_modes, npts)
    inv_mass_ref = 1.0 / space.basis.mass_ref

    h = np.asarray(mesh.h_axis)
    coeffs = np.empty((mesh.n_cells, space.num_components, space.n_modes))
    for cell in range(mesh.n_cells):
        origin = mesh.cell_origin(cell)
        phys = origin[None, :] + ref_pts * h[None, :]
        vals = np.asarray(u0(phys), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape != (ref_pts.shape[0], space.num_components):
            raise ValueError(
                f"initial condition returned shape {vals.shape}, expected "
                f"({ref_pts.shape[0]}, {space.num_components})"
            )
        # c_m = prod(2m_i+1) * int_ref u0 phi_m  (cell volume cancels)
        moments = np.einsum("qc,mq,q->cm", vals, basis_vals, ref_wts)
        coeffs[cell] = moments * inv_mass_ref[None, :]
    return DgField(space, coeffs)


def broken_gradient(u: DgField) -> GradField:
    """Element-wise gradient as exact modal differentiation."""
    space = u.space
    if space.order < 1:
        raise ValueError("broken gradient needs order k >= 1")
    mesh = space.mesh
    D = diff_matrix(space.order)
    tensor = u.mode_tensor()
    comps = []
    for axis in range(mesh.dim):
        full = np.tensordot(tensor, D, axes=([2 + axis], [1]))
        # tensordot appends the contracted-result axis; move it back in place
        full = np.moveaxis(full, -1, 2 + axis)
        sl = [slice(None)] * full.ndim
        sl[2 + axis] = slice(0, space.order)  # top degree along axis is always zero
        comps.append(full[tuple(sl)] / mesh.h_axis[axis])
    return GradField(space, comps)


def _tangential_axes(dim: int, axis: int) -> list[int]:
    return [i for i in range(dim) if i != axis]


def facet_quadrature(space: DgSpace, axis: int, extra: int = 0):
    """Tangential Gauss grid for facets perpendicular to `axis`."""
    rule = facet_rule_points(space.order, extra)
    t_axes = _tangential_axes(space.mesh.dim, axis)
    if not t_axes:
        return np.zeros((1, 0)), np.ones(1)
    return reference_grid(len(t_axes), rule)


def trace_tensor(u: DgField, axis: int, side: int) -> np.ndarray:
    """Contract the mode tensor with the endpoint trace along `axis`.

    side 1 is the top face (reference coordinate 1), side 0 the bottom.
    Returns tangential modal coefficients (n_cells, ncomp, (k+1)^(d-1)).
    """
    e = endpoint_values(u.space.order, side)
    tensor = u.mode_tensor()
    out = np.tensordot(tensor, e, axes=([2 + axis], [0]))
    n_cells, ncomp = out.shape[0], out.shape[1]
    return out.reshape(n_cells, ncomp, -1)


def eval_tangential(space: DgSpace, tang_coeffs: np.ndarray, axis: int, nodes: np.ndarray):
    """Evaluate tangential modal coefficients on the tensor grid of `nodes`.

    Result point ordering matches `reference_grid` of the same 1D nodes.
    """
    t_axes = _tangential_axes(space.mesh.dim, axis)
    if not t_axes:
        return np.array(tang_coeffs, copy=True)  # single-point facet in 1D
    k = space.order
    lead = tang_coeffs.shape[:-1]
    vals = tang_coeffs.reshape(lead + (k + 1,) * len(t_axes))
    leg = eval_legendre(k, nodes)  # (k+1, n1d)
    for _ in t_axes:
        vals = np.tensordot(vals, leg, axes=([len(lead)], [0]))
    return vals.reshape(lead + (-1,))


def facet_traces(u: DgField, facet: Facet, extra: int = 0) -> FacetTracePair:
    """Two-sided traces of u at the facet quadrature points."""
    space = u.space
    rule = facet_rule_points(space.order, extra)
    plus_t = trace_tensor(u, facet.axis, side=1)[facet.plus_cell]
    minus_t = trace_tensor(u, facet.axis, side=0)[facet.minus_cell]
    plus_vals = eval_tangential(space, plus_t, facet.axis, rule.nodes)
    minus_vals = eval_tangential(space, minus_t, facet.axis, rule.nodes)
    return FacetTracePair(facet, plus_vals, minus_vals)


def kinetic_energy(u: DgField) -> float:
    """K(u) = half the squared L2 norm, summed over components."""
    return 0.5 * u.norm_sq()


# ---------------------------------------------------------------------------
# snapshot I/O: '#'-prefixed JSON header + one coefficient per line
# ---------------------------------------------------------------------------

def save_field(path, u: DgField) -> None:
    space = u.space
    header = {
        "dim": space.mesh.dim,
        "cells_per_axis": list(space.mesh.cells_per_axis),
        "box_length": list(space.mesh.box_length),
        "order": space.order,
        "num_components": space.num_components,
        "layout": "cell,component,mode (lexicographic, C order)",
        "layout_version": LAYOUT_VERSION,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("#" + json.dumps(header, sort_keys=True) + "\n")
        f.write("coefficient\n")
        for value in u.coefficients.ravel():
            f.write(f"{value:.16e}\n")


def load_field(path) -> DgField:
    from .mesh import build_mesh

    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing JSON header line")
        header = json.loads(first[1:])
        if header.get("layout_version") != LAYOUT_VERSION:
            raise ValueError(f"{path}: unsupported layout_version {header.get('layout_version')}")
        column = f.readline().strip()
        if column != "coefficient":
            raise ValueError(f"{path}: unexpected column header {column!r}")
        values = np.loadtxt(f, dtype=float, ndmin=1)
    mesh = build_mesh(header["dim"], header["cells_per_axis"], header["box_length"])
    space = DgSpace(mesh, header["order"], header["num_components"])
    coeffs = values.reshape(mesh.n_cells, space.num_components, space.n_modes)
    return DgField(space, coeffs)
