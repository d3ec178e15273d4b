"""Interior-penalty viscous bilinear forms on broken tensor-Legendre spaces.

The symmetric variant is

    a_h(u,v) = int grad_h u : grad_h v
             + sum_F (lambda/h_F) oint [u].[v]
             - sum_F oint {grad_h u} n_F . [v]
             - sum_F oint [u] . {grad_h v} n_F,

the non-symmetric variant flips the sign of the last term.  Volume, unit
penalty and consistency matrices are assembled once on the scalar space and
kept separately so dissipation accounting can evaluate every term without
re-assembly; vector fields apply the same scalar operator per component.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .dgcore import DgField, DgSpace, facet_quadrature, reference_grid, volume_rule_points
from .polybasis import (
    diff_matrix,
    endpoint_values,
    eval_legendre,
    eval_legendre_deriv,
    mass_diagonal,
)
from .trace_constants import min_penalty

__all__ = [
    "SipParams",
    "ViscousOperator",
    "assemble_sip",
    "assemble_nip",
    "symmetric_value",
    "jump_form_matrix",
    "form_terms_quadrature",
    "boundary_element_consistency",
]


@dataclass(frozen=True)
class SipParams:
    """Viscosity, penalty, facet length-scale rule and variant switch."""

    nu: float
    lam: float
    variant: str = "sip"
    h_rule: object = None  # callable(mesh, facet) -> float, None = isotropic

    def __post_init__(self):
        if not self.nu > 0.0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.lam > 0.0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.variant not in ("sip", "nip"):
            raise ValueError(f"variant must be 'sip' or 'nip', got {self.variant!r}")

    def certified_for(self, k: int) -> bool:
        """True iff the penalty meets the Q_k-DG threshold k(k+1)/2."""
        return self.lam >= min_penalty("q-dg", k).lambda_star * (1.0 - 1e-12)


# ---------------------------------------------------------------------------
# local blocks
# ---------------------------------------------------------------------------

def _kron_chain(factors):
    return reduce(np.kron, factors)


def _axis_operator(space: DgSpace, axis: int, op_1d: np.ndarray) -> np.ndarray:
    """Flattened-mode matrix applying a 1D operator along one tensor axis."""
    eye = np.eye(space.order + 1)
    return _kron_chain([op_1d if i == axis else eye for i in range(space.mesh.dim)])


def _trace_matrix(space: DgSpace, axis: int, side: int) -> np.ndarray:
    """Map cell modes to tangential modes of the face at `side` along `axis`."""
    eye = np.eye(space.order + 1)
    e = endpoint_values(space.order, side)[None, :]
    return _kron_chain([e if i == axis else eye for i in range(space.mesh.dim)])


def _tangential_mass(space: DgSpace, axis: int) -> np.ndarray:
    diag = np.ones(1)
    md = mass_diagonal(space.order)
    for i in range(space.mesh.dim):
        if i != axis:
            diag = np.multiply.outer(diag, md)
    return diag.reshape(-1)


def _facet_h(space: DgSpace, h_rule) -> float:
    from .mesh import facet_length_scale

    mesh = space.mesh
    if h_rule is None and not mesh.isotropic():
        raise ValueError(
            "anisotropic mesh needs an explicit facet length-scale rule "
            "(SipParams.h_rule); certification is void in that case"
        )
    # uniform per mesh: every facet of a periodic Cartesian mesh is congruent
    # up to the axis, and the default rule is the common width
    return facet_length_scale(mesh, mesh.facet(0), h_rule)


def _scatter_blocks(space: DgSpace, axis_blocks) -> sp.csr_matrix:
    """Accumulate identical per-facet blocks over all facets of each axis.

    axis_blocks[axis] is a list of (rows_side, cols_side, block) with sides
    'p' (plus cell) or 'm' (minus cell).
    """
    mesh = space.mesh
    nm = space.n_modes
    n = mesh.n_cells * nm
    rows, cols, vals = [], [], []
    local = np.arange(nm)
    for axis, blocks in enumerate(axis_blocks):
        plus = np.arange(mesh.n_cells)
        minus = mesh.neighbor_cells(axis)
        cell_of = {"p": plus, "m": minus}
        for rside, cside, block in blocks:
            r = (cell_of[rside][:, None, None] * nm + local[None, :, None])
            c = (cell_of[cside][:, None, None] * nm + local[None, None, :])
            b = np.broadcast_to(block[None, :, :], (mesh.n_cells, nm, nm))
            rows.append(np.broadcast_to(r, b.shape).ravel())
            cols.append(np.broadcast_to(c, b.shape).ravel())
            vals.append(b.ravel())
    coo = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return coo.tocsr()


def volume_matrix(space: DgSpace) -> sp.csr_matrix:
    """Block-diagonal broken stiffness matrix int grad u . grad v."""
    mesh = space.mesh
    mass_full = space.cell_mass  # includes cell volume
    V_loc = np.zeros((space.n_modes, space.n_modes))
    for axis in range(mesh.dim):
        Da = _axis_operator(space, axis, diff_matrix(space.order)) / mesh.h_axis[axis]
        V_loc += Da.T @ (mass_full[:, None] * Da)
    return sp.block_diag([V_loc] * mesh.n_cells, format="csr")


def jump_form_matrix(space: DgSpace, h_rule=None) -> sp.csr_matrix:
    """Unit-penalty jump form sum_F (1/h_F) oint [u][v]."""
    mesh = space.mesh
    h_f = _facet_h(space, h_rule)
    axis_blocks = []
    for axis in range(mesh.dim):
        scale = mesh.facet_area(axis) / h_f
        Tt = _trace_matrix(space, axis, 1)
        Tb = _trace_matrix(space, axis, 0)
        W = _tangential_mass(space, axis)
        TtW = Tt.T * W[None, :]
        TbW = Tb.T * W[None, :]
        axis_blocks.append(
            [
                ("p", "p", scale * (TtW @ Tt)),
                ("p", "m", -scale * (TtW @ Tb)),
                ("m", "p", -scale * (TbW @ Tt)),
                ("m", "m", scale * (TbW @ Tb)),
            ]
        )
    return _scatter_blocks(space, axis_blocks)


def consistency_matrix(space: DgSpace) -> sp.csr_matrix:
    """Consistency form c(u,v) = sum_F oint ({grad u} . n_F) [v]."""
    mesh = space.mesh
    D = diff_matrix(space.order)
    axis_blocks = []
    for axis in range(mesh.dim):
        area = mesh.facet_area(axis)
        Da = _axis_operator(space, axis, D) / mesh.h_axis[axis]
        Tt = _trace_matrix(space, axis, 1)
        Tb = _trace_matrix(space, axis, 0)
        W = _tangential_mass(space, axis)
        Gt = Tt @ Da  # trace of the normal derivative from the plus side
        Gb = Tb @ Da
        TtW = Tt.T * W[None, :]
        TbW = Tb.T * W[None, :]
        half = 0.5 * area
        axis_blocks.append(
            [
                ("p", "p", half * (TtW @ Gt)),
                ("p", "m", half * (TtW @ Gb)),
                ("m", "p", -half * (TbW @ Gt)),
                ("m", "m", -half * (TbW @ Gb)),
            ]
        )
    return _scatter_blocks(space, axis_blocks)


# ---------------------------------------------------------------------------
# assembled operator
# ---------------------------------------------------------------------------

class ViscousOperator:
    """Assembled interior-penalty operator with its term sub-matrices."""

    def __init__(self, space: DgSpace, params: SipParams):
        if space.order < 1:
            raise ValueError("interior-penalty viscous forms need order k >= 1")
        self.space = space
        self.params = params
        self.volume = volume_matrix(space)
        self.penalty_unit = jump_form_matrix(space, params.h_rule)
        self.consistency = consistency_matrix(space)
        sign = -1.0 if params.variant == "sip" else 1.0
        self.matrix = (
            self.volume
            + params.lam * self.penalty_unit
            - self.consistency
            + sign * self.consistency.T
        ).tocsr()
        self.lambda_star = min_penalty("q-dg", space.order).lambda_star
        self.certified = params.certified_for(space.order)

    @property
    def variant(self) -> str:
        return self.params.variant

    def apply(self, u: DgField) -> DgField:
        out = np.empty_like(u.coefficients)
        for c in range(self.space.num_components):
            flat = u.coefficients[:, c, :].ravel()
            out[:, c, :] = (self.matrix @ flat).reshape(out[:, c, :].shape)
        return DgField(self.space, out)

    def _quadratic(self, mat, u: DgField, v: DgField | None = None) -> float:
        v = u if v is None else v
        total = 0.0
        for c in range(self.space.num_components):
            x = u.coefficients[:, c, :].ravel()
            y = v.coefficients[:, c, :].ravel()
            total += float(y @ (mat @ x))
        return total

    def value(self, u: DgField, v: DgField | None = None) -> float:
        return self._quadratic(self.matrix, u, v)

    def volume_value(self, u: DgField) -> float:
        return self._quadratic(self.volume, u)

    def jump_form_value(self, u: DgField) -> float:
        return self._quadratic(self.penalty_unit, u)

    def penalty_value(self, u: DgField) -> float:
        return self.params.lam * self.jump_form_value(u)

    def consistency_value(self, u: DgField) -> float:
        return self._quadratic(self.consistency, u)


def assemble_sip(space: DgSpace, params: SipParams) -> ViscousOperator:
    if params.variant != "sip":
        params = SipParams(params.nu, params.lam, "sip", params.h_rule)
    return ViscousOperator(space, params)


def assemble_nip(space: DgSpace, params: SipParams) -> ViscousOperator:
    if params.variant != "nip":
        params = SipParams(params.nu, params.lam, "nip", params.h_rule)
    return ViscousOperator(space, params)


def symmetric_value(op: ViscousOperator, u: DgField) -> float:
    """a_h(u,u); non-negative for the symmetric variant once lam >= lambda*."""
    return op.value(u)


# ---------------------------------------------------------------------------
# quadrature oracle: pointwise evaluation, independent of the modal algebra
# ---------------------------------------------------------------------------

def _gradient_vandermonde(space: DgSpace, ref_pts: np.ndarray) -> np.ndarray:
    """d(phi_m)/dx_a at reference points; shape (dim, n_modes, npts)."""
    k = space.order
    dim = space.mesh.dim
    vals = [eval_legendre(k, ref_pts[:, i]) for i in range(dim)]
    ders = [eval_legendre_deriv(k, ref_pts[:, i]) for i in range(dim)]
    out = np.empty((dim, space.n_modes, ref_pts.shape[0]))
    for axis in range(dim):
        acc = None
        for i in range(dim):
            factor = ders[i] if i == axis else vals[i]
            if acc is None:
                acc = factor
            else:
                acc = acc[:, None, :] * factor[None, :, :]
                acc = acc.reshape(-1, ref_pts.shape[0])
        out[axis] = acc / space.mesh.h_axis[axis]
    return out


def _facet_point_data(space: DgSpace, u: DgField, extra: int = 1):
    """Traces of u and of its normal derivative at facet quadrature points.

    Returns per axis: (jump u, avg u, plus/minus normal-derivative traces,
    quadrature weights, area).  All values are (n_cells, ncomp, nq) arrays
    indexed by the plus cell of each facet.
    """
    from .dgcore import eval_tangential, facet_rule_points, trace_tensor

    mesh = space.mesh
    k = space.order
    rule = facet_rule_points(k, extra)
    data = []
    tensor = u.mode_tensor()
    for axis in range(mesh.dim):
        _, wts = facet_quadrature(space, axis, extra)
        top_val = trace_tensor(u, axis, 1)
        bot_val = trace_tensor(u, axis, 0)
        dtop = np.tensordot(tensor, eval_legendre_deriv(k, np.array(1.0)), axes=([2 + axis], [0]))
        dbot = np.tensordot(tensor, eval_legendre_deriv(k, np.array(0.0)), axes=([2 + axis], [0]))
        dtop = dtop.reshape(mesh.n_cells, space.num_components, -1) / mesh.h_axis[axis]
        dbot = dbot.reshape(mesh.n_cells, space.num_components, -1) / mesh.h_axis[axis]

        minus = mesh.neighbor_cells(axis)
        u_plus = eval_tangential(space, top_val, axis, rule.nodes)
        u_minus = eval_tangential(space, bot_val, axis, rule.nodes)[minus]
        g_plus = eval_tangential(space, dtop, axis, rule.nodes)
        g_minus = eval_tangential(space, dbot, axis, rule.nodes)[minus]
        data.append(
            {
                "jump": u_plus - u_minus,
                "avg_grad_n": 0.5 * (g_plus + g_minus),
                "u_plus": u_plus,
                "u_minus": u_minus,
                "g_plus": g_plus,
                "g_minus": g_minus,
                "weights": wts,
                "area": mesh.facet_area(axis),
            }
        )
    return data


def form_terms_quadrature(space: DgSpace, u: DgField, h_rule=None, extra: int = 1) -> dict:
    """Pointwise-quadrature values of every symmetric form term for u.

    Used as the independent oracle for the assembled matrices: returns the
    broken Dirichlet energy, the unit jump form and the consistency term.
    """
    mesh = space.mesh
    rule = volume_rule_points(space.order, extra)
    ref_pts, ref_wts = reference_grid(mesh.dim, rule)
    dphi = _gradient_vandermonde(space, ref_pts)
    vol = 0.0
    for axis in range(mesh.dim):
        grad_vals = np.einsum("ncm,mq->ncq", u.coefficients, dphi[axis])
        vol += float(np.einsum("ncq,ncq,q->", grad_vals, grad_vals, ref_wts)) * mesh.cell_volume

    h_f = _facet_h(space, h_rule)
    jump_form = 0.0
    consistency = 0.0
    for entry in _facet_point_data(space, u, extra):
        w = entry["weights"]
        area = entry["area"]
        jump_form += area / h_f * float(np.einsum("ncq,ncq,q->", entry["jump"], entry["jump"], w))
        consistency += area * float(
            np.einsum("ncq,ncq,q->", entry["avg_grad_n"], entry["jump"], w)
        )
    return {"volume": vol, "jump_form": jump_form, "consistency": consistency}


def sip_value_quadrature(space: DgSpace, params: SipParams, u: DgField, extra: int = 1) -> float:
    terms = form_terms_quadrature(space, u, params.h_rule, extra)
    sign = -2.0 if params.variant == "sip" else 0.0
    return terms["volume"] + params.lam * terms["jump_form"] + sign * terms["consistency"]


def boundary_element_consistency(space: DgSpace, u: DgField, extra: int = 1) -> float:
    """Skeleton identity left-hand side, summed cell by cell.

    Evaluates sum_K oint_dK (1/2) (grad u|_K . n_K) (u_int - u_ext) with
    one-sided data only, the boundary-element counterpart of the facet form
    sum_F oint {grad u} n_F . [u].
    """
    mesh = space.mesh
    total = 0.0
    for entry in _facet_point_data(space, u, extra):
        w = entry["weights"]
        area = entry["area"]
        jump = entry["jump"]
        # plus cell: n_K = +n_F, interior-exterior difference = +jump
        total += 0.5 * area * float(np.einsum("ncq,ncq,q->", entry["g_plus"], jump, w))
        # minus cell: n_K = -n_F and the difference flips sign as well
        total += 0.5 * area * float(np.einsum("ncq,ncq,q->", entry["g_minus"], jump, w))
    return total
