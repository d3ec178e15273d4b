"""Lifting of facet jumps, reconstructed diffusive flux and the dissipation split.

The lifting R of the facet jumps is the element-local field in the
mixed-degree gradient space defined by the moment condition

    int_K R : tau = (1/2) sum_{F in dK} oint_F [u] . (tau|_K n_F),

where n_F is the facet's own normal; both incidences of a facet with the
same cell contribute (the one-cell periodic mesh is the extreme case).  The
reconstructed flux is sigma = grad_h u - R, and the symmetric viscous form
splits into

    a_h(u,u) = int |sigma|^2  +  [ sum_F (lambda/h_F) oint |[u]|^2 - int |R|^2 ],

two parts that are simultaneously non-negative once lambda meets the
trace-constant threshold.  The broken-gradient split uses ||grad_h u||^2 as
the physical part instead; both are always reported side by side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dgcore import DgField, DgSpace, GradField, broken_gradient, trace_tensor
from .sip import ViscousOperator, form_terms_quadrature

__all__ = [
    "LiftedFlux",
    "DissipationBreakdown",
    "lift_jumps",
    "decompose",
    "bassi_rebay_value",
    "eps_total",
    "jump_form_value",
]


@dataclass(frozen=True)
class LiftedFlux:
    """Lifting R([u]) and reconstructed flux sigma = grad_h u - R."""

    lifting: GradField
    sigma: GradField


def _facet_jump_tangential(u: DgField, axis: int) -> np.ndarray:
    """Tangential modal coefficients of the jump on every facet along `axis`.

    Indexed by the plus cell of the facet: jump = top trace of the plus cell
    minus bottom trace of the cell above it.
    """
    minus = u.space.mesh.neighbor_cells(axis)
    top = trace_tensor(u, axis, side=1)
    bot = trace_tensor(u, axis, side=0)
    return top - bot[minus]


def lift_jumps(u: DgField) -> LiftedFlux:
    """Element-local lifting of the facet jumps into the gradient space.

    The gradient-space mass is diagonal, so the moment condition reduces to
    one closed-form coefficient per mode:

        r_m = (2 m_a + 1) / (2 h_a) * ( J_top + (-1)^{m_a} J_bot )_t(m)

    with J_top / J_bot the tangential jump coefficients of the two facets of
    the cell along the lifted axis.
    """
    space = u.space
    if space.order < 1:
        raise ValueError("lifting needs order k >= 1")
    mesh = space.mesh
    k = space.order
    grad = broken_gradient(u)
    lift_comps = []
    for axis in range(mesh.dim):
        jumps = _facet_jump_tangential(u, axis)  # (n_cells, ncomp, n_tang)
        prev = mesh.previous_cells(axis)
        j_top = jumps                     # facet at the top of each cell
        j_bot = jumps[prev]               # facet at the bottom of each cell
        m = np.arange(k)
        scale = (2 * m + 1) / (2.0 * mesh.h_axis[axis])
        sign_bot = np.where(m % 2 == 0, 1.0, -1.0)  # L_m(0) at the bottom face
        r = (
            scale[None, None, :, None] * j_top[:, :, None, :]
            + (scale * sign_bot)[None, None, :, None] * j_bot[:, :, None, :]
        )
        # (n_cells, ncomp, k, n_tang) -> mode tensor with axis `axis` first
        shape = (mesh.n_cells, space.num_components) + space.grad_shape(axis)
        tang_shape = tuple(k + 1 for i in range(mesh.dim) if i != axis)
        r = r.reshape((mesh.n_cells, space.num_components, k) + tang_shape)
        r = np.moveaxis(r, 2, 2 + axis)
        lift_comps.append(r.reshape(shape))
    lifting = GradField(space, lift_comps)
    sigma = grad - lifting
    return LiftedFlux(lifting, sigma)


def jump_form_value(u: DgField, h_rule=None) -> float:
    """Unit jump form sum_F (1/h_F) oint |[u]|^2 via exact modal algebra."""
    from .sip import _facet_h, _tangential_mass

    space = u.space
    mesh = space.mesh
    h_f = _facet_h(space, h_rule)
    total = 0.0
    for axis in range(mesh.dim):
        jumps = _facet_jump_tangential(u, axis)
        w = _tangential_mass(space, axis)
        total += mesh.facet_area(axis) / h_f * float(np.einsum("ncm,ncm,m->", jumps, jumps, w))
    return total


@dataclass(frozen=True)
class DissipationBreakdown:
    """One symmetric evaluation of the viscous form, split both ways.

    All values are unscaled bilinear-form values; ledger reporting applies
    the viscosity factor.
    """

    a_total: float
    a_phy_sigma: float
    a_num_sigma: float
    a_phy_broken: float
    a_num_broken: float
    penalty_part: float
    lifting_norm_sq: float

    @property
    def scale(self) -> float:
        """Magnitude reference for roundoff-tolerant sign checks."""
        return self.a_phy_sigma + self.penalty_part + self.lifting_norm_sq


def decompose(u: DgField, op: ViscousOperator) -> DissipationBreakdown:
    """Evaluate a_h(u,u) and both dissipation splits.

    The total comes from the assembled operator, the sigma split from the
    lifting; their agreement is a genuine cross-check, not a tautology.
    """
    if op.variant != "sip":
        raise ValueError("the dissipation split is defined for the symmetric variant")
    a_total = op.value(u)
    flux = lift_jumps(u)
    lifting_norm_sq = flux.lifting.norm_sq()
    a_phy_sigma = flux.sigma.norm_sq()
    penalty_part = op.params.lam * jump_form_value(u, op.params.h_rule)
    a_num_sigma = penalty_part - lifting_norm_sq
    a_phy_broken = broken_gradient(u).norm_sq()
    a_num_broken = a_total - a_phy_broken
    return DissipationBreakdown(
        a_total=a_total,
        a_phy_sigma=a_phy_sigma,
        a_num_sigma=a_num_sigma,
        a_phy_broken=a_phy_broken,
        a_num_broken=a_num_broken,
        penalty_part=penalty_part,
        lifting_norm_sq=lifting_norm_sq,
    )


def bassi_rebay_value(u: DgField, extra: int = 1) -> float:
    """Central-flux (Bassi-Rebay) energy ||grad u||^2 - 2 c(u,u) + ||R||^2.

    The consistency term is evaluated by facet quadrature, so equality with
    the modal ||sigma||^2 checks the skeleton identity end to end.
    """
    terms = form_terms_quadrature(u.space, u, extra=extra)
    flux = lift_jumps(u)
    return terms["volume"] - 2.0 * terms["consistency"] + flux.lifting.norm_sq()


def eps_total(dK_dt: float, a_phy_sigma: float, nu: float) -> float:
    """Total numerical dissipation: everything beyond the physical mechanism."""
    return -dK_dt - nu * a_phy_sigma
