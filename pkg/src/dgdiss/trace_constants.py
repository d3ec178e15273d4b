"""Sharp discrete trace constants and minimal interior-penalty parameters.

The two-endpoint inverse trace inequality for order-k polynomials on an
interval of width h,

    |q(a)|^2 + |q(b)|^2 <= (C_k^2 / h) * int |q|^2,

holds with the sharp constant C_k^2 = (k+1)(k+2), obtained as the largest
eigenvalue of a small dense matrix in the Legendre basis.  From it follow
the minimal penalties lambda* = k(k+1)/2 for Q_k interior-penalty DG (the
gradient space has normal degree k-1) and lambda* = (k+1)(k+2) for the
reported RT_k hybrid method.  The penalty-order mapping for the DG viscous
form lives here so assembly and dissipation accounting cannot disagree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TraceConstant",
    "PenaltyRecommendation",
    "build_A_matrix",
    "sharp_trace_constant",
    "rayleigh_sharpness_probe",
    "verify_normal_gradient_trace",
    "min_penalty",
    "empirical_min_penalty",
    "penalty_witness",
]


@dataclass(frozen=True)
class TraceConstant:
    order: int
    value: float  # C^2, dimensionless

    @property
    def formula(self) -> float:
        return float((self.order + 1) * (self.order + 2))


@dataclass(frozen=True)
class PenaltyRecommendation:
    family: str  # "q-dg" | "rt-hdg"
    order: int
    lambda_star: float


def build_A_matrix(k: int) -> np.ndarray:
    """Symmetric (k+1)x(k+1) matrix whose top eigenvalue is C_k^2.

    Entry (m,n) is 0 for odd m+n and 4*sqrt(m+1/2)*sqrt(n+1/2) otherwise.
    """
    if k < 0:
        raise ValueError("order must be >= 0")
    m = np.arange(k + 1)
    s = np.sqrt(m + 0.5)
    A = 4.0 * np.outer(s, s)
    A[(m[:, None] + m[None, :]) % 2 == 1] = 0.0
    return A


def sharp_trace_constant(k: int) -> TraceConstant:
    """Largest eigenvalue of A(k); equals (k+1)(k+2) up to roundoff."""
    values = np.linalg.eigvalsh(build_A_matrix(k))
    if not np.all(np.isfinite(values)):
        raise RuntimeError(f"eigenvalue solve failed for order {k}")
    return TraceConstant(k, float(values[-1]))


def _endpoint_energy_ratio(coeffs: np.ndarray) -> float:
    """(q(0)^2 + q(1)^2) / int_0^1 q^2 for modal Legendre coefficients."""
    m = np.arange(coeffs.size)
    q0 = float(np.sum(coeffs * np.where(m % 2 == 0, 1.0, -1.0)))
    q1 = float(np.sum(coeffs))
    denom = float(np.sum(coeffs**2 / (2 * m + 1)))
    return (q0 * q0 + q1 * q1) / denom


def rayleigh_sharpness_probe(
    k: int, num_samples: int, seed: int = 0, include_eigenvector: bool = True
) -> float:
    """Max endpoint-to-energy ratio over random order-k polynomials.

    Samples standard-normal modal coefficients; with the top eigenvector of
    A(k) included the supremum (k+1)(k+2) is attained to roundoff.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    rng = np.random.default_rng(seed)
    best = -np.inf
    for _ in range(num_samples):
        best = max(best, _endpoint_energy_ratio(rng.standard_normal(k + 1)))
    if include_eigenvector:
        A = build_A_matrix(k)
        _, vecs = np.linalg.eigh(A)
        top = vecs[:, -1]
        coeffs = top * np.sqrt(2 * np.arange(k + 1) + 1)  # undo the D^{1/2} scaling
        best = max(best, _endpoint_energy_ratio(coeffs))
    return best


def verify_normal_gradient_trace(
    dim: int, space_order: int, num_samples: int, h: float = 1.0, seed: int = 0
) -> float:
    """Worst ratio h*||(grad v) n||^2_dK / ||grad v||^2_K over random v.

    v ranges over [Q_q]^dim with q = space_order on a cube of width h; the
    ratio is bounded by q(q+1) (the constant of the normal-gradient trace
    inequality with k = q-1).  Zero-gradient samples are skipped.
    """
    from .dgcore import DgField, DgSpace, broken_gradient, trace_tensor
    from .mesh import build_mesh
    from .polybasis import mass_diagonal

    if space_order < 1:
        raise ValueError("space_order must be >= 1")
    mesh = build_mesh(dim, [1] * dim, [h] * dim)
    space = DgSpace(mesh, space_order, num_components=dim if dim > 1 else 1)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(num_samples):
        u = DgField(
            space, rng.standard_normal((1, space.num_components, space.n_modes))
        )
        grad = broken_gradient(u)
        vol = grad.norm_sq()
        if vol < 1e-28:
            continue
        boundary = 0.0
        for axis in range(dim):
            flat = grad.component_flat(axis)[0]  # (ncomp, n_grad_modes)
            # tangential mass of the gradient-component space
            t_mass = None
            for i in range(dim):
                if i == axis:
                    continue
                d = mass_diagonal(space_order)
                t_mass = d if t_mass is None else np.multiply.outer(t_mass, d)
            area = mesh.facet_area(axis)
            shape = space.grad_shape(axis)
            tens = flat.reshape((space.num_components,) + shape)
            for side in (0, 1):
                m = np.arange(shape[axis])
                e = np.where(m % 2 == 0, 1.0, -1.0) if side == 0 else np.ones(shape[axis])
                tr = np.tensordot(tens, e, axes=([1 + axis], [0]))
                tr = tr.reshape(space.num_components, -1)
                if t_mass is None:
                    boundary += area * float(np.sum(tr**2))
                else:
                    boundary += area * float(np.sum(tr**2 * t_mass.reshape(-1)[None, :]))
        worst = max(worst, h * boundary / vol)
    return worst


def min_penalty(family: str, k: int) -> PenaltyRecommendation:
    """Minimal-penalty formula: k(k+1)/2 for Q_k DG, (k+1)(k+2) for RT_k HDG."""
    fam = family.strip().lower().replace("_", "-")
    if fam in ("q-dg", "qdg"):
        if k < 1:
            raise ValueError("Q-DG minimal penalty needs k >= 1")
        return PenaltyRecommendation("q-dg", k, k * (k + 1) / 2.0)
    if fam in ("rt-hdg", "rthdg"):
        if k < 0:
            raise ValueError("RT-HDG minimal penalty needs k >= 0")
        return PenaltyRecommendation("rt-hdg", k, float((k + 1) * (k + 2)))
    raise ValueError(f"unsupported family {family!r}; expected 'q-dg' or 'rt-hdg'")


def _jump_and_lifting_gram(space, h_rule=None):
    """Dense Gram matrices of the unit jump form J and the lifting form L."""
    from .dissipation import lift_jumps
    from .sip import jump_form_matrix

    P = jump_form_matrix(space, h_rule).toarray()
    n = space.mesh.n_cells * space.n_modes
    L = np.empty((n, n))
    basis_field = space.zero_field()
    cols = []
    for j in range(n):
        coeffs = np.zeros((space.mesh.n_cells, 1, space.n_modes))
        coeffs.reshape(-1)[j] = 1.0
        lifted = lift_jumps(basis_field.with_coefficients(coeffs))
        cols.append(lifted.lifting)
    for i in range(n):
        for j in range(i + 1):
            L[i, j] = L[j, i] = cols[i].inner(cols[j])
    return P, L


def penalty_witness(space, h_rule=None, rank_tol: float = 1e-12):
    """Empirical minimal penalty max L/J with its maximizing field.

    Solves the generalized eigenproblem on the numerical range of the jump
    form: eigenvectors of J below `rank_tol` times its top eigenvalue span
    jump-free fields and are excluded from the maximization.
    """
    from .dgcore import DgField

    if space.num_components != 1:
        raise ValueError("penalty probe operates on the scalar space")
    P, L = _jump_and_lifting_gram(space, h_rule)
    mu, Q = np.linalg.eigh(P)
    keep = mu > rank_tol * mu[-1]
    if not np.any(keep):
        raise ValueError("jump form is identically zero on this space")
    Y = Q[:, keep] / np.sqrt(mu[keep])[None, :]
    S = Y.T @ L @ Y
    vals, vecs = np.linalg.eigh(S)
    lam_min = float(vals[-1])
    witness_vec = Y @ vecs[:, -1]
    coeffs = witness_vec.reshape(space.mesh.n_cells, 1, space.n_modes)
    return lam_min, DgField(space, coeffs)


def empirical_min_penalty(space, h_rule=None) -> float:
    """Smallest penalty with non-negative numerical dissipation on `space`."""
    lam_min, _ = penalty_witness(space, h_rule)
    return lam_min
