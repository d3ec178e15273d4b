"""Shifted Legendre modal bases on [0,1] and tensor products on [0,1]^d.

The 1D basis L_m satisfies L_m(0) = (-1)^m, L_m(1) = 1 and
int_0^1 L_m L_n dx = delta_mn / (2m+1), which keeps every mass matrix in the
package diagonal.  Gradient component i of a Q_k tensor field lives in the
mixed-degree space with degree <= k-1 along axis i and <= k along the
others; `grad_basis_modes` enumerates that space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "eval_legendre",
    "eval_legendre_deriv",
    "mass_diagonal",
    "diff_matrix",
    "endpoint_values",
    "gauss_rule",
    "QuadratureRule1D",
    "TensorBasis",
    "grad_basis_modes",
]


def eval_legendre(k: int, x) -> np.ndarray:
    """Values of L_0..L_k at x (x in [0,1], clamped); shape (k+1,) + x.shape."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    t = 2.0 * x - 1.0
    vals = np.zeros((k + 1,) + t.shape)
    vals[0] = 1.0
    if k >= 1:
        vals[1] = t
    for m in range(1, k):
        vals[m + 1] = ((2 * m + 1) * t * vals[m] - m * vals[m - 1]) / (m + 1)
    return vals


def eval_legendre_deriv(k: int, x) -> np.ndarray:
    """Values of L_0'..L_k' at x via the derivative recurrence.

    Independent of `diff_matrix`, so the two can cross-check each other.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    vals = eval_legendre(k, x)
    derivs = np.zeros_like(vals)
    if k >= 1:
        derivs[1] = 2.0
    for m in range(1, k):
        # P'_{m+1} = P'_{m-1} + (2m+1) P_m, scaled by the chain factor 2
        derivs[m + 1] = derivs[m - 1] + 2.0 * (2 * m + 1) * vals[m]
    return derivs


def mass_diagonal(k: int) -> np.ndarray:
    """Diagonal of the 1D reference mass matrix: entry m is 1/(2m+1)."""
    if k < 0:
        raise ValueError("order must be >= 0")
    return 1.0 / (2.0 * np.arange(k + 1) + 1.0)


@lru_cache(maxsize=None)
def _diff_matrix_cached(k: int) -> np.ndarray:
    D = np.zeros((k + 1, k + 1))
    for m in range(k + 1):
        for n in range((m + 1) % 2, m, 2):  # n < m with m-n odd
            D[n, m] = 2.0 * (2 * n + 1)
    D.setflags(write=False)
    return D


def diff_matrix(k: int) -> np.ndarray:
    """Modal differentiation: coefficients of L_m' are column m."""
    return _diff_matrix_cached(k)


def endpoint_values(k: int, side: int) -> np.ndarray:
    """Trace vector at the reference endpoint: side 0 -> (-1)^m, side 1 -> 1."""
    m = np.arange(k + 1)
    return np.where(m % 2 == 0, 1.0, -1.0) if side == 0 else np.ones(k + 1)


@dataclass(frozen=True)
class QuadratureRule1D:
    """Gauss-Legendre rule on [0,1]; n points integrate degree 2n-1 exactly."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.nodes.size


@lru_cache(maxsize=None)
def gauss_rule(n: int) -> QuadratureRule1D:
    if n < 1:
        raise ValueError("quadrature rule needs at least one point")
    t, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (t + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule1D(nodes, weights)


class TensorBasis:
    """Tensor-product modal Legendre basis for Q_k on the reference d-cube."""

    def __init__(self, dim: int, order: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if order < 0:
            raise ValueError("order must be >= 0")
        self.dim = dim
        self.order = order
        self.shape = (order + 1,) * dim
        self.n_modes = (order + 1) ** dim
        self.modes = list(itertools.product(range(order + 1), repeat=dim))
        # reference mass diagonal prod_i 1/(2 m_i + 1), flattened C order
        diag = mass_diagonal(order)
        md = diag
        for _ in range(dim - 1):
            md = np.multiply.outer(md, diag)
        self.mass_ref = md.reshape(-1)

    def mode_index(self, multi) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.shape))

    def eval_at(self, points: np.ndarray) -> np.ndarray:
        """Basis values at points of shape (npts, dim); returns (n_modes, npts)."""
        points = np.atleast_2d(points)
        per_axis = [eval_legendre(self.order, points[:, i]) for i in range(self.dim)]
        vals = per_axis[0]
        for axis_vals in per_axis[1:]:
            vals = vals[:, None, :] * axis_vals[None, :, :]
            vals = vals.reshape(-1, points.shape[0])
        return vals


def grad_basis_modes(dim: int, k: int) -> list[list[tuple[int, ...]]]:
    """Mode multi-indices of each gradient component of Q_k.

    Component i spans degrees <= k-1 along axis i and <= k along the other
    axes; for k = 0 every component is empty.  Each mode is a plain tensor
    Legendre product, so the component mass matrices stay diagonal.
    """
    if k < 0:
        raise ValueError("order must be >= 0")
    components = []
    for i in range(dim):
        ranges = [range(k) if j == i else range(k + 1) for j in range(dim)]
        components.append(list(itertools.product(*ranges)) if k >= 1 else [])
    return components
