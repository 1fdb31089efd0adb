"""Dirichlet Laplacian on boxes and the constants derived from it."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .grid import GridDomain, GridField
from .operators import DiscreteOperator, conjugate_gradient, smallest_eigenvalue

__all__ = [
    "GridDomain",
    "build_laplacian",
    "poincare_constant",
    "embedding_constant",
    "EmbeddingConstant",
    "box_eigenvalue",
    "sine_mode",
]


def build_laplacian(d: GridDomain) -> DiscreteOperator:
    """Second-order central-difference ``-Laplace`` with boundary values
    eliminated (homogeneous Dirichlet data).

    >>> A = build_laplacian(GridDomain.box([0.0], [1.0], 3))
    >>> A.matrix.toarray()
    array([[ 32., -16.,   0.],
           [-16.,  32., -16.],
           [  0., -16.,  32.]])
    """
    counts = d.counts
    total = None
    for k, (c, h) in enumerate(zip(counts, d.spacing)):
        w = 1.0 / (h * h)
        t = sp.diags(
            [np.full(c - 1, -w), np.full(c, 2.0 * w), np.full(c - 1, -w)],
            [-1, 0, 1],
            format="csr",
        )
        before = sp.identity(math.prod(counts[:k]), format="csr")
        after = sp.identity(math.prod(counts[k + 1:]), format="csr")
        term = sp.kron(sp.kron(before, t), after, format="csr")
        total = term if total is None else total + term
    return DiscreteOperator(d, total.tocsr())


def poincare_constant(d: GridDomain, tol: float = 1e-12) -> float:
    """Best discrete constant ``c`` with ``<Au, u> >= c |u|^2``, i.e. the
    smallest eigenvalue of the assembled Laplacian."""
    lam, _ = smallest_eigenvalue(build_laplacian(d), tol=tol)
    return lam


class EmbeddingConstant(NamedTuple):
    value: float
    provenance: str  # "exact" when every node was sampled, else "sampled"
    node: int  # flat index attaining the maximum


def embedding_constant(
    d: GridDomain,
    A: DiscreteOperator,
    sample: Sequence[int] | None = None,
    tol: float = 1e-12,
    block: int = 256,
) -> EmbeddingConstant:
    """Discrete constant ``c`` with ``max|u| <= c |Au|``.

    For each sampled node ``i`` the discrete delta ``delta_i`` (value
    ``1/cell_volume`` at ``i``) satisfies ``u_i = <Au, A^{-1} delta_i>``, so
    the sharp constant is ``max_i |A^{-1} delta_i|``. With all nodes sampled
    the value is exact, otherwise a lower bound.
    """
    if A.domain != d:
        raise ValueError("operator was not built on this domain")
    nodes = np.arange(d.n) if sample is None else np.unique(np.asarray(sample, dtype=int))
    if nodes.size == 0:
        raise ValueError("empty node sample")
    if nodes[0] < 0 or nodes[-1] >= d.n:
        raise ValueError("sample contains indices outside the grid")
    exact = nodes.size == d.n
    best, best_node = -1.0, -1
    scale = 1.0 / math.sqrt(d.cell_volume)
    for start in range(0, nodes.size, block):
        chunk = nodes[start:start + block]
        rhs = np.zeros((d.n, chunk.size))
        rhs[chunk, np.arange(chunk.size)] = 1.0
        g, _ = conjugate_gradient(A.matvec, rhs, tol=tol, diag=A.diagonal)
        norms = np.sqrt(np.sum(g * g, axis=0)) * scale
        j = int(np.argmax(norms))
        if norms[j] > best:
            best, best_node = float(norms[j]), int(chunk[j])
    return EmbeddingConstant(best, "exact" if exact else "sampled", best_node)


def box_eigenvalue(d: GridDomain) -> float:
    """Closed-form smallest eigenvalue of `build_laplacian` on a box,
    ``sum_k (4/h_k^2) sin^2(pi h_k / (2 L_k))``."""
    total = 0.0
    for lo, hi, h in zip(d.lower, d.upper, d.spacing):
        total += 4.0 / h**2 * math.sin(math.pi * h / (2.0 * (hi - lo))) ** 2
    return total


def sine_mode(d: GridDomain) -> GridField:
    """Lowest discrete Dirichlet eigenmode ``prod_k sin(pi (x_k - lo_k) / L_k)``."""
    vals = np.ones(d.n)
    for k, (lo, hi) in enumerate(zip(d.lower, d.upper)):
        vals = vals * np.sin(math.pi * (d.coordinates[:, k] - lo) / (hi - lo))
    return GridField(d, vals)
