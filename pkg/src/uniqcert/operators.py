"""Discrete self-adjoint operators and the linear-algebra kernels built on them.

All norms and inner products are the node-weighted discrete L2 ones of the
owning `GridDomain`. Relative tolerances are weight-free, so the kernels work
on raw arrays internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, GridMismatchError, NotPositiveDefiniteError
from .grid import GridDomain, GridField, as_values

__all__ = [
    "DiscreteOperator",
    "apply",
    "conjugate_gradient",
    "solve_spd",
    "smallest_eigenvalue",
    "graph_norm",
]


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Symmetric positive definite sparse operator on the interior nodes of
    ``domain``, stored in CSR form."""

    domain: GridDomain
    matrix: sp.csr_matrix

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=np.float64)
        n = self.domain.n
        if m.shape != (n, n):
            raise GridMismatchError(f"matrix shape {m.shape} does not match {n} interior nodes")
        m.sort_indices()
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.domain.n

    @cached_property
    def diagonal(self) -> np.ndarray:
        d = self.matrix.diagonal()
        d.flags.writeable = False
        return d

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    __call__ = matvec

    def is_symmetric(self) -> bool:
        """Exact (bitwise) symmetry of the stored entries."""
        t = self.matrix.T.tocsr()
        t.sort_indices()
        m = self.matrix
        return (
            np.array_equal(m.indptr, t.indptr)
            and np.array_equal(m.indices, t.indices)
            and np.array_equal(m.data, t.data)
        )

    def check_invariants(self, rng: np.random.Generator | None = None, samples: int = 20):
        """Raise `ValueError` if symmetry, diagonal positivity or sampled
        positivity of the quadratic form fails."""
        if not self.is_symmetric():
            raise ValueError("operator is not exactly symmetric")
        if not np.all(self.diagonal > 0):
            raise ValueError("operator has non-positive diagonal entries")
        rng = np.random.default_rng(0) if rng is None else rng
        for _ in range(samples):
            u = rng.standard_normal(self.n)
            if not float(u @ self.matvec(u)) > 0:
                raise ValueError("quadratic form is not positive on a random vector")


def apply(A: DiscreteOperator, u: GridField) -> GridField:
    """``A u`` as a field on the same grid."""
    return GridField(A.domain, A.matvec(as_values(u, A.domain)))


def _dots(a, b):
    return np.einsum("i...,i...->...", a, b)


def _norms(a):
    return np.sqrt(_dots(a, a))


def conjugate_gradient(
    op: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    tol: float = 1e-10,
    diag: np.ndarray | None = None,
    maxiter: int | None = None,
    x0: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Jacobi-preconditioned CG for ``op(x) = b``.

    ``b`` may be a vector or an ``(n, k)`` block of independent right-hand
    sides (``op`` must then accept blocks). Each column stops once its true
    residual satisfies ``|op(x) - b| <= tol |b|``. Returns ``(x, iterations)``.

    Raises `NotPositiveDefiniteError` on non-positive curvature and
    `ConvergenceError` when ``maxiter`` (default ``10 n``) is exceeded.
    """
    if not 0 < tol < 1:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    maxiter = 10 * n if maxiter is None else int(maxiter)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    target = tol * _norms(b)
    inv_d = None
    if diag is not None:
        diag = np.asarray(diag, dtype=np.float64)
        # a constant diagonal only rescales; skip it
        if np.all(diag > 0) and np.ptp(diag) > 0:
            inv_d = 1.0 / diag
            if b.ndim == 2:
                inv_d = inv_d[:, None]

    def precondition(r, out=None):
        if inv_d is None:
            return r
        return np.multiply(r, inv_d, out=out)

    it = 0
    r = b.copy() if x0 is None else b - op(x)
    while True:
        # outer loop re-checks the true residual so recurrence drift cannot
        # report false convergence
        active = _norms(r) > target
        if not np.any(active):
            return x, it
        if it >= maxiter:
            raise ConvergenceError(f"CG did not reach tol={tol} within {maxiter} iterations")
        z = precondition(r)
        p = z.copy()
        rz = _dots(r, z)
        while it < maxiter:
            Ap = op(p)
            pAp = _dots(p, Ap)
            if np.any(active & ~(pAp > 0)):
                raise NotPositiveDefiniteError("CG met non-positive curvature; operator is not positive definite")
            alpha = np.where(active, rz / np.where(active, pAp, 1.0), 0.0)
            x += alpha * p
            Ap *= alpha
            r -= Ap
            it += 1
            active = _norms(r) > target
            if not np.any(active):
                break
            z = precondition(r, out=z if inv_d is not None else None)
            rz_new = _dots(r, z)
            beta = np.where(active, rz_new / np.where(rz == 0, 1.0, rz), 0.0)
            rz = rz_new
            p *= beta
            p += z
        r = b - op(x)


def solve_spd(op, b, tol: float = 1e-10, *, diag=None, maxiter=None, x0=None):
    """Solve ``op v = b`` for symmetric positive definite ``op`` by CG.

    ``op`` is a `DiscreteOperator` or any callable on value arrays; ``b`` is a
    `GridField` or array and the solution is returned in the same form,
    together with the iteration count.
    """
    domain = None
    if isinstance(op, DiscreteOperator):
        domain = op.domain
        if diag is None:
            diag = op.diagonal
    if isinstance(b, GridField):
        if domain is not None and b.domain != domain:
            raise GridMismatchError("right-hand side lives on a different grid")
        domain, bv = b.domain, b.values
    else:
        bv = np.asarray(b, dtype=np.float64)
    if x0 is not None and isinstance(x0, GridField):
        x0 = x0.values
    x, it = conjugate_gradient(op, bv, tol=tol, diag=diag, maxiter=maxiter, x0=x0)
    if isinstance(b, GridField):
        return GridField(domain, x), it
    return x, it


def smallest_eigenvalue(
    A: DiscreteOperator, tol: float = 1e-12, maxiter: int = 1000, cg_tol: float = 1e-11
) -> tuple[float, GridField]:
    """Smallest eigenvalue of ``A`` by inverse power iteration.

    Starts from the constant field, iterates ``v <- A^{-1} v`` and stops when
    successive Rayleigh quotients differ by less than ``tol * lambda``.
    Returns the Rayleigh quotient and the unit (discrete L2) eigenfield.
    """
    dom = A.domain
    v = np.ones(A.n) / math.sqrt(A.n)
    rq_old = float(v @ A.matvec(v))
    for _ in range(maxiter):
        w, _ = conjugate_gradient(A.matvec, v, tol=cg_tol, diag=A.diagonal)
        v = w / np.linalg.norm(w)
        rq = float(v @ A.matvec(v))
        if abs(rq - rq_old) < tol * abs(rq):
            if v.sum() < 0:
                v = -v
            return rq, GridField(dom, v / dom.norm(v))
        rq_old = rq
    raise ConvergenceError(f"inverse power iteration did not converge in {maxiter} steps")


def graph_norm(A: DiscreteOperator, u) -> float:
    """``sqrt(|u|^2 + |Au|^2)`` in discrete L2."""
    v = as_values(u, A.domain)
    dom = A.domain
    return math.hypot(dom.norm(v), dom.norm(A.matvec(v)))
