"""Damped Gauss-Newton minimisation of ``phi_y(u) = 0.5 |F(u) - y|^2``.

For ``F(u) = A u - N(u)`` the Jacobian ``F'(u) = A - diag(fu(u))`` is square
and symmetric, so the Gauss-Newton step ``(F'^T F') s = -F'^T r`` reduces to
the Newton step ``F'(u) s = -r``, which is solved matrix-free by CG.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, UncertifiedProblemError
from .expr import ExprDomainError
from .grid import GridField, as_values
from .nemytskii import Nonlinearity
from .operators import DiscreteOperator, conjugate_gradient

log = logging.getLogger(__name__)

CONVERGED = "converged"
STALLED = "stalled"
DIVERGED = "diverged"
MONITOR_VIOLATION = "monitor-violation"


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-10
    max_iter: int = 50
    cg_tol: float = 1e-12
    c1: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-10
    monitor: bool = True
    # lower bound asserted for Rayleigh quotients of F'(u); None disables the check
    monitor_bound: float | None = None

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if not 0 < self.cg_tol < 1:
            raise ValueError("cg_tol must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if not 0 < self.c1 < 1:
            raise ValueError("c1 must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.min_step <= 1:
            raise ValueError("min_step must lie in (0, 1]")


@dataclass
class SolveReport:
    u: GridField
    iterations: int
    residual_norms: list[float]
    steps: list[float]
    phi: list[float]
    rayleigh: list[float]
    verdict: str
    rhs_norm: float
    message: str = ""
    used_fallback: bool = False

    @property
    def final_residual(self) -> float:
        return self.residual_norms[-1] if self.residual_norms else math.inf

    @property
    def final_relative_residual(self) -> float:
        return self.final_residual / (1.0 + self.rhs_norm)

    @property
    def min_rayleigh(self) -> float | None:
        return min(self.rayleigh) if self.rayleigh else None

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    def summary(self) -> dict:
        out = {
            "verdict": self.verdict,
            "iterations": self.iterations,
            "solution_norm": self.u.norm(),
        }
        if self.residual_norms:
            out["final_residual"] = self.final_residual
            out["final_relative_residual"] = self.final_relative_residual
        if self.rayleigh:
            out["min_rayleigh"] = self.min_rayleigh
        return out

    def to_dict(self) -> dict:
        out = self.summary()
        out.update(
            residual_norms=list(self.residual_norms),
            steps=list(self.steps),
            phi=list(self.phi),
            rayleigh=list(self.rayleigh),
            used_fallback=self.used_fallback,
        )
        if self.message:
            out["message"] = self.message
        return out


def _rhs(y, domain):
    if y is None:
        return np.zeros(domain.n)
    return as_values(y, domain)


def _residual(A, nf, u, y):
    return A.matvec(u) - nf.values(u) - y


def residual(A: DiscreteOperator, nf: Nonlinearity, u, y=None) -> GridField:
    """``F(u) - y = A u - N(u) - y``."""
    d = A.domain
    return GridField(d, _residual(A, nf, as_values(u, d), _rhs(y, d)))


def phi(A: DiscreteOperator, nf: Nonlinearity, u, y=None) -> float:
    """``0.5 |F(u) - y|^2``."""
    return 0.5 * residual(A, nf, u, y).norm() ** 2


def _jacobian(A, nf, u):
    fu = nf.derivative_values(u)

    def op(v):
        return A.matvec(v) - fu * v

    return op, A.diagonal - fu


def grad_phi(A: DiscreteOperator, nf: Nonlinearity, u, y=None) -> GridField:
    """Discrete-L2 gradient ``F'(u) (F(u) - y)`` of ``phi_y``."""
    d = A.domain
    uv = as_values(u, d)
    op, _ = _jacobian(A, nf, uv)
    return GridField(d, op(_residual(A, nf, uv, _rhs(y, d))))


def gauss_newton_solve(
    A: DiscreteOperator,
    nf: Nonlinearity,
    y=None,
    u0=None,
    opts: SolveOptions | None = None,
    *,
    certificate=None,
    unsafe: bool = False,
) -> SolveReport:
    """Solve ``A u - N(u) = y`` from ``u0`` (default 0).

    Each step solves ``F'(u_k) s = -(F(u_k) - y)`` by CG and backtracks on
    ``phi_y`` until the Armijo condition and strict decrease hold. With
    ``opts.monitor`` the Rayleigh quotient of ``F'(u_k)`` along ``s`` is
    recorded; a value under ``opts.monitor_bound`` (or the certificate's
    ``alpha - gamma`` bound) ends the run with verdict ``monitor-violation``,
    as does a CG failure, since either contradicts positive definiteness.

    A failed ``certificate`` raises `UncertifiedProblemError` unless
    ``unsafe``; in unsafe mode a CG failure falls back to a steepest-descent
    step instead.
    """
    opts = opts or SolveOptions()
    if certificate is not None and not certificate.passed and not unsafe:
        raise UncertifiedProblemError(
            f"certificate verdict is {certificate.overall}; pass unsafe=True to solve anyway"
        )
    bound = opts.monitor_bound
    if bound is None and certificate is not None and certificate.passed:
        bound = certificate.monitor_bound()

    d = A.domain
    yv = _rhs(y, d)
    u = np.zeros(d.n) if u0 is None else np.array(as_values(u0, d), dtype=np.float64)
    ynorm = d.norm(yv)
    scale = 1.0 + ynorm

    residuals, steps, phis, rayleigh = [], [], [], []
    verdict, message, fallback = DIVERGED, "", False

    try:
        r = _residual(A, nf, u, yv)
    except ExprDomainError as exc:
        return SolveReport(GridField(d, u), 0, [], [], [], [], DIVERGED, ynorm, str(exc))
    it = 0
    while True:
        rn = d.norm(r)
        residuals.append(rn)
        phis.append(0.5 * rn * rn)
        if rn / scale <= opts.tol:
            verdict = CONVERGED
            break
        if it >= opts.max_iter:
            verdict, message = DIVERGED, f"iteration cap {opts.max_iter} reached"
            break

        op, diag = _jacobian(A, nf, u)
        grad = op(r)
        try:
            s, _ = conjugate_gradient(op, -r, tol=opts.cg_tol, diag=diag)
        except ConvergenceError as exc:
            if not unsafe:
                verdict, message = MONITOR_VIOLATION, f"linear solve failed: {exc}"
                break
            s, fallback = -grad, True

        if opts.monitor:
            ss = float(s @ s)
            rq = float(s @ op(s)) / ss if ss > 0 else math.inf
            rayleigh.append(rq)
            if bound is not None and rq < bound:
                verdict = MONITOR_VIOLATION
                message = f"Rayleigh quotient {rq!r} of F'(u) fell below {bound!r}"
                break

        slope = d.inner(grad, s)
        if not slope < 0:
            verdict, message = STALLED, "search direction is not a descent direction"
            break
        phi0 = phis[-1]
        t = 1.0
        accepted = None
        while t >= opts.min_step:
            trial = u + t * s
            try:
                r_t = _residual(A, nf, trial, yv)
            except ExprDomainError:
                t *= opts.backtrack
                continue
            phi_t = 0.5 * d.norm(r_t) ** 2
            if phi_t < phi0 and phi_t <= phi0 + opts.c1 * t * slope:
                accepted = (trial, r_t)
                break
            t *= opts.backtrack
        if accepted is None:
            verdict, message = STALLED, f"line search step fell below {opts.min_step}"
            break
        u, r = accepted
        steps.append(t)
        it += 1
        log.debug("iter %d: |F(u)-y| = %.3e, step %.3g", it, d.norm(r), t)

    return SolveReport(
        u=GridField(d, u),
        iterations=it,
        residual_norms=residuals,
        steps=steps,
        phi=phis,
        rayleigh=rayleigh,
        verdict=verdict,
        rhs_norm=ynorm,
        message=message,
        used_fallback=fallback,
    )
