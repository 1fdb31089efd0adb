"""Multistart probe of uniqueness: solve from many seeded starts and compare."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .grid import GridField
from .nemytskii import Nonlinearity
from .operators import DiscreteOperator
from .solve import SolveOptions, SolveReport, gauss_newton_solve

UNIQUE = "unique-within-tol"
DISTINCT = "distinct-solutions-found"
INCONCLUSIVE = "inconclusive"


@dataclass
class UniquenessReport:
    starts: int
    seed: int
    amplitude: float
    runs: list[SolveReport]
    discrepancy: float
    verdict: str
    tolerance: float
    certificate_verdict: str | None = None

    @property
    def solution(self) -> GridField | None:
        for r in self.runs:
            if r.converged:
                return r.u
        return None

    def to_dict(self) -> dict:
        out = {
            "starts": self.starts,
            "seed": self.seed,
            "amplitude": self.amplitude,
            "discrepancy": self.discrepancy,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "runs": [dict(start=i, **r.summary()) for i, r in enumerate(self.runs)],
        }
        if self.certificate_verdict is not None:
            out["certificate_verdict"] = self.certificate_verdict
        return out


def start_fields(n: int, k: int, seed: int, amplitude: float) -> list[np.ndarray]:
    """The zero field, then ``k - 1`` uniform fields on ``[-amplitude, amplitude]``.

    Start ``j`` draws from a Philox stream keyed by ``seed`` and jumped ``j``
    times, so each start is reproducible on its own.
    """
    out = [np.zeros(n)]
    for j in range(1, k):
        rng = np.random.Generator(np.random.Philox(seed).jumped(j))
        out.append(rng.uniform(-amplitude, amplitude, n))
    return out


def _workers(requested):
    if requested is None:
        requested = int(os.environ.get("UNIQCERT_THREADS", "0") or 0)
    return (os.cpu_count() or 1) if requested <= 0 else requested


def discrepancy(fields: list[GridField]) -> float:
    """``max_ij |u_i - u_j| / (1 + max_k |u_k|)`` in discrete L2."""
    if len(fields) < 2:
        return 0.0
    worst = 0.0
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            worst = max(worst, (fields[i] - fields[j]).norm())
    return worst / (1.0 + max(f.norm() for f in fields))


def multistart(
    A: DiscreteOperator,
    nf: Nonlinearity,
    y=None,
    k: int = 10,
    seed: int = 42,
    amplitude: float = 1.0,
    opts: SolveOptions | None = None,
    *,
    certificate=None,
    unsafe: bool = False,
    workers: int | None = None,
) -> UniquenessReport:
    """Run `gauss_newton_solve` from ``k`` starts and compare the results.

    Verdict is ``inconclusive`` if any run fails, ``distinct-solutions-found``
    if two converged solutions differ by more than ten times the solve
    tolerance, else ``unique-within-tol``.
    """
    if k < 2:
        raise ValueError("multistart needs at least two starts")
    opts = opts or SolveOptions()
    starts = start_fields(A.n, k, seed, amplitude)

    def run(u0):
        return gauss_newton_solve(A, nf, y, u0, opts, certificate=certificate, unsafe=unsafe)

    nworkers = min(_workers(workers), k)
    if nworkers > 1:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            runs = list(pool.map(run, starts))
    else:
        runs = [run(u0) for u0 in starts]

    converged = [r.u for r in runs if r.converged]
    disc = discrepancy(converged)
    if len(converged) < len(runs):
        verdict = INCONCLUSIVE
    elif disc > 10 * opts.tol:
        verdict = DISTINCT
    else:
        verdict = UNIQUE
    return UniquenessReport(
        starts=k,
        seed=seed,
        amplitude=float(amplitude),
        runs=runs,
        discrepancy=disc,
        verdict=verdict,
        tolerance=opts.tol,
        certificate_verdict=None if certificate is None else certificate.overall,
    )
