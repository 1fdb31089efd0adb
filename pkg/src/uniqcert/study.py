"""Grid-refinement study: spectral constant and solution error per level."""

from __future__ import annotations

import math

import numpy as np

from .config import ProblemConfig
from .expr import evaluate
from .laplacian import box_eigenvalue
from .solve import gauss_newton_solve


def observed_orders(errors, spacings):
    """``log(e_i / e_{i+1}) / log(h_i / h_{i+1})`` for consecutive levels."""
    return [
        math.log(errors[i] / errors[i + 1]) / math.log(spacings[i] / spacings[i + 1])
        for i in range(len(errors) - 1)
    ]


def convergence_study(config: ProblemConfig, levels=None) -> dict:
    levels = list(levels or config.study_levels)
    if len(levels) < 2:
        raise ValueError("a convergence study needs at least two levels")
    rows = []
    for counts in levels:
        problem = config.with_domain(counts).build()
        d = problem.domain
        lam = problem.alpha
        exact_lam = box_eigenvalue(d)
        rep = gauss_newton_solve(problem.A, problem.nf, problem.y, None, config.solver)
        row = {
            "nodes": list(counts),
            "h": d.spacing[0],
            "alpha": lam,
            "alpha_closed_form": exact_lam,
            "alpha_relative_error": abs(lam - exact_lam) / exact_lam,
            "solve": rep.summary(),
        }
        if config.study_exact is not None:
            exact = np.asarray(evaluate(config.study_exact, d.coordinate_binding())) * np.ones(d.n)
            err = rep.u.values - exact
            row["error_l2"] = d.norm(err)
            row["error_max"] = float(np.max(np.abs(err)))
        rows.append(row)
    out = {"levels": rows}
    hs = [r["h"] for r in rows]
    if config.study_exact is not None and all(r["error_l2"] > 0 for r in rows):
        out["orders_l2"] = observed_orders([r["error_l2"] for r in rows], hs)
        out["orders_max"] = observed_orders([r["error_max"] for r in rows], hs)
    out["verdict"] = "converged" if all(r["solve"]["verdict"] == "converged" for r in rows) else "failed"
    return out
