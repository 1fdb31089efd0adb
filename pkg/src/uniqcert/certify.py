"""Numerical check of the sufficient conditions for unique solvability of
``A u = N(u)``.

The conditions checked, for ``F(u) = A u - N(u)``:

* (A2)   ``<Au, u> >= alpha |u|^2`` with ``alpha > 0``;
* (N1)   ``N`` is C^1 with symmetric derivative;
* (N2i)  ``|N(u)| <= beta |Au| + delta`` with ``beta < 1``;
* (N2ii) ``<N'(u) h, h> <= gamma |h|^2`` with ``gamma < alpha``;
* (P3)   the pointwise bound ``f_u(x, u) <= gamma`` behind (N2ii).

Each constant carries a provenance: ``computed`` (exact for the discrete
problem), ``asserted`` (an analytic bound supplied by the user and checked for
consistency against samples) or ``sampled`` (an estimate from finitely many
u-values, which cannot certify a bound over all of R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .expr import Expr, evaluate
from .laplacian import embedding_constant
from .nemytskii import Nonlinearity
from .operators import DiscreteOperator, smallest_eigenvalue

PASS = "PASS"
PASS_SAMPLED = "PASS-SAMPLED"
FAIL = "FAIL"

COMPUTED = "computed"
ASSERTED = "asserted"
SAMPLED = "sampled"

ROUTES = ("auto", "embedding", "poincare")

# slack for comparing an asserted bound against samples of the same quantity
_ROUNDING = 1e-12


class GammaBound(NamedTuple):
    gamma: float
    provenance: str


class GrowthBound(NamedTuple):
    beta: float
    delta: float
    provenance: str
    route: str


@dataclass(frozen=True)
class GrowthSpec:
    """Optional analytic split ``|f(x, u)| <= a1(x) + b1(x) |u|``.

    ``route`` picks how ``|N(u)|`` is bounded by ``|Au|``: ``embedding`` uses
    ``|u|_inf <= c_m |Au|`` (any ``b1``), ``poincare`` uses
    ``|u| <= |Au| / alpha`` (constant ``b1``), ``auto`` takes the smaller.
    """

    a1: Expr | None = None
    b1: Expr | None = None
    route: str = "auto"

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}, got {self.route!r}")
        if (self.a1 is None) != (self.b1 is None):
            raise ValueError("a growth split needs both a1 and b1")
        for name, e in (("a1", self.a1), ("b1", self.b1)):
            if e is not None and "u" in e.variables:
                raise ValueError(f"{name} must not depend on u")

    @property
    def asserted(self) -> bool:
        return self.a1 is not None


def _closed_nodes(nf: Nonlinearity) -> np.ndarray:
    return nf.domain.closed_coordinates()


def _u_samples(u_range, nsamples):
    lo, hi = float(u_range[0]), float(u_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError(f"u-range must be a finite interval with lo < hi, got {u_range}")
    if nsamples < 2:
        raise ValueError("need at least two u samples")
    return np.linspace(lo, hi, int(nsamples))


def _affine_in_u(nf: Nonlinearity) -> bool:
    return "u" not in nf.fu.variables


def _field_values(e: Expr, nf: Nonlinearity, coords: np.ndarray) -> np.ndarray:
    binding = nf.domain.coordinate_binding(coords)
    binding["u"] = np.zeros(coords.shape[0])
    return np.asarray(evaluate(e, binding))


def sampled_gamma(nf: Nonlinearity, u_range, nsamples: int) -> float:
    """``max fu(x_i, u_j)`` over closed-grid nodes and equispaced u-values."""
    us = _u_samples(u_range, nsamples)
    return float(np.max(nf.sample(nf.fu, _closed_nodes(nf), us)))


def estimate_gamma(
    nf: Nonlinearity, u_range, nsamples: int, b3: float | None = None
) -> GammaBound:
    """Upper bound ``gamma`` for ``fu``.

    An asserted ``b3`` is returned as is. When ``fu`` does not depend on ``u``
    the maximum over the closed grid is exact for the discrete problem;
    otherwise u is sampled and the result is labelled as such.
    """
    if b3 is not None:
        return GammaBound(float(b3), ASSERTED)
    if _affine_in_u(nf):
        return GammaBound(float(np.max(_field_values(nf.fu, nf, _closed_nodes(nf)))), COMPUTED)
    return GammaBound(sampled_gamma(nf, u_range, nsamples), SAMPLED)


def _route_betas(route, c_m, b1_norm, b1_sup, alpha):
    """Candidate betas keyed by route; ``b1_sup`` is None unless b1 is a
    scalar bound."""
    out = {}
    if route in ("auto", "embedding") and c_m is not None:
        out["embedding"] = c_m * b1_norm
    if route in ("auto", "poincare") and b1_sup is not None and alpha is not None:
        out["poincare"] = b1_sup / alpha
    if not out:
        raise ValueError(f"growth route {route!r} is not available (need c_m or a constant b1 and alpha)")
    return out


def estimate_beta_delta(
    nf: Nonlinearity,
    A: DiscreteOperator,
    c_m: float | None,
    growth: GrowthSpec | None = None,
    *,
    alpha: float | None = None,
    u_range=None,
    nsamples: int = 41,
    c_m_provenance: str = COMPUTED,
) -> GrowthBound:
    """Constants with ``|N(u)| <= beta |Au| + delta``.

    Three modes, in order of preference: an asserted split
    ``|f| <= a1(x) + b1(x)|u|``; the exact split ``a1 = |f(x, 0)|``,
    ``b1 = |fu(x)|`` when ``f`` is affine in ``u``; otherwise an affine
    envelope ``a + b|u|`` of ``max_x |f(x, u)|`` fitted over sampled u.
    """
    growth = growth or GrowthSpec()
    dom = nf.domain
    interior = dom.coordinates
    if growth.asserted:
        a1 = np.abs(_field_values(growth.a1, nf, interior))
        b1 = np.abs(_field_values(growth.b1, nf, interior))
        delta = dom.norm(a1)
        b1_sup = float(evaluate(growth.b1, {})) if not growth.b1.variables else None
        prov = ASSERTED
    elif _affine_in_u(nf):
        a1 = np.abs(_field_values(nf.f, nf, interior))
        b1 = np.abs(_field_values(nf.fu, nf, interior))
        delta = dom.norm(a1)
        b1_sup = float(np.max(np.abs(_field_values(nf.fu, nf, _closed_nodes(nf)))))
        prov = COMPUTED
    else:
        if u_range is None:
            raise ValueError("sampled growth estimate needs a u-range")
        us = _u_samples(u_range, nsamples)
        env = np.max(np.abs(nf.sample(nf.f, _closed_nodes(nf), us)), axis=0)
        a, b = _envelope(np.abs(us), env)
        b1 = np.full(dom.n, b)
        delta = a * math.sqrt(dom.n * dom.cell_volume)
        b1_sup = b
        prov = SAMPLED
    betas = _route_betas(growth.route, c_m, dom.norm(b1), b1_sup, alpha)
    route = min(betas, key=lambda k: (betas[k], k))
    if route == "embedding" and c_m_provenance == SAMPLED:
        prov = SAMPLED
    return GrowthBound(float(betas[route]), float(delta), prov, route)


def _envelope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares line ``a + b x`` through ``(x, y)``, shifted up so that it
    dominates every sample; slope clipped at 0."""
    if np.unique(x).size < 2:
        raise ValueError("degenerate growth fit: need at least two distinct |u| samples")
    b, a = np.polyfit(x, y, 1)
    if b < 0:
        return float(np.max(y)), 0.0
    a += max(0.0, float(np.max(y - (a + b * x))))
    return float(max(a, 0.0)), float(b)


def growth_split_violation(nf: Nonlinearity, growth: GrowthSpec, u_range, nsamples: int) -> float:
    """Largest sampled excess of ``|f|`` over the asserted ``a1 + b1 |u|``
    (relative to the bound), 0 when the split holds on every sample."""
    coords = _closed_nodes(nf)
    us = _u_samples(u_range, nsamples)
    f = np.abs(nf.sample(nf.f, coords, us))
    bound = (
        np.abs(_field_values(growth.a1, nf, coords))[:, None]
        + np.abs(_field_values(growth.b1, nf, coords))[:, None] * np.abs(us)[None, :]
    )
    excess = (f - bound) / np.maximum(1.0, np.abs(bound))
    return float(max(0.0, np.max(excess)))


@dataclass
class HypothesisCertificate:
    alpha: float
    gamma: float
    gamma_provenance: str
    beta: float
    delta: float
    growth_provenance: str
    growth_route: str
    c_m: float | None
    c_m_provenance: str | None
    margin: float
    verdicts: dict[str, str]
    notes: dict[str, str] = field(default_factory=dict)
    f: str = ""
    fu: str = ""

    @property
    def alpha_minus_gamma(self) -> float:
        return self.alpha - self.gamma

    @property
    def one_minus_beta(self) -> float:
        return 1.0 - self.beta

    @property
    def overall(self) -> str:
        return combine(self.verdicts.values())

    @property
    def passed(self) -> bool:
        return self.overall != FAIL

    def monitor_bound(self, rel: float = 1e-8) -> float:
        """Lower bound for Rayleigh quotients of ``F'(u)`` implied by the
        certificate, with slack ``rel * alpha``."""
        return self.alpha - self.gamma - rel * self.alpha

    def to_dict(self) -> dict:
        out = {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "gamma_provenance": self.gamma_provenance,
            "beta": self.beta,
            "delta": self.delta,
            "growth_provenance": self.growth_provenance,
            "growth_route": self.growth_route,
            "margin": self.margin,
            "margins": {"alpha_minus_gamma": self.alpha_minus_gamma, "one_minus_beta": self.one_minus_beta},
            "verdicts": dict(self.verdicts),
            "notes": dict(self.notes),
            "overall": self.overall,
            "f": self.f,
            "fu": self.fu,
        }
        if self.c_m is not None:
            out["c_m"] = self.c_m
            out["c_m_provenance"] = self.c_m_provenance
        return out


def combine(verdicts) -> str:
    verdicts = list(verdicts)
    if any(v == FAIL for v in verdicts):
        return FAIL
    if any(v == PASS_SAMPLED for v in verdicts):
        return PASS_SAMPLED
    return PASS


def _verdict(ok: bool, provenance: str) -> str:
    if not ok:
        return FAIL
    return PASS_SAMPLED if provenance == SAMPLED else PASS


def certify_operator(
    A: DiscreteOperator,
    nf: Nonlinearity,
    *,
    u_range=(-10.0, 10.0),
    nsamples: int = 41,
    b3: float | None = None,
    growth: GrowthSpec | None = None,
    margin: float = 1e-9,
    embedding_sample: Sequence[int] | None = None,
    alpha: float | None = None,
) -> HypothesisCertificate:
    """Estimate every constant and fill in the per-condition verdicts.

    Inequalities are enforced non-strictly with a relative ``margin``:
    ``gamma <= (1 - margin) alpha`` and ``beta <= 1 - margin``.
    """
    growth = growth or GrowthSpec()
    notes = {
        "A1": "satisfied trivially at the discrete level (finite-dimensional spaces)",
        "N1": "symbolic derivative exists; N' is diagonal hence symmetric",
    }
    if alpha is None:
        alpha, _ = smallest_eigenvalue(A)

    need_cm = growth.route != "poincare"
    c_m = c_m_prov = None
    if need_cm:
        emb = embedding_constant(A.domain, A, sample=embedding_sample)
        c_m, c_m_prov = emb.value, emb.provenance

    g = estimate_gamma(nf, u_range, nsamples, b3=b3)
    gamma_ok = g.gamma <= alpha * (1.0 - margin)
    if g.provenance == ASSERTED:
        observed = sampled_gamma(nf, u_range, nsamples)
        if observed > g.gamma + _ROUNDING * max(1.0, abs(g.gamma)):
            gamma_ok = False
            notes["P3"] = f"asserted b3 = {g.gamma!r} is exceeded by sampled fu = {observed!r}"

    gb = estimate_beta_delta(
        nf, A, c_m, growth, alpha=alpha, u_range=u_range, nsamples=nsamples,
        c_m_provenance=c_m_prov or COMPUTED,
    )
    growth_ok = gb.beta <= 1.0 - margin and gb.delta >= 0.0
    if growth.asserted:
        excess = growth_split_violation(nf, growth, u_range, nsamples)
        if excess > _ROUNDING:
            growth_ok = False
            notes["N2i"] = f"asserted split |f| <= a1 + b1|u| violated by relative {excess!r} on samples"

    notes["P2m"] = (
        "sampled: fu is finite on every closed-grid node for the sampled u-range; "
        "continuity of the growth function is not certified"
    )
    verdicts = {
        "A2": _verdict(alpha > 0, COMPUTED),
        "N1": PASS,
        "N2i": _verdict(growth_ok, gb.provenance),
        "N2ii": _verdict(gamma_ok, g.provenance),
        "P3": _verdict(gamma_ok, g.provenance),
    }
    return HypothesisCertificate(
        alpha=float(alpha),
        gamma=g.gamma,
        gamma_provenance=g.provenance,
        beta=gb.beta,
        delta=gb.delta,
        growth_provenance=gb.provenance,
        growth_route=gb.route,
        c_m=c_m,
        c_m_provenance=c_m_prov,
        margin=margin,
        verdicts=verdicts,
        notes=notes,
        f=str(nf.f),
        fu=str(nf.fu),
    )


def certify(config) -> HypothesisCertificate:
    """Certificate for a validated `ProblemConfig` (or a built `Problem`)."""
    problem = config.build() if hasattr(config, "build") else config
    cfg = problem.config
    return certify_operator(
        problem.A,
        problem.nf,
        u_range=cfg.u_range,
        nsamples=cfg.u_samples,
        b3=cfg.b3,
        growth=cfg.growth,
        margin=cfg.margin,
        embedding_sample=cfg.embedding_sample,
        alpha=problem.alpha,
    )
