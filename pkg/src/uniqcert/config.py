"""Problem configuration: a versioned JSON document, validated in full.

Example::

    {
      "schema": 1,
      "domain": {"dimension": 3, "lower": [1, 1, 1], "upper": [2, 2, 2], "nodes": [15, 15, 15]},
      "nonlinearity": {
        "f": "(1 - 1/(x^2+y^2+z^2)) * (10*u - 1)",
        "u_range": [-50, 50], "u_samples": 41,
        "b3": "55/6", "a1": "11/12", "b1": "110/12", "route": "auto"
      },
      "rhs": "zero",
      "solver": {"tol": 1e-10, "max_iter": 50},
      "probe": {"starts": 10, "seed": 42, "amplitude": 50},
      "certificate": {"margin": 1e-9}
    }

Only ``schema``, ``domain`` and ``nonlinearity.f`` are required.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

from .certify import ROUTES, GrowthSpec
from .errors import ConfigError
from .expr import Expr, ExprDomainError, ExprError, BinOp, Call, evaluate, parse
from .grid import AXIS_NAMES, GridDomain, GridField
from .laplacian import build_laplacian
from .nemytskii import Nonlinearity
from .operators import smallest_eigenvalue
from .solve import SolveOptions

SCHEMA_VERSION = 1

# dense sample counts per axis for the singularity scan (odd: centre included)
_SCAN_POINTS = {1: 1025, 2: 129, 3: 33}

_SOLVER_KEYS = {f for f in SolveOptions.__dataclass_fields__ if f != "monitor_bound"}


@dataclass
class ProblemConfig:
    raw: dict
    domain: GridDomain
    f: Expr
    u_range: tuple[float, float] = (-10.0, 10.0)
    u_samples: int = 41
    b3: float | None = None
    growth: GrowthSpec = field(default_factory=GrowthSpec)
    embedding_sample: list[int] | None = None
    rhs: Expr | None = None
    solver: SolveOptions = field(default_factory=SolveOptions)
    probe_starts: int = 10
    probe_seed: int = 42
    probe_amplitude: float = 1.0
    margin: float = 1e-9
    study_levels: list[tuple[int, ...]] = field(default_factory=list)
    study_exact: Expr | None = None

    @property
    def digest(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_domain(self, counts) -> "ProblemConfig":
        raw = copy.deepcopy(self.raw)
        raw["domain"]["nodes"] = list(counts)
        dom = GridDomain(self.domain.lower, self.domain.upper, tuple(counts))
        return _replace(self, raw=raw, domain=dom)

    def with_seed(self, seed: int) -> "ProblemConfig":
        raw = copy.deepcopy(self.raw)
        raw.setdefault("probe", {})["seed"] = int(seed)
        return _replace(self, raw=raw, probe_seed=int(seed))

    def build(self) -> "Problem":
        return Problem(self)


def _replace(cfg, **changes):
    values = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    values.update(changes)
    return ProblemConfig(**values)


class Problem:
    """Assembled operator, nonlinearity and right-hand side for a config."""

    def __init__(self, config: ProblemConfig):
        self.config = config
        self.domain = config.domain
        self.A = build_laplacian(self.domain)
        self.nf = Nonlinearity(config.f, self.domain)
        if config.rhs is None:
            self.y = self.domain.zeros()
        else:
            binding = self.domain.coordinate_binding()
            self.y = GridField(self.domain, evaluate(config.rhs, binding) * np.ones(self.domain.n))

    @cached_property
    def alpha(self) -> float:
        lam, _ = smallest_eigenvalue(self.A)
        return lam


# ---------------------------------------------------------------------------
# loading and validation

def load_config(path) -> ProblemConfig:
    """Read and validate a JSON config; `ConfigError` lists every problem."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw)


def _number(value, what, errors, *, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{what} must be a number, got {value!r}")
        return None
    if integer and not float(value).is_integer():
        errors.append(f"{what} must be an integer, got {value!r}")
        return None
    if not math.isfinite(value):
        errors.append(f"{what} must be finite")
        return None
    return int(value) if integer else float(value)


def _expr(text, what, errors, allowed):
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        errors.append(f"{what} must be an expression string, got {text!r}")
        return None
    try:
        e = parse(text)
    except ExprError as exc:
        errors.append(f"{what}: {exc}")
        return None
    extra = e.variables - set(allowed)
    if extra:
        errors.append(f"{what} may only use {', '.join(sorted(allowed)) or 'constants'}, found {', '.join(sorted(extra))}")
        return None
    return e


def _constant(text, what, errors):
    e = _expr(text, what, errors, ())
    if e is None:
        return None
    try:
        return float(evaluate(e, {}))
    except ExprDomainError as exc:
        errors.append(f"{what}: {exc}")
        return None


def parse_config(raw: Any) -> ProblemConfig:
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("schema") != SCHEMA_VERSION:
        errors.append(f"schema must be {SCHEMA_VERSION}, got {raw.get('schema')!r}")

    domain = _parse_domain(raw.get("domain"), errors)
    dim = domain.dim if domain is not None else 3
    axes = AXIS_NAMES[:dim]
    kw: dict[str, Any] = {}

    nl = raw.get("nonlinearity")
    f = None
    if not isinstance(nl, dict):
        errors.append("nonlinearity section is required")
        nl = {}
    elif "f" not in nl:
        errors.append("nonlinearity.f is required")
    else:
        f = _expr(nl["f"], "nonlinearity.f", errors, axes + ("u",))

    if "u_range" in nl:
        ur = nl["u_range"]
        if not (isinstance(ur, list) and len(ur) == 2):
            errors.append("nonlinearity.u_range must be [lo, hi]")
        else:
            lo = _number(ur[0], "u_range[0]", errors)
            hi = _number(ur[1], "u_range[1]", errors)
            if lo is not None and hi is not None:
                if lo < hi:
                    kw["u_range"] = (lo, hi)
                else:
                    errors.append("nonlinearity.u_range must be a nonempty interval (lo < hi)")
    if "u_samples" in nl:
        ns = _number(nl["u_samples"], "nonlinearity.u_samples", errors, integer=True)
        if ns is not None and ns < 2:
            errors.append("nonlinearity.u_samples must be at least 2")
        elif ns is not None:
            kw["u_samples"] = ns
    if "b3" in nl:
        kw["b3"] = _constant(nl["b3"], "nonlinearity.b3", errors)
    a1 = _expr(nl["a1"], "nonlinearity.a1", errors, axes) if "a1" in nl else None
    b1 = _expr(nl["b1"], "nonlinearity.b1", errors, axes) if "b1" in nl else None
    if ("a1" in nl) != ("b1" in nl):
        errors.append("nonlinearity.a1 and nonlinearity.b1 must be given together")
    route = nl.get("route", "auto")
    if route not in ROUTES:
        errors.append(f"nonlinearity.route must be one of {', '.join(ROUTES)}")
        route = "auto"
    if route == "poincare" and b1 is not None and b1.variables:
        errors.append("route 'poincare' needs a constant b1")
    try:
        kw["growth"] = GrowthSpec(a1 if b1 is not None else None, b1 if a1 is not None else None, route)
    except ValueError as exc:
        errors.append(str(exc))
    es = nl.get("embedding_sample", "all")
    if es != "all":
        if isinstance(es, list) and all(isinstance(i, int) and not isinstance(i, bool) for i in es) and es:
            if domain is not None and not all(0 <= i < domain.n for i in es):
                errors.append("nonlinearity.embedding_sample has indices outside the grid")
            kw["embedding_sample"] = sorted(set(es))
        else:
            errors.append("nonlinearity.embedding_sample must be \"all\" or a nonempty list of node indices")

    rhs = raw.get("rhs", "zero")
    if rhs != "zero":
        kw["rhs"] = _expr(rhs, "rhs", errors, axes)

    _parse_solver(raw.get("solver", {}), errors, kw)
    _parse_probe(raw.get("probe", {}), errors, kw)

    cert = raw.get("certificate", {})
    if not isinstance(cert, dict):
        errors.append("certificate section must be an object")
    elif "margin" in cert:
        m = _number(cert["margin"], "certificate.margin", errors)
        if m is not None and not 0 <= m < 1:
            errors.append("certificate.margin must lie in [0, 1)")
        elif m is not None:
            kw["margin"] = m

    _parse_study(raw.get("study", {}), dim, axes, errors, kw)

    if f is not None and domain is not None:
        try:
            Nonlinearity(f, domain)
        except ExprError as exc:
            errors.append(f"nonlinearity.f: {exc}")
        else:
            errors.extend(_singularity_scan(f, domain, kw.get("u_range", (-10.0, 10.0)), kw.get("u_samples", 41)))
    if kw.get("rhs") is not None and domain is not None:
        errors.extend(_singularity_scan(kw["rhs"], domain, None, 0, what="rhs"))
    for name in ("a1", "b1"):
        e = a1 if name == "a1" else b1
        if e is not None and domain is not None:
            errors.extend(_singularity_scan(e, domain, None, 0, what=f"nonlinearity.{name}"))

    if errors:
        raise ConfigError(errors)
    return ProblemConfig(raw=copy.deepcopy(raw), domain=domain, f=f, **kw)


def _parse_domain(d, errors):
    if not isinstance(d, dict):
        errors.append("domain section is required")
        return None
    dim = _number(d.get("dimension"), "domain.dimension", errors, integer=True)
    if dim is None:
        return None
    if dim not in (1, 2, 3):
        errors.append(f"domain.dimension must be 1, 2 or 3, got {dim}")
        return None
    lists = {}
    for key in ("lower", "upper", "nodes"):
        v = d.get(key)
        if not isinstance(v, list):
            errors.append(f"domain.{key} must be a list")
            continue
        if len(v) != dim:
            errors.append(f"domain.{key} has {len(v)} entries but dimension is {dim}")
            continue
        vals = [_number(x, f"domain.{key}[{i}]", errors, integer=key == "nodes") for i, x in enumerate(v)]
        if None not in vals:
            lists[key] = vals
    if len(lists) < 3:
        return None
    bad = False
    for k, (lo, hi, c) in enumerate(zip(lists["lower"], lists["upper"], lists["nodes"])):
        if not lo < hi:
            errors.append(f"domain axis {k}: lower must be below upper")
            bad = True
        if c < 1:
            errors.append(f"domain axis {k}: nodes must be at least 1")
            bad = True
    if bad:
        return None
    return GridDomain(tuple(lists["lower"]), tuple(lists["upper"]), tuple(lists["nodes"]))


def _parse_solver(s, errors, kw):
    if not isinstance(s, dict):
        errors.append("solver section must be an object")
        return
    unknown = set(s) - _SOLVER_KEYS
    if unknown:
        errors.append(f"unknown solver option(s): {', '.join(sorted(unknown))}")
    opts = {}
    for key in _SOLVER_KEYS & set(s):
        if key == "monitor":
            if not isinstance(s[key], bool):
                errors.append("solver.monitor must be true or false")
            else:
                opts[key] = s[key]
            continue
        v = _number(s[key], f"solver.{key}", errors, integer=key == "max_iter")
        if v is not None:
            opts[key] = v
    try:
        kw["solver"] = SolveOptions(**opts)
    except ValueError as exc:
        errors.append(f"solver: {exc}")


def _parse_probe(p, errors, kw):
    if not isinstance(p, dict):
        errors.append("probe section must be an object")
        return
    if "starts" in p:
        k = _number(p["starts"], "probe.starts", errors, integer=True)
        if k is not None and k < 2:
            errors.append("probe.starts must be at least 2")
        elif k is not None:
            kw["probe_starts"] = k
    if "seed" in p:
        s = _number(p["seed"], "probe.seed", errors, integer=True)
        if s is not None and s < 0:
            errors.append("probe.seed must be non-negative")
        elif s is not None:
            kw["probe_seed"] = s
    if "amplitude" in p:
        a = _number(p["amplitude"], "probe.amplitude", errors)
        if a is not None and not a > 0:
            errors.append("probe.amplitude must be positive")
        elif a is not None:
            kw["probe_amplitude"] = a


def _parse_study(s, dim, axes, errors, kw):
    if not isinstance(s, dict):
        errors.append("study section must be an object")
        return
    levels = []
    for i, lv in enumerate(s.get("levels", [])):
        if not (isinstance(lv, list) and len(lv) == dim and all(isinstance(c, int) and not isinstance(c, bool) and c >= 1 for c in lv)):
            errors.append(f"study.levels[{i}] must list {dim} positive node counts")
        else:
            levels.append(tuple(lv))
    kw["study_levels"] = levels
    if "exact" in s:
        kw["study_exact"] = _expr(s["exact"], "study.exact", errors, axes)


# ---------------------------------------------------------------------------
# singularity scan

def _guards(e: Expr):
    """Subexpressions that must stay away from zero (denominators, negative
    power bases) or must stay positive (log and sqrt arguments)."""
    for node in e.walk():
        if isinstance(node, BinOp) and node.op == "/":
            yield "denominator", node.right
        elif isinstance(node, BinOp) and node.op == "^" and not node.right.variables:
            try:
                if float(evaluate(node.right, {})) < 0:
                    yield "power base", node.left
            except ExprDomainError:
                pass
        elif isinstance(node, Call) and node.func in ("log", "sqrt"):
            yield f"{node.func} argument", node.arg


def _singularity_scan(e: Expr, domain: GridDomain, u_range, u_samples, what="nonlinearity.f"):
    """Evaluate ``e`` (and its u-derivative for f) on a dense sample of the
    closed box and flag domain errors or sign changes of guarded
    subexpressions between neighbouring samples."""
    pts = _SCAN_POINTS[domain.dim]
    axes = [np.linspace(lo, hi, pts) for lo, hi in zip(domain.lower, domain.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    binding = {AXIS_NAMES[k]: mesh[k] for k in range(domain.dim)}
    if u_range is not None:
        us = np.linspace(u_range[0], u_range[1], max(u_samples, 2))
        binding = {k: v[..., None] for k, v in binding.items()}
        binding["u"] = us.reshape((1,) * domain.dim + (-1,))
    exprs = [e]
    if "u" in e.variables or u_range is not None:
        try:
            exprs.append(Nonlinearity(e, domain).fu)
        except ExprError:
            pass
    found = []
    for ex in exprs:
        try:
            evaluate(ex, binding)
        except ExprDomainError as exc:
            found.append(f"{what}: singular inside the closed domain box ({exc.args[0]} in {ex})")
            return found
        for kind, g in _guards(ex):
            vals = np.asarray(evaluate(g, binding))
            if vals.ndim == 0:
                continue
            for ax in range(domain.dim):
                if vals.shape[ax] < 2:
                    continue
                a = np.take(vals, range(vals.shape[ax] - 1), axis=ax)
                b = np.take(vals, range(1, vals.shape[ax]), axis=ax)
                if np.any(np.sign(a) * np.sign(b) < 0):
                    found.append(f"{what}: {kind} {g} changes sign inside the closed domain box")
                    return found
    return found
