"""Superposition operator ``N_f(u)(x) = f(x, u(x))`` on grid fields."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .expr import Expr, ExprDomainError, ExprError, differentiate_u, evaluate, parse
from .grid import AXIS_NAMES, GridDomain, GridField, as_values

__all__ = ["Nonlinearity", "apply_N", "apply_Nprime", "c1_remainder"]


class Nonlinearity:
    """``f`` together with its symbolic derivative ``fu = df/du``, bound to
    the node coordinates of a grid.

    Construction fails if ``f`` mentions a coordinate the domain lacks or is
    not differentiable in ``u``.
    """

    def __init__(self, f: Expr | str, domain: GridDomain):
        self.f = parse(f) if isinstance(f, str) else f
        self.domain = domain
        allowed = set(AXIS_NAMES[: domain.dim]) | {"u"}
        extra = self.f.variables - allowed
        if extra:
            raise ExprError(
                f"f uses {', '.join(sorted(extra))} but the domain has dimension {domain.dim}"
            )
        self.fu = differentiate_u(self.f)
        self._coords = domain.coordinate_binding()

    def __repr__(self):
        return f"Nonlinearity(f={str(self.f)!r}, fu={str(self.fu)!r})"

    def _eval(self, e: Expr, u: np.ndarray, coords=None, where="node") -> np.ndarray:
        binding = dict(self._coords if coords is None else coords)
        binding["u"] = u
        try:
            return evaluate(e, binding)
        except ExprDomainError as exc:
            if exc.index is None or coords is not None:
                raise
            i = exc.index % self.domain.n
            xs = ", ".join(f"{c:.17g}" for c in self.domain.coordinates[i])
            raise ExprDomainError(
                f"{exc.args[0]} while evaluating {e} at {where} {self.domain.multi_index(i)} "
                f"(x = ({xs}), u = {np.broadcast_to(u, (self.domain.n,))[i]:.17g})"
            ) from exc

    def values(self, u: np.ndarray) -> np.ndarray:
        """``f(x_i, u_i)`` on raw node values."""
        return self._eval(self.f, u)

    def derivative_values(self, u: np.ndarray) -> np.ndarray:
        """``fu(x_i, u_i)``; the diagonal of ``N'(u)``."""
        return self._eval(self.fu, u)

    def validate(self, u_range: tuple[float, float], samples: int = 21, closed: bool = True):
        """Check ``f`` and ``fu`` evaluate finitely at every node (boundary
        nodes included when ``closed``) for equispaced ``u`` in ``u_range``."""
        coords = self.domain.closed_coordinates() if closed else self.domain.coordinates
        binding = {AXIS_NAMES[k]: coords[:, k][:, None] for k in range(self.domain.dim)}
        us = np.linspace(u_range[0], u_range[1], samples)[None, :]
        for e in (self.f, self.fu):
            try:
                _ = self._eval(e, us, coords=binding)
            except ExprDomainError as exc:
                i, j = np.unravel_index(exc.index or 0, (coords.shape[0], samples))
                xs = ", ".join(f"{c:.17g}" for c in coords[i])
                raise ExprDomainError(
                    f"{exc.args[0]} while evaluating {e} at x = ({xs}), u = {us[0, j]:.17g}"
                ) from exc

    def sample(self, e: Expr, coords: np.ndarray, us: Sequence[float]) -> np.ndarray:
        """Evaluate ``e`` on the ``(len(coords), len(us))`` product of points
        and u-values."""
        binding = {AXIS_NAMES[k]: coords[:, k][:, None] for k in range(self.domain.dim)}
        binding["u"] = np.asarray(us, dtype=np.float64)[None, :]
        return evaluate(e, binding)


def _field(nf, u):
    return as_values(u, nf.domain)


def apply_N(nf: Nonlinearity, u: GridField) -> GridField:
    return GridField(nf.domain, nf.values(_field(nf, u)))


def apply_Nprime(nf: Nonlinearity, u: GridField, h: GridField) -> GridField:
    """``N'(u) h``: multiplication by ``fu(x_i, u_i)``, a diagonal (hence
    symmetric) operator."""
    return GridField(nf.domain, nf.derivative_values(_field(nf, u)) * _field(nf, h))


def c1_remainder(nf: Nonlinearity, u: GridField, h: GridField) -> float:
    """Discrete L2 norm of ``w(h) = N(u + h) - N(u) - N'(u) h``."""
    uv, hv = _field(nf, u), _field(nf, h)
    w = nf.values(uv + hv) - nf.values(uv) - nf.derivative_values(uv) * hv
    return nf.domain.norm(w)
