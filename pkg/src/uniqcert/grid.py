"""Box domains with uniform interior grids, and fields living on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import GridMismatchError

AXIS_NAMES = ("x", "y", "z")


@dataclass(frozen=True)
class GridDomain:
    """Axis-aligned box ``prod [lower_k, upper_k]`` with ``counts[k]`` interior
    nodes per axis.

    Spacing is uniform per axis, ``h_k = (upper_k - lower_k) / (counts_k + 1)``;
    boundary nodes are not unknowns (homogeneous Dirichlet data). Interior
    nodes are numbered row-major with the last axis fastest.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        counts = tuple(int(c) for c in self.counts)
        if not 1 <= len(counts) <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {len(counts)}")
        if not (len(lower) == len(upper) == len(counts)):
            raise ValueError("lower, upper and counts must have the same length")
        for k, (lo, hi, c) in enumerate(zip(lower, upper, counts)):
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise ValueError(f"axis {k}: need finite bounds with lower < upper, got [{lo}, {hi}]")
            if c < 1:
                raise ValueError(f"axis {k}: need at least one interior node, got {c}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float], counts: Sequence[int] | int):
        if isinstance(counts, int):
            counts = (counts,) * len(lower)
        return cls(tuple(lower), tuple(upper), tuple(counts))

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def n(self) -> int:
        return math.prod(self.counts)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (c + 1) for lo, hi, c in zip(self.lower, self.upper, self.counts))

    @property
    def cell_volume(self) -> float:
        """Quadrature weight of one node, ``prod h_k``."""
        return math.prod(self.spacing)

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in zip(self.lower, self.upper))

    def flat_index(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.counts))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(int(flat), self.counts))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        """Interior node coordinates along each axis."""
        return tuple(
            lo + h * np.arange(1, c + 1)
            for lo, h, c in zip(self.lower, self.spacing, self.counts)
        )

    @cached_property
    def coordinates(self) -> np.ndarray:
        """``(n, dim)`` array of interior node coordinates in flat order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        out = np.stack([m.ravel() for m in mesh], axis=1)
        out.flags.writeable = False
        return out

    @cached_property
    def indices(self) -> np.ndarray:
        """``(n, dim)`` array of interior multi-indices (0-based) in flat order."""
        out = np.stack(np.unravel_index(np.arange(self.n), self.counts), axis=1)
        out.flags.writeable = False
        return out

    def closed_coordinates(self) -> np.ndarray:
        """Coordinates of all nodes of the closed grid, boundary included."""
        axes = [
            np.linspace(lo, hi, c + 2)
            for lo, hi, c in zip(self.lower, self.upper, self.counts)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def coordinate_binding(self, coords: np.ndarray | None = None) -> dict[str, np.ndarray]:
        """Map axis names x, y, z to coordinate columns."""
        coords = self.coordinates if coords is None else coords
        return {AXIS_NAMES[k]: coords[:, k] for k in range(self.dim)}

    def field(self, values) -> "GridField":
        return GridField(self, values)

    def zeros(self) -> "GridField":
        return GridField(self, np.zeros(self.n))

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Discrete L2 inner product on raw value arrays."""
        return float(self.cell_volume * np.dot(a, b))

    def norm(self, a: np.ndarray) -> float:
        return math.sqrt(self.cell_volume) * float(np.linalg.norm(a))


@dataclass(frozen=True, eq=False)
class GridField:
    """Values at the interior nodes of ``domain``; a discrete element of L2."""

    domain: GridDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.shape[0] != self.domain.n:
            raise GridMismatchError(f"field has {v.shape[0]} values, domain has {self.domain.n} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def _other(self, other):
        if isinstance(other, GridField):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridField(self.domain, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridField(self.domain, self.values - self._other(other))

    def __rsub__(self, other):
        return GridField(self.domain, self._other(other) - self.values)

    def __mul__(self, other):
        return GridField(self.domain, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return GridField(self.domain, self.values / scalar)

    def __neg__(self):
        return GridField(self.domain, -self.values)

    def __len__(self):
        return self.domain.n

    def inner(self, other: "GridField") -> float:
        check_same_grid(self, other)
        return self.domain.inner(self.values, other.values)

    def norm(self) -> float:
        return self.domain.norm(self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def check_same_grid(*items):
    """Raise `GridMismatchError` unless all items share one `GridDomain`."""
    domains = [getattr(it, "domain", None) for it in items]
    first = domains[0]
    for d in domains[1:]:
        if d != first:
            raise GridMismatchError(f"grid mismatch: {first} vs {d}")
    return first


def as_values(u, domain: GridDomain) -> np.ndarray:
    """Raw value array of ``u`` (a `GridField` or array) checked against ``domain``."""
    if isinstance(u, GridField):
        if u.domain != domain:
            raise GridMismatchError(f"grid mismatch: {u.domain} vs {domain}")
        return u.values
    v = np.asarray(u, dtype=np.float64)
    if v.shape != (domain.n,):
        raise GridMismatchError(f"expected {domain.n} values, got shape {v.shape}")
    return v
