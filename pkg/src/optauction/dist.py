"""Type distributions and virtual cost functions.

Two-dimensional families describe a seller's private ``(cost, capacity)``
type; the virtual cost is ``H(c, q) = c + F(c | q) / f(c | q)``.  The
one-dimensional families are used for single-item bidders and for the
per-bundle costs of XOR bidders.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError, SingularityError

_EDGE_TOL = 1e-12
REGULARITY_TOL = 1e-12


def _check_interval(lo, hi, what):
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"{what} must be finite, got [{lo}, {hi}]")
    if lo > hi:
        raise ValueError(f"{what} is inverted: [{lo}, {hi}]")


def _cell(edges, x):
    """Index of the cell ``(e[k], e[k+1]]`` holding ``x``; the first cell is closed."""
    k = bisect.bisect_left(edges, x) - 1
    return min(max(k, 0), len(edges) - 2)


def _check_edges(edges, lo, hi, what):
    if len(edges) < 2:
        raise ValueError(f"{what}: need at least two edges")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError(f"{what}: edges must be strictly increasing")
    if abs(edges[0] - lo) > 1e-9 or abs(edges[-1] - hi) > 1e-9:
        raise ValueError(f"{what}: edges must span [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# one-dimensional families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Uniform1D:
    lo: float
    hi: float

    def __post_init__(self):
        _check_interval(self.lo, self.hi, "support")
        if self.hi == self.lo:
            raise ValueError("uniform support must have positive width")

    def _check(self, x):
        if x < self.lo - _EDGE_TOL or x > self.hi + _EDGE_TOL:
            raise DomainError(f"{x} outside support [{self.lo}, {self.hi}]")

    def cdf(self, x: float) -> float:
        self._check(x)
        return min(max((x - self.lo) / (self.hi - self.lo), 0.0), 1.0)

    def pdf(self, x: float) -> float:
        self._check(x)
        return 1.0 / (self.hi - self.lo)

    def virtual_cost(self, c: float) -> float:
        self._check(c)
        return c + (min(max(c, self.lo), self.hi) - self.lo)

    def virtual_value(self, theta: float) -> float:
        self._check(theta)
        return theta - (self.hi - min(max(theta, self.lo), self.hi))

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class Histogram1D:
    """Piecewise-constant density: ``mass[k]`` spread evenly over cell ``k``."""

    edges: tuple[float, ...]
    mass: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(float(e) for e in self.edges))
        object.__setattr__(self, "mass", tuple(float(m) for m in self.mass))
        _check_edges(self.edges, self.edges[0], self.edges[-1], "histogram")
        if len(self.mass) != len(self.edges) - 1:
            raise ValueError("histogram needs one mass per cell")
        if any(m < 0 for m in self.mass) or abs(sum(self.mass) - 1.0) > 1e-9:
            raise ValueError("histogram masses must be non-negative and sum to 1")

    @property
    def lo(self) -> float:
        return self.edges[0]

    @property
    def hi(self) -> float:
        return self.edges[-1]

    def _check(self, x):
        if x < self.lo - _EDGE_TOL or x > self.hi + _EDGE_TOL:
            raise DomainError(f"{x} outside support [{self.lo}, {self.hi}]")

    def cdf(self, x: float) -> float:
        self._check(x)
        k = _cell(self.edges, x)
        w = self.edges[k + 1] - self.edges[k]
        frac = min(max((x - self.edges[k]) / w, 0.0), 1.0)
        return min(sum(self.mass[:k]) + self.mass[k] * frac, 1.0)

    def pdf(self, x: float) -> float:
        self._check(x)
        k = _cell(self.edges, x)
        return self.mass[k] / (self.edges[k + 1] - self.edges[k])

    def virtual_cost(self, c: float) -> float:
        f = self.pdf(c)
        if f <= 0:
            raise SingularityError(f"zero density at c={c}", point=(c,))
        return c + self.cdf(c) / f

    def virtual_value(self, theta: float) -> float:
        f = self.pdf(theta)
        if f <= 0:
            raise SingularityError(f"zero density at theta={theta}", point=(theta,))
        return theta - (1.0 - self.cdf(theta)) / f

    def sample(self, rng: np.random.Generator) -> float:
        k = int(rng.choice(len(self.mass), p=np.asarray(self.mass)))
        return float(rng.uniform(self.edges[k], self.edges[k + 1]))


class Regularity(NamedTuple):
    regular: bool
    counterexample: Optional[tuple] = None
    reason: str = ""

    def __bool__(self):
        return self.regular


def is_regular_1d(dist, grid_resolution: int = 64, kind: str = "cost") -> Regularity:
    """Check that the virtual cost (or virtual value) is non-decreasing on a lattice."""
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")
    fn = dist.virtual_cost if kind == "cost" else dist.virtual_value
    xs = np.linspace(dist.lo, dist.hi, grid_resolution)
    prev = None
    for x in xs:
        try:
            h = fn(float(x))
        except SingularityError as exc:
            return Regularity(False, (float(x),), str(exc))
        if prev is not None and h < prev[1] - REGULARITY_TOL:
            return Regularity(False, (prev[0], float(x)), f"virtual {kind} decreases")
        prev = (float(x), h)
    return Regularity(True)


# ---------------------------------------------------------------------------
# two-dimensional (cost, capacity) families
# ---------------------------------------------------------------------------


class _TypeDistribution:
    """Shared behaviour of the ``(cost, capacity)`` families."""

    cost_lo: float
    cost_hi: float
    cap_lo: float
    cap_hi: float

    def cost_support(self, q: float) -> tuple[float, float]:
        return self.cost_lo, self.cost_hi

    def _check_q(self, q):
        if q < self.cap_lo - _EDGE_TOL or q > self.cap_hi + _EDGE_TOL:
            raise DomainError(f"capacity {q} outside [{self.cap_lo}, {self.cap_hi}]")

    def _check(self, c, q):
        self._check_q(q)
        lo, hi = self.cost_support(q)
        if c < lo - _EDGE_TOL or c > hi + _EDGE_TOL:
            raise DomainError(f"cost {c} outside conditional support [{lo}, {hi}] at q={q}")

    def conditional_cdf(self, c: float, q: float) -> float:
        raise NotImplementedError

    def conditional_pdf(self, c: float, q: float) -> float:
        raise NotImplementedError

    def virtual_cost(self, c: float, q: float) -> float:
        f = self.conditional_pdf(c, q)
        if f <= 0:
            raise SingularityError(f"zero conditional density at (c={c}, q={q})", point=(c, q))
        return c + self.conditional_cdf(c, q) / f

    def mechanism_virtual_cost(self, c: float, q: float) -> float:
        """Virtual cost extended to every bid in the seller's declared ranges.

        Costs above the conditional support at ``q`` are clamped to its upper
        end, which keeps the extension non-decreasing in cost.
        """
        q = min(max(q, self.cap_lo), self.cap_hi)
        lo, hi = self.cost_support(q)
        return self.virtual_cost(min(max(c, lo), hi), q)

    def mechanism_virtual_costs(self, cs, q: float) -> np.ndarray:
        return np.array([self.mechanism_virtual_cost(float(c), q) for c in cs])


@dataclass(frozen=True)
class IndependentUniform(_TypeDistribution):
    cost_lo: float
    cost_hi: float
    cap_lo: float
    cap_hi: float

    def __post_init__(self):
        _check_interval(self.cost_lo, self.cost_hi, "cost range")
        _check_interval(self.cap_lo, self.cap_hi, "capacity range")
        if self.cost_hi == self.cost_lo:
            raise ValueError("cost range must have positive width")

    def conditional_cdf(self, c, q):
        self._check(c, q)
        return min(max((c - self.cost_lo) / (self.cost_hi - self.cost_lo), 0.0), 1.0)

    def conditional_pdf(self, c, q):
        self._check(c, q)
        return 1.0 / (self.cost_hi - self.cost_lo)

    def joint_pdf(self, c, q):
        return self.conditional_pdf(c, q) / (self.cap_hi - self.cap_lo)

    def mechanism_virtual_costs(self, cs, q):
        cs = np.clip(np.asarray(cs, dtype=float), self.cost_lo, self.cost_hi)
        return 2.0 * cs - self.cost_lo

    def sample(self, rng):
        return float(rng.uniform(self.cost_lo, self.cost_hi)), float(rng.uniform(self.cap_lo, self.cap_hi))


@dataclass(frozen=True)
class CapacityLinkedUniform(_TypeDistribution):
    """Cost uniform on ``[cost_lo, cost_hi - slope * (q - cap_lo)]``, capacity uniform."""

    cost_lo: float
    cost_hi: float
    cap_lo: float
    cap_hi: float
    slope: float

    def __post_init__(self):
        _check_interval(self.cost_lo, self.cost_hi, "cost range")
        _check_interval(self.cap_lo, self.cap_hi, "capacity range")
        if self.slope < 0:
            raise ValueError("slope must be non-negative")
        if self.cost_hi - self.slope * (self.cap_hi - self.cap_lo) <= self.cost_lo:
            raise ValueError("slope empties the conditional cost support at the top capacity")

    def cost_support(self, q):
        return self.cost_lo, self.cost_hi - self.slope * (q - self.cap_lo)

    def conditional_cdf(self, c, q):
        self._check(c, q)
        lo, hi = self.cost_support(q)
        return min(max((c - lo) / (hi - lo), 0.0), 1.0)

    def conditional_pdf(self, c, q):
        self._check(c, q)
        lo, hi = self.cost_support(q)
        return 1.0 / (hi - lo)

    def joint_pdf(self, c, q):
        lo, hi = self.cost_support(q)
        if not lo <= c <= hi:
            return 0.0
        return self.conditional_pdf(c, q) / (self.cap_hi - self.cap_lo)

    def mechanism_virtual_costs(self, cs, q):
        q = min(max(q, self.cap_lo), self.cap_hi)
        lo, hi = self.cost_support(q)
        cs = np.clip(np.asarray(cs, dtype=float), lo, hi)
        return 2.0 * cs - lo

    def sample(self, rng):
        q = float(rng.uniform(self.cap_lo, self.cap_hi))
        lo, hi = self.cost_support(q)
        return float(rng.uniform(lo, hi)), q


@dataclass(frozen=True)
class TabulatedGrid(_TypeDistribution):
    """Piecewise-constant joint density on a rectangular grid.

    ``mass[l][k]`` is the probability of capacity cell ``l`` and cost cell
    ``k``; it is spread uniformly over the cell.  Conditionals use the mass
    ratios of the capacity row that contains ``q``.
    """

    cost_edges: tuple[float, ...]
    capacity_edges: tuple[float, ...]
    mass: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "cost_edges", tuple(float(e) for e in self.cost_edges))
        object.__setattr__(self, "capacity_edges", tuple(float(e) for e in self.capacity_edges))
        object.__setattr__(self, "mass", tuple(tuple(float(m) for m in row) for row in self.mass))
        _check_edges(self.cost_edges, self.cost_edges[0], self.cost_edges[-1], "cost grid")
        _check_edges(self.capacity_edges, self.capacity_edges[0], self.capacity_edges[-1], "capacity grid")
        if len(self.mass) != len(self.capacity_edges) - 1 or any(
            len(row) != len(self.cost_edges) - 1 for row in self.mass
        ):
            raise ValueError("mass must have one row per capacity cell and one column per cost cell")
        flat = [m for row in self.mass for m in row]
        if any(m < 0 for m in flat) or abs(math.fsum(flat) - 1.0) > 1e-9:
            raise ValueError("grid masses must be non-negative and sum to 1")

    @classmethod
    def uniform_cells(cls, cost_range, capacity_range, mass):
        """Grid with equal-width cells spanning the given ranges."""
        rows, cols = len(mass), len(mass[0])
        return cls(
            tuple(np.linspace(cost_range[0], cost_range[1], cols + 1)),
            tuple(np.linspace(capacity_range[0], capacity_range[1], rows + 1)),
            mass,
        )

    @property
    def cost_lo(self):
        return self.cost_edges[0]

    @property
    def cost_hi(self):
        return self.cost_edges[-1]

    @property
    def cap_lo(self):
        return self.capacity_edges[0]

    @property
    def cap_hi(self):
        return self.capacity_edges[-1]

    def _row(self, q):
        row = self.mass[_cell(self.capacity_edges, q)]
        return row, math.fsum(row)

    def conditional_cdf(self, c, q):
        self._check(c, q)
        row, total = self._row(q)
        if total <= 0:
            raise SingularityError(f"capacity row holding q={q} has no mass", point=(c, q))
        k = _cell(self.cost_edges, c)
        w = self.cost_edges[k + 1] - self.cost_edges[k]
        frac = min(max((c - self.cost_edges[k]) / w, 0.0), 1.0)
        return min((math.fsum(row[:k]) + row[k] * frac) / total, 1.0)

    def conditional_pdf(self, c, q):
        self._check(c, q)
        row, total = self._row(q)
        if total <= 0:
            return 0.0
        k = _cell(self.cost_edges, c)
        return row[k] / total / (self.cost_edges[k + 1] - self.cost_edges[k])

    def joint_pdf(self, c, q):
        self._check(c, q)
        k = _cell(self.cost_edges, c)
        ll = _cell(self.capacity_edges, q)
        area = (self.cost_edges[k + 1] - self.cost_edges[k]) * (
            self.capacity_edges[ll + 1] - self.capacity_edges[ll]
        )
        return self.mass[ll][k] / area

    def sample(self, rng):
        flat = np.asarray(self.mass).ravel()
        idx = int(rng.choice(flat.size, p=flat / flat.sum()))
        ll, k = divmod(idx, len(self.cost_edges) - 1)
        c = rng.uniform(self.cost_edges[k], self.cost_edges[k + 1])
        q = rng.uniform(self.capacity_edges[ll], self.capacity_edges[ll + 1])
        return float(c), float(q)


DISTRIBUTION_FAMILIES = {
    "independent_uniform": IndependentUniform,
    "capacity_linked_uniform": CapacityLinkedUniform,
    "tabulated_grid": TabulatedGrid,
}


def _dist_of(spec):
    return getattr(spec, "distribution", spec)


def conditional_cdf(spec, c: float, q: float) -> float:
    """``F(c | q)`` for a seller spec or distribution; raises :class:`DomainError` outside the support."""
    return _dist_of(spec).conditional_cdf(c, q)


def virtual_cost(spec, c: float, q: float) -> float:
    """``H(c, q) = c + F(c|q) / f(c|q)`` for a seller spec or distribution; raises on zero density."""
    return _dist_of(spec).virtual_cost(c, q)


@lru_cache(maxsize=4096)
def is_regular(spec, grid_resolution: int = 32) -> Regularity:
    """Falsify regularity on a ``grid_resolution`` square lattice.

    Regular means the (extended) virtual cost is non-decreasing in cost along
    every capacity row and non-increasing in capacity along every cost column.
    The first violating pair of lattice points is returned on failure.
    """
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")
    cs = np.linspace(spec.cost_lo, spec.cost_hi, grid_resolution)
    qs = np.linspace(spec.cap_lo, spec.cap_hi, grid_resolution)
    table = np.empty((grid_resolution, grid_resolution))
    for b, q in enumerate(qs):
        for a, c in enumerate(cs):
            try:
                table[a, b] = spec.mechanism_virtual_cost(float(c), float(q))
            except SingularityError as exc:
                return Regularity(False, ((float(c), float(q)),), str(exc))
    for b, q in enumerate(qs):
        for a in range(1, grid_resolution):
            if table[a, b] < table[a - 1, b] - REGULARITY_TOL:
                pair = ((float(cs[a - 1]), float(q)), (float(cs[a]), float(q)))
                return Regularity(False, pair, "virtual cost decreases in cost")
    for a, c in enumerate(cs):
        for b in range(1, grid_resolution):
            if table[a, b] > table[a, b - 1] + REGULARITY_TOL:
                pair = ((float(c), float(qs[b - 1])), (float(c), float(qs[b])))
                return Regularity(False, pair, "virtual cost increases in capacity")
    return Regularity(True)
