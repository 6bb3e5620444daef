"""Domain types for procurement scenarios, bids and outcomes.

Seller ids are dense integers ``1..n`` so that vectors indexed by seller and
tie-breaking by index stay deterministic.  Quantities are real valued: a
seller supplies the same number of units of every item in its bundle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Item:
    id: str
    demand: float


@dataclass(frozen=True)
class SellerSpec:
    id: int
    bundle: frozenset
    cost_range: tuple[float, float]
    capacity_range: tuple[float, float]
    distribution: Any = None

    @property
    def cost_lo(self) -> float:
        return self.cost_range[0]

    @property
    def cost_hi(self) -> float:
        return self.cost_range[1]

    @property
    def capacity_lo(self) -> float:
        return self.capacity_range[0]

    @property
    def capacity_hi(self) -> float:
        return self.capacity_range[1]


@dataclass(frozen=True)
class SellerBid:
    seller_id: int
    reported_cost: float
    reported_capacity: float


@dataclass(frozen=True)
class Scenario:
    items: tuple[Item, ...]
    sellers: tuple[SellerSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "sellers", tuple(self.sellers))

    @property
    def n_sellers(self) -> int:
        return len(self.sellers)

    @property
    def item_ids(self) -> list[str]:
        return [it.id for it in self.items]

    @property
    def demands(self) -> np.ndarray:
        return np.array([it.demand for it in self.items], dtype=float)

    def seller(self, seller_id: int) -> SellerSpec:
        spec = self.sellers[seller_id - 1]
        if spec.id != seller_id:
            raise KeyError(seller_id)
        return spec


@dataclass(frozen=True)
class Allocation:
    quantities: tuple[float, ...]

    def __getitem__(self, seller_id: int) -> float:
        return self.quantities[seller_id - 1]


@dataclass(frozen=True)
class Outcome:
    allocation: Allocation
    payments: tuple[float, ...]
    objective: float = 0.0
    virtual_costs: Optional[tuple[float, ...]] = None
    details: dict = field(default_factory=dict, compare=False, hash=False)

    def payment(self, seller_id: int) -> float:
        return self.payments[seller_id - 1]

    def quantity(self, seller_id: int) -> float:
        return self.allocation[seller_id]


@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok


def validate_scenario(scenario: Scenario) -> ValidationReport:
    """Collect every structural problem in ``scenario`` instead of raising."""
    report = ValidationReport()
    seen = set()
    for it in scenario.items:
        if it.id in seen:
            report.problems.append(f"duplicate item id {it.id!r}")
        seen.add(it.id)
        if not np.isfinite(it.demand) or it.demand < 0:
            report.problems.append(f"item {it.id!r}: demand must be a finite non-negative number")

    for pos, s in enumerate(scenario.sellers, start=1):
        tag = f"seller {s.id}"
        if s.id != pos:
            report.problems.append(f"{tag}: ids must be dense 1..n in order (expected {pos})")
        if not s.bundle:
            report.problems.append(f"{tag}: empty bundle")
        unknown = sorted(set(s.bundle) - seen)
        if unknown:
            report.problems.append(f"{tag}: bundle references unknown items {unknown}")
        for name, (lo, hi) in (("cost_range", s.cost_range), ("capacity_range", s.capacity_range)):
            if not (np.isfinite(lo) and np.isfinite(hi)):
                report.problems.append(f"{tag}: {name} must have finite bounds")
            elif lo > hi:
                report.problems.append(f"{tag}: {name} is inverted ({lo} > {hi})")
        if s.capacity_lo < 0:
            report.problems.append(f"{tag}: capacity_range must be non-negative")

    for it in scenario.items:
        supply = sum(s.capacity_hi for s in scenario.sellers if it.id in s.bundle)
        if supply < it.demand:
            report.problems.append(
                f"infeasible demand for item {it.id!r}: demand {it.demand} exceeds "
                f"total capacity {supply}"
            )
    return report


def coverage_matrix(scenario: Scenario) -> np.ndarray:
    """0/1 matrix with one row per item and one column per seller."""
    mat = np.zeros((len(scenario.items), len(scenario.sellers)), dtype=float)
    for j, it in enumerate(scenario.items):
        for i, s in enumerate(scenario.sellers):
            if it.id in s.bundle:
                mat[j, i] = 1.0
    return mat


def truthful_bids(types: Sequence[tuple[float, float]]) -> list[SellerBid]:
    """Bids that report each ``(cost, capacity)`` type unchanged."""
    return [SellerBid(i, float(c), float(q)) for i, (c, q) in enumerate(types, start=1)]


def check_bid(spec: SellerSpec, bid: SellerBid, true_capacity: Optional[float] = None) -> None:
    """Raise ``ValueError`` if ``bid`` leaves the seller's declared ranges."""
    if bid.seller_id != spec.id:
        raise ValueError(f"bid for seller {bid.seller_id} checked against seller {spec.id}")
    lo, hi = spec.cost_range
    if not lo <= bid.reported_cost <= hi:
        raise ValueError(f"seller {spec.id}: reported cost {bid.reported_cost} outside [{lo}, {hi}]")
    cap_hi = spec.capacity_hi if true_capacity is None else true_capacity
    if not spec.capacity_lo <= bid.reported_capacity <= cap_hi:
        raise ValueError(
            f"seller {spec.id}: reported capacity {bid.reported_capacity} outside "
            f"[{spec.capacity_lo}, {cap_hi}]"
        )
