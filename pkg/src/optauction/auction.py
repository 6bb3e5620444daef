"""Single-minded procurement mechanisms.

The optimal auction solves the covering LP on virtual costs
``H_i(c_i, q_i)`` and pays each seller its reported production cost plus
the area under its own allocation curve to the right of the bid:

    t_i = c_i * x_i + integral_{c_i}^{cmax_i} x_i(t, q_i) dt

The same allocate-by-score / pay-by-curve machinery also gives the
efficient auction (score = reported cost) and a posted-price variant, which
serve as baselines.  The k-th price auction and Myerson's single-item
auction are implemented directly.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import lp
from .dist import is_regular, is_regular_1d
from .errors import ConsistencyError, InfeasibleError, RegularityError
from .model import Allocation, Outcome, Scenario, SellerBid, coverage_matrix
from .steps import DEFAULT_RESOLUTION, DEFAULT_SCAN_STEPS, StepFunction, detect_steps, level_tolerance

REGULARITY_GRID = 32


def _ordered_bids(scenario: Scenario, bids: Sequence[SellerBid]) -> list[SellerBid]:
    by_id = {b.seller_id: b for b in bids}
    if len(by_id) != len(bids) or set(by_id) != {s.id for s in scenario.sellers}:
        raise ValueError("exactly one bid per seller is required")
    return [by_id[s.id] for s in scenario.sellers]


class ScoringAuction:
    """Allocate by minimising total score, pay by the allocation-curve integral.

    Subclasses define ``score``; any score non-decreasing in the reported
    cost yields a truthful mechanism.  Curves are memoised per
    ``(scenario, other bids, seller, reported capacity)`` because they do not
    depend on the seller's own reported cost.
    """

    name = "scoring"

    def __init__(self, scan_steps: int = DEFAULT_SCAN_STEPS, resolution: float = DEFAULT_RESOLUTION,
                 cache_size: int = 8192):
        self.scan_steps = scan_steps
        self.resolution = resolution
        self._cache: OrderedDict = OrderedDict()
        self._cache_size = cache_size
        self._matrix_cache: dict = {}

    # -- scores -----------------------------------------------------------
    def score(self, scenario: Scenario, seller: int, cost: float, capacity: float) -> float:
        raise NotImplementedError

    def scores(self, scenario: Scenario, seller: int, costs, capacity: float) -> np.ndarray:
        return np.array([self.score(scenario, seller, float(c), capacity) for c in costs])

    def check(self, scenario: Scenario) -> None:
        """Hook for preconditions (regularity) checked before every run."""

    # -- LP plumbing ------------------------------------------------------
    def _matrix(self, scenario: Scenario):
        key = id(scenario)
        hit = self._matrix_cache.get(key)
        if hit is None or hit[0] is not scenario:
            hit = (scenario, coverage_matrix(scenario), scenario.demands)
            if len(self._matrix_cache) > 256:
                self._matrix_cache.clear()
            self._matrix_cache[key] = hit
        return hit[1], hit[2]

    def _problem(self, scenario: Scenario, bids: Sequence[SellerBid]):
        bids = _ordered_bids(scenario, bids)
        mat, demand = self._matrix(scenario)
        costs = np.array([self.score(scenario, b.seller_id, b.reported_cost, b.reported_capacity) for b in bids])
        upper = np.array([b.reported_capacity for b in bids], dtype=float)
        return bids, costs, upper, mat, demand

    def allocate(self, scenario: Scenario, bids: Sequence[SellerBid]):
        """``(bids, scores, x)`` for the score-minimising covering LP."""
        self.check(scenario)
        bids, costs, upper, mat, demand = self._problem(scenario, bids)
        x = lp.solve_arrays(costs, upper, mat, demand)
        if x is None:
            raise InfeasibleError("reported capacities cannot cover the demand")
        return bids, costs, x

    def allocation(self, scenario: Scenario, bids: Sequence[SellerBid], seller: int) -> float:
        return self.allocate(scenario, bids)[2][seller - 1]

    # -- curves and payments ---------------------------------------------
    def curve(self, scenario: Scenario, bids: Sequence[SellerBid], seller: int,
              capacity: Optional[float] = None) -> StepFunction:
        """Allocation of ``seller`` as a function of its reported cost."""
        self.check(scenario)
        bids = _ordered_bids(scenario, bids)
        if capacity is None:
            capacity = bids[seller - 1].reported_capacity
        others = tuple(b for b in bids if b.seller_id != seller)
        key = (id(scenario), others, seller, float(capacity))
        hit = self._cache.get(key)
        if hit is not None and hit[0] is scenario:
            self._cache.move_to_end(key)
            return hit[1]
        result = self._compute_curve(scenario, bids, seller, float(capacity))
        self._cache[key] = (scenario, result)
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return result

    def _compute_curve(self, scenario, bids, seller, capacity):
        spec = scenario.seller(seller)
        bids = list(bids)
        bids[seller - 1] = SellerBid(seller, spec.cost_lo, capacity)
        _, costs, upper, mat, demand = self._problem(scenario, bids)
        idx = seller - 1

        def at(t: float) -> float:
            costs[idx] = self.score(scenario, seller, t, capacity)
            x = lp.solve_arrays(costs, upper, mat, demand)
            if x is None:
                raise InfeasibleError("reported capacities cannot cover the demand")
            return x[idx]

        ts = np.linspace(spec.cost_lo, spec.cost_hi, self.scan_steps + 1)
        scan_scores = self.scores(scenario, seller, ts, capacity)
        vals = []
        for s in scan_scores:
            costs[idx] = s
            x = lp.solve_arrays(costs, upper, mat, demand)
            if x is None:
                raise InfeasibleError("reported capacities cannot cover the demand")
            vals.append(x[idx])
        return detect_steps(at, spec.cost_lo, spec.cost_hi, self.scan_steps, self.resolution, vals)

    def payment(self, scenario: Scenario, bids: Sequence[SellerBid], seller: int, quantity: float) -> float:
        bid = _ordered_bids(scenario, bids)[seller - 1]
        crv = self.curve(scenario, bids, seller)
        return payment_single_minded(seller, quantity, bid.reported_cost, crv, self.resolution)

    def seller_outcome(self, scenario: Scenario, bids: Sequence[SellerBid], seller: int) -> tuple[float, float]:
        x = self.allocation(scenario, bids, seller)
        return x, self.payment(scenario, bids, seller, x)

    def run(self, scenario: Scenario, bids: Sequence[SellerBid]) -> Outcome:
        bids, costs, x = self.allocate(scenario, bids)
        pays = tuple(self.payment(scenario, bids, b.seller_id, x[b.seller_id - 1]) for b in bids)
        objective = float(sum(c * v for c, v in zip(costs, x)))
        return Outcome(Allocation(tuple(x)), pays, objective, tuple(float(c) for c in costs))


class OptimalAuction(ScoringAuction):
    """Winner determination on virtual costs; refuses non-regular sellers."""

    name = "optimal"

    def __init__(self, *args, regularity_grid: int = REGULARITY_GRID, **kwargs):
        super().__init__(*args, **kwargs)
        self.regularity_grid = regularity_grid

    def check(self, scenario):
        for s in scenario.sellers:
            res = is_regular(s.distribution, self.regularity_grid)
            if not res.regular:
                raise RegularityError(
                    f"seller {s.id} is not regular: {res.reason} at {res.counterexample}",
                    seller=s.id, point=res.counterexample,
                )

    def score(self, scenario, seller, cost, capacity):
        return scenario.sellers[seller - 1].distribution.mechanism_virtual_cost(cost, capacity)

    def scores(self, scenario, seller, costs, capacity):
        return scenario.sellers[seller - 1].distribution.mechanism_virtual_costs(costs, capacity)


class EfficientAuction(ScoringAuction):
    """Minimise total reported cost; threshold payments (a procurement VCG analogue)."""

    name = "efficient"

    def score(self, scenario, seller, cost, capacity):
        return cost

    def scores(self, scenario, seller, costs, capacity):
        return np.asarray(costs, dtype=float)


class PostedPriceAuction(ScoringAuction):
    """Sellers at or below their posted unit price are preferred at that price.

    Sellers above their price stay available as a costly fallback so demand
    is always met.  Default prices are the midpoints of the cost ranges.
    """

    name = "posted-price"

    def __init__(self, prices: Optional[dict] = None, **kwargs):
        super().__init__(**kwargs)
        self.prices = dict(prices or {})

    def price(self, scenario, seller):
        if seller in self.prices:
            return self.prices[seller]
        s = scenario.seller(seller)
        return 0.5 * (s.cost_lo + s.cost_hi)

    def score(self, scenario, seller, cost, capacity):
        p = self.price(scenario, seller)
        if cost <= p:
            return p
        penalty = 1.0 + max(max(abs(s.cost_hi), abs(s.cost_lo)) for s in scenario.sellers)
        return penalty + cost


class ZeroSurplusAuction(OptimalAuction):
    """Optimal allocation but pays only the reported cost (not incentive compatible)."""

    name = "zero-surplus"

    def payment(self, scenario, bids, seller, quantity):
        return _ordered_bids(scenario, bids)[seller - 1].reported_cost * quantity


def run_optimal_auction(scenario: Scenario, bids: Sequence[SellerBid], **kwargs) -> Outcome:
    """Virtual-cost winner determination plus curve-integral payments."""
    return OptimalAuction(**kwargs).run(scenario, bids)


def allocation_curve(scenario: Scenario, bids_minus_i: Sequence[SellerBid], seller: int,
                     capacity: float, mechanism: Optional[ScoringAuction] = None) -> StepFunction:
    """``t -> x_i(t, capacity)`` with the other sellers' bids held fixed.

    ``bids_minus_i`` may include or omit ``seller``'s own bid.
    """
    mech = mechanism or OptimalAuction()
    bids = [b for b in bids_minus_i if b.seller_id != seller]
    bids.append(SellerBid(seller, scenario.seller(seller).cost_lo, capacity))
    bids.sort(key=lambda b: b.seller_id)
    return mech.curve(scenario, bids, seller, capacity)


def payment_single_minded(seller: int, quantity: float, cost: float, curve: StepFunction,
                          resolution: float = DEFAULT_RESOLUTION) -> float:
    """``cost * quantity`` plus the exact area under ``curve`` right of ``cost``."""
    at_bid = curve(cost)
    if abs(at_bid - quantity) > level_tolerance(at_bid, quantity):
        adjacent = set(curve.levels)
        if not (curve.near_breakpoint(cost, 2 * resolution) and any(
                abs(v - quantity) <= level_tolerance(v, quantity) for v in adjacent)):
            raise ConsistencyError(
                f"seller {seller}: allocation {quantity} disagrees with curve value {at_bid} at cost {cost}"
            )
    return cost * quantity + curve.integral(cost, curve.hi)


# ---------------------------------------------------------------------------
# k-th price baseline
# ---------------------------------------------------------------------------


def kth_price_auction(bids: Sequence[SellerBid], demand: float) -> Outcome:
    """Uniform-price auction for a single item.

    Sellers are filled greedily by ascending reported cost (ties by seller
    index).  Every unit is paid the reported cost of the first seller left
    with no allocation; if every seller receives something, each is paid its
    own reported cost.
    """
    bids = sorted(bids, key=lambda b: b.seller_id)
    if sum(b.reported_capacity for b in bids) < demand:
        raise InfeasibleError("total reported capacity is below the demand")
    order = sorted(range(len(bids)), key=lambda k: (bids[k].reported_cost, bids[k].seller_id))
    x = [0.0] * len(bids)
    left = float(demand)
    for k in order:
        take = min(left, bids[k].reported_capacity)
        x[k] = take
        left -= take
    losers = [k for k in order if x[k] == 0.0]
    if losers:
        price = bids[losers[0]].reported_cost
        pays = tuple(price * v for v in x)
    else:
        price = None
        pays = tuple(b.reported_cost * v for b, v in zip(bids, x))
    objective = sum(b.reported_cost * v for b, v in zip(bids, x))
    return Outcome(Allocation(tuple(x)), pays, objective, details={"price": price})


class KthPriceAuction:
    """:func:`kth_price_auction` behind the mechanism interface (single-item scenarios)."""

    name = "kth-price"

    def _demand(self, scenario):
        if len(scenario.items) != 1:
            raise ValueError("the k-th price auction needs a single-item scenario")
        return scenario.items[0].demand

    def run(self, scenario, bids):
        return kth_price_auction(_ordered_bids(scenario, bids), self._demand(scenario))

    def allocation(self, scenario, bids, seller):
        return self.run(scenario, bids).quantity(seller)

    def seller_outcome(self, scenario, bids, seller):
        out = self.run(scenario, bids)
        return out.quantity(seller), out.payment(seller)


MECHANISMS = {
    "optimal": OptimalAuction,
    "efficient": EfficientAuction,
    "posted-price": PostedPriceAuction,
    "kth-price": KthPriceAuction,
    "zero-surplus": ZeroSurplusAuction,
}


def make_mechanism(name: str, **kwargs):
    try:
        cls = MECHANISMS[name]
    except KeyError:
        raise ValueError(f"unknown mechanism {name!r}; choose from {sorted(MECHANISMS)}") from None
    return cls() if cls is KthPriceAuction else cls(**kwargs)


# ---------------------------------------------------------------------------
# Myerson single-item (forward) auction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MyersonSingleItemInstance:
    valuations: tuple[float, ...]
    distributions: tuple


class MyersonResult(NamedTuple):
    winner: Optional[int]
    payment: float


def myerson_single_item(instance: MyersonSingleItemInstance, regularity_grid: int = 64) -> MyersonResult:
    """Sell to the highest positive virtual value; charge the threshold valuation.

    Ties in virtual value go to the lowest index.  The winner pays the
    smallest valuation at which its virtual value would still be positive
    and strictly above every rival's, located by bisection.
    """
    vals, dists = instance.valuations, instance.distributions
    if len(vals) != len(dists):
        raise ValueError("one distribution per bidder is required")
    for i, d in enumerate(dists, start=1):
        res = is_regular_1d(d, regularity_grid, kind="value")
        if not res.regular:
            raise RegularityError(f"bidder {i} is not regular: {res.reason}", seller=i, point=res.counterexample)
    virt = [d.virtual_value(v) for d, v in zip(dists, vals)]
    best = max(range(len(virt)), key=lambda k: (virt[k], -k)) if virt else None
    if best is None or not virt[best] > 0.0:
        return MyersonResult(None, 0.0)

    target = max([0.0] + [virt[j] for j in range(len(virt)) if j != best])
    d, theta = dists[best], vals[best]

    def wins(v):
        return d.virtual_value(v) > target

    lo, hi = d.lo, theta
    if not wins(hi):
        return MyersonResult(best + 1, theta)
    if wins(lo):
        return MyersonResult(best + 1, lo)
    while hi - lo > 1e-13 * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if wins(mid):
            hi = mid
        else:
            lo = mid
    return MyersonResult(best + 1, hi)
