"""Empirical incentive-compatibility and individual-rationality checks.

Mechanisms are treated as black boxes exposing ``allocation`` and
``seller_outcome``.  Expected quantities come either from a fixed list of
opponent profiles (DSIC mode: each profile is checked on its own) or from
Monte Carlo draws of truthful opponents (BIC mode: averages with standard
errors).  Nothing here mutates the mechanism or the scenario.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dist import CapacityLinkedUniform, IndependentUniform
from .errors import InfeasibleError, MonotonicityError
from .model import Item, Scenario, SellerBid, SellerSpec
from .steps import detect_steps
from .xor import XOR_SCAN_STEPS, bidder_menu, ocax_payment

DETERMINISTIC_TOL = 1e-6
SE_MULTIPLIER = 3.0
COST_POINTS = 21
CAPACITY_POINTS = 11
HARNESS_SCAN_STEPS = 100


# ---------------------------------------------------------------------------
# scenario and type generation
# ---------------------------------------------------------------------------


def random_scenario(rng: np.random.Generator, n_sellers: int, n_items: int,
                    linked_fraction: float = 0.3) -> Scenario:
    """Random regular scenario that stays feasible under any capacity report.

    Every item is covered by at least two sellers and its demand never
    exceeds the sum of the covering sellers' minimum capacities.
    """
    items = [chr(ord("A") + k) for k in range(n_items)]
    while True:
        bundles = []
        for _ in range(n_sellers):
            size = int(rng.integers(1, n_items + 1))
            bundles.append(frozenset(rng.choice(items, size=size, replace=False).tolist()))
        if all(sum(it in b for b in bundles) >= min(2, n_sellers) for it in items):
            break
    sellers = []
    for i, bundle in enumerate(bundles, start=1):
        c_lo = float(np.round(rng.uniform(1.0, 5.0), 3))
        c_hi = float(np.round(c_lo + rng.uniform(2.0, 8.0), 3))
        q_lo = float(rng.integers(5, 30))
        q_hi = float(q_lo + rng.integers(5, 40))
        if rng.uniform() < linked_fraction:
            slope = float(np.round(0.5 * (c_hi - c_lo) / (q_hi - q_lo) * rng.uniform(), 6))
            dist = CapacityLinkedUniform(c_lo, c_hi, q_lo, q_hi, slope)
        else:
            dist = IndependentUniform(c_lo, c_hi, q_lo, q_hi)
        sellers.append(SellerSpec(i, bundle, (c_lo, c_hi), (q_lo, q_hi), dist))
    demands = []
    for it in items:
        floor_supply = sum(s.capacity_lo for s in sellers if it in s.bundle)
        demands.append(Item(it, float(np.floor(floor_supply * rng.uniform(0.3, 0.95)))))
    return Scenario(tuple(demands), tuple(sellers))


def draw_types(scenario: Scenario, rng: np.random.Generator) -> list[tuple[float, float]]:
    """One ``(cost, capacity)`` type per seller from its distribution."""
    return [s.distribution.sample(rng) for s in scenario.sellers]


def _bids_from_types(types) -> list[SellerBid]:
    return [SellerBid(i, float(c), float(q)) for i, (c, q) in enumerate(types, start=1)]


def _profiles(scenario, profiles, n_draws, seed):
    if profiles is not None:
        return [list(p) for p in profiles], "dsic"
    rng = np.random.default_rng(seed)
    return [draw_types(scenario, rng) for _ in range(n_draws)], "bic"


# ---------------------------------------------------------------------------
# utilities and best responses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UtilityEvaluation:
    seller: int
    true_type: tuple[float, float]
    bid: tuple[float, float]
    quantity: float
    payment: float

    @property
    def utility(self) -> float:
        return self.payment - self.true_type[0] * self.quantity

    @property
    def offered_surplus(self) -> float:
        return self.payment - self.bid[0] * self.quantity


def evaluate_utility(mechanism, scenario: Scenario, seller: int, true_type, bid, profile) -> UtilityEvaluation:
    """Utility of ``seller`` bidding ``bid`` against the other entries of ``profile``."""
    types = list(profile)
    types[seller - 1] = tuple(bid)
    x, t = mechanism.seller_outcome(scenario, _bids_from_types(types), seller)
    return UtilityEvaluation(seller, tuple(true_type), tuple(bid), x, t)


@dataclass
class BestResponse:
    seller: int
    gap: float
    best_bid: Optional[tuple[float, float]]
    truthful_utility: float
    mode: str
    evaluated: int
    skipped_infeasible: int


def bid_grid(spec: SellerSpec, true_capacity: float, cost_points: int = COST_POINTS,
             capacity_points: int = CAPACITY_POINTS):
    """Cost lattice over the declared range; capacities never above the true one."""
    cs = np.linspace(spec.cost_lo, spec.cost_hi, cost_points)
    qs = np.linspace(spec.capacity_lo, true_capacity, capacity_points)
    return [float(c) for c in cs], [float(q) for q in qs]


def best_response_gap(mechanism, scenario: Scenario, seller: int, true_type, *,
                      profiles: Optional[Sequence] = None, n_draws: int = 32, seed: int = 0,
                      cost_points: int = COST_POINTS, capacity_points: int = CAPACITY_POINTS) -> BestResponse:
    """Largest utility gain from misreporting over a bid lattice.

    With ``profiles`` (DSIC mode) the gain is the worst case over the fixed
    opponent profiles; otherwise opponents are truthful Monte Carlo draws and
    expected utilities are compared (BIC mode).
    """
    profs, mode = _profiles(scenario, profiles, n_draws, seed)
    spec = scenario.seller(seller)
    cs, qs = bid_grid(spec, true_type[1], cost_points, capacity_points)
    truth = (float(true_type[0]), float(true_type[1]))
    skipped = 0
    evaluated = 0

    def utilities(bid):
        out = []
        for p in profs:
            out.append(evaluate_utility(mechanism, scenario, seller, truth, bid, p).utility)
        return out

    try:
        base = utilities(truth)
    except InfeasibleError:
        return BestResponse(seller, math.nan, None, math.nan, mode, 0, 1)
    best_gap, best_bid = -math.inf, None
    for q in qs:
        for c in cs:
            try:
                us = utilities((c, q))
            except InfeasibleError:
                skipped += 1
                continue
            evaluated += 1
            if mode == "dsic":
                g = max(u - b for u, b in zip(us, base))
            else:
                g = float(np.mean(us) - np.mean(base))
            if g > best_gap:
                best_gap, best_bid = g, (c, q)
    truthful_u = float(np.mean(base))
    return BestResponse(seller, max(best_gap, 0.0) if best_bid else 0.0, best_bid, truthful_u,
                        mode, evaluated, skipped)


# ---------------------------------------------------------------------------
# three-condition characterisation
# ---------------------------------------------------------------------------


@dataclass
class ConditionResult:
    passed: bool
    worst: float
    where: Optional[tuple] = None
    note: str = ""


@dataclass
class IncentiveReport:
    seller: int
    mode: str
    condition1: ConditionResult
    condition2: ConditionResult
    condition3: ConditionResult
    skipped_infeasible: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.condition1.passed and self.condition2.passed and self.condition3.passed


def _allocation_integral(mechanism, scenario, seller, q, profile, lo, hi, scan_steps):
    """Exact area under the black-box allocation curve of one profile."""
    types = list(profile)

    def x_at(t):
        types[seller - 1] = (t, q)
        return mechanism.allocation(scenario, _bids_from_types(types), seller)

    return detect_steps(x_at, lo, hi, scan_steps)


def check_incentive_conditions(mechanism, scenario: Scenario, seller: int, *, profiles: Optional[Sequence] = None,
                   n_draws: int = 32, seed: int = 0, cost_points: int = COST_POINTS,
                   capacity_points: int = CAPACITY_POINTS, scan_steps: int = HARNESS_SCAN_STEPS,
                   tol: float = DETERMINISTIC_TOL) -> IncentiveReport:
    """Check the offered-surplus identity, its sign and capacity monotonicity,
    and the cost monotonicity of the expected allocation on a bid lattice.

    1. ``rho(c, q) = rho(cmax, q) + integral_c^cmax X(t, q) dt``
    2. ``rho >= 0`` and non-decreasing in the reported capacity
    3. ``X(c, q)`` non-increasing in the reported cost
    """
    profs, mode = _profiles(scenario, profiles, n_draws, seed)
    spec = scenario.seller(seller)
    cs = [float(c) for c in np.linspace(spec.cost_lo, spec.cost_hi, cost_points)]
    qs = [float(q) for q in np.linspace(spec.capacity_lo, spec.capacity_hi, capacity_points)]
    top = spec.cost_hi
    P = len(profs)

    X = np.full((len(cs), len(qs)), np.nan)
    rho = np.full((len(cs), len(qs)), np.nan)
    resid = np.full((len(cs), len(qs)), np.nan)
    resid_se = np.zeros((len(cs), len(qs)))
    c3 = ConditionResult(True, 0.0)
    skipped = 0
    for b, q in enumerate(qs):
        per_x = np.empty((P, len(cs)))
        per_rho = np.empty((P, len(cs)))
        per_int = np.empty((P, len(cs)))
        try:
            for k, prof in enumerate(profs):
                for a, c in enumerate(cs):
                    ev = evaluate_utility(mechanism, scenario, seller, (c, q), (c, q), prof)
                    per_x[k, a] = ev.quantity
                    per_rho[k, a] = ev.offered_surplus
                try:
                    crv = _allocation_integral(mechanism, scenario, seller, q, prof, spec.cost_lo, top, scan_steps)
                except MonotonicityError as exc:
                    if c3.passed:
                        c3 = ConditionResult(False, math.inf, (exc.lower, exc.upper, q),
                                             "allocation increases with the reported cost")
                    per_int[k, :] = np.nan
                    continue
                for a, c in enumerate(cs):
                    per_int[k, a] = crv.integral(c, top)
        except InfeasibleError:
            skipped += 1
            continue
        X[:, b] = per_x.mean(axis=0)
        rho[:, b] = per_rho.mean(axis=0)
        r = per_rho - per_rho[:, [-1]] - per_int
        resid[:, b] = r.mean(axis=0)
        if P > 1:
            resid_se[:, b] = r.std(axis=0, ddof=1) / math.sqrt(P)

    # condition 1
    bound = tol + (SE_MULTIPLIER * resid_se if mode == "bic" else 0.0)
    excess = np.abs(resid) - bound
    if np.all(np.isnan(resid)):
        c1 = ConditionResult(c3.passed, math.nan, None, "no integrable curve")
    else:
        idx = np.unravel_index(np.nanargmax(np.abs(resid)), resid.shape)
        worst = float(np.abs(resid)[idx])
        ok = not np.any(np.nan_to_num(excess, nan=math.inf) > 0) if c3.passed else False
        c1 = ConditionResult(ok, worst, (cs[idx[0]], qs[idx[1]]))

    # condition 2
    c2 = ConditionResult(True, 0.0)
    neg = np.nanmin(rho) if np.any(~np.isnan(rho)) else 0.0
    if neg < -tol:
        idx = np.unravel_index(np.nanargmin(rho), rho.shape)
        c2 = ConditionResult(False, float(-neg), (cs[idx[0]], qs[idx[1]]), "negative offered surplus")
    else:
        worst, where = 0.0, None
        for a in range(len(cs)):
            for b in range(1, len(qs)):
                drop = rho[a, b - 1] - rho[a, b]
                if not np.isnan(drop) and drop > worst:
                    worst, where = float(drop), (cs[a], qs[b - 1], qs[b])
        if worst > tol:
            c2 = ConditionResult(False, worst, where, "offered surplus falls as capacity rises")
        else:
            c2 = ConditionResult(True, worst, where)

    # condition 3 on the lattice
    if c3.passed:
        worst, where = 0.0, None
        for b in range(len(qs)):
            for a in range(1, len(cs)):
                rise = X[a, b] - X[a - 1, b]
                if not np.isnan(rise) and rise > worst:
                    worst, where = float(rise), (cs[a - 1], cs[a], qs[b])
        c3 = ConditionResult(worst <= tol, worst, where)

    return IncentiveReport(seller, mode, c1, c2, c3, skipped,
                          {"costs": cs, "capacities": qs, "profiles": P})


# ---------------------------------------------------------------------------
# Monte Carlo expected cost
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float
    samples: int


def _estimate(values) -> Estimate:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return Estimate(math.nan, math.nan, 0)
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return Estimate(float(arr.mean()), se, int(arr.size))


@dataclass
class ExpectedStats:
    seller: int
    quantity: Estimate
    payment: Estimate
    utility: Estimate
    offered_surplus: Estimate


def _simulate(mechanism, scenario, samples, seed):
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    records = []
    skipped = 0
    for _ in range(samples):
        types = draw_types(scenario, rng)
        try:
            out = mechanism.run(scenario, _bids_from_types(types))
        except InfeasibleError:
            skipped += 1
            continue
        records.append((types, out))
    return records, skipped


def expected_cost(mechanism, scenario: Scenario, samples: int, seed: int = 0) -> Estimate:
    """Mean total payment under truthful bidding, with its standard error."""
    records, _ = _simulate(mechanism, scenario, samples, seed)
    return _estimate([math.fsum(out.payments) for _, out in records])


def expected_stats(mechanism, scenario: Scenario, samples: int, seed: int = 0) -> list[ExpectedStats]:
    """Per-seller Monte Carlo estimates of quantity, payment, utility and surplus."""
    records, _ = _simulate(mechanism, scenario, samples, seed)
    stats = []
    for s in scenario.sellers:
        k = s.id - 1
        xs = [out.allocation.quantities[k] for _, out in records]
        ts = [out.payments[k] for _, out in records]
        us = [t - types[k][0] * x for (types, _), x, t in zip(records, xs, ts)]
        stats.append(ExpectedStats(s.id, _estimate(xs), _estimate(ts), _estimate(us), _estimate(us)))
    return stats


@dataclass(frozen=True)
class CostComparison:
    baseline: Estimate
    challenger: Estimate
    difference: Estimate

    @property
    def baseline_not_worse(self) -> bool:
        """Baseline mean cost is at most the challenger's, within 3 standard errors."""
        return self.difference.mean <= SE_MULTIPLIER * self.difference.se + 1e-9


def compare_costs(baseline, challenger, scenario: Scenario, samples: int, seed: int = 0) -> CostComparison:
    """Paired comparison on common random draws: ``baseline - challenger``."""
    a, _ = _simulate(baseline, scenario, samples, seed)
    b, _ = _simulate(challenger, scenario, samples, seed)
    ta = [math.fsum(o.payments) for _, o in a]
    tb = [math.fsum(o.payments) for _, o in b]
    n = min(len(ta), len(tb))
    return CostComparison(_estimate(ta), _estimate(tb), _estimate(np.subtract(ta[:n], tb[:n])))


# ---------------------------------------------------------------------------
# XOR bidders
# ---------------------------------------------------------------------------


@dataclass
class XorBestResponse:
    bidder: int
    gap: float
    best_bid: Optional[tuple[float, float]]
    truthful_utility: float


def xor_best_response_gap(bidders, items, pos: int, grid: int = COST_POINTS,
                          scan_steps: int = XOR_SCAN_STEPS) -> XorBestResponse:
    """Largest utility gain of bidder ``pos`` over a ``grid x grid`` misreport lattice.

    The bidder's current bids are its true costs; the others' bids stay fixed.
    """
    b = bidders[pos]
    truth = (b.bid1, b.bid2)
    menu = bidder_menu(bidders, items, pos)

    def utility(c1, c2):
        trial = list(bidders)
        trial[pos] = b.with_bids(c1, c2)
        p = ocax_payment(trial, items, pos, scan_steps=scan_steps, menu=menu, check_path=False)
        cost = truth[0] if p.choice == 1 else truth[1] if p.choice == 2 else 0.0
        return p.payment - cost

    base = utility(*truth)
    cs = [float(c) for c in np.linspace(b.cost_lo, b.cost_hi, grid)]
    best_gap, best_bid = 0.0, None
    for c1 in cs:
        for c2 in cs:
            g = utility(c1, c2) - base
            if g > best_gap:
                best_gap, best_bid = g, (c1, c2)
    return XorBestResponse(b.id, best_gap, best_bid, base)
