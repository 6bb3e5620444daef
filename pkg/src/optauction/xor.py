"""OCAX: optimal unit-demand combinatorial procurement with XOR-minded bidders.

Each bidder offers one of two disjoint bundles.  Winner determination
minimises total virtual cost over 0/1 selections that cover every item,
with at most one bundle per bidder.  Payments integrate the bidder's
winning indicators along an axis-parallel path from its bid to the top
corner ``(cmax, cmax)`` of its cost square, where its utility is zero.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .dist import Uniform1D, is_regular_1d
from .errors import InfeasibleError, IntegrabilityError, RegularityError
from .steps import DEFAULT_RESOLUTION, StepFunction, detect_steps

PATH_TOL = 1e-6
TIE_EPS = 1e-12
XOR_SCAN_STEPS = 64

# bundle choices, in tie-breaking order
CHOICES = (1, 2, 0)


@dataclass(frozen=True)
class XorBidder:
    id: int
    bundle1: frozenset
    bundle2: frozenset
    cost_range: tuple[float, float]
    dist1: object
    dist2: object
    bid1: float
    bid2: float

    def __post_init__(self):
        object.__setattr__(self, "bundle1", frozenset(self.bundle1))
        object.__setattr__(self, "bundle2", frozenset(self.bundle2))
        if not self.bundle1 or not self.bundle2:
            raise ValueError(f"bidder {self.id}: bundles must be non-empty")
        if self.bundle1 & self.bundle2:
            raise ValueError(f"bidder {self.id}: bundles must be disjoint")
        lo, hi = self.cost_range
        if not lo < hi:
            raise ValueError(f"bidder {self.id}: cost range must have positive width")
        for c in (self.bid1, self.bid2):
            if not lo - 1e-12 <= c <= hi + 1e-12:
                raise ValueError(f"bidder {self.id}: bid {c} outside [{lo}, {hi}]")

    @property
    def cost_lo(self) -> float:
        return self.cost_range[0]

    @property
    def cost_hi(self) -> float:
        return self.cost_range[1]

    def bundle(self, j: int) -> frozenset:
        return self.bundle1 if j == 1 else self.bundle2

    def dist(self, j: int):
        return self.dist1 if j == 1 else self.dist2

    def virtual_costs(self, c1: Optional[float] = None, c2: Optional[float] = None) -> tuple[float, float]:
        c1 = self.bid1 if c1 is None else c1
        c2 = self.bid2 if c2 is None else c2
        return self.dist1.virtual_cost(c1), self.dist2.virtual_cost(c2)

    def with_bids(self, c1: float, c2: float) -> "XorBidder":
        return XorBidder(self.id, self.bundle1, self.bundle2, self.cost_range, self.dist1, self.dist2, c1, c2)


class XorSelection(NamedTuple):
    choices: tuple[int, ...]
    objective: float

    def x(self, bidder_pos: int, j: int) -> int:
        return int(self.choices[bidder_pos] == j)


def check_regular(bidders: Sequence[XorBidder], grid_resolution: int = 64) -> None:
    for b in bidders:
        for j in (1, 2):
            res = is_regular_1d(b.dist(j), grid_resolution, kind="cost")
            if not res.regular:
                raise RegularityError(
                    f"bidder {b.id} bundle {j}: {res.reason} at {res.counterexample}",
                    seller=b.id, point=res.counterexample,
                )


def _masks(bidders, items):
    index = {it: k for k, it in enumerate(items)}
    full = (1 << len(items)) - 1

    # items the buyer does not need are disposed of freely
    def mask(bundle):
        m = 0
        for it in bundle:
            if it in index:
                m |= 1 << index[it]
        return m

    return [(mask(b.bundle1), mask(b.bundle2)) for b in bidders], full


def branch_and_bound(masks, costs, full) -> Optional[tuple[tuple[int, ...], float]]:
    """Exact depth-first search over per-bidder choices ``(1, 2, none)``.

    ``costs[k] = (h1, h2)``.  The bound adds, to the running cost, every
    remaining negative cost and the largest over uncovered items of the
    cheapest remaining bundle covering it (XOR ignored).  A later selection
    replaces the incumbent only if strictly cheaper, so ties resolve to the
    lexicographically first selection in choice order.
    """
    n = len(masks)
    nitems = full.bit_length()
    # suffix tables: cheapest positive-part cost of a bundle covering item j among bidders >= k
    inf = math.inf
    cover_min = [[inf] * nitems for _ in range(n + 1)]
    neg_sum = [0.0] * (n + 1)
    for k in range(n - 1, -1, -1):
        row = cover_min[k]
        nxt = cover_min[k + 1]
        neg = neg_sum[k + 1]
        for j in range(nitems):
            row[j] = nxt[j]
        for (m, h) in ((masks[k][0], costs[k][0]), (masks[k][1], costs[k][1])):
            neg += min(h, 0.0)
            pos = max(h, 0.0)
            for j in range(nitems):
                if m >> j & 1 and pos < row[j]:
                    row[j] = pos
        neg_sum[k] = neg

    best_cost = inf
    best: Optional[list] = None
    choice = [0] * n

    def bound(k, covered, cur):
        need = 0.0
        row = cover_min[k]
        missing = full & ~covered
        j = 0
        while missing:
            if missing & 1:
                v = row[j]
                if v == inf:
                    return inf
                if v > need:
                    need = v
            missing >>= 1
            j += 1
        return cur + neg_sum[k] + need

    def dfs(k, covered, cur):
        nonlocal best_cost, best
        if bound(k, covered, cur) >= best_cost - TIE_EPS:
            return
        if k == n:
            if covered == full and cur < best_cost - TIE_EPS:
                best_cost = cur
                best = list(choice)
            return
        for c in CHOICES:
            choice[k] = c
            if c == 0:
                dfs(k + 1, covered, cur)
            else:
                dfs(k + 1, covered | masks[k][c - 1], cur + costs[k][c - 1])
        choice[k] = 0

    dfs(0, 0, 0.0)
    if best is None:
        return None
    return tuple(best), best_cost


def exhaustive(masks, costs, full) -> Optional[tuple[tuple[int, ...], float]]:
    """Reference oracle: enumerate all ``3**n`` selections in choice order."""
    best_cost = math.inf
    best = None
    for sel in itertools.product(CHOICES, repeat=len(masks)):
        covered = 0
        total = 0.0
        for k, c in enumerate(sel):
            if c:
                covered |= masks[k][c - 1]
                total += costs[k][c - 1]
        if covered == full and total < best_cost - TIE_EPS:
            best_cost, best = total, sel
    if best is None:
        return None
    return tuple(best), best_cost


def solve_ocax(bidders: Sequence[XorBidder], items: Sequence[str], check: bool = True,
               method: str = "bnb") -> XorSelection:
    """Minimum total virtual cost selection covering ``items``."""
    if check:
        check_regular(bidders)
    items = list(items)
    masks, full = _masks(bidders, items)
    costs = [b.virtual_costs() for b in bidders]
    solver = branch_and_bound if method == "bnb" else exhaustive
    res = solver(masks, costs, full)
    if res is None:
        raise InfeasibleError("the bidders' bundles cannot cover every item")
    return XorSelection(*res)


class Menu(NamedTuple):
    """Cheapest completion by the other bidders for each option of one bidder.

    ``lose``, ``with1`` and ``with2`` are the best total virtual costs of the
    other bidders when the bidder supplies nothing, bundle 1 or bundle 2
    (``inf`` if impossible).  The bidder's allocation at virtual costs
    ``(h1, h2)`` is the cheapest of ``lose``, ``h1 + with1``, ``h2 + with2``.
    """

    lose: float
    with1: float
    with2: float

    def choose(self, h1: float, h2: float) -> int:
        opts = ((1, h1 + self.with1), (2, h2 + self.with2), (0, self.lose))
        best, val = 0, math.inf
        for c, v in opts:
            if v < val - TIE_EPS:
                best, val = c, v
        return best


def bidder_menu(bidders: Sequence[XorBidder], items: Sequence[str], pos: int) -> Menu:
    """Three exact sub-solves without bidder ``pos``."""
    items = list(items)
    masks, full = _masks(bidders, items)
    others = [k for k in range(len(bidders)) if k != pos]
    om = [masks[k] for k in others]
    oc = [bidders[k].virtual_costs() for k in others]

    # sub-problems keep the original bit positions, restricted to ``required``
    def solve_required(required):
        if required == 0:
            return 0.0
        if not om:
            return math.inf
        sub = [(m1 & required, m2 & required) for m1, m2 in om]
        res = branch_and_bound(sub, oc, required)
        return math.inf if res is None else res[1]

    m1, m2 = masks[pos]
    return Menu(solve_required(full), solve_required(full & ~m1), solve_required(full & ~m2))


class _Indicator:
    """Winning indicators of one bidder as functions of its own two costs."""

    def __init__(self, bidder: XorBidder, menu: Menu):
        self.b = bidder
        self.menu = menu

    def choice(self, c1: float, c2: float) -> int:
        h1, h2 = self.b.virtual_costs(c1, c2)
        return self.menu.choose(h1, h2)

    def x(self, j: int, c1: float, c2: float) -> float:
        return 1.0 if self.choice(c1, c2) == j else 0.0


@lru_cache(maxsize=8192)
def _leg_curve(dist1, dist2, cost_range, menu: Menu, j: int, fixed: float, scan_steps: int,
               resolution: float) -> StepFunction:
    """Indicator of bundle ``j`` over the whole cost range, the other cost held at ``fixed``.

    Depends on the bidder only through its distributions, so misreport
    sweeps that share the other coordinate reuse one curve.
    """
    def choose(c1, c2):
        return menu.choose(dist1.virtual_cost(c1), dist2.virtual_cost(c2))

    if j == 1:
        fn = lambda t: 1.0 if choose(t, fixed) == 1 else 0.0  # noqa: E731
    else:
        fn = lambda t: 1.0 if choose(fixed, t) == 2 else 0.0  # noqa: E731
    return detect_steps(fn, cost_range[0], cost_range[1], scan_steps, resolution)


def _leg(ind: _Indicator, j: int, fixed: float, scan_steps: int, resolution: float) -> StepFunction:
    b = ind.b
    return _leg_curve(b.dist1, b.dist2, tuple(b.cost_range), ind.menu, j, float(fixed), scan_steps, resolution)


class OcaxPayment(NamedTuple):
    """``legs`` are the two full-range indicator curves integrated along the path."""

    payment: float
    utility: float
    choice: int
    path_gap: float
    legs: tuple


def ocax_payment(bidders: Sequence[XorBidder], items: Sequence[str], pos: int,
                 scan_steps: int = XOR_SCAN_STEPS, resolution: float = DEFAULT_RESOLUTION,
                 path_tol: float = PATH_TOL, menu: Optional[Menu] = None,
                 check_path: bool = True) -> OcaxPayment:
    """Payment to bidder ``pos`` (0-based) with utility pinned to zero at ``(cmax, cmax)``.

    Utility at the bid is the line integral of the winning indicators along
    ``(b1, b2) -> (cmax, b2) -> (cmax, cmax)``; the payment adds the reported
    cost of whichever bundle is won.  With ``check_path`` the other axis
    order is integrated too and a disagreement beyond ``path_tol`` raises
    :class:`IntegrabilityError`.
    """
    b = bidders[pos]
    menu = menu or bidder_menu(bidders, items, pos)
    ind = _Indicator(b, menu)
    top = b.cost_hi
    c1, c2 = b.bid1, b.bid2

    a1 = _leg(ind, 1, c2, scan_steps, resolution)
    a2 = _leg(ind, 2, top, scan_steps, resolution)
    util = a1.integral(c1, top) + a2.integral(c2, top)
    gap = 0.0
    if check_path:
        b2 = _leg(ind, 2, c1, scan_steps, resolution)
        b1 = _leg(ind, 1, top, scan_steps, resolution)
        gap = abs(util - (b2.integral(c2, top) + b1.integral(c1, top)))
        if gap > path_tol:
            raise IntegrabilityError(
                f"bidder {b.id}: path integrals differ by {gap:.3g}; indicator field is not "
                "integrable (cross-partial symmetry fails)", gap=gap,
            )
    choice = ind.choice(c1, c2)
    pay = util + (c1 if choice == 1 else c2 if choice == 2 else 0.0)
    return OcaxPayment(pay, util, choice, gap, (a1, a2))


def ocax_payments(bidders: Sequence[XorBidder], items: Sequence[str], **kwargs) -> list[OcaxPayment]:
    return [ocax_payment(bidders, items, k, **kwargs) for k in range(len(bidders))]


def critical_cost(bidders: Sequence[XorBidder], items: Sequence[str], pos: int, j: int,
                  tol: float = 1e-12) -> float:
    """Highest bid for bundle ``j`` that still wins it when the other bundle is bid at ``cmax``.

    Located by bisection on full :func:`solve_ocax` solves; independent of
    the menu shortcut used by :func:`ocax_payment`.
    """
    b = bidders[pos]
    top = b.cost_hi

    def wins(t):
        trial = list(bidders)
        trial[pos] = b.with_bids(t, top) if j == 1 else b.with_bids(top, t)
        return solve_ocax(trial, items, check=False).choices[pos] == j

    lo, hi = b.cost_lo, top
    if not wins(lo):
        return lo
    if wins(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if wins(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# region partition
# ---------------------------------------------------------------------------


class RegionReport(NamedTuple):
    labels: np.ndarray
    costs: np.ndarray
    ok: bool
    violations: list


def region_partition(bidders: Sequence[XorBidder], items: Sequence[str], pos: int,
                     grid: int = 64, menu: Optional[Menu] = None) -> RegionReport:
    """Label each lattice point of the bidder's cost square: 1, 2 (wins bundle) or 3 (loses).

    ``labels[a, b]`` is the outcome at ``(costs[a], costs[b])``: rows follow
    the bundle-1 cost and columns the bundle-2 cost.  Checks that region 1
    is downward closed along every column, region 2 along every row, and
    that the top corner loses whenever the others can cover alone.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    b = bidders[pos]
    menu = menu or bidder_menu(bidders, items, pos)
    cs = np.linspace(b.cost_lo, b.cost_hi, grid)
    h1 = [b.dist1.virtual_cost(float(c)) for c in cs]
    h2 = [b.dist2.virtual_cost(float(c)) for c in cs]
    labels = np.empty((grid, grid), dtype=int)
    for a in range(grid):
        for c in range(grid):
            ch = menu.choose(h1[a], h2[c])
            labels[a, c] = 3 if ch == 0 else ch

    violations = []
    for c in range(grid):
        col = labels[:, c]
        for a in range(1, grid):
            if col[a] == 1 and col[a - 1] != 1:
                violations.append(("R1 not downward closed", (float(cs[a - 1]), float(cs[c])), (float(cs[a]), float(cs[c]))))
                break
    for a in range(grid):
        row = labels[a, :]
        for c in range(1, grid):
            if row[c] == 2 and row[c - 1] != 2:
                violations.append(("R2 not downward closed", (float(cs[a]), float(cs[c - 1])), (float(cs[a]), float(cs[c]))))
                break
    if math.isfinite(menu.lose) and labels[-1, -1] != 3:
        violations.append(("top corner wins although the others can cover alone", (float(cs[-1]), float(cs[-1]))))
    return RegionReport(labels, cs, not violations, violations)


def regions_csv(report: RegionReport) -> str:
    head = "c1\\c2," + ",".join(repr(float(c)) for c in report.costs)
    lines = [head]
    for a, c in enumerate(report.costs):
        lines.append(repr(float(c)) + "," + ",".join(str(int(v)) for v in report.labels[a]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------


def random_instance(rng: np.random.Generator, n_bidders: int, n_items: int,
                    cost_range: tuple[float, float] = (0.0, 1.0)) -> tuple[list[XorBidder], list[str]]:
    """Feasible instance with uniform costs on ``cost_range`` and random disjoint bundles."""
    if n_items < 2:
        raise ValueError("two disjoint bundles need at least two items")
    if n_bidders < 2:
        raise ValueError("one bidder cannot cover every item with a proper sub-bundle")
    items = [chr(ord("A") + k) for k in range(n_items)]
    lo, hi = cost_range
    for _ in range(10_000):
        bidders = []
        for i in range(1, n_bidders + 1):
            perm = rng.permutation(n_items)
            cut = int(rng.integers(1, n_items))
            size2 = int(rng.integers(1, n_items - cut + 1))
            b1 = {items[k] for k in perm[:cut]}
            b2 = {items[k] for k in perm[cut:cut + size2]}
            c1, c2 = (float(v) for v in rng.uniform(lo, hi, 2))
            bidders.append(XorBidder(i, b1, b2, (lo, hi), Uniform1D(lo, hi), Uniform1D(lo, hi), c1, c2))
        masks, full = _masks(bidders, items)
        if branch_and_bound(masks, [(0.0, 0.0)] * n_bidders, full) is not None:
            return bidders, items
    raise RuntimeError("no feasible instance found; add bidders or remove items")
