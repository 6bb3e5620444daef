"""Piecewise-constant non-increasing functions and breakpoint detection.

Allocation-versus-cost curves are step functions: the allocation only
changes where the bidder's virtual cost crosses a competitor's.  They are
recovered from a black-box oracle by a coarse scan followed by bisection on
every interval whose endpoint levels differ.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import MonotonicityError

DEFAULT_SCAN_STEPS = 256
DEFAULT_RESOLUTION = 1e-9


def level_tolerance(*levels: float) -> float:
    return 1e-9 * max(1.0, *(abs(v) for v in levels))


@dataclass(frozen=True)
class StepFunction:
    """Levels between consecutive breakpoints.

    ``breakpoints[0]`` and ``breakpoints[-1]`` are the domain ends; segment
    ``k`` is ``[breakpoints[k], breakpoints[k+1])`` (the last one closed).
    """

    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        if len(self.breakpoints) != len(self.levels) + 1:
            raise ValueError("need exactly one more breakpoint than levels")
        if any(b < a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be non-decreasing")

    @property
    def lo(self) -> float:
        return self.breakpoints[0]

    @property
    def hi(self) -> float:
        return self.breakpoints[-1]

    def is_non_increasing(self) -> bool:
        return all(b <= a + level_tolerance(a, b) for a, b in zip(self.levels, self.levels[1:]))

    def segment(self, t: float) -> int:
        if t < self.lo or t > self.hi:
            raise ValueError(f"{t} outside [{self.lo}, {self.hi}]")
        k = bisect.bisect_right(self.breakpoints, t) - 1
        return min(k, len(self.levels) - 1)

    def __call__(self, t: float) -> float:
        return self.levels[self.segment(t)]

    def integral(self, a: Optional[float] = None, b: Optional[float] = None) -> float:
        """Exact integral over ``[a, b]`` as a sum of level times overlap width."""
        a = self.lo if a is None else max(a, self.lo)
        b = self.hi if b is None else min(b, self.hi)
        if b <= a:
            return 0.0
        total = 0.0
        for k, level in enumerate(self.levels):
            left = max(a, self.breakpoints[k])
            right = min(b, self.breakpoints[k + 1])
            if right > left:
                total += level * (right - left)
        return total

    def interior_breakpoints(self) -> tuple[float, ...]:
        return self.breakpoints[1:-1]

    def near_breakpoint(self, t: float, tol: float) -> bool:
        return any(abs(t - b) <= tol for b in self.interior_breakpoints())


def _bisect(fn, a, fa, b, fb, resolution, out):
    """Append ``(position, right_level)`` for every level change in ``(a, b)``."""
    while True:
        if fa - fb <= level_tolerance(fa, fb):
            if fb > fa + level_tolerance(fa, fb):
                raise MonotonicityError(
                    f"allocation rises from {fa} at {a} to {fb} at {b}", lower=a, upper=b
                )
            return
        if b - a <= resolution:
            out.append((0.5 * (a + b), fb))
            return
        mid = 0.5 * (a + b)
        fm = fn(mid)
        if fm > fa + level_tolerance(fa, fm):
            raise MonotonicityError(f"allocation rises from {fa} at {a} to {fm} at {mid}", lower=a, upper=mid)
        if fb > fm + level_tolerance(fm, fb):
            raise MonotonicityError(f"allocation rises from {fm} at {mid} to {fb} at {b}", lower=mid, upper=b)
        if abs(fm - fa) <= level_tolerance(fa, fm):
            a, fa = mid, fm
        elif abs(fm - fb) <= level_tolerance(fm, fb):
            b, fb = mid, fm
        else:
            _bisect(fn, a, fa, mid, fm, resolution, out)
            a, fa = mid, fm


def detect_steps(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    scan_steps: int = DEFAULT_SCAN_STEPS,
    resolution: float = DEFAULT_RESOLUTION,
    scan_values: Optional[Sequence[float]] = None,
) -> StepFunction:
    """Recover a non-increasing step function from point evaluations.

    ``scan_values`` may carry precomputed ``fn`` values on the scan lattice
    ``linspace(lo, hi, scan_steps + 1)``.  Any increase between two
    evaluations raises :class:`MonotonicityError` with both costs.
    """
    if hi < lo:
        raise ValueError("empty interval")
    if hi == lo:
        v = fn(lo)
        return StepFunction((lo, hi), (v,))
    ts = np.linspace(lo, hi, scan_steps + 1)
    if scan_values is None:
        vals = [fn(float(t)) for t in ts]
    else:
        vals = [float(v) for v in scan_values]
        if len(vals) != len(ts):
            raise ValueError("scan_values must match the scan lattice")
    changes: list[tuple[float, float]] = []
    for k in range(scan_steps):
        a, b = float(ts[k]), float(ts[k + 1])
        fa, fb = vals[k], vals[k + 1]
        if fb > fa + level_tolerance(fa, fb):
            raise MonotonicityError(f"allocation rises from {fa} at {a} to {fb} at {b}", lower=a, upper=b)
        _bisect(fn, a, fa, b, fb, resolution, changes)
    bps = [float(lo)] + [p for p, _ in changes] + [float(hi)]
    levels = [vals[0]] + [v for _, v in changes]
    return StepFunction(tuple(bps), tuple(levels))
