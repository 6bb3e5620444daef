"""Exact solver for the bounded-variable covering LP.

``min h.x  s.t.  M x >= D,  0 <= x <= u`` with ``M`` a 0/1 item-by-seller
matrix.  The kernel is compiled when the extension was built and pure
Python otherwise; set ``OPTAUCTION_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import SolverError
from . import _simplex_py

try:
    if os.environ.get("OPTAUCTION_PURE_PYTHON"):
        raise ImportError("pure Python kernel requested")
    from ._csimplex import solve_bounded as _compiled_kernel
except ImportError:
    _compiled_kernel = None

_python_kernel = _simplex_py.solve_bounded

BACKEND = "compiled" if _compiled_kernel is not None else "python"
_kernel = _compiled_kernel if _compiled_kernel is not None else _python_kernel

TOLERANCE = 1e-9


def set_backend(name: str) -> None:
    """Switch kernels at runtime (``"compiled"`` or ``"python"``)."""
    global _kernel, BACKEND
    if name == "compiled":
        if _compiled_kernel is None:
            raise RuntimeError("compiled kernel is not available in this build")
        _kernel = _compiled_kernel
    elif name == "python":
        _kernel = _python_kernel
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def compiled_available() -> bool:
    return _compiled_kernel is not None


@dataclass(frozen=True, eq=False)
class CoveringLp:
    costs: np.ndarray
    upper: np.ndarray
    matrix: np.ndarray
    demand: np.ndarray

    def __post_init__(self):
        for name in ("costs", "upper", "demand"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        mat = np.asarray(self.matrix, dtype=float).reshape(len(self.demand), len(self.costs))
        object.__setattr__(self, "matrix", mat)
        if len(self.upper) != len(self.costs):
            raise ValueError("one upper bound per seller is required")
        if np.any(self.upper < 0) or np.any(self.demand < 0):
            raise ValueError("upper bounds and demands must be non-negative")
        if not np.all((mat == 0) | (mat == 1)):
            raise ValueError("constraint matrix must be 0/1")

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def m(self) -> int:
        return len(self.demand)

    def with_cost(self, seller: int, value: float) -> "CoveringLp":
        costs = self.costs.copy()
        costs[seller] = value
        return CoveringLp(costs, self.upper, self.matrix, self.demand)


@dataclass(frozen=True)
class LpSolution:
    x: tuple
    objective: float
    status: str
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _run(costs, upper, matrix, demand) -> LpSolution:
    n, m = len(costs), len(demand)
    status, x, iters = _kernel(costs, upper, matrix, demand, TOLERANCE, None)
    if status == _simplex_py.INFEASIBLE:
        return LpSolution((), float("nan"), "infeasible", iters)
    if status == _simplex_py.ITERATION_LIMIT:
        raise SolverError(f"simplex iteration cap {10 * (n + m) ** 2} reached (cycling guard)")
    if status == _simplex_py.UNBOUNDED:
        raise SolverError("covering LP reported unbounded; objective must be bounded")
    obj = 0.0
    for c, v in zip(costs, x):
        obj += float(c) * v
    return LpSolution(tuple(x), obj, "optimal", iters)


def solve(problem: CoveringLp) -> LpSolution:
    """Optimal basic solution; identical inputs give identical vectors."""
    return _run(problem.costs, problem.upper, problem.matrix, problem.demand)


def solve_with_modified_cost(problem: CoveringLp, seller: int, cost: float) -> LpSolution:
    """Solve with coefficient ``seller`` (0-based) replaced by ``cost``."""
    if not 0 <= seller < problem.n:
        raise IndexError(seller)
    costs = problem.costs.copy()
    costs[seller] = cost
    return _run(costs, problem.upper, problem.matrix, problem.demand)


def solve_arrays(costs, upper, matrix, demand) -> Optional[tuple]:
    """Low-overhead entry for hot loops: ``x`` tuple, or ``None`` if infeasible."""
    sol = _run(costs, upper, matrix, demand)
    return sol.x if sol.optimal else None
