"""Pure-Python bounded-variable primal simplex (fallback kernel).

Solves ``min h.x  s.t.  M x >= D,  0 <= x <= u`` with a dense tableau.
Columns are ordered ``x (n) | surplus (m) | artificial (m)``; upper bounds
are handled implicitly by letting nonbasic columns sit at either bound.
Entering and leaving choices follow Bland's lowest-index rule.

Must stay operation-for-operation identical to ``_csimplex.pyx`` so both
backends return bitwise-equal vectors.
"""
import math

OPTIMAL = 0
INFEASIBLE = 1
ITERATION_LIMIT = 2
UNBOUNDED = 3

INF = math.inf
TIE_EPS = 1e-12


def _iterate(T, beta, basis, at_upper, ub, cost, ncols, m, tol, max_iter, it):
    while True:
        # reduced costs, entering column by Bland's rule
        enter = -1
        for j in range(ncols):
            if ub[j] <= 0.0:
                continue
            isbasic = False
            for r in range(m):
                if basis[r] == j:
                    isbasic = True
                    break
            if isbasic:
                continue
            d = cost[j]
            for r in range(m):
                d -= cost[basis[r]] * T[r][j]
            if (not at_upper[j] and d < -tol) or (at_upper[j] and d > tol):
                enter = j
                break
        if enter < 0:
            return OPTIMAL, it
        if it >= max_iter:
            return ITERATION_LIMIT, it
        it += 1

        j = enter
        sigma = -1.0 if at_upper[j] else 1.0
        best = ub[j]
        leave = -1
        best_idx = j
        for r in range(m):
            a = sigma * T[r][j]
            k = basis[r]
            if a > tol:
                lim = beta[r] / a
            elif a < -tol and ub[k] < INF:
                lim = (ub[k] - beta[r]) / (-a)
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim < best - TIE_EPS or (lim <= best + TIE_EPS and k < best_idx):
                best = lim
                leave = r
                best_idx = k
        if best == INF:
            return UNBOUNDED, it

        delta = best
        for r in range(m):
            beta[r] -= sigma * delta * T[r][j]

        if leave < 0:
            at_upper[j] = not at_upper[j]
            continue

        k = basis[leave]
        a = sigma * T[leave][j]
        at_upper[k] = a < 0.0
        newval = delta if sigma > 0.0 else ub[j] - delta

        prow = T[leave]
        piv = prow[j]
        for c in range(ncols):
            prow[c] /= piv
        for r in range(m):
            if r == leave:
                continue
            row = T[r]
            f = row[j]
            if f != 0.0:
                for c in range(ncols):
                    row[c] -= f * prow[c]
        basis[leave] = j
        beta[leave] = newval
        at_upper[j] = False


def solve_bounded(h, u, M, D, tol=1e-9, max_iter=None):
    """Return ``(status, x, iterations)`` for the covering LP.

    ``M`` is a sequence of ``m`` rows of length ``n``.
    """
    n = len(h)
    m = len(D)
    ncols = n + 2 * m
    if max_iter is None:
        max_iter = 10 * (n + m) ** 2

    T = []
    for r in range(m):
        row = [0.0] * ncols
        for i in range(n):
            row[i] = float(M[r][i])
        row[n + r] = -1.0
        row[n + m + r] = 1.0
        T.append(row)
    beta = [float(d) for d in D]
    basis = [n + m + r for r in range(m)]
    at_upper = [False] * ncols
    ub = [float(x) for x in u] + [INF] * (2 * m)

    cost = [0.0] * n + [0.0] * m + [1.0] * m
    status, it = _iterate(T, beta, basis, at_upper, ub, cost, ncols, m, tol, max_iter, 0)
    if status != OPTIMAL:
        return status, None, it

    infeas = 0.0
    scale = 1.0
    for r in range(m):
        scale += abs(D[r])
        if basis[r] >= n + m:
            infeas += beta[r]
    if infeas > tol * scale:
        return INFEASIBLE, None, it

    for r in range(m):
        ub[n + m + r] = 0.0
        if basis[r] >= n + m and beta[r] < 0.0:
            beta[r] = 0.0
    cost = [float(v) for v in h] + [0.0] * (2 * m)
    status, it = _iterate(T, beta, basis, at_upper, ub, cost, ncols, m, tol, max_iter + it, it)
    if status != OPTIMAL:
        return status, None, it

    x = [0.0] * n
    for i in range(n):
        if at_upper[i]:
            x[i] = ub[i]
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = beta[r]
    for i in range(n):
        snap = tol * (1.0 + ub[i])
        if abs(x[i]) <= snap:
            x[i] = 0.0
        elif abs(x[i] - ub[i]) <= snap:
            x[i] = ub[i]
    return OPTIMAL, x, it
