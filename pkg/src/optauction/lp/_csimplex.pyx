# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled bounded-variable primal simplex.

Mirrors ``_simplex_py`` pivot for pivot; keep the two in lockstep.
"""
from libc.math cimport INFINITY, fabs
from libc.stdlib cimport malloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF TIE_EPS = 1e-12

cdef int OPTIMAL = 0
cdef int INFEASIBLE = 1
cdef int ITERATION_LIMIT = 2
cdef int UNBOUNDED = 3


cdef int _iterate(double* T, double* beta, int* basis, char* inbasis, char* at_upper,
                  double* ub, double* cost, int ncols, int m, double tol,
                  long max_iter, long* it) nogil:
    cdef int j, r, c, k, enter, leave, best_idx
    cdef double d, a, lim, best, sigma, delta, newval, piv, f
    cdef double* prow
    cdef double* row
    while True:
        enter = -1
        for j in range(ncols):
            if ub[j] <= 0.0 or inbasis[j]:
                continue
            d = cost[j]
            for r in range(m):
                d -= cost[basis[r]] * T[r * ncols + j]
            if (not at_upper[j] and d < -tol) or (at_upper[j] and d > tol):
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        if it[0] >= max_iter:
            return ITERATION_LIMIT
        it[0] += 1

        j = enter
        sigma = -1.0 if at_upper[j] else 1.0
        best = ub[j]
        leave = -1
        best_idx = j
        for r in range(m):
            a = sigma * T[r * ncols + j]
            k = basis[r]
            if a > tol:
                lim = beta[r] / a
            elif a < -tol and ub[k] < INFINITY:
                lim = (ub[k] - beta[r]) / (-a)
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim < best - TIE_EPS or (lim <= best + TIE_EPS and k < best_idx):
                best = lim
                leave = r
                best_idx = k
        if best == INFINITY:
            return UNBOUNDED

        delta = best
        for r in range(m):
            beta[r] -= sigma * delta * T[r * ncols + j]

        if leave < 0:
            at_upper[j] = 0 if at_upper[j] else 1
            continue

        k = basis[leave]
        a = sigma * T[leave * ncols + j]
        at_upper[k] = 1 if a < 0.0 else 0
        newval = delta if sigma > 0.0 else ub[j] - delta

        prow = T + leave * ncols
        piv = prow[j]
        for c in range(ncols):
            prow[c] /= piv
        for r in range(m):
            if r == leave:
                continue
            row = T + r * ncols
            f = row[j]
            if f != 0.0:
                for c in range(ncols):
                    row[c] -= f * prow[c]
        inbasis[k] = 0
        inbasis[j] = 1
        basis[leave] = j
        beta[leave] = newval
        at_upper[j] = 0


def solve_bounded(h, u, M, D, double tol=1e-9, max_iter=None):
    """Return ``(status, x, iterations)``; same contract as the Python kernel."""
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] dv = np.ascontiguousarray(D, dtype=np.float64)
    cdef int n = hv.shape[0]
    cdef int m = dv.shape[0]
    cdef double[:, ::1] mv = np.ascontiguousarray(np.asarray(M, dtype=np.float64).reshape(m, n))
    cdef int ncols = n + 2 * m
    cdef long cap
    if max_iter is None:
        cap = 10 * (n + m) * (n + m)
    else:
        cap = max_iter

    cdef double* T = <double*> malloc(max(1, m * ncols) * sizeof(double))
    cdef double* beta = <double*> malloc(max(1, m) * sizeof(double))
    cdef int* basis = <int*> malloc(max(1, m) * sizeof(int))
    cdef char* inbasis = <char*> malloc(max(1, ncols) * sizeof(char))
    cdef char* at_upper = <char*> malloc(max(1, ncols) * sizeof(char))
    cdef double* ub = <double*> malloc(max(1, ncols) * sizeof(double))
    cdef double* cost = <double*> malloc(max(1, ncols) * sizeof(double))
    cdef int r, i, c, status
    cdef long it = 0
    cdef double infeas, scale, snap
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x
    try:
        for r in range(m):
            for c in range(ncols):
                T[r * ncols + c] = 0.0
            for i in range(n):
                T[r * ncols + i] = mv[r, i]
            T[r * ncols + n + r] = -1.0
            T[r * ncols + n + m + r] = 1.0
            beta[r] = dv[r]
            basis[r] = n + m + r
        for c in range(ncols):
            inbasis[c] = 0
            at_upper[c] = 0
            ub[c] = uv[c] if c < n else INFINITY
            cost[c] = 1.0 if c >= n + m else 0.0
        for r in range(m):
            inbasis[n + m + r] = 1

        with nogil:
            status = _iterate(T, beta, basis, inbasis, at_upper, ub, cost, ncols, m, tol, cap, &it)
        if status != OPTIMAL:
            return status, None, it

        infeas = 0.0
        scale = 1.0
        for r in range(m):
            scale += fabs(dv[r])
            if basis[r] >= n + m:
                infeas += beta[r]
        if infeas > tol * scale:
            return INFEASIBLE, None, it

        for r in range(m):
            ub[n + m + r] = 0.0
            if basis[r] >= n + m and beta[r] < 0.0:
                beta[r] = 0.0
        for c in range(ncols):
            cost[c] = hv[c] if c < n else 0.0
        cap = cap + it
        with nogil:
            status = _iterate(T, beta, basis, inbasis, at_upper, ub, cost, ncols, m, tol, cap, &it)
        if status != OPTIMAL:
            return status, None, it

        x = np.zeros(n, dtype=np.float64)
        for i in range(n):
            if at_upper[i]:
                x[i] = ub[i]
        for r in range(m):
            if basis[r] < n:
                x[basis[r]] = beta[r]
        for i in range(n):
            snap = tol * (1.0 + ub[i])
            if fabs(x[i]) <= snap:
                x[i] = 0.0
            elif fabs(x[i] - ub[i]) <= snap:
                x[i] = ub[i]
        return OPTIMAL, x.tolist(), it
    finally:
        free(T)
        free(beta)
        free(basis)
        free(inbasis)
        free(at_upper)
        free(ub)
        free(cost)
