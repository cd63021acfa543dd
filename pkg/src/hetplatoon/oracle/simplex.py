"""Dense-tableau primal simplex with variable bounds and ranged rows.

Problem form::

    minimise    c @ x
    subject to  row_lo <= A @ x <= row_hi
                lb <= x <= ub

Every row gets a logical variable s = A @ x carrying the row range as its
bounds, so the working system is [A, -I] z = 0.  Rows that the starting
point violates get an artificial column (phase 1).  Artificial columns are
never stored: once one leaves the basis it can never come back.

Pricing is Dantzig's rule; after a run of degenerate pivots it falls back
to Bland's rule until progress resumes.  The tableau is re-factorised from
the original matrix every ``refactor_every`` pivots to contain drift.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


@dataclass
class SimplexResult:
    status: LpStatus
    x: np.ndarray
    objective: float
    iterations: int
    max_residual: float
    pivots: list  # (entering, leaving-row) per basis change, for determinism checks


class _Tableau:
    def __init__(self, A, row_lo, row_hi, lb, ub, tol):
        self.A = A
        m, n = A.shape
        self.m, self.n = m, n
        self.tol = tol
        self.lo = np.concatenate((lb, row_lo))
        self.hi = np.concatenate((ub, row_hi))
        N = n + m
        z = np.zeros(N)
        # start structurals at a finite bound (0 if free)
        z[:n] = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
        act = A @ z[:n]
        basis = np.empty(m, dtype=np.int64)
        sigma = np.zeros(m)
        beta = np.empty(m)
        for r in range(m):
            if row_lo[r] - tol <= act[r] <= row_hi[r] + tol:
                basis[r] = n + r
                beta[r] = act[r]
            else:
                target = row_lo[r] if act[r] < row_lo[r] else row_hi[r]
                z[n + r] = target
                sigma[r] = 1.0 if target > act[r] else -1.0
                basis[r] = N + r  # artificial for row r
                beta[r] = abs(target - act[r])
        self.z = z
        self.basis = basis
        self.sigma = sigma
        self.beta = beta
        self.art_hi = np.full(m, np.inf)
        self.is_basic = np.zeros(N, dtype=bool)
        self.is_basic[basis[basis < N]] = True
        self.refactor()

    # the matrix column of any variable, artificials included
    def column(self, j):
        N = self.n + self.m
        if j < self.n:
            return self.A[:, j]
        e = np.zeros(self.m)
        if j < N:
            e[j - self.n] = -1.0
        else:
            e[j - N] = self.sigma[j - N]
        return e

    def refactor(self):
        B = np.column_stack([self.column(j) for j in self.basis]) if self.m else np.zeros((0, 0))
        M = np.hstack((self.A, -np.eye(self.m)))
        nb = ~self.is_basic
        rhs = -(M[:, nb] @ self.z[nb])
        self.T = np.linalg.solve(B, M) if self.m else np.zeros((0, self.n))
        self.beta = np.linalg.solve(B, rhs) if self.m else np.zeros(0)

    def bounds_of_basic(self):
        N = self.n + self.m
        b = self.basis
        art = b >= N
        lo = np.where(art, 0.0, self.lo[np.minimum(b, N - 1)])
        hi = np.where(art, self.art_hi[np.where(art, b - N, 0)], self.hi[np.minimum(b, N - 1)])
        return lo, hi

    def reduced_costs(self, c_full):
        """c_full has length N + m (artificials last)."""
        N = self.n + self.m
        cb = c_full[self.basis]
        return c_full[:N] - cb @ self.T

    def pivot(self, r, q):
        T = self.T
        piv = T[r, q]
        T[r] /= piv
        col = T[:, q].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if len(nz):
            rc = np.flatnonzero(T[r])
            if 3 * len(rc) < T.shape[1]:
                # sparse pivot row: touch only the affected block
                T[np.ix_(nz, rc)] -= np.outer(col[nz], T[r, rc])
            else:
                T[nz] -= np.outer(col[nz], T[r])
        return col


def simplex(c, A, row_lo, row_hi, lb, ub, max_iters=None, tol=1e-9, refactor_every=400,
            degenerate_limit=50):
    """Solve the LP; see module docstring for the form."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    lb, ub = np.asarray(lb, float), np.asarray(ub, float)
    row_lo, row_hi = np.asarray(row_lo, float), np.asarray(row_hi, float)
    if np.any(lb > ub + tol) or np.any(row_lo > row_hi + tol):
        return SimplexResult(LpStatus.INFEASIBLE, np.full(n, np.nan), np.nan, 0, np.inf, [])
    max_iters = max_iters or 50 * (m + n + 10)
    tb = _Tableau(A, row_lo, row_hi, lb, ub, tol)
    N = n + m
    pivots = []
    it = 0

    def run(c_full):
        nonlocal it
        d = tb.reduced_costs(c_full)
        degenerate = 0
        since_refactor = 0
        while True:
            if it >= max_iters:
                return LpStatus.ITERATION_LIMIT
            free_move = tb.hi[:N] - tb.lo[:N] > tol
            at_lo = tb.z[:N] <= tb.lo[:N] + tol
            at_hi = tb.z[:N] >= tb.hi[:N] - tol
            nb = ~tb.is_basic & free_move
            up = nb & ~at_hi & (d < -tol)
            down = nb & ~at_lo & (d > tol)
            cand = np.flatnonzero(up | down)
            if len(cand) == 0:
                return LpStatus.OPTIMAL
            if degenerate >= degenerate_limit:
                q = int(cand[0])  # Bland
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if up[q] else -1.0
            alpha = -direction * tb.T[:, q]  # rate of change of basic values
            blo, bhi = tb.bounds_of_basic()
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = np.full(m, np.inf)
                dec = alpha < -tol
                inc = alpha > tol
                lim[dec] = (tb.beta[dec] - blo[dec]) / -alpha[dec]
                lim[inc] = (bhi[inc] - tb.beta[inc]) / alpha[inc]
            lim = np.maximum(lim, 0.0)
            flip = tb.hi[q] - tb.lo[q]
            theta = lim.min() if m else np.inf
            if flip <= theta:
                # bound flip, basis unchanged
                theta = flip
                if not np.isfinite(theta):
                    return LpStatus.UNBOUNDED
                tb.beta += alpha * theta
                tb.z[q] = tb.hi[q] if direction > 0 else tb.lo[q]
                it += 1
                degenerate = 0
                continue
            if not np.isfinite(theta):
                return LpStatus.UNBOUNDED
            ties = np.flatnonzero(lim <= theta + 1e-12)
            if degenerate >= degenerate_limit:
                r = int(ties[np.argmin(tb.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            tb.beta += alpha * theta
            leaving = int(tb.basis[r])
            enter_val = tb.z[q] + direction * theta
            if leaving < N:
                tb.is_basic[leaving] = False
                tb.z[leaving] = blo[r] if alpha[r] < 0 else bhi[r]
            tb.pivot(r, q)
            dq = d[q]
            d -= dq * tb.T[r]
            d[q] = 0.0
            tb.basis[r] = q
            tb.is_basic[q] = True
            tb.beta[r] = enter_val
            pivots.append((q, r))
            it += 1
            since_refactor += 1
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            if since_refactor >= refactor_every:
                tb.refactor()
                d = tb.reduced_costs(c_full)
                since_refactor = 0

    # phase 1: drive artificials to zero
    c1 = np.zeros(N + m)
    c1[N:] = 1.0
    if np.any(tb.basis >= N):
        st = run(c1)
        if st == LpStatus.ITERATION_LIMIT:
            return _result(tb, c, st, it, pivots)
        art_rows = np.flatnonzero(tb.basis >= N)
        infeas = tb.beta[art_rows].sum() if len(art_rows) else 0.0
        scale = max(1.0, np.abs(row_lo[np.isfinite(row_lo)]).max(initial=0.0),
                    np.abs(row_hi[np.isfinite(row_hi)]).max(initial=0.0))
        if infeas > 1e3 * tol * scale:
            return _result(tb, c, LpStatus.INFEASIBLE, it, pivots)
        # pivot remaining (zero-valued) artificials out where possible
        for r in art_rows:
            row = np.abs(tb.T[r, :N])
            row[tb.is_basic] = 0.0
            j = int(np.argmax(row)) if N else 0
            if N and row[j] > 1e-7:
                enter_val = tb.z[j]
                tb.pivot(r, j)
                tb.basis[r] = j
                tb.is_basic[j] = True
                tb.beta[r] = enter_val
                pivots.append((j, int(r)))
        tb.art_hi[:] = 0.0
        tb.refactor()
    c2 = np.zeros(N + m)
    c2[:n] = c
    st = run(c2)
    tb.refactor()
    return _result(tb, c, st, it, pivots)


def _result(tb, c, status, it, pivots):
    n, N = tb.n, tb.n + tb.m
    z = tb.z.copy()
    real = tb.basis < N
    z[tb.basis[real]] = tb.beta[real]
    x = z[:n]
    act = tb.A @ x
    res = max(
        np.max(np.maximum(tb.lo[n:N] - act, act - tb.hi[n:N]), initial=0.0),
        np.max(np.maximum(tb.lo[:n] - x, x - tb.hi[:n]), initial=0.0),
    )
    art_left = tb.beta[~real].sum() if (~real).any() else 0.0
    res = max(res, float(art_left))
    obj = float(c @ x)
    if status != LpStatus.OPTIMAL:
        obj = obj if status == LpStatus.ITERATION_LIMIT else float("nan")
    return SimplexResult(status, x, obj, it, float(res), pivots)
