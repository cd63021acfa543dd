"""Discretised joint trajectory problem for one platoon, as a linear program.

Variables are positions x_i[k] of vehicle i at grid time origin + k*h.
Constraints: speed 0 <= x[k+1]-x[k] <= v h, acceleration
|x[k+1]-2x[k]+x[k-1]| <= a h^2, pinned entry/exit positions and first
differences, safety x_{i-1}[k] - x_i[k] >= v tau on shared nodes, and the
box -x0 <= x <= 0 (as variable bounds).  The objective is the trapezoid
approximation of the summed area under -x(t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameterError, ResolutionTooCoarseError
from ..profiler import PlatoonContext, area, profile_platoon, sample_trajectory
from .simplex import LpStatus, simplex

_SNAP = 1e-9


@dataclass
class VehicleWindow:
    k0: int
    k1: int
    start: int  # index of x_i[k0] in the variable vector
    a_max: float
    x_first: float  # pinned position at k0
    x_last: float  # pinned position at k1

    @property
    def size(self):
        return self.k1 - self.k0 + 1

    def var(self, k):
        return self.start + k - self.k0


@dataclass
class LpInstance:
    h: float
    origin: float
    v_max: float
    windows: list
    lb: np.ndarray
    ub: np.ndarray
    rows: list  # (label, idx array, coef array, lo, hi)
    c: np.ndarray
    names: list = field(default_factory=list)

    @property
    def n_vars(self):
        return len(self.lb)

    def matrix(self):
        A = np.zeros((len(self.rows), self.n_vars))
        for r, (_, idx, coef, _, _) in enumerate(self.rows):
            A[r, idx] += coef
        lo = np.array([row[3] for row in self.rows])
        hi = np.array([row[4] for row in self.rows])
        return A, lo, hi

    def times(self, i):
        w = self.windows[i]
        return self.origin + self.h * np.arange(w.k0, w.k1 + 1)

    def split(self, x):
        return [x[w.start:w.start + w.size] for w in self.windows]

    def residuals(self, x):
        """Largest violation per constraint family, for a candidate x."""
        out = {"bounds": float(np.max(np.maximum(self.lb - x, x - self.ub), initial=0.0))}
        for label, idx, coef, lo, hi in self.rows:
            fam = label.split("[")[0]
            val = float(coef @ x[idx])
            out[fam] = max(out.get(fam, 0.0), lo - val, val - hi, 0.0)
        return out


def _grid_index(t, origin, h, outward):
    q = (t - origin) / h
    r = round(q)
    if abs(q - r) <= _SNAP * max(1.0, abs(q)):
        return int(r)
    return int(math.floor(q) if outward < 0 else math.ceil(q))


def discretize_platoon(ctx: PlatoonContext, accels, h, taus=None, trajectories=None):
    """Build the LP for a platoon on a grid of step ``h``.

    ``accels`` is (a_car, a_truck).  ``taus[i]`` is the required headway
    between vehicles i-1 and i; by default the scheduled ones.  Entry and
    crossing times off the grid are rounded outward and the pinned
    positions are extended at v_max.
    """
    if not h > 0:
        raise InvalidParameterError("h must be positive")
    a_c, a_t = accels
    v, x0 = ctx.v_max, ctx.x0
    trajs = trajectories if trajectories is not None else profile_platoon(ctx, accels)
    shortest = min(s.t_end - s.t_start for tr in trajs for s in tr.segments
                   if s.t_end - s.t_start > 1e-9 * max(1.0, abs(s.t_end)))
    if h > shortest * (1 + 1e-9):
        raise ResolutionTooCoarseError(f"h={h} exceeds the shortest trajectory phase {shortest:.6g} s")
    n = len(ctx.kinds)
    if taus is None:
        taus = [0.0] + [float(ctx.offset[i] - ctx.offset[i - 1]) for i in range(1, n)]
    # the earliest entry sits exactly on the grid; later ones snap outward
    origin = float(ctx.t0.min())
    windows, lb, ub, names = [], [], [], []
    start = 0
    for i in range(n):
        k0 = _grid_index(ctx.t0[i], origin, h, -1)
        k1 = _grid_index(ctx.tf[i], origin, h, +1)
        if k1 - k0 < 3:
            raise ResolutionTooCoarseError(f"vehicle {ctx.ids[i]}: window shorter than 3 steps at h={h}")
        early = ctx.t0[i] - (origin + k0 * h)
        late = origin + k1 * h - ctx.tf[i]
        first, last = -x0 - v * max(early, 0.0), v * max(late, 0.0)
        a = a_t if int(ctx.kinds[i]) == 1 else a_c
        w = VehicleWindow(k0, k1, start, a, first, last)
        windows.append(w)
        size = w.size
        lo = np.full(size, first)
        hi = np.full(size, last)
        # pinned entry/exit positions and first differences
        for k, val in ((0, first), (1, first + v * h), (size - 2, last - v * h), (size - 1, last)):
            lo[k] = hi[k] = val
        lb.append(lo)
        ub.append(hi)
        names += [f"x{i}_{k}" for k in range(k0, k1 + 1)]
        start += size
    lb, ub = np.concatenate(lb), np.concatenate(ub)
    rows = []
    c = np.zeros(start)
    for i, w in enumerate(windows):
        base = w.start
        for k in range(w.size - 1):
            rows.append((f"vel[{i},{w.k0 + k}]", np.array([base + k, base + k + 1]), np.array([-1.0, 1.0]),
                         0.0, v * h))
        lim = w.a_max * h * h
        for k in range(1, w.size - 1):
            rows.append((f"acc[{i},{w.k0 + k}]", np.array([base + k - 1, base + k, base + k + 1]),
                         np.array([1.0, -2.0, 1.0]), -lim, lim))
        wts = np.ones(w.size)
        wts[0] = wts[-1] = 0.5
        c[base:base + w.size] = -h * wts
    for i in range(1, n):
        p, f = windows[i - 1], windows[i]
        need = v * taus[i]
        for k in range(max(p.k0, f.k0), min(p.k1, f.k1) + 1):
            rows.append((f"safe[{i - 1},{i},{k}]", np.array([p.var(k), f.var(k)]), np.array([1.0, -1.0]),
                         need, np.inf))
    return LpInstance(h, origin, v, windows, lb, ub, rows, c, names)


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective: float
    iterations: int
    max_residual: float
    pivots: list

    def positions(self, inst: LpInstance):
        return inst.split(self.x)


def solve_lp(inst: LpInstance, max_iters=None, tol=1e-9) -> LpSolution:
    A, lo, hi = inst.matrix()
    r = simplex(inst.c, A, lo, hi, inst.lb, inst.ub, max_iters=max_iters, tol=tol)
    return LpSolution(r.status, r.x, r.objective, r.iterations, r.max_residual, r.pivots)


def sample_closed_form(inst: LpInstance, trajs):
    """Closed-form positions on each vehicle's grid (linear at v_max outside [t0, tf])."""
    out = []
    for i, tr in enumerate(trajs):
        t = inst.times(i)
        ti = np.clip(t, tr.t0, tr.tf)
        x, _, _ = sample_trajectory(tr, ti)
        x = x + tr.v_max * (t - ti)
        out.append(x)
    return out


@dataclass
class OracleComparison:
    h: float
    status: str
    lp_objective: float
    closed_form_objective: float
    closed_form_on_grid_objective: float
    objective_gap: float  # |lp - closed form| / closed form
    max_pointwise_gap: float
    closed_form_residuals: dict
    closed_form_feasible: bool
    slack: float
    dominance_violations: int
    worst_dominance: float
    iterations: int

    def to_dict(self):
        return dict(self.__dict__)


def compare_oracle(trajs, inst: LpInstance, sol: LpSolution) -> OracleComparison:
    """Closed forms against the LP optimum on the same grid."""
    cf = sample_closed_form(inst, trajs)
    x_cf = np.concatenate(cf)
    cf_area = float(sum(area(t) for t in trajs))
    res = inst.residuals(x_cf)
    slack = max(w.a_max for w in inst.windows) * inst.h ** 2
    feasible = all(v <= slack * (1 + 1e-9) + 1e-9 for v in res.values())
    if sol.status != LpStatus.OPTIMAL:
        return OracleComparison(inst.h, sol.status.value, float("nan"), cf_area, float(inst.c @ x_cf),
                                float("nan"), float("nan"), res, feasible, slack, 0, 0.0, sol.iterations)
    lp = sol.positions(inst)
    gaps, dom, worst = [], 0, 0.0
    for w, a, b in zip(inst.windows, cf, lp):
        gaps.append(np.max(np.abs(a - b)))
        budget = w.a_max * inst.h ** 2 * (w.size - 1)
        excess = b - a - budget
        dom += int(np.sum(excess > 0))
        worst = max(worst, float(np.max(b - a)))
    return OracleComparison(
        h=inst.h, status=sol.status.value, lp_objective=sol.objective, closed_form_objective=cf_area,
        closed_form_on_grid_objective=float(inst.c @ x_cf),
        objective_gap=abs(sol.objective - cf_area) / cf_area if cf_area else abs(sol.objective),
        max_pointwise_gap=float(max(gaps)), closed_form_residuals=res, closed_form_feasible=feasible,
        slack=slack, dominance_violations=dom, worst_dominance=worst, iterations=sol.iterations,
    )


def to_lp_format(inst: LpInstance) -> str:
    """CPLEX-style LP text, handy for checking against an external solver."""
    def term(coef, name, first):
        coef = float(coef)
        sign = "-" if coef < 0 else ("" if first else "+")
        mag = abs(coef)
        return f"{sign} {name}" if mag == 1 else f"{sign} {mag!r} {name}"

    lines = ["\\ platoon trajectory LP", "Minimize", " obj:"]
    objs = [term(inst.c[j], inst.names[j], k == 0) for k, j in enumerate(np.flatnonzero(inst.c))]
    lines += ["  " + " ".join(objs[s:s + 8]) for s in range(0, len(objs), 8)]
    lines.append("Subject To")
    for label, idx, coef, lo, hi in inst.rows:
        lo, hi = float(lo), float(hi)
        expr = " ".join(term(cf, inst.names[j], k == 0) for k, (j, cf) in enumerate(zip(idx, coef)))
        tag = label.replace("[", "_").replace("]", "").replace(",", "_")
        if lo == hi:
            lines.append(f" {tag}: {expr} = {lo!r}")
        else:
            if np.isfinite(lo):
                lines.append(f" {tag}_lo: {expr} >= {lo!r}")
            if np.isfinite(hi):
                lines.append(f" {tag}_hi: {expr} <= {hi!r}")
    lines.append("Bounds")
    for name, lo, hi in zip(inst.names, inst.lb.tolist(), inst.ub.tolist()):
        lines.append(f" {name} = {lo!r}" if lo == hi else f" {lo!r} <= {name} <= {hi!r}")
    lines.append("End")
    return "\n".join(lines) + "\n"
