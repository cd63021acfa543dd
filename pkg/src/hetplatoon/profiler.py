"""Closed-form speed profiles for vehicles in a platoon.

Every trajectory is bang-bang: cruise at v_max, brake, possibly wait at
rest, then accelerate so that the whole platoon is back at v_max at the
head's crossing time t_f1.  Trucks, and cars with no truck ahead, use the
homogeneous stop/no-stop forms.  A car behind a truck is shaped by its
closest preceding truck only.

Internally all times are local, s = t - t0, so that the arithmetic stays
small even when the schedule runs to 1e6 s.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import (ControlRegionTooShortError, InfeasibleCrossingError, MisclassificationError,
                     OutOfDomainError, ScheduleViolationError)
from .model import CAR, TRUCK, ScenarioConfig, SeparationTable, VehicleKind

REL_TOL = 1e-9


class TrajectoryCase(str, Enum):
    FULL_SPEED = "FullSpeed"
    UNCONSTRAINED_STOP = "UnconstrainedStop"
    UNCONSTRAINED_NO_STOP = "UnconstrainedNoStop"
    FOLLOW_STOPPING_TRUCK = "FollowStoppingTruck"
    SWITCH_DECEL_STOPPING_TRUCK = "SwitchDecelStoppingTruck"
    CATCH_AT_REST = "CatchAtRest"
    CATCH_IN_ACCEL_STOPPING_TRUCK = "CatchInAccelStoppingTruck"
    FOLLOW_MOVING_TRUCK = "FollowMovingTruck"
    SWITCH_DECEL_MOVING_TRUCK = "SwitchDecelMovingTruck"
    CATCH_IN_ACCEL_MOVING_TRUCK = "CatchInAccelMovingTruck"


C = TrajectoryCase
STOPPING_TRUCK_CASES = (C.FOLLOW_STOPPING_TRUCK, C.SWITCH_DECEL_STOPPING_TRUCK, C.CATCH_AT_REST,
                        C.CATCH_IN_ACCEL_STOPPING_TRUCK)
MOVING_TRUCK_CASES = (C.FOLLOW_MOVING_TRUCK, C.SWITCH_DECEL_MOVING_TRUCK, C.CATCH_IN_ACCEL_MOVING_TRUCK)


class Segment(NamedTuple):
    t_start: float
    t_end: float
    a: float
    x_start: float
    v_start: float

    def at(self, t):
        dt = t - self.t_start
        return (self.x_start + self.v_start * dt + 0.5 * self.a * dt * dt,
                self.v_start + self.a * dt, self.a)

    @property
    def x_end(self):
        return self.at(self.t_end)[0]

    @property
    def v_end(self):
        return self.v_start + self.a * (self.t_end - self.t_start)


@dataclass
class Trajectory:
    vehicle: str
    kind: VehicleKind
    t0: float
    tf: float
    x0: float
    v_max: float
    segments: list
    case: TrajectoryCase
    aux: dict = field(default_factory=dict)

    def __call__(self, t):
        return eval_trajectory(self, t)

    @property
    def breakpoints(self):
        return [s.t_start for s in self.segments] + [self.segments[-1].t_end]


@dataclass
class Plan:
    """Case and phase layout in local time, before segments are built.

    ``phases`` is a list of (s_end, a); the first phase starts at s = 0.
    ``aux`` times are local as well.
    """
    case: TrajectoryCase
    delta: float
    phases: list
    aux: dict

    @property
    def s_dec(self):
        return self.aux.get("t_dec")


def _close(a, b, scale):
    return abs(a - b) <= REL_TOL * max(1.0, abs(scale))


# --- homogeneous forms ---------------------------------------------------

def plan_unconstrained(delta, offset, a, x0, v, case_tags=(C.UNCONSTRAINED_STOP, C.UNCONSTRAINED_NO_STOP)):
    """Stop / no-stop profile for a vehicle with only its own limit ``a``.

    ``offset`` = t_f - t_f1 is this vehicle's headway sum behind the head.
    """
    free = x0 / v
    e = delta - free
    if e < -REL_TOL * max(1.0, delta):
        raise InfeasibleCrossingError(f"Delta {delta:.12g} s is below the free-flow time {free:.12g} s")
    if e <= REL_TOL * max(1.0, delta):
        return Plan(C.FULL_SPEED, delta, [(delta, 0.0)], {})
    s_f1 = delta - offset
    stop_tag, nostop_tag = case_tags
    if e <= v / a or _close(e, v / a, delta):
        w = min(v, math.sqrt(a * v * e))
        u = v - w
        s_acc = s_f1 - w / a
        s_dec = s_acc - w / a
        phases = [(s_dec, 0.0), (s_acc, -a), (s_f1, a), (delta, 0.0)]
        aux = {"u": u, "t_dec": s_dec, "t_acc": s_acc}
        return Plan(nostop_tag, delta, phases, aux)
    s_stop = free - offset
    s_dec = s_stop - v / a
    s_acc = s_f1 - v / a
    phases = [(s_dec, 0.0), (s_stop, -a), (s_acc, 0.0), (s_f1, a), (delta, 0.0)]
    aux = {"u": 0.0, "t_dec": s_dec, "t_stop": s_stop, "t_acc": s_acc}
    return Plan(stop_tag, delta, phases, aux)


# --- car behind its closest preceding truck ------------------------------

def truck_stops(delta_j, x0, v, a_tr):
    """True when a truck with this Delta comes to a full stop."""
    e = delta_j - x0 / v
    return e > v / a_tr and not _close(e, v / a_tr, delta_j)


def stopping_truck_bounds(delta_j, x0, v, a_c, a_tr):
    """(CatchAtRest lower bound, SwitchDecel lower bound) on Delta_i."""
    return (x0 / v + 0.5 * v * (1 / a_tr + 1 / a_c),
            delta_j - 0.5 * v * (1 / a_tr - 1 / a_c))


def moving_truck_bound(delta_j, x0, v, a_c, a_tr):
    """Delta at which the switch speed u1 meets the truck's minimum u2."""
    return x0 / v + (a_c + a_tr) / (2 * a_c) * (delta_j - x0 / v)


def classify_case(delta_i, delta_j, x0, v, a_c, a_tr, truck_case=None):
    """Case of a car with Delta_i behind its closest preceding truck (Delta_j)."""
    free = x0 / v
    if delta_i > delta_j and not _close(delta_i, delta_j, delta_j):
        raise ScheduleViolationError(
            f"car Delta {delta_i:.12g} exceeds preceding truck Delta {delta_j:.12g}")
    if delta_i < free and not _close(delta_i, free, delta_i):
        raise InfeasibleCrossingError(f"Delta {delta_i:.12g} below free-flow time {free:.12g}")
    if _close(delta_i, free, delta_i):
        return C.FULL_SPEED
    stops = truck_stops(delta_j, x0, v, a_tr) if truck_case is None else truck_case == C.UNCONSTRAINED_STOP
    if _close(delta_i, delta_j, delta_j):
        return C.FOLLOW_STOPPING_TRUCK if stops else C.FOLLOW_MOVING_TRUCK
    if stops:
        rest_lo, switch_lo = stopping_truck_bounds(delta_j, x0, v, a_c, a_tr)
        if delta_i > switch_lo and not _close(delta_i, switch_lo, delta_j):
            return C.SWITCH_DECEL_STOPPING_TRUCK
        if delta_i > rest_lo and not _close(delta_i, rest_lo, delta_j):
            return C.CATCH_AT_REST
        if _close(delta_i, rest_lo, delta_j):
            return C.CATCH_IN_ACCEL_STOPPING_TRUCK
        return C.CATCH_IN_ACCEL_STOPPING_TRUCK
    star = moving_truck_bound(delta_j, x0, v, a_c, a_tr)
    if delta_i > star and not _close(delta_i, star, delta_j):
        return C.SWITCH_DECEL_MOVING_TRUCK
    return C.CATCH_IN_ACCEL_MOVING_TRUCK


def plan_car_behind_truck(case, delta_i, offset_i, delta_j, x0, v, a_c, a_tr):
    """Phase layout for the car-behind-truck cases (local time of the car)."""
    free = x0 / v
    e_i = delta_i - free
    s_f1 = delta_i - offset_i
    if case == C.FULL_SPEED:
        return Plan(C.FULL_SPEED, delta_i, [(delta_i, 0.0)], {"t_star": 0.0})
    if case in (C.FOLLOW_STOPPING_TRUCK, C.FOLLOW_MOVING_TRUCK):
        # the truck's own profile, just shifted back by the headway sum
        p = plan_unconstrained(delta_i, offset_i, a_tr, x0, v, (C.FOLLOW_STOPPING_TRUCK, C.FOLLOW_MOVING_TRUCK))
        if p.case != case:
            raise MisclassificationError(f"follow case resolved to {p.case.value}, expected {case.value}")
        p.aux["t_star"] = 0.0
        if case == C.FOLLOW_MOVING_TRUCK:
            p.aux["u1"] = p.aux["u2"] = p.aux.pop("u")
        return p

    if case == C.SWITCH_DECEL_STOPPING_TRUCK:
        w = _switch_drop(delta_j - delta_i, v, a_c, a_tr, case)
        u = v - w
        _check_speed(u, 0.0, v, case)
        # the truck comes to rest at this (car-local) instant
        s_stop = free - offset_i + (delta_i - delta_j)
        s_sw = s_stop - u / a_tr
        s_dec = s_sw - w / a_c
        s_acc = s_f1 - v / a_tr
        phases = [(s_dec, 0.0), (s_sw, -a_c), (s_stop, -a_tr), (s_acc, 0.0), (s_f1, a_tr), (delta_i, 0.0)]
        return Plan(case, delta_i, phases,
                    {"u": u, "t_dec": s_dec, "t_sw": s_sw, "t_stop": s_stop, "t_acc": s_acc, "t_star": s_sw})

    if case == C.CATCH_AT_REST:
        s_dec = free - offset_i - 0.5 * v * (1 / a_tr + 1 / a_c)
        s_stop = s_dec + v / a_c
        s_acc = s_f1 - v / a_tr
        phases = [(s_dec, 0.0), (s_stop, -a_c), (s_acc, 0.0), (s_f1, a_tr), (delta_i, 0.0)]
        return Plan(case, delta_i, phases,
                    {"u": 0.0, "t_dec": s_dec, "t_stop": s_stop, "t_acc": s_acc, "t_star": s_stop})

    if case in (C.CATCH_IN_ACCEL_STOPPING_TRUCK, C.CATCH_IN_ACCEL_MOVING_TRUCK):
        w = min(v, math.sqrt(2 * a_tr * a_c * v * e_i / (a_tr + a_c)))
        u = v - w
        aux = {}
        if case == C.CATCH_IN_ACCEL_MOVING_TRUCK:
            u2 = v - math.sqrt(a_tr * v * (delta_j - free))
            _check_speed(u, u2, v, case)
            aux = {"u1": u, "u2": u2}
        else:
            _check_speed(u, 0.0, v, case)
            aux = {"u": u}
        s_acc = s_f1 - w / a_tr
        s_dec = s_acc - w / a_c
        phases = [(s_dec, 0.0), (s_acc, -a_c), (s_f1, a_tr), (delta_i, 0.0)]
        aux.update(t_dec=s_dec, t_acc=s_acc, t_star=s_acc)
        return Plan(case, delta_i, phases, aux)

    if case == C.SWITCH_DECEL_MOVING_TRUCK:
        w2 = math.sqrt(a_tr * v * (delta_j - free))
        w1 = _switch_drop(delta_j - delta_i, v, a_c, a_tr, case)
        u1, u2 = v - w1, v - w2
        _check_speed(u1, u2, v, case)
        s_acc = s_f1 - w2 / a_tr
        s_sw = s_acc - (u1 - u2) / a_tr
        s_dec = s_sw - w1 / a_c
        phases = [(s_dec, 0.0), (s_sw, -a_c), (s_acc, -a_tr), (s_f1, a_tr), (delta_i, 0.0)]
        return Plan(case, delta_i, phases,
                    {"u1": u1, "u2": u2, "t_dec": s_dec, "t_sw": s_sw, "t_acc": s_acc, "t_star": s_sw})

    raise ValueError(f"not a car-behind-truck case: {case}")


def _switch_drop(lag, v, a_c, a_tr, case):
    """Speed drop before the car switches to the truck's deceleration.

    ``lag`` = Delta_j - Delta_i; the drop vanishes on the Follow boundary,
    which is the whole (single-point) domain when a_c == a_tr.
    """
    if lag <= 0.0:
        return 0.0
    if a_c <= a_tr:
        raise MisclassificationError(f"{case.value}: needs a_c > a_tr when Delta_i < Delta_j")
    return math.sqrt(2 * a_c * a_tr * v * lag / (a_c - a_tr))


def _check_speed(u, lo, hi, case):
    tol = 1e-9 * max(1.0, hi)
    if not (lo - tol <= u <= hi + tol):
        raise MisclassificationError(f"{case.value}: speed {u:.12g} outside [{lo:.12g}, {hi:.12g}]")


# --- platoons --------------------------------------------------------------

@dataclass
class PlatoonContext:
    """Everything the closed forms need about one platoon."""
    ids: list
    kinds: list
    t0: np.ndarray
    tf: np.ndarray
    delta: np.ndarray  # t_f - t0 per vehicle
    offset: np.ndarray  # t_f - t_f1, i.e. headway sum from the head
    truck_ahead: list  # index of closest preceding truck, or None
    x0: float
    v_max: float

    @property
    def t_f1(self):
        return float(self.tf[0])

    @classmethod
    def build(cls, kinds, t_a, t_f, x0, v_max, ids=None):
        kinds = [VehicleKind(int(k)) for k in kinds]
        t_a = np.asarray(t_a, dtype=float)
        t_f = np.asarray(t_f, dtype=float)
        free = x0 / v_max
        delta = (t_f - t_a) + free
        ahead, last = [], None
        for i, k in enumerate(kinds):
            ahead.append(last if k == CAR else None)
            if k == TRUCK:
                last = i
        return cls(ids=list(ids) if ids is not None else [str(i) for i in range(len(kinds))],
                   kinds=kinds, t0=t_a - free, tf=t_f, delta=delta, offset=t_f - t_f[0],
                   truck_ahead=ahead, x0=float(x0), v_max=float(v_max))

    @classmethod
    def from_platoon(cls, platoon, cfg: ScenarioConfig, x0=None):
        x0 = cfg.control_length[platoon.lane] if x0 is None else x0
        ids = [f"{platoon.lane}:{int(s)}" for s in platoon.seq]
        return cls.build(platoon.kind, platoon.t_a, platoon.t_f, x0, cfg.v_max, ids)


def plan_platoon(ctx: PlatoonContext, a_car, a_truck, check_region=True):
    """Plans for every vehicle: step 1 trucks and leading cars, step 2 the rest."""
    v, x0 = ctx.v_max, ctx.x0
    n = len(ctx.kinds)
    plans = [None] * n
    d, off = ctx.delta.tolist(), ctx.offset.tolist()
    for i in range(1, n):
        if d[i] > d[i - 1] and not _close(d[i], d[i - 1], d[i - 1]):
            raise ScheduleViolationError(
                f"vehicle {ctx.ids[i]}: Delta {d[i]:.12g} exceeds predecessor's {d[i - 1]:.12g}")
    for i in range(n):
        if ctx.truck_ahead[i] is None:
            a = a_truck if ctx.kinds[i] == TRUCK else a_car
            plans[i] = _wrap(ctx, i, lambda: plan_unconstrained(d[i], off[i], a, x0, v))
    for i in range(n):
        j = ctx.truck_ahead[i]
        if j is None:
            continue
        tcase = plans[j].case
        case = _wrap(ctx, i, lambda: classify_case(d[i], d[j], x0, v, a_car, a_truck,
                                                   None if tcase == C.FULL_SPEED else tcase))
        plans[i] = _wrap(ctx, i, lambda: plan_car_behind_truck(case, d[i], off[i], d[j], x0, v, a_car, a_truck))
    if check_region:
        for i, p in enumerate(plans):
            s_dec = p.aux.get("t_dec")
            if s_dec is not None and s_dec < -REL_TOL * max(1.0, p.delta):
                raise ControlRegionTooShortError(ctx.ids[i], x0 - v * s_dec, x0)
    return plans


def _wrap(ctx, i, fn):
    try:
        return fn()
    except (ScheduleViolationError, InfeasibleCrossingError, MisclassificationError) as e:
        e.args = (f"vehicle {ctx.ids[i]}: {e.args[0]}",)
        raise


def plan_decel_distance(plan: Plan, x0, v):
    """Distance from the intersection where braking starts (0 if never)."""
    s_dec = plan.aux.get("t_dec")
    if s_dec is None:
        return 0.0
    return x0 - v * s_dec


def build_trajectory(plan: Plan, t0, tf, x0, v, kind, vehicle="0"):
    """Integrate the phase list into exact segments."""
    segs = []
    x, vel, s_prev = -x0, v, 0.0
    scale = max(1.0, plan.delta)
    for s_end, a in plan.phases:
        dur = s_end - s_prev
        if dur < -REL_TOL * scale:
            raise MisclassificationError(
                f"vehicle {vehicle} ({plan.case.value}): phase ends {s_end:.12g} before it starts {s_prev:.12g}")
        if dur <= 0.0:
            continue
        segs.append(Segment(t0 + s_prev, t0 + s_end, a, x, vel))
        x += vel * dur + 0.5 * a * dur * dur
        vel += a * dur
        s_prev = s_end
    # pin the last boundary to the scheduled crossing time exactly
    last = segs[-1]
    segs[-1] = last._replace(t_end=tf)
    aux = {k: (t0 + val if k.startswith("t_") else val) for k, val in plan.aux.items()}
    return Trajectory(vehicle, VehicleKind(kind), t0, tf, x0, v, segs, plan.case, aux)


def profile_platoon(ctx: PlatoonContext, cfg_or_accels, check_region=True):
    """Closed-form trajectories for a whole platoon."""
    if isinstance(cfg_or_accels, ScenarioConfig):
        a_c, a_t = cfg_or_accels.car.a_max, cfg_or_accels.truck.a_max
    else:
        a_c, a_t = cfg_or_accels
    plans = plan_platoon(ctx, a_c, a_t, check_region)
    return [build_trajectory(p, float(ctx.t0[i]), float(ctx.tf[i]), ctx.x0, ctx.v_max, ctx.kinds[i], ctx.ids[i])
            for i, p in enumerate(plans)]


def trajectory_unconstrained(delta, t0, t_f1, kind, a_max, x0, v_max, vehicle="0"):
    """Single homogeneous trajectory; ``t_f1`` is the head's crossing time."""
    tf = t0 + delta
    p = plan_unconstrained(delta, tf - t_f1, a_max, x0, v_max)
    s_dec = p.aux.get("t_dec")
    if s_dec is not None and s_dec < -REL_TOL * max(1.0, delta):
        raise ControlRegionTooShortError(vehicle, x0 - v_max * s_dec, x0)
    return build_trajectory(p, t0, tf, x0, v_max, kind, vehicle)


# --- evaluation and checks ------------------------------------------------

def eval_trajectory(traj: Trajectory, t):
    """(x, v, a) at time t."""
    lo, hi = traj.segments[0].t_start, traj.segments[-1].t_end
    tol = 1e-12 * max(1.0, abs(hi))
    if not (lo - tol <= t <= hi + tol):
        raise OutOfDomainError(f"t={t} outside [{lo}, {hi}]")
    starts = [s.t_start for s in traj.segments]
    k = max(0, bisect.bisect_right(starts, t) - 1)
    return traj.segments[k].at(t)


def sample_trajectory(traj: Trajectory, times):
    """Vectorised evaluation; returns arrays x, v, a."""
    times = np.asarray(times, dtype=float)
    starts = np.array([s.t_start for s in traj.segments])
    k = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(starts) - 1)
    seg = np.array([tuple(s) for s in traj.segments])
    dt = times - seg[k, 0]
    a = seg[k, 2]
    return seg[k, 3] + seg[k, 4] * dt + 0.5 * a * dt * dt, seg[k, 4] + a * dt, a


def area(traj: Trajectory):
    """Integral of -x(t) over [t0, tf] (the objective the profiles minimise)."""
    tot = 0.0
    for s in traj.segments:
        d = s.t_end - s.t_start
        tot -= s.x_start * d + 0.5 * s.v_start * d * d + s.a * d ** 3 / 6.0
    return tot


def check_trajectory(traj: Trajectory, a_max, rtol=1e-9):
    """Boundary, continuity and compatibility checks.  Returns a list of problems."""
    out = []
    v, x0 = traj.v_max, traj.x0
    segs = traj.segments
    xtol = rtol * max(1.0, x0)
    vtol = rtol * max(1.0, v)
    ttol = rtol * max(1.0, abs(traj.tf))
    first, last = segs[0], segs[-1]
    if abs(first.t_start - traj.t0) > ttol:
        out.append(f"first segment starts at {first.t_start!r}, t0={traj.t0!r}")
    if abs(first.x_start + x0) > xtol or abs(first.v_start - v) > vtol:
        out.append(f"entry state ({first.x_start!r}, {first.v_start!r}) != (-x0, v_max)")
    if abs(last.t_end - traj.tf) > ttol:
        out.append(f"last segment ends at {last.t_end!r}, tf={traj.tf!r}")
    if abs(last.x_end) > xtol or abs(last.v_end - v) > vtol:
        out.append(f"crossing state ({last.x_end!r}, {last.v_end!r}) != (0, v_max)")
    for k, s in enumerate(segs):
        if s.t_end < s.t_start:
            out.append(f"segment {k} has negative duration")
        if abs(s.a) > a_max * (1 + rtol):
            out.append(f"segment {k}: |a|={abs(s.a)!r} > a_max={a_max!r}")
        for vv in (s.v_start, s.v_end):
            if vv < -vtol or vv > v + vtol:
                out.append(f"segment {k}: speed {vv!r} outside [0, v_max]")
        for xx in (s.x_start, s.x_end):
            if xx < -x0 - xtol or xx > xtol:
                out.append(f"segment {k}: position {xx!r} outside [-x0, 0]")
        # monotone speed within a segment, so endpoint checks above are exact
        if k + 1 < len(segs):
            nx = segs[k + 1]
            if abs(nx.t_start - s.t_end) > ttol:
                out.append(f"gap in time between segments {k} and {k + 1}")
            if abs(nx.x_start - s.x_end) > xtol or abs(nx.v_start - s.v_end) > vtol:
                out.append(f"discontinuity between segments {k} and {k + 1}")
    return out


@dataclass
class SafetyReport:
    min_gap: float
    t_min: float
    required: float
    violations: list  # (t, gap)

    @property
    def ok(self):
        return not self.violations


def _gap_pieces(leader, follower, lo, hi):
    """Yield (t_a, t_b, c0, c1, c2): gap = c0 + c1*(t-t_a) + c2*(t-t_a)^2 on [t_a, t_b]."""
    pts = sorted({lo, hi, *[t for t in leader.breakpoints + follower.breakpoints if lo < t < hi]})
    for ta, tb in zip(pts[:-1], pts[1:]):
        if tb <= ta:
            continue
        mid = 0.5 * (ta + tb)
        sl = leader.segments[_seg_index(leader, mid)]
        sf = follower.segments[_seg_index(follower, mid)]
        xl, vl, al = sl.at(ta)
        xf, vf, af = sf.at(ta)
        yield ta, tb, xl - xf, vl - vf, 0.5 * (al - af)


def _seg_index(traj, t):
    starts = [s.t_start for s in traj.segments]
    return min(len(starts) - 1, max(0, bisect.bisect_right(starts, t) - 1))


def check_safety(leader: Trajectory, follower: Trajectory, tau, v_max, atol=1e-6):
    """Exact minimum of x_leader - x_follower over [t0(follower), tf(leader)]."""
    lo = max(follower.t0, leader.t0)
    hi = leader.tf
    required = v_max * tau
    if hi < lo:
        return SafetyReport(math.inf, lo, required, [])
    best, t_best, viol = math.inf, lo, []
    for ta, tb, c0, c1, c2 in _gap_pieces(leader, follower, lo, hi):
        d = tb - ta
        cands = [(0.0, c0), (d, c0 + c1 * d + c2 * d * d)]
        if c2 > 0:
            r = -c1 / (2 * c2)
            if 0 < r < d:
                cands.append((r, c0 + c1 * r + c2 * r * r))
        r, g = min(cands, key=lambda p: p[1])
        if g < best:
            best, t_best = g, ta + r
        if g < required - atol:
            viol.append((ta + r, g))
    return SafetyReport(best, t_best, required, viol)


def decel_distance(traj: Trajectory):
    """Distance from the intersection at which braking starts; 0 for FullSpeed."""
    t_dec = traj.aux.get("t_dec")
    if traj.case == C.FULL_SPEED or t_dec is None:
        return 0.0
    return traj.x0 - traj.v_max * (t_dec - traj.t0)


def profile_schedule(platoons, cfg: ScenarioConfig, seps: SeparationTable = None, x0=None):
    """Trajectories for a list of platoons, in order."""
    out = []
    for p in platoons:
        ctx = PlatoonContext.from_platoon(p, cfg, x0)
        out.extend(profile_platoon(ctx, cfg))
    return out
