import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from hetplatoon.errors import (ControlRegionTooShortError, InfeasibleCrossingError, OutOfDomainError,
                               ScheduleViolationError)
from hetplatoon.model import CAR, PAPER_DEFAULTS, TRUCK, build_separation_table
from hetplatoon.profiler import (MOVING_TRUCK_CASES, STOPPING_TRUCK_CASES, PlatoonContext, Segment, Trajectory,
                                 TrajectoryCase as C, area, build_trajectory, check_safety, check_trajectory,
                                 classify_case, decel_distance, eval_trajectory, moving_truck_bound,
                                 plan_car_behind_truck, plan_platoon, plan_unconstrained, profile_platoon,
                                 sample_trajectory, stopping_truck_bounds, trajectory_unconstrained)

V, X0, AC, AT = 20.0, 600.0, 4.0, 2.0
FREE = X0 / V
SEPS = build_separation_table(PAPER_DEFAULTS)
T_F1 = 1000.0


def platoon(kinds, deltas, x0=X0, v=V, t_f1=T_F1, seps=SEPS):
    """Context for vehicles with given Delta, chained at exact same-lane headway."""
    tf = [t_f1]
    for p, f in zip(kinds[:-1], kinds[1:]):
        tf.append(tf[-1] + seps.same[p, f])
    tf = np.array(tf)
    t_a = tf - (np.asarray(deltas, float) - x0 / v)
    return PlatoonContext.build(kinds, t_a, tf, x0, v)


def profile(kinds, deltas, **kw):
    return profile_platoon(platoon(kinds, deltas, **kw), (AC, AT))


# --- worked examples ------------------------------------------------------------

def test_full_speed():
    (tr,) = profile([CAR], [30.0])
    assert tr.case == C.FULL_SPEED
    assert len(tr.segments) == 1
    x, v, a = eval_trajectory(tr, tr.t0 + X0 / (2 * V))
    assert (x, v, a) == pytest.approx((-300.0, 20.0, 0.0))


def test_truck_no_stop_min_speed():
    (tr,) = profile([TRUCK], [35.0])
    assert tr.case == C.UNCONSTRAINED_NO_STOP
    assert tr.aux["u"] == pytest.approx(20 - math.sqrt(200), abs=1e-12)
    assert tr.aux["u"] == pytest.approx(5.8579, abs=1e-4)


def test_truck_stop_example():
    (tr,) = profile([TRUCK], [45.0])
    assert tr.case == C.UNCONSTRAINED_STOP
    assert tr.aux["t_dec"] == pytest.approx(tr.t0 + 20.0)
    assert tr.aux["t_stop"] == pytest.approx(tr.t0 + 30.0)
    assert eval_trajectory(tr, tr.aux["t_stop"]) == pytest.approx((-100.0, 0.0, 0.0), abs=1e-9)
    assert decel_distance(tr) == pytest.approx(200.0)


def test_terminal_state():
    for d in (30.0, 33.0, 45.0):
        (tr,) = profile([TRUCK], [d])
        x, v, _ = eval_trajectory(tr, tr.tf)
        assert x == pytest.approx(0.0, abs=1e-9) and v == pytest.approx(V)


def test_stopping_truck_thresholds():
    rest_lo, switch_lo = stopping_truck_bounds(45.0, X0, V, AC, AT)
    assert rest_lo == pytest.approx(37.5)
    assert switch_lo == pytest.approx(42.5)
    assert classify_case(44.0, 45.0, X0, V, AC, AT) == C.SWITCH_DECEL_STOPPING_TRUCK
    assert classify_case(45.0, 45.0, X0, V, AC, AT) == C.FOLLOW_STOPPING_TRUCK
    assert classify_case(40.0, 45.0, X0, V, AC, AT) == C.CATCH_AT_REST
    assert classify_case(35.0, 45.0, X0, V, AC, AT) == C.CATCH_IN_ACCEL_STOPPING_TRUCK
    assert classify_case(30.0, 45.0, X0, V, AC, AT) == C.FULL_SPEED


def test_moving_truck_threshold():
    assert moving_truck_bound(35.0, X0, V, AC, AT) == pytest.approx(33.75)
    assert classify_case(34.0, 35.0, X0, V, AC, AT) == C.SWITCH_DECEL_MOVING_TRUCK
    assert classify_case(32.0, 35.0, X0, V, AC, AT) == C.CATCH_IN_ACCEL_MOVING_TRUCK
    assert classify_case(35.0, 35.0, X0, V, AC, AT) == C.FOLLOW_MOVING_TRUCK


def test_switch_decel_behind_stopping_truck():
    tr, car = profile([TRUCK, CAR], [45.0, 44.0])
    assert car.case == C.SWITCH_DECEL_STOPPING_TRUCK
    assert car.aux["u"] == pytest.approx(20 - math.sqrt(160), abs=1e-12)
    assert car.aux["u"] == pytest.approx(7.3509, abs=1e-4)


def test_catch_at_rest_decel_time():
    _, car = profile([TRUCK, CAR], [45.0, 40.0])
    assert car.case == C.CATCH_AT_REST
    assert car.aux["t_dec"] == pytest.approx(T_F1 - 17.5, abs=1e-9)


def test_behind_moving_truck_examples():
    _, car = profile([TRUCK, CAR], [35.0, 34.0])
    assert car.case == C.SWITCH_DECEL_MOVING_TRUCK
    assert car.aux["u1"] == pytest.approx(20 - math.sqrt(160), abs=1e-12)
    assert car.aux["u2"] == pytest.approx(20 - math.sqrt(200), abs=1e-12)
    _, car = profile([TRUCK, CAR], [35.0, 32.0])
    assert car.case == C.CATCH_IN_ACCEL_MOVING_TRUCK
    assert car.aux["u1"] == pytest.approx(20 - math.sqrt(320 / 3), abs=1e-12)
    assert car.aux["u1"] == pytest.approx(9.672, abs=1e-3)
    assert car.aux["u1"] >= car.aux["u2"]


def test_three_vehicle_platoon_cases():
    trajs = profile([TRUCK, CAR, CAR], [45.0, 44.0, 40.0])
    assert [t.case for t in trajs] == [C.UNCONSTRAINED_STOP, C.SWITCH_DECEL_STOPPING_TRUCK, C.CATCH_AT_REST]


def test_cars_only_are_independent():
    trajs = profile([CAR, CAR, CAR], [40.0, 38.0, 33.0])
    solo = trajectory_unconstrained(38.0, trajs[1].t0, T_F1, CAR, AC, X0, V)
    assert [tuple(s) for s in solo.segments] == [tuple(s) for s in trajs[1].segments]


def test_follow_is_shifted_truck():
    tr, car = profile([TRUCK, CAR], [45.0, 45.0])
    shift = car.tf - tr.tf
    t = np.linspace(car.t0, tr.tf, 500)
    xc, vc, ac = sample_trajectory(car, t)
    xt, vt, at = sample_trajectory(tr, t)
    # lock-step: same speed at the same instant, a constant v*tau behind
    assert np.allclose(xt - xc, V * shift, atol=1e-9) and np.allclose(vc, vt, atol=1e-9)
    s = check_safety(tr, car, SEPS.same[TRUCK, CAR], V)
    assert s.ok and s.min_gap == pytest.approx(V * SEPS.same[TRUCK, CAR], abs=1e-9)
    assert decel_distance(car) == pytest.approx(decel_distance(tr) + V * shift)


def test_safety_gap_minimum_at_tstar():
    tr, car = profile([TRUCK, CAR], [45.0, 44.0])
    s = check_safety(tr, car, SEPS.same[TRUCK, CAR], V)
    assert s.ok
    assert s.min_gap == pytest.approx(V * SEPS.same[TRUCK, CAR], abs=1e-9)
    assert s.t_min >= car.aux["t_star"] - 1e-9


def test_shifted_follower_violates():
    tr, car = profile([TRUCK, CAR], [45.0, 45.0])
    shifted = Trajectory(car.vehicle, car.kind, car.t0 - 1, car.tf - 1, car.x0, V,
                         [s._replace(t_start=s.t_start - 1, t_end=s.t_end - 1) for s in car.segments], car.case)
    assert not check_safety(tr, shifted, SEPS.same[TRUCK, CAR], V).ok


# --- errors --------------------------------------------------------------------

def test_delta_below_free_flow():
    with pytest.raises(InfeasibleCrossingError):
        plan_unconstrained(29.0, 0.0, AT, X0, V)


def test_region_too_short_reports_x0():
    # a stopping truck brakes over v^2/a = 200 m whatever its delay
    x0 = 150.0
    with pytest.raises(ControlRegionTooShortError) as ei:
        profile([TRUCK], [x0 / V + 40.0], x0=x0)
    assert ei.value.required_x0 == pytest.approx(V * V / AT)
    assert str(ei.value.vehicle) == "0"
    with pytest.raises(ControlRegionTooShortError):
        trajectory_unconstrained(x0 / V + 40.0, 0.0, x0 / V + 40.0, TRUCK, AT, x0, V)
    profile([TRUCK], [200.0 / V + 40.0], x0=200.0)  # exactly long enough


def test_delta_increasing_in_platoon_rejected():
    with pytest.raises(ScheduleViolationError):
        plan_platoon(platoon([TRUCK, CAR], [40.0, 44.0]), AC, AT)


def test_eval_out_of_domain():
    (tr,) = profile([CAR], [35.0])
    with pytest.raises(OutOfDomainError):
        eval_trajectory(tr, tr.tf + 1.0)


def test_area_matches_quadrature():
    for d in ([45.0, 44.0, 40.0], [35.0, 34.0, 31.0]):
        for tr in profile([TRUCK, CAR, CAR], d):
            t = np.linspace(tr.t0, tr.tf, 200001)
            x, _, _ = sample_trajectory(tr, t)
            assert area(tr) == pytest.approx(np.trapezoid(-x, t),
                                             rel=1e-8)


# --- case-boundary continuity ------------------------------------------------------

def _traj(plan, offset=3.0, x0=X0):
    tf = T_F1 + offset
    return build_trajectory(plan, tf - plan.delta, tf, x0, V, CAR)


def _max_dist(a, b):
    t = np.linspace(max(a.t0, b.t0), min(a.tf, b.tf), 4001)
    t = np.unique(np.concatenate((t, [bp for bp in a.breakpoints + b.breakpoints if t[0] <= bp <= t[-1]])))
    return float(np.max(np.abs(sample_trajectory(a, t)[0] - sample_trajectory(b, t)[0])))


def boundary_pairs(x0=X0, v=V, a_c=AC, a_tr=AT, off=3.0):
    free = x0 / v
    out = []
    dj = free + 15.0  # stopping truck
    rest_lo, switch_lo = stopping_truck_bounds(dj, x0, v, a_c, a_tr)
    out.append((dj, dj, C.FOLLOW_STOPPING_TRUCK, C.SWITCH_DECEL_STOPPING_TRUCK))
    out.append((switch_lo, dj, C.SWITCH_DECEL_STOPPING_TRUCK, C.CATCH_AT_REST))
    out.append((rest_lo, dj, C.CATCH_AT_REST, C.CATCH_IN_ACCEL_STOPPING_TRUCK))
    out.append((free, dj, C.CATCH_IN_ACCEL_STOPPING_TRUCK, C.FULL_SPEED))
    dj = free + 5.0  # moving truck
    star = moving_truck_bound(dj, x0, v, a_c, a_tr)
    out.append((dj, dj, C.FOLLOW_MOVING_TRUCK, C.SWITCH_DECEL_MOVING_TRUCK))
    out.append((star, dj, C.SWITCH_DECEL_MOVING_TRUCK, C.CATCH_IN_ACCEL_MOVING_TRUCK))
    out.append((free, dj, C.CATCH_IN_ACCEL_MOVING_TRUCK, C.FULL_SPEED))
    return out


@pytest.mark.parametrize("k", range(7))
def test_case_boundary_continuity(k):
    di, dj, c1, c2 = boundary_pairs()[k]
    p1 = plan_car_behind_truck(c1, di, 3.0, dj, X0, V, AC, AT)
    p2 = plan_car_behind_truck(c2, di, 3.0, dj, X0, V, AC, AT)
    assert _max_dist(_traj(p1), _traj(p2)) <= 1e-8


def test_truck_mode_boundary_continuity():
    # the truck switches between stopping and not stopping at Delta_j = free + v/a_tr
    dj = FREE + V / AT
    for di in (dj - 0.5, moving_truck_bound(dj, X0, V, AC, AT) - 1.0, FREE + 2.0):
        c_stop = classify_case(di, dj, X0, V, AC, AT, C.UNCONSTRAINED_STOP)
        c_move = classify_case(di, dj, X0, V, AC, AT, C.UNCONSTRAINED_NO_STOP)
        assert c_stop in STOPPING_TRUCK_CASES and c_move in MOVING_TRUCK_CASES
        a = _traj(plan_car_behind_truck(c_stop, di, 3.0, dj, X0, V, AC, AT))
        b = _traj(plan_car_behind_truck(c_move, di, 3.0, dj, X0, V, AC, AT))
        assert _max_dist(a, b) <= 1e-8


def test_unconstrained_stop_boundary_continuity():
    for a in (AC, AT):
        e = V / a
        lo = _traj(plan_unconstrained(FREE + e * (1 - 1e-13), 3.0, a, X0, V))
        hi = _traj(plan_unconstrained(FREE + e * (1 + 1e-13), 3.0, a, X0, V))
        assert {lo.case, hi.case} <= {C.UNCONSTRAINED_STOP, C.UNCONSTRAINED_NO_STOP}
        assert _max_dist(lo, hi) <= 1e-8


# --- fuzzed platoons -----------------------------------------------------------------

@st.composite
def platoons(draw, max_len=6):
    n = draw(st.integers(1, max_len))
    kinds = [draw(st.sampled_from([CAR, TRUCK])) for _ in range(n)]
    e = [draw(st.floats(0.0, 40.0))]
    for _ in range(n - 1):
        e.append(draw(st.floats(0.0, 1.0)) * e[-1])
    if draw(st.booleans()) and n > 1:
        e[1] = e[0]  # exercise Follow cases
    return kinds, e


def fit_platoon(kinds, e, slack=0.0):
    """Context with a control region ``slack`` metres longer than every vehicle needs."""
    x0 = 100.0
    for _ in range(len(kinds) + 2):
        ctx = platoon(kinds, [x0 / V + x for x in e], x0=x0)
        try:
            plan_platoon(ctx, AC, AT)
            return platoon(kinds, [(x0 + slack) / V + x for x in e], x0=x0 + slack) if slack else ctx
        except ControlRegionTooShortError as err:
            x0 = math.ceil(err.required_x0) + 1.0
    raise AssertionError("required x0 did not settle")


@settings(max_examples=300)
@given(platoons())
def test_fuzzed_platoon_invariants(pl):
    ctx = fit_platoon(*pl)
    trajs = profile_platoon(ctx, (AC, AT))
    for tr in trajs:
        assert check_trajectory(tr, AC if tr.kind == CAR else AT) == []
        # decelerating vehicles are back at v_max exactly at the head's crossing time
        if tr.case != C.FULL_SPEED:
            assert sample_trajectory(tr, [ctx.t_f1])[1][0] == pytest.approx(V, abs=1e-9)
            assert all(s.a == 0.0 for s in tr.segments if s.t_start >= ctx.t_f1 - 1e-9)
    for a, b in zip(trajs[:-1], trajs[1:]):
        assert check_safety(a, b, SEPS.same[a.kind, b.kind], V).ok


@settings(max_examples=200)
@given(platoons())
def test_tstar_lock_on_and_velocity_order(pl):
    ctx = fit_platoon(*pl)
    trajs = profile_platoon(ctx, (AC, AT))
    for i, tr in enumerate(trajs):
        j = ctx.truck_ahead[i]
        if j is None or "t_star" not in tr.aux or tr.case == C.FULL_SPEED:
            continue
        truck = trajs[j]
        t_star = tr.aux["t_star"]
        gap = V * (tr.tf - truck.tf)
        t = np.linspace(t_star, truck.tf, 301)
        xc, vc, _ = sample_trajectory(tr, t)
        xt, vt, _ = sample_trajectory(truck, t)
        assert np.allclose(xt - xc, gap, atol=1e-7)
        assert np.allclose(vc, vt, atol=1e-7)
        # accelerations coincide segment by segment after T*
        for s in tr.segments:
            if s.t_start >= t_star + 1e-9 and s.t_end <= truck.tf:
                mid = 0.5 * (s.t_start + s.t_end)
                assert s.a == pytest.approx(sample_trajectory(truck, [mid])[2][0])
        t = np.linspace(tr.t0, t_star, 301)
        assert np.all(sample_trajectory(tr, t)[1] >= sample_trajectory(truck, t)[1] - 1e-7)


# --- dominance over competitor profiles ---------------------------------------------

def competitor(tr, b, a2, u):
    """Cruise, brake at b to speed u, cruise, accelerate at a2 to v_max at t_f1, cruise.

    Braking onset is solved from the distance condition; returns None when
    the profile does not fit the window.
    """
    v, x0 = tr.v_max, tr.x0
    s_f1 = T_F1 - tr.t0
    delta = tr.tf - tr.t0
    s2 = s_f1 - (v - u) / a2
    D = x0 - v * (delta - s_f1)
    if u >= v:
        return None
    rest = D - (v * v - u * u) / (2 * b) - u * (s2 - (v - u) / b) - (v * v - u * u) / (2 * a2)
    s1 = rest / (v - u)
    if s1 < 0 or s1 + (v - u) / b > s2 + 1e-12:
        return None
    phases = [(s1, 0.0), (s1 + (v - u) / b, -b), (s2, 0.0), (s_f1, a2), (delta, 0.0)]
    segs, x, vel, prev = [], -x0, v, 0.0
    for end, a in phases:
        d = end - prev
        if d > 0:
            segs.append(Segment(tr.t0 + prev, tr.t0 + end, a, x, vel))
            x += vel * d + 0.5 * a * d * d
            vel += a * d
            prev = end
    segs[-1] = segs[-1]._replace(t_end=tr.tf)
    return Trajectory("c", tr.kind, tr.t0, tr.tf, x0, v, segs, C.FULL_SPEED)


@settings(max_examples=200, suppress_health_check=[HealthCheck.filter_too_much])
@given(platoons(max_len=3), st.floats(0.3, 1.0), st.floats(0.3, 1.0), st.floats(0.0, 0.99))
def test_pointwise_dominance(pl, fb, fa, fu):
    ctx = fit_platoon(*pl, slack=500.0)
    trajs = profile_platoon(ctx, (AC, AT))
    i = len(trajs) - 1
    tr = trajs[i]
    assume(tr.case != C.FULL_SPEED)
    a_own = AC if tr.kind == CAR else AT
    # a shallower dip needs an earlier braking onset; deeper dips do not fit the window
    u_cf = tr.aux.get("u", tr.aux.get("u1", 0.0))
    comp = competitor(tr, fb * a_own, fa * a_own, u_cf + fu * (V - u_cf))
    assume(comp is not None)
    assume(check_trajectory(comp, a_own, rtol=1e-7) == [])
    if i > 0:
        lead = trajs[i - 1]
        assume(check_safety(lead, comp, SEPS.same[lead.kind, tr.kind], V).ok)
    t = np.linspace(tr.t0, tr.tf, 2001)
    assert np.all(sample_trajectory(tr, t)[0] >= sample_trajectory(comp, t)[0] - 1e-7)
    assert area(tr) <= area(comp) + 1e-7
