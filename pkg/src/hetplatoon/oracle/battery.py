"""A fixed set of platoons for cross-checking the closed forms against the LP.

The scenario is scaled down (v_max = 10 m/s, short control regions) so
that the LP stays small at h = 1/16 s.  Every crossing time, entry time
and headway lies on the 1/16 s grid, so no snapping is needed; each
platoon gets the shortest control region (multiple of 5 m, at least 50 m)
that leaves 5 m of cruising before the earliest deceleration.  Very short
regions would make the O(h) discretisation gap large relative to the
tiny objective.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..model import CAR, TRUCK, ScenarioConfig, VehicleParams, build_separation_table
from ..profiler import PlatoonContext, decel_distance, profile_platoon
from .lp import compare_oracle, discretize_platoon, solve_lp

BATTERY_CONFIG = ScenarioConfig(
    v_max=10.0, control_length=100.0, arrival_rate=(0.1, 0.1),
    car=VehicleParams(CAR, 4.0, 1.5), truck=VehicleParams(TRUCK, 2.0, 4.0),
    response_time=0.5, tolerance_gap=1.0,
)

# (kinds, delays t_f - t_a), head first
BATTERY = [
    ((CAR,), (0.0,)),
    ((CAR,), (1.5,)),
    ((CAR,), (4.0,)),
    ((TRUCK,), (3.0,)),
    ((TRUCK,), (7.0,)),
    ((TRUCK, CAR), (7.0, 7.0)),
    ((TRUCK, CAR), (7.0, 6.5)),
    ((TRUCK, CAR), (7.0, 5.0)),
    ((TRUCK, CAR), (7.0, 2.5)),
    ((TRUCK, CAR), (6.0, 4.0)),
    ((TRUCK, CAR), (3.0, 3.0)),
    ((TRUCK, CAR), (3.0, 2.75)),
    ((TRUCK, CAR), (3.0, 1.5)),
    ((CAR, TRUCK), (2.0, 2.0)),
    ((CAR, TRUCK), (3.0, 3.0)),
    ((CAR, CAR), (4.0, 3.0)),
    ((TRUCK, TRUCK), (6.0, 5.5)),
    ((TRUCK, CAR, CAR), (8.0, 7.5, 6.0)),
    ((TRUCK, CAR, CAR), (4.0, 3.5, 2.0)),
    ((TRUCK, CAR, CAR), (7.0, 7.0, 7.0)),
]


def battery_context(kinds, delays, cfg: ScenarioConfig = BATTERY_CONFIG, t_f1=100.0, margin=5.0, floor=50.0):
    """Platoon context for one battery entry, control region sized to fit."""
    same = build_separation_table(cfg).same
    tf = [t_f1]
    for p, f in zip(kinds[:-1], kinds[1:]):
        tf.append(tf[-1] + float(same[int(p), int(f)]))
    tf = np.array(tf)
    t_a = tf - np.asarray(delays, dtype=float)
    accels = (cfg.car.a_max, cfg.truck.a_max)
    # deceleration distances do not depend on x0, so probe with a long region
    probe = PlatoonContext.build(kinds, t_a, tf, 1e4, cfg.v_max)
    need = max(decel_distance(tr) for tr in profile_platoon(probe, accels))
    x0 = max(floor, 5.0 * math.ceil((need + margin) / 5.0))
    return PlatoonContext.build(kinds, t_a, tf, x0, cfg.v_max)


@dataclass
class BatteryResult:
    index: int
    kinds: str
    cases: list
    x0: float
    coarse: object  # OracleComparison at h
    fine: object  # OracleComparison at h/2
    seconds: float

    @property
    def ratio(self):
        g0, g1 = self.coarse.objective_gap, self.fine.objective_gap
        if g0 <= 1e-12:
            return 0.0 if g1 <= 1e-12 else math.inf
        return g1 / g0

    def to_dict(self):
        return {"index": self.index, "kinds": self.kinds, "cases": self.cases, "x0": self.x0,
                "coarse": self.coarse.to_dict(), "fine": self.fine.to_dict(), "ratio": self.ratio,
                "seconds": self.seconds}


def run_entry(index, kinds, delays, h=0.125, cfg: ScenarioConfig = BATTERY_CONFIG):
    ctx = battery_context(kinds, delays, cfg)
    accels = (cfg.car.a_max, cfg.truck.a_max)
    trajs = profile_platoon(ctx, accels)
    start = time.perf_counter()
    out = []
    for step in (h, h / 2):
        inst = discretize_platoon(ctx, accels, step, trajectories=trajs)
        out.append(compare_oracle(trajs, inst, solve_lp(inst)))
    return BatteryResult(index, "".join("T" if k == TRUCK else "C" for k in kinds), [t.case.value for t in trajs],
                         ctx.x0, out[0], out[1], time.perf_counter() - start)


def run_battery(h=0.125, entries=BATTERY, cfg: ScenarioConfig = BATTERY_CONFIG):
    return [run_entry(i, kinds, delays, h, cfg) for i, (kinds, delays) in enumerate(entries)]
