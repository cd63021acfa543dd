"""Invariant and safety checks over a schedule and its trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptedScheduleError
from .model import ScenarioConfig, SeparationTable, VehicleKind
from .profiler import check_safety, check_trajectory
from .scheduler import PLATOON_EPS, CrossingSchedule, extract_platoons


@dataclass
class VerifyReport:
    checks: dict = field(default_factory=dict)  # name -> number of items checked
    violations: list = field(default_factory=list)  # (check, detail)

    @property
    def ok(self):
        return not self.violations

    def add(self, name, n=1):
        self.checks[name] = self.checks.get(name, 0) + n

    def fail(self, name, detail):
        self.violations.append((name, detail))

    def to_dict(self, limit=200):
        by_check = {}
        for name, _ in self.violations:
            by_check[name] = by_check.get(name, 0) + 1
        return {"ok": self.ok, "checks": dict(sorted(self.checks.items())),
                "violation_counts": dict(sorted(by_check.items())),
                "violations": [{"check": c, "detail": d} for c, d in self.violations[:limit]]}


def verify_schedule(sch: CrossingSchedule, seps: SeparationTable, report=None, eps=PLATOON_EPS):
    """Crossing order invariants: causality, lane FIFO, headways, platoon labels."""
    rep = report or VerifyReport()
    n = len(sch)
    rep.add("causality", n)
    late = np.flatnonzero(sch.t_f < sch.t_a - eps)
    for r in late[:50].tolist():
        rep.fail("causality", f"vehicle {sch.lane[r]}:{sch.seq[r]} crosses at {sch.t_f[r]!r} before t_a={sch.t_a[r]!r}")
    order = np.lexsort((sch.lane, sch.t_f))
    lane, kind, tf = sch.lane[order], sch.kind[order].astype(np.intp), sch.t_f[order]
    if n > 1:
        same = lane[1:] == lane[:-1]
        need = np.where(same, seps.same[kind[:-1], kind[1:]], seps.cross[kind[:-1], kind[1:]])
        gap = np.diff(tf)
        rep.add("headway", n - 1)
        for r in np.flatnonzero(gap < need - eps)[:50].tolist():
            a, b = order[r], order[r + 1]
            rep.fail("headway", f"{sch.lane[a]}:{sch.seq[a]} -> {sch.lane[b]}:{sch.seq[b]} "
                                f"gap {gap[r]!r} < {need[r]!r}")
    for l in np.unique(sch.lane).tolist():
        m = np.flatnonzero(sch.lane == l)
        m = m[np.argsort(sch.t_f[m], kind="stable")]
        rep.add("lane_fifo", len(m))
        if np.any(np.diff(sch.seq[m]) <= 0) or np.any(np.diff(sch.t_a[m]) < 0):
            rep.fail("lane_fifo", f"lane {l}: service order differs from arrival order")
    if sch.platoon_id is not None:
        pid, pos = sch.platoon_id.copy(), sch.pos_in_platoon.copy()
        rep.add("platoon_labels", n)
        try:
            extract_platoons(sch, seps, eps)
        except CorruptedScheduleError as e:
            rep.fail("platoon_labels", str(e))
        else:
            if not (np.array_equal(pid, sch.platoon_id) and np.array_equal(pos, sch.pos_in_platoon)):
                rep.fail("platoon_labels", "platoon ids/positions do not match the crossing times")
            sch.platoon_id, sch.pos_in_platoon = pid, pos
    return rep


def verify_trajectories(trajs, sch: CrossingSchedule, cfg: ScenarioConfig, seps: SeparationTable,
                        report=None, rtol=1e-9, atol=1e-6):
    """Per-vehicle compatibility and consecutive same-lane safety gaps."""
    rep = report or VerifyReport()
    index = {f"{l}:{s}": r for r, (l, s) in enumerate(zip(sch.lane.tolist(), sch.seq.tolist()))}
    by_lane = {}
    for tr in trajs:
        r = index.get(tr.vehicle)
        rep.add("trajectory_known")
        if r is None:
            rep.fail("trajectory_known", f"vehicle {tr.vehicle} is not in the schedule")
            continue
        kind = VehicleKind(int(sch.kind[r]))
        tr.kind = kind
        rep.add("trajectory")
        for problem in check_trajectory(tr, cfg.params(kind).a_max, rtol):
            rep.fail("trajectory", f"vehicle {tr.vehicle}: {problem}")
        rep.add("crossing_time")
        if abs(tr.tf - sch.t_f[r]) > rtol * max(1.0, abs(tr.tf)):
            rep.fail("crossing_time", f"vehicle {tr.vehicle}: tf {tr.tf!r} != scheduled {sch.t_f[r]!r}")
        by_lane.setdefault(int(sch.lane[r]), []).append((int(sch.seq[r]), tr))
    for l, lst in sorted(by_lane.items()):
        lst.sort(key=lambda z: z[0])
        for (sa, a), (sb, b) in zip(lst[:-1], lst[1:]):
            if sb != sa + 1:
                continue  # gap in the profiled set; nothing to compare
            tau = seps.same[int(a.kind), int(b.kind)]
            rep.add("safety")
            s = check_safety(a, b, tau, cfg.v_max, atol)
            if not s.ok:
                rep.fail("safety", f"{a.vehicle} -> {b.vehicle}: gap {s.min_gap!r} m at t={s.t_min!r} "
                                   f"< {s.required!r} m")
    return rep
