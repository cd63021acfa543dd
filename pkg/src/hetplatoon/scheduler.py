"""Free-flow arrivals and the exhaustive polling scheduler.

Each lane is a queue; the intersection is a single server that serves a
lane exhaustively.  A vehicle's service time is the headway to the next
vehicle, so a served chain of vehicles is a platoon.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptedScheduleError, InvalidParameterError
from .model import ScenarioConfig, SeparationTable, VehicleKind

PLATOON_EPS = 1e-9
_CHUNK = 4096  # fixed draw size keeps streams prefix-stable across horizons

# sub-stream tags
_STREAM_GAPS, _STREAM_KINDS = 0, 1


@dataclass(frozen=True)
class Arrival:
    lane: int
    seq: int
    kind: VehicleKind
    t_a: float


@dataclass
class ArrivalStream:
    """Arrivals of one lane, stored column-wise."""
    lane: int
    t_a: np.ndarray
    kind: np.ndarray  # int8, 0 = car, 1 = truck

    def __len__(self):
        return len(self.t_a)

    def __iter__(self):
        for i, (t, k) in enumerate(zip(self.t_a.tolist(), self.kind.tolist())):
            yield Arrival(self.lane, i, VehicleKind(k), t)

    @classmethod
    def from_lists(cls, lane, t_a, kinds):
        kinds = [VehicleKind.parse(k) if isinstance(k, str) else int(k) for k in kinds]
        return cls(lane, np.asarray(t_a, dtype=float), np.asarray(kinds, dtype=np.int8))


def lane_rng(seed, lane, stream):
    """Independent generator for (lane, stream); other lanes are untouched."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(lane, stream))))


def gen_arrivals(cfg: ScenarioConfig, seps: SeparationTable, seed=None, horizon=None):
    """Per-lane arrival streams up to ``horizon``.

    Inter-arrival time is max(tau(prev, cur), Exp(lambda)); the first
    vehicle of a lane arrives after a plain Exp(lambda).
    """
    seed = cfg.seed if seed is None else seed
    horizon = cfg.horizon if horizon is None else horizon
    if not horizon > 0:
        raise InvalidParameterError(f"horizon must be positive, got {horizon}")
    f = cfg.truck_fraction
    streams = []
    for lane in range(cfg.lanes):
        lam = cfg.arrival_rate[lane]
        g_gap, g_kind = lane_rng(seed, lane, _STREAM_GAPS), lane_rng(seed, lane, _STREAM_KINDS)
        times, kinds = [], []
        t, prev = 0.0, -1
        while t <= horizon:
            k = (g_kind.random(_CHUNK) < f).astype(np.int8)
            e = g_gap.exponential(1.0 / lam, _CHUNK)
            prevs = np.concatenate(([prev], k[:-1]))
            tau = np.where(prevs < 0, 0.0, seps.same[np.maximum(prevs, 0), k])
            gaps = np.maximum(tau, e)
            # sequential sum keeps the result independent of chunking
            tt = t + np.cumsum(gaps)
            times.append(tt)
            kinds.append(k)
            t, prev = tt[-1], int(k[-1])
        t_a = np.concatenate(times)
        kind = np.concatenate(kinds)
        n = int(np.searchsorted(t_a, horizon, side="right"))
        streams.append(ArrivalStream(lane, t_a[:n], kind[:n]))
    return streams


@dataclass
class CrossingSchedule:
    """Served vehicles, ordered by crossing time.

    Vehicles that arrived before ``horizon`` but were not yet served are
    kept separately (``pending_*``) so queue statistics see them.
    """
    lane: np.ndarray
    seq: np.ndarray
    kind: np.ndarray
    t_a: np.ndarray
    t_f: np.ndarray
    horizon: float
    platoon_id: np.ndarray = None
    pos_in_platoon: np.ndarray = None
    pending_lane: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    pending_t_a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_lanes: int = 0

    def __len__(self):
        return len(self.t_f)

    @property
    def delay(self):
        return self.t_f - self.t_a

    def lane_view(self, lane):
        m = self.lane == lane
        return self.t_a[m], self.t_f[m], self.kind[m]


class EventCalendar:
    """Time-ordered events; ties go BeginService, then lane, then seq."""
    BEGIN_SERVICE, ARRIVAL = 0, 1

    def __init__(self):
        self._h = []

    def push(self, time, kind, lane, seq):
        heapq.heappush(self._h, (time, kind, lane, seq))

    def pop(self):
        return heapq.heappop(self._h)

    def peek_time(self):
        return self._h[0][0]

    def __len__(self):
        return len(self._h)


def simulate_polling(arrivals, seps: SeparationTable, horizon) -> CrossingSchedule:
    """Run the exhaustive polling model; returns crossings up to ``horizon``."""
    n = len(arrivals)
    ta = [s.t_a.tolist() for s in arrivals]
    kd = [s.kind.tolist() for s in arrivals]
    size = [len(x) for x in ta]
    tf = [[] for _ in range(n)]
    arrived = [0] * n
    served = [0] * n
    same = seps.same.tolist()
    cross = [[seps.between(j, l).tolist() for l in range(n)] for j in range(n)]
    BS, AR = EventCalendar.BEGIN_SERVICE, EventCalendar.ARRIVAL
    cal = EventCalendar()
    for l in range(n):
        if size[l]:
            cal.push(ta[l][0], AR, l, 0)
    busy = False

    while len(cal):
        t, ev, j, i = cal.pop()
        if t > horizon:
            break
        if ev == AR:
            arrived[j] += 1
            if i + 1 < size[j]:
                cal.push(ta[j][i + 1], AR, j, i + 1)
            if not busy and i >= served[j]:
                # idle server: the very first vehicle starts service on arrival.
                # A vehicle already served by a platoon extension landing exactly
                # on its arrival instant must not be served twice.
                busy = True
                cal.push(t, BS, j, i)
            continue

        # BeginService of vehicle i in lane j
        tf[j].append(t)
        served[j] += 1
        psi = kd[j][i]
        nxt = served[j]
        if nxt < size[j] and (arrived[j] > nxt or ta[j][nxt] <= t + same[psi][kd[j][nxt]]):
            # queue non-empty, or the next arrival can extend the platoon
            cal.push(t + same[psi][kd[j][nxt]], BS, j, nxt)
            continue
        waiting = [l for l in range(n) if arrived[l] > served[l]]
        if not waiting:
            best, best_t = None, None
            for step in range(n):
                l = (j + step) % n
                c = served[l]
                if c >= size[l]:
                    continue
                tau = same if l == j else cross[j][l]
                t1 = max(ta[l][c], t + tau[psi][kd[l][c]])
                if best_t is None or t1 < best_t:
                    best, best_t = l, t1
            if best is None:
                busy = False
            else:
                cal.push(best_t, BS, best, served[best])
        else:
            k = next((j + step) % n for step in range(1, n + 1) if arrived[(j + step) % n] > served[(j + step) % n])
            c = served[k]
            cal.push(t + cross[j][k][psi][kd[k][c]], BS, k, c)

    lanes, seqs, kinds, tas, tfs = [], [], [], [], []
    p_lane, p_ta = [], []
    for l in range(n):
        m = len(tf[l])
        lanes.append(np.full(m, l, dtype=np.int64))
        seqs.append(np.arange(m, dtype=np.int64))
        kinds.append(np.asarray(kd[l][:m], dtype=np.int8))
        tas.append(np.asarray(ta[l][:m], dtype=float))
        tfs.append(np.asarray(tf[l], dtype=float))
        rest = np.asarray(ta[l][m:], dtype=float)
        p_ta.append(rest)
        p_lane.append(np.full(len(rest), l, dtype=np.int64))
    cat = (lambda xs, dt: np.concatenate(xs) if xs else np.zeros(0, dtype=dt))
    t_f = cat(tfs, float)
    lane = cat(lanes, np.int64)
    order = np.lexsort((lane, t_f))
    return CrossingSchedule(
        lane=lane[order], seq=cat(seqs, np.int64)[order], kind=cat(kinds, np.int8)[order],
        t_a=cat(tas, float)[order], t_f=t_f[order], horizon=float(horizon),
        pending_lane=cat(p_lane, np.int64), pending_t_a=cat(p_ta, float), n_lanes=n,
    )


@dataclass
class Platoon:
    pid: int
    lane: int
    seq: np.ndarray
    kind: np.ndarray
    t_a: np.ndarray
    t_f: np.ndarray

    def __len__(self):
        return len(self.seq)


def extract_platoons(schedule: CrossingSchedule, seps: SeparationTable, eps=PLATOON_EPS):
    """Split each lane into maximal chains served at exact headway.

    Fills ``schedule.platoon_id`` / ``pos_in_platoon`` in place and returns
    the platoons ordered by head crossing time (ids are dense from 0).
    """
    m = len(schedule)
    pid = np.empty(m, dtype=np.int64)
    pos = np.empty(m, dtype=np.int64)
    if m == 0:
        schedule.platoon_id, schedule.pos_in_platoon = pid, pos
        return []
    heads = []  # (t_f head, lane, indices)
    for l in np.unique(schedule.lane):
        idx = np.flatnonzero(schedule.lane == l)
        idx = idx[np.argsort(schedule.seq[idx], kind="stable")]
        tf = schedule.t_f[idx]
        k = schedule.kind[idx].astype(np.intp)
        gaps = np.diff(tf)
        need = seps.same[k[:-1], k[1:]]
        bad = np.flatnonzero(gaps < need - eps)
        if len(bad):
            b = bad[0]
            raise CorruptedScheduleError(
                f"lane {l}: seq {schedule.seq[idx[b]]}->{schedule.seq[idx[b + 1]]} "
                f"gap {gaps[b]:.12g} s < headway {need[b]:.12g} s")
        starts = np.concatenate(([0], np.flatnonzero(gaps > need + eps) + 1))
        ends = np.concatenate((starts[1:], [len(idx)]))
        for s, e in zip(starts.tolist(), ends.tolist()):
            heads.append((tf[s], int(l), idx[s:e]))
    heads.sort(key=lambda h: (h[0], h[1]))
    out = []
    for p, (_, l, idx) in enumerate(heads):
        pid[idx] = p
        pos[idx] = np.arange(1, len(idx) + 1)
        out.append(Platoon(p, l, schedule.seq[idx], schedule.kind[idx], schedule.t_a[idx], schedule.t_f[idx]))
    schedule.platoon_id, schedule.pos_in_platoon = pid, pos
    return out


@dataclass
class DelayStats:
    mean_delay: np.ndarray  # per lane, vehicles arriving after warm-up
    mean_queue_time_avg: np.ndarray  # time-average of Q_l(t)
    mean_queue_at_arrival: np.ndarray  # Q_l seen by arriving vehicles
    occupancy: list  # per lane: fraction of [warm-up, horizon] spent at Q = 0, 1, 2, ...
    window: tuple
    n_vehicles: np.ndarray

    def tail(self, lane, n):
        """P(Q_lane > n) as a time average."""
        occ = self.occupancy[lane]
        n = int(n)
        if n < 0:
            return 1.0
        return float(occ[n + 1:].sum())

    def tail_curve(self, lane, ns):
        c = np.concatenate(([0.0], np.cumsum(self.occupancy[lane])))
        ns = np.asarray(ns, dtype=np.int64)
        idx = np.clip(ns + 1, 0, len(c) - 1)
        return np.where(ns < 0, 1.0, 1.0 - c[idx])


def delay_stats(schedule: CrossingSchedule, warmup_fraction=0.1, n_lanes=None) -> DelayStats:
    """Delay and queue statistics over [warm-up, horizon].

    Q_l(t) counts lane-l vehicles with t_a <= t < t_f.  Unserved vehicles
    stay in the queue until the horizon.
    """
    T = schedule.horizon
    t_w = warmup_fraction * T
    if not 0 <= warmup_fraction < 1 or T <= t_w:
        raise InvalidParameterError("horizon must exceed the warm-up period")
    n_lanes = n_lanes or schedule.n_lanes or (int(schedule.lane.max()) + 1 if len(schedule) else 1)
    span = T - t_w
    md, mq, ma, occs, nv = [], [], [], [], []
    for l in range(n_lanes):
        m = schedule.lane == l
        ta, tf = schedule.t_a[m], schedule.t_f[m]
        pend = schedule.pending_t_a[schedule.pending_lane == l]
        keep = ta >= t_w
        d = tf[keep] - ta[keep]
        md.append(float(d.mean()) if len(d) else 0.0)
        nv.append(int(keep.sum()))
        starts = np.concatenate((ta, pend))
        stops = np.concatenate((tf, np.full(len(pend), np.inf)))
        times = np.concatenate((starts, stops))
        steps = np.concatenate((np.ones(len(starts), np.int64), -np.ones(len(stops), np.int64)))
        # arrivals first at equal times so Q never dips below zero; the
        # ordering only affects zero-length intervals
        order = np.lexsort((-steps, times))
        times, steps = times[order], steps[order]
        q = np.cumsum(steps)
        lo = np.clip(times, t_w, T)
        hi = np.clip(np.concatenate((times[1:], [np.inf])), t_w, T)
        dur = hi - lo
        occ = np.bincount(q, weights=dur, minlength=1) / span if len(q) else np.array([1.0])
        if len(q):
            # time before the first event in the window is spent at Q = 0
            occ[0] += max(0.0, min(times[0], T) - t_w) / span
        occs.append(occ)
        mq.append(float(np.dot(np.arange(len(occ)), occ)))
        # queue ahead of each arrival (excluding itself)
        arr_mask = steps == 1
        q_seen = q[arr_mask] - 1
        t_arr = times[arr_mask]
        sel = (t_arr >= t_w) & (t_arr <= T)
        ma.append(float(q_seen[sel].mean()) if sel.any() else 0.0)
    return DelayStats(np.array(md), np.array(mq), np.array(ma), occs, (t_w, T), np.array(nv))
