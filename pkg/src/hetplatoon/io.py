"""CSV/JSON readers and writers for the pipeline artifacts.

Floats are written with ``repr`` (shortest round-trip form), so a file
read back reproduces the in-memory values bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .model import VehicleKind
from .profiler import Segment, Trajectory, TrajectoryCase, sample_trajectory
from .scheduler import ArrivalStream, CrossingSchedule

ARRIVALS_HEADER = ["lane", "seq", "kind", "t_a"]
SCHEDULE_HEADER = ["lane", "seq", "kind", "t_a", "t_f", "platoon_id", "pos_in_platoon"]
PENDING_HEADER = ["lane", "seq", "kind", "t_a"]
PLATOONS_HEADER = ["platoon_id", "lane", "size", "first_seq", "last_seq", "t_f_head", "t_f_tail"]
SEGMENTS_HEADER = ["vehicle_id", "segment", "t_start", "t_end", "a", "x_start", "v_start", "case"]
SAMPLES_HEADER = ["vehicle_id", "t", "x", "v", "a", "case"]


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0.0:
            return "0.0"  # drop the sign of negative zero
        return repr(x)
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _read_rows(path, header):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise ConfigError(str(path), f"cannot read: {e}") from None
    with fh:
        r = csv.reader(fh)
        got = next(r, None)
        if got != header:
            raise ConfigError(str(path), f"expected header {','.join(header)}, got {got}")
        for lineno, row in enumerate(r, start=2):
            if len(row) != len(header):
                raise ConfigError(f"{path}:{lineno}", f"expected {len(header)} fields, got {len(row)}")
            yield lineno, row


def _num(val, typ, where):
    try:
        return typ(val)
    except ValueError:
        raise ConfigError(where, f"expected {typ.__name__}, got {val!r}") from None


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=True) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value  # str enums
    return obj


# --- arrivals ---------------------------------------------------------------

def write_arrivals(path, streams):
    def rows():
        for s in streams:
            for i, (t, k) in enumerate(zip(s.t_a.tolist(), s.kind.tolist())):
                yield s.lane, i, VehicleKind(k).label, t
    return write_csv(path, ARRIVALS_HEADER, rows())


def read_arrivals(path, n_lanes=None):
    lanes = {}
    for lineno, (lane, seq, kind, t_a) in _read_rows(path, ARRIVALS_HEADER):
        where = f"{path}:{lineno}"
        lane, seq = _num(lane, int, where), _num(seq, int, where)
        try:
            k = VehicleKind.parse(kind)
        except ValueError as e:
            raise ConfigError(where, str(e)) from None
        lst = lanes.setdefault(lane, ([], []))
        if seq != len(lst[0]):
            raise ConfigError(where, f"lane {lane}: expected seq {len(lst[0])}, got {seq}")
        lst[0].append(_num(t_a, float, where))
        lst[1].append(int(k))
    n = max(n_lanes or 0, (max(lanes) + 1) if lanes else 0)
    return [ArrivalStream.from_lists(l, *lanes.get(l, ([], []))) for l in range(n)]


# --- schedule ---------------------------------------------------------------

def write_schedule(path, sch: CrossingSchedule):
    def rows():
        for r in range(len(sch)):
            yield (sch.lane[r], sch.seq[r], VehicleKind(int(sch.kind[r])).label, sch.t_a[r], sch.t_f[r],
                   sch.platoon_id[r], sch.pos_in_platoon[r])
    return write_csv(path, SCHEDULE_HEADER, rows())


def write_pending(path, sch: CrossingSchedule, arrivals):
    """Vehicles that arrived before the horizon but were not served."""
    served = {}
    for l in np.unique(sch.lane).tolist():
        served[l] = int((sch.lane == l).sum())

    def rows():
        for s in arrivals:
            for i in range(served.get(s.lane, 0), len(s)):
                yield s.lane, i, VehicleKind(int(s.kind[i])).label, s.t_a[i]
    return write_csv(path, PENDING_HEADER, rows())


def write_platoons(path, platoons):
    rows = ((p.pid, p.lane, len(p), p.seq[0], p.seq[-1], p.t_f[0], p.t_f[-1]) for p in platoons)
    return write_csv(path, PLATOONS_HEADER, rows)


def read_schedule(path, horizon=None, pending_path=None, n_lanes=None):
    cols = {k: [] for k in SCHEDULE_HEADER}
    for lineno, row in _read_rows(path, SCHEDULE_HEADER):
        where = f"{path}:{lineno}"
        for name, val in zip(SCHEDULE_HEADER, row):
            if name == "kind":
                try:
                    cols[name].append(int(VehicleKind.parse(val)))
                except ValueError as e:
                    raise ConfigError(where, str(e)) from None
            else:
                cols[name].append(_num(val, float if name.startswith("t_") else int, where))
    pl, pt = [], []
    if pending_path is not None and Path(pending_path).exists():
        for lineno, (lane, _, _, t_a) in _read_rows(pending_path, PENDING_HEADER):
            pl.append(_num(lane, int, f"{pending_path}:{lineno}"))
            pt.append(_num(t_a, float, f"{pending_path}:{lineno}"))
    lane = np.asarray(cols["lane"], dtype=np.int64)
    t_f = np.asarray(cols["t_f"], dtype=float)
    if horizon is None:
        horizon = float(t_f.max()) if len(t_f) else 0.0
    n = max(n_lanes or 0, int(lane.max()) + 1 if len(lane) else 0, max(pl) + 1 if pl else 0)
    return CrossingSchedule(
        lane=lane, seq=np.asarray(cols["seq"], dtype=np.int64), kind=np.asarray(cols["kind"], dtype=np.int8),
        t_a=np.asarray(cols["t_a"], dtype=float), t_f=t_f, horizon=float(horizon),
        platoon_id=np.asarray(cols["platoon_id"], dtype=np.int64),
        pos_in_platoon=np.asarray(cols["pos_in_platoon"], dtype=np.int64),
        pending_lane=np.asarray(pl, dtype=np.int64), pending_t_a=np.asarray(pt, dtype=float), n_lanes=n,
    )


# --- trajectories -----------------------------------------------------------

def write_segments(path, trajs):
    def rows():
        for tr in trajs:
            for k, s in enumerate(tr.segments):
                yield tr.vehicle, k, s.t_start, s.t_end, s.a, s.x_start, s.v_start, tr.case.value
    return write_csv(path, SEGMENTS_HEADER, rows())


def write_samples(path, trajs, dt):
    """Trajectories sampled on the grid t0 + k*dt (plus tf), for plotting."""
    def rows():
        for tr in trajs:
            n = int(math.floor((tr.tf - tr.t0) / dt + 1e-9))
            t = tr.t0 + dt * np.arange(n + 1)
            if t[-1] < tr.tf:
                t = np.append(t, tr.tf)
            x, v, a = sample_trajectory(tr, t)
            for row in zip(t.tolist(), x.tolist(), v.tolist(), a.tolist()):
                yield (tr.vehicle, *row, tr.case.value)
    return write_csv(path, SAMPLES_HEADER, rows())


def read_segments(path, kinds=None, x0=None, v_max=None):
    """Rebuild trajectories from a segments CSV.

    Entry position and speed are taken from the first segment unless
    given; ``kinds`` maps vehicle id to kind (default car).
    """
    by_vehicle = {}
    order = []
    for lineno, row in _read_rows(path, SEGMENTS_HEADER):
        where = f"{path}:{lineno}"
        vid = row[0]
        if vid not in by_vehicle:
            by_vehicle[vid] = ([], row[7])
            order.append(vid)
        segs, case = by_vehicle[vid]
        if _num(row[1], int, where) != len(segs):
            raise ConfigError(where, f"vehicle {vid}: segments out of order")
        vals = [_num(v, float, where) for v in row[2:7]]
        segs.append(Segment(*vals))
    out = []
    for vid in order:
        segs, case = by_vehicle[vid]
        try:
            case = TrajectoryCase(case)
        except ValueError:
            raise ConfigError(str(path), f"vehicle {vid}: unknown case {case!r}") from None
        kind = (kinds or {}).get(vid, VehicleKind.CAR)
        xx = -segs[0].x_start if x0 is None else x0
        vv = segs[0].v_start if v_max is None else v_max
        t_dec = None
        for s in segs:
            if s.a < 0:
                t_dec = s.t_start
                break
        aux = {"t_dec": t_dec} if t_dec is not None else {}
        out.append(Trajectory(vid, kind, segs[0].t_start, segs[-1].t_end, xx, vv, segs, case, aux))
    return out
