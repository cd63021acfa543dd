"""Lane loads and the control-region capacity experiment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import InvalidParameterError, NoFiniteRateError
from .model import ScenarioConfig, SeparationTable, build_separation_table
from .profiler import C, PlatoonContext, plan_decel_distance, plan_platoon
from .scheduler import delay_stats, extract_platoons, gen_arrivals, simulate_polling


def _pair_weights(f):
    # (car,car), (car,truck), (truck,car), (truck,truck)
    return np.array([[(1 - f) ** 2, f * (1 - f)], [f * (1 - f), f * f]])


def mean_service_time(f_tr, same):
    """E[B]: average same-lane headway over independent kinds."""
    if not 0 <= f_tr <= 1:
        raise InvalidParameterError("truck fraction must lie in [0, 1]")
    return float(np.sum(_pair_weights(f_tr) * np.asarray(same)))


def mean_interarrival(lam, f_tr, same):
    """E[A] where A = max(tau, Exp(lam)); E[A | tau] = tau + exp(-lam tau)/lam."""
    if not lam > 0:
        raise InvalidParameterError(f"arrival rate must be positive, got {lam}")
    same = np.asarray(same, dtype=float)
    if math.isinf(lam):
        cond = same
    else:
        cond = same + np.exp(-lam * same) / lam
    return float(np.sum(_pair_weights(f_tr) * cond))


def lane_load(lam, f_tr, same):
    return mean_service_time(f_tr, same) / mean_interarrival(lam, f_tr, same)


def solve_lambda_for_load(target, f_tr, same, tol=1e-6):
    """Arrival rate giving load ``target`` (bisection; load increases with rate)."""
    if not target > 0:
        raise InvalidParameterError("target load must be positive")
    if target >= 1:
        raise NoFiniteRateError(f"load {target} needs an infinite arrival rate")
    lo, hi = 0.0, 1.0
    while lane_load(hi, f_tr, same) < target:
        hi *= 2
        if hi > 1e15:
            raise NoFiniteRateError(f"load {target} not reached below rate 1e15")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if lane_load(mid, f_tr, same) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    lam = hi
    if abs(lane_load(lam, f_tr, same) - target) > tol:  # pragma: no cover
        raise NoFiniteRateError(f"bisection did not converge for load {target}")
    return lam


@dataclass
class LoadModel:
    rates: tuple
    f_tr: float
    same: np.ndarray
    mean_service: float = field(init=False)
    mean_interarrival: tuple = field(init=False)
    loads: tuple = field(init=False)

    def __post_init__(self):
        self.mean_service = mean_service_time(self.f_tr, self.same)
        self.mean_interarrival = tuple(mean_interarrival(l, self.f_tr, self.same) for l in self.rates)
        self.loads = tuple(self.mean_service / a for a in self.mean_interarrival)

    @property
    def total_load(self):
        return float(sum(self.loads))

    @property
    def drift(self):
        """E[U] = E[B] - E[A] per lane; negative iff the lane's load is below 1."""
        return tuple(self.mean_service - a for a in self.mean_interarrival)

    @classmethod
    def from_config(cls, cfg: ScenarioConfig, seps: SeparationTable = None):
        seps = seps or build_separation_table(cfg)
        return cls(cfg.arrival_rate, cfg.truck_fraction, seps.same)


def _floor(x):
    # round to 12 significant digits first so 16.9999999999997 floors to 17
    return math.floor(float(f"{x:.12g}"))


def stop_distance(cfg: ScenarioConfig):
    """Average braking distance from v_max, weighted by kind."""
    f, v = cfg.truck_fraction, cfg.v_max
    return 0.5 * v * v * (f / cfg.truck.a_max + (1 - f) / cfg.car.a_max)


def spacing(cfg: ScenarioConfig, seps: SeparationTable = None):
    """D = v_max E[B], the mean gap between platoon members."""
    seps = seps or build_separation_table(cfg)
    return cfg.v_max * mean_service_time(cfg.truck_fraction, seps.same)


def n1(x, cfg: ScenarioConfig, seps: SeparationTable = None):
    """Vehicles that fit in a region of length x when the head must brake to rest."""
    if x < 0:
        raise InvalidParameterError("x must be non-negative")
    return max(0, _floor((x - stop_distance(cfg)) / spacing(cfg, seps)))


def n2(x, cfg: ScenarioConfig, seps: SeparationTable = None):
    """As n1 but with instantaneous braking."""
    if x < 0:
        raise InvalidParameterError("x must be non-negative")
    return _floor(x / spacing(cfg, seps))


def max_capacity(loads, n1_values):
    """Sum over lanes of load times N1(x_lane)."""
    return float(sum(r * n for r, n in zip(loads, n1_values)))


# --- experiment ------------------------------------------------------------

def region_occupancy_tail(t_enter, t_f, pending_enter, window, ns):
    """Time-average P(Q > n) for Q(t) = #{t_enter <= t < t_f} on ``window``.

    Vehicles still unserved at the end of the window count until its end.
    """
    lo, hi = window
    starts = np.sort(np.concatenate((t_enter, pending_enter)))
    stops = np.sort(np.concatenate((t_f, np.full(len(pending_enter), np.inf))))
    times = np.concatenate((starts, stops))
    steps = np.concatenate((np.ones(len(starts), np.int64), -np.ones(len(stops), np.int64)))
    # two sorted runs: a stable sort merges them in linear time and keeps
    # entries ahead of exits at equal times, so Q never dips below zero
    order = np.argsort(times, kind="stable")
    times, steps = times[order], steps[order]
    q = np.cumsum(steps)
    t_lo = np.clip(times, lo, hi)
    t_hi = np.clip(np.concatenate((times[1:], [np.inf])), lo, hi)
    occ = np.bincount(q, weights=t_hi - t_lo, minlength=1)
    occ[0] += max(0.0, min(times[0], hi) - lo) if len(times) else hi - lo
    occ /= hi - lo
    tail = np.concatenate((1.0 - np.cumsum(occ), [0.0]))
    ns = np.asarray(ns, dtype=np.int64)
    return np.clip(np.where(ns < 0, 1.0, tail[np.minimum(ns, len(tail) - 1)]), 0.0, 1.0)


@dataclass
class SeedRun:
    """Per-seed raw material for the capacity curves."""
    seed: int
    decel_real: list  # per lane, sorted decel distances of post-warm-up vehicles
    decel_inf: list
    schedule: object
    stats: object
    x0_needed: float


def run_seed(cfg: ScenarioConfig, seed, horizon=None, warmup_fraction=0.1, seps=None):
    seps = seps or build_separation_table(cfg)
    horizon = cfg.horizon if horizon is None else horizon
    arr = gen_arrivals(cfg, seps, seed=seed, horizon=horizon)
    sch = simulate_polling(arr, seps, horizon)
    platoons = extract_platoons(sch, seps)
    stats = delay_stats(sch, warmup_fraction, n_lanes=cfg.lanes)
    t_w = warmup_fraction * horizon
    v = cfg.v_max
    real = [[] for _ in range(cfg.lanes)]
    inf = [[] for _ in range(cfg.lanes)]
    needed = 0.0
    for p in platoons:
        # braking onset is measured from the intersection, so any x0 works
        ctx = PlatoonContext.from_platoon(p, cfg)
        plans = plan_platoon(ctx, cfg.car.a_max, cfg.truck.a_max, check_region=False)
        keep = p.t_a >= t_w
        for i, pl in enumerate(plans):
            dd = plan_decel_distance(pl, ctx.x0, v)
            needed = max(needed, dd)
            if keep[i]:
                real[p.lane].append(dd)
                inf[p.lane].append(0.0 if pl.case == C.FULL_SPEED else v * float(ctx.offset[i]))
    return SeedRun(seed, [np.sort(np.asarray(r)) for r in real], [np.sort(np.asarray(r)) for r in inf],
                   sch, stats, needed)


def _prop_above(sorted_vals, xs):
    if len(sorted_vals) == 0:
        return np.zeros(len(xs))
    return 1.0 - np.searchsorted(sorted_vals, xs, side="right") / len(sorted_vals)


@dataclass
class CapacityReport:
    x: list
    n1: list
    n2: list
    spacing: float
    stop_distance: float
    loads: list
    x0_ref: float
    seeds: list
    horizon: float
    warmup_fraction: float
    # per lane, then pooled: lists over x
    prop_real: list
    prop_inf: list
    p_q_gt_n1: list
    p_q_gt_n2: list
    p_delayq_gt_n1: list
    p_delayq_gt_n2: list
    pooled: dict
    max_capacity: list
    mean_delay: list
    mean_delayed: list
    scenario: dict

    def to_dict(self):
        return asdict(self)

    def csv_rows(self):
        """Flat rows (pooled curves) for plotting."""
        P = self.pooled
        for k, x in enumerate(self.x):
            yield (x, self.n1[k], self.n2[k], P["prop_real"][k], P["prop_inf"][k],
                   P["p_q_gt_n1"][k], P["p_q_gt_n2"][k])


def capacity_experiment(cfg: ScenarioConfig, x_grid, x0_ref=None, seeds=(1,), horizon=None,
                        warmup_fraction=0.1, scenario_name=None, runs=None):
    """Unsuitable-trajectory proportions against queue-tail probabilities.

    For a region of length x, Q counts vehicles that have entered the
    region (at t_a - x/v_max) and not yet crossed.  The delay queue
    (x = 0) is reported alongside for reference.
    """
    seps = build_separation_table(cfg)
    horizon = cfg.horizon if horizon is None else horizon
    xs = np.asarray(sorted(float(x) for x in x_grid))
    if len(xs) == 0 or xs[0] < 0:
        raise InvalidParameterError("x grid must be non-empty and non-negative")
    runs = runs if runs is not None else [run_seed(cfg, s, horizon, warmup_fraction, seps) for s in seeds]
    x0_ref = float(x0_ref if x0_ref is not None else max(cfg.control_length))
    needed = max(r.x0_needed for r in runs)
    while x0_ref < needed:
        x0_ref *= 2.0
    v = cfg.v_max
    N1 = [n1(x, cfg, seps) for x in xs]
    N2 = [n2(x, cfg, seps) for x in xs]
    L = cfg.lanes
    prop_real, prop_inf, q1, q2, dq1, dq2 = ([] for _ in range(6))
    counts = []
    for lane in range(L):
        real = np.concatenate([r.decel_real[lane] for r in runs])
        inf = np.concatenate([r.decel_inf[lane] for r in runs])
        counts.append(len(real))
        prop_real.append(_prop_above(np.sort(real), xs).tolist())
        prop_inf.append(_prop_above(np.sort(inf), xs).tolist())
        t1, t2 = np.zeros(len(xs)), np.zeros(len(xs))
        for r in runs:
            sch = r.schedule
            m = sch.lane == lane
            pend = sch.pending_t_a[sch.pending_lane == lane]
            for k, x in enumerate(xs):
                tails = region_occupancy_tail(sch.t_a[m] - x / v, sch.t_f[m], pend - x / v,
                                              r.stats.window, [N1[k], N2[k]])
                t1[k] += tails[0]
                t2[k] += tails[1]
        q1.append((t1 / len(runs)).tolist())
        q2.append((t2 / len(runs)).tolist())
        dq1.append(np.mean([r.stats.tail_curve(lane, N1) for r in runs], axis=0).tolist())
        dq2.append(np.mean([r.stats.tail_curve(lane, N2) for r in runs], axis=0).tolist())
    w = np.asarray(counts, dtype=float)
    w = w / w.sum() if w.sum() > 0 else np.full(L, 1.0 / L)
    pool = lambda per_lane: (w @ np.asarray(per_lane)).tolist()  # noqa: E731
    loads = LoadModel.from_config(cfg, seps).loads
    return CapacityReport(
        x=xs.tolist(), n1=N1, n2=N2, spacing=spacing(cfg, seps), stop_distance=stop_distance(cfg),
        loads=list(loads), x0_ref=x0_ref, seeds=[r.seed for r in runs], horizon=float(horizon),
        warmup_fraction=warmup_fraction,
        prop_real=prop_real, prop_inf=prop_inf, p_q_gt_n1=q1, p_q_gt_n2=q2,
        p_delayq_gt_n1=dq1, p_delayq_gt_n2=dq2,
        pooled={"prop_real": pool(prop_real), "prop_inf": pool(prop_inf),
                "p_q_gt_n1": pool(q1), "p_q_gt_n2": pool(q2)},
        max_capacity=[max_capacity(loads, [n] * L) for n in N1],
        mean_delay=np.mean([r.stats.mean_delay for r in runs], axis=0).tolist(),
        mean_delayed=np.mean([r.stats.mean_queue_time_avg for r in runs], axis=0).tolist(),
        scenario={"name": scenario_name, "arrival_rate": list(cfg.arrival_rate),
                  "truck_fraction": cfg.truck_fraction, "v_max": v},
    )
