"""Command-line entry point: ``hetplatoon <command> [options]``.

Outputs and upstream artifacts are resolved relative to ``--out``; the
config file is resolved relative to the working directory.  Every command
writes ``<command>.manifest.json`` next to its outputs.

Exit status: 0 success, 1 verification failure, 2 bad input or config,
3 control region too short for some vehicle.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .capacity import LoadModel, capacity_experiment, lane_load, mean_interarrival, mean_service_time, \
    solve_lambda_for_load
from .errors import ConfigError, ControlRegionTooShortError, HetPlatoonError
from .model import PAPER_DEFAULTS, PRESETS, build_separation_table, config_to_dict, load_config
from .profiler import PlatoonContext, plan_decel_distance, plan_platoon, profile_platoon
from .scheduler import Platoon, delay_stats, extract_platoons, gen_arrivals, simulate_polling
from .verify import verify_schedule, verify_trajectories

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_REGION = 0, 1, 2, 3


class _Run:
    """Collects what a command read and wrote, for the manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = argv
        self.out = Path(args.out)
        self.inputs = []
        self.outputs = []
        self.t_start = time.perf_counter()

    def path_in(self, name):
        p = Path(name)
        p = p if p.is_absolute() else self.out / p
        if not p.exists():
            raise ConfigError(str(name), f"input file not found ({p})")
        self.inputs.append(p)
        return p

    def path_out(self, name):
        p = self.out / name
        self.outputs.append(p)
        return p

    def manifest(self, cfg, seed):
        def digest(paths):
            d = {}
            for p in paths:
                if p.exists():
                    key = str(p.relative_to(self.out)) if p.is_relative_to(self.out) else str(p)
                    d[key] = hashlib.sha256(p.read_bytes()).hexdigest()
            return d
        argv = _strip_out(self.argv)
        m = {
            "tool": "hetplatoon", "version": __version__, "command": self.args.command,
            "argv": argv, "config_path": getattr(self.args, "config", None),
            "config": config_to_dict(cfg) if cfg is not None else None, "seed": seed,
            "inputs": digest(self.inputs), "outputs": digest(self.outputs),
            "duration_s": round(time.perf_counter() - self.t_start, 3),
        }
        io.write_json(self.out / f"{self.args.command}.manifest.json", m)


def _strip_out(argv):
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        out.append(a)
    return out


def _resolve_config(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else PAPER_DEFAULTS
    if getattr(args, "scenario", None):
        cfg = cfg.with_(**PRESETS[args.scenario])
    kw = {}
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    if getattr(args, "horizon", None) is not None:
        kw["horizon"] = args.horizon
    return cfg.with_(**kw) if kw else cfg


# --- commands ---------------------------------------------------------------

def cmd_gen_arrivals(args, run):
    cfg = _resolve_config(args)
    seps = build_separation_table(cfg)
    streams = gen_arrivals(cfg, seps)
    io.write_arrivals(run.path_out(args.arrivals), streams)
    print(f"{sum(len(s) for s in streams)} arrivals over {cfg.lanes} lanes -> {args.arrivals}")
    return cfg, EXIT_OK


def cmd_schedule(args, run):
    cfg = _resolve_config(args)
    seps = build_separation_table(cfg)
    streams = io.read_arrivals(run.path_in(args.arrivals), n_lanes=cfg.lanes)
    sch = simulate_polling(streams, seps, cfg.horizon)
    platoons = extract_platoons(sch, seps)
    io.write_schedule(run.path_out(args.schedule), sch)
    io.write_pending(run.path_out(args.pending), sch, streams)
    io.write_platoons(run.path_out(args.platoons), platoons)
    stats = delay_stats(sch, args.warmup, n_lanes=cfg.lanes)
    io.write_json(run.path_out(args.stats), {
        "mean_delay": stats.mean_delay, "mean_queue_time_avg": stats.mean_queue_time_avg,
        "mean_queue_at_arrival": stats.mean_queue_at_arrival, "window": list(stats.window),
        "n_vehicles": stats.n_vehicles, "n_served": len(sch), "n_pending": len(sch.pending_t_a),
        "n_platoons": len(platoons),
    })
    for l in range(cfg.lanes):
        print(f"lane {l}: mean delay {stats.mean_delay[l]:.4f} s, "
              f"time-average queue {stats.mean_queue_time_avg[l]:.4f}")
    return cfg, EXIT_OK


def _platoons_from_schedule(sch):
    out = []
    for p in np.unique(sch.platoon_id).tolist():
        idx = np.flatnonzero(sch.platoon_id == p)
        idx = idx[np.argsort(sch.pos_in_platoon[idx])]
        out.append(Platoon(p, int(sch.lane[idx[0]]), sch.seq[idx], sch.kind[idx], sch.t_a[idx], sch.t_f[idx]))
    return out


def cmd_profile(args, run):
    cfg = _resolve_config(args)
    sch = io.read_schedule(run.path_in(args.schedule), n_lanes=cfg.lanes)
    platoons = _platoons_from_schedule(sch)
    if args.max_platoons is not None:
        platoons = platoons[:args.max_platoons]
    accels = (cfg.car.a_max, cfg.truck.a_max)
    trajs, first_err, worst = [], None, {}
    for p in platoons:
        ctx = PlatoonContext.from_platoon(p, cfg, args.x0)
        try:
            trajs.extend(profile_platoon(ctx, accels))
        except ControlRegionTooShortError as e:
            first_err = first_err or e
            for pl, vid in zip(plan_platoon(ctx, *accels, check_region=False), ctx.ids):
                need = plan_decel_distance(pl, ctx.x0, ctx.v_max)
                if need > worst.get(p.lane, (0.0,))[0]:
                    worst[p.lane] = (need, vid)
    if first_err is not None:
        print(f"error: {first_err}", file=sys.stderr)
        for l, (need, vid) in sorted(worst.items()):
            print(f"error: lane {l}: every vehicle fits with x0 >= {need:.6f} m (worst: vehicle {vid})",
                  file=sys.stderr)
        return cfg, EXIT_REGION
    io.write_segments(run.path_out(args.trajectories), trajs)
    io.write_samples(run.path_out(args.samples), trajs, args.sample_dt)
    if args.plot:
        from .plotting import plot_trajectories
        shown = [t for t in trajs if t.tf <= trajs[0].tf + args.plot_window] if trajs else []
        plot_trajectories(shown, run.path_out("trajectories.png"), title=f"first {args.plot_window:g} s of crossings")
    print(f"{len(trajs)} trajectories in {len(platoons)} platoons -> {args.trajectories}")
    return cfg, EXIT_OK


def cmd_verify(args, run):
    cfg = _resolve_config(args)
    seps = build_separation_table(cfg)
    sch = io.read_schedule(run.path_in(args.schedule), n_lanes=cfg.lanes)
    rep = verify_schedule(sch, seps)
    if args.trajectories:
        trajs = io.read_segments(run.path_in(args.trajectories), v_max=cfg.v_max)
        verify_trajectories(trajs, sch, cfg, seps, rep)
    io.write_json(run.path_out(args.report), rep.to_dict())
    for name, n in sorted(rep.checks.items()):
        bad = sum(1 for c, _ in rep.violations if c == name)
        print(f"{name:16s} {n:9d} checked  {bad:6d} violations")
    for c, d in rep.violations[:20]:
        print(f"violation [{c}] {d}", file=sys.stderr)
    return cfg, EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_oracle(args, run):
    from .oracle.battery import BATTERY, BATTERY_CONFIG, run_battery, run_entry
    from .oracle.lp import compare_oracle, discretize_platoon, solve_lp, to_lp_format
    if args.schedule:
        cfg = _resolve_config(args)
        sch = io.read_schedule(run.path_in(args.schedule), n_lanes=cfg.lanes)
        platoons = {p.pid: p for p in _platoons_from_schedule(sch)}
        if args.platoon not in platoons:
            raise ConfigError("--platoon", f"no platoon {args.platoon} in the schedule")
        ctx = PlatoonContext.from_platoon(platoons[args.platoon], cfg, args.x0)
        accels = (cfg.car.a_max, cfg.truck.a_max)
        trajs = profile_platoon(ctx, accels)
        result = {"platoon": args.platoon, "vehicles": ctx.ids, "cases": [t.case.value for t in trajs],
                  "x0": ctx.x0, "comparisons": []}
        for h in (args.h, args.h / 2):
            inst = discretize_platoon(ctx, accels, h, trajectories=trajs)
            if args.lp_out and h == args.h:
                run.path_out(args.lp_out).write_text(to_lp_format(inst))
            result["comparisons"].append(compare_oracle(trajs, inst, solve_lp(inst)).to_dict())
        io.write_json(run.path_out(args.report), result)
        for c in result["comparisons"]:
            print(f"h={c['h']:g}: {c['status']}, objective gap {c['objective_gap']:.3e}, "
                  f"closed form feasible: {c['closed_form_feasible']}")
        return cfg, EXIT_OK
    cfg = BATTERY_CONFIG
    entries = BATTERY if args.entries is None else [BATTERY[i] for i in args.entries]
    results = run_battery(args.h, entries) if args.entries is None else \
        [run_entry(i, *BATTERY[i], h=args.h) for i in args.entries]
    worst_gap = max(r.coarse.objective_gap for r in results)
    worst_ratio = max(r.ratio for r in results)
    summary = {"h": args.h, "max_gap": worst_gap, "max_ratio": worst_ratio,
               "all_feasible": all(r.coarse.closed_form_feasible and r.fine.closed_form_feasible for r in results),
               "platoons": [_drop_timing(r.to_dict()) for r in results]}
    io.write_json(run.path_out(args.report), summary)
    for r in results:
        print(f"{r.index:2d} {r.kinds:4s} gap {r.coarse.objective_gap:.3e} -> {r.fine.objective_gap:.3e} "
              f"(ratio {r.ratio:.3f})  {', '.join(r.cases)}")
    if args.plot:
        from .plotting import plot_oracle
        plot_oracle(results, run.path_out("oracle.png"))
    return cfg, EXIT_OK


def _drop_timing(d):
    d = dict(d)
    d.pop("seconds", None)
    return d


def _x_grid(args):
    n = int(np.floor((args.x_to - args.x_from) / args.x_step + 1e-9))
    if n < 0 or args.x_step <= 0:
        raise ConfigError("--x-from/--x-to/--x-step", "empty grid")
    return [args.x_from + k * args.x_step for k in range(n + 1)]


def cmd_capacity(args, run):
    cfg = _resolve_config(args)
    seeds = list(args.seeds) if args.seeds else [cfg.seed]
    rep = capacity_experiment(cfg, _x_grid(args), x0_ref=args.x0_ref, seeds=seeds, horizon=cfg.horizon,
                              warmup_fraction=args.warmup, scenario_name=args.scenario)
    io.write_json(run.path_out(args.report), rep.to_dict())
    io.write_csv(run.path_out(args.csv), ["x", "n1", "n2", "prop_real", "prop_inf", "p_q_gt_n1", "p_q_gt_n2"],
                 rep.csv_rows())
    if args.plot:
        from .plotting import plot_capacity
        plot_capacity(rep, run.path_out("capacity.png"))
    P = rep.pooled
    dev1 = np.max(np.abs(np.subtract(P["prop_real"], P["p_q_gt_n1"])))
    dev2 = np.max(np.abs(np.subtract(P["prop_inf"], P["p_q_gt_n2"])))
    print(f"D = {rep.spacing:g} m, x0_ref = {rep.x0_ref:g} m, loads {', '.join(f'{x:.4f}' for x in rep.loads)}")
    print(f"max |unsuitable - P(Q>N1)| = {dev1:.4f}, max |unsuitable(inf) - P(Q>N2)| = {dev2:.4f}")
    return cfg, EXIT_OK


def cmd_load(args, run):
    cfg = _resolve_config(args)
    seps = build_separation_table(cfg)
    f = cfg.truck_fraction
    rates = args.lambda_ if args.lambda_ else list(cfg.arrival_rate)
    eb = mean_service_time(f, seps.same)
    print(f"{'lambda':>10s} {'E[B]':>10s} {'E[A]':>10s} {'load':>8s}")
    for lam in rates:
        print(f"{lam:10.4f} {eb:10.4f} {mean_interarrival(lam, f, seps.same):10.4f} "
              f"{lane_load(lam, f, seps.same):8.4f}")
    if not args.lambda_:
        print(f"total load {LoadModel.from_config(cfg, seps).total_load:.4f}")
    for target in args.target or []:
        lam = solve_lambda_for_load(target, f, seps.same)
        print(f"load {target:.4f} <- lambda {lam:.6f}")
    return cfg, EXIT_OK


def cmd_rerun(args, run):
    m = json.loads(Path(args.manifest).read_text())
    argv = list(m["argv"]) + ["--out", args.out]
    return None, main(argv, _manifest=False)


# --- parser -------------------------------------------------------------------

def _common(p, seed=True):
    p.add_argument("--config", help="scenario file (.toml or .json)")
    p.add_argument("--scenario", choices=sorted(PRESETS), help="preset arrival rates applied over the config")
    if seed:
        p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--out", default=".", help="directory for outputs and upstream artifacts")


def _floats(s):
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s):
    return [int(x) for x in s.split(",") if x.strip()]


def build_parser():
    ap = argparse.ArgumentParser(prog="hetplatoon", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-arrivals", help="sample arrival streams")
    _common(p)
    p.add_argument("--horizon", type=float)
    p.add_argument("--arrivals", default="arrivals.csv")
    p.set_defaults(func=cmd_gen_arrivals)

    p = sub.add_parser("schedule", help="run the polling scheduler on an arrivals file")
    _common(p)
    p.add_argument("--horizon", type=float)
    p.add_argument("--arrivals", default="arrivals.csv")
    p.add_argument("--schedule", default="schedule.csv")
    p.add_argument("--pending", default="pending.csv")
    p.add_argument("--platoons", default="platoons.csv")
    p.add_argument("--stats", default="delay_stats.json")
    p.add_argument("--warmup", type=float, default=0.1, help="fraction of the horizon discarded")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("profile", help="closed-form trajectories for a schedule")
    _common(p, seed=False)
    p.add_argument("--schedule", default="schedule.csv")
    p.add_argument("--x0", type=float, help="control region length for every lane (default: config)")
    p.add_argument("--max-platoons", type=int)
    p.add_argument("--trajectories", default="trajectories.csv")
    p.add_argument("--samples", default="samples.csv")
    p.add_argument("--sample-dt", type=float, default=0.5)
    p.add_argument("--plot", action="store_true")
    p.add_argument("--plot-window", type=float, default=120.0, help="seconds of crossings shown")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("verify", help="check schedule invariants and trajectory safety")
    _common(p, seed=False)
    p.add_argument("--schedule", default="schedule.csv")
    p.add_argument("--trajectories", help="segments CSV from 'profile'")
    p.add_argument("--report", default="verify.json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="compare closed forms with the LP optimum")
    _common(p, seed=False)
    p.add_argument("--h", type=float, default=0.125, help="coarse step; h/2 is solved as well")
    p.add_argument("--entries", type=_ints, help="battery entries to run (default: all)")
    p.add_argument("--schedule", help="take a platoon from this schedule instead of the battery")
    p.add_argument("--platoon", type=int, default=0)
    p.add_argument("--x0", type=float)
    p.add_argument("--lp-out", help="with --schedule: also write the coarse LP in CPLEX LP format")
    p.add_argument("--report", default="oracle.json")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("capacity", help="unsuitable trajectories against queue tails")
    _common(p)
    p.add_argument("--horizon", type=float)
    p.add_argument("--seeds", type=_ints, help="comma-separated seeds (default: the config seed)")
    p.add_argument("--x-from", type=float, default=100.0)
    p.add_argument("--x-to", type=float, default=700.0)
    p.add_argument("--x-step", type=float, default=10.0)
    p.add_argument("--x0-ref", type=float)
    p.add_argument("--warmup", type=float, default=0.1)
    p.add_argument("--report", default="capacity.json")
    p.add_argument("--csv", default="capacity.csv")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("load", help="print lane loads")
    _common(p, seed=False)
    p.add_argument("--lambda", dest="lambda_", type=_floats, help="comma-separated arrival rates")
    p.add_argument("--target", type=_floats, help="loads to invert into arrival rates")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_rerun)
    return ap


def main(argv=None, _manifest=True):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    run = _Run(args, argv)
    try:
        cfg, status = args.func(args, run)
    except (HetPlatoonError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    if _manifest and args.command not in ("load", "rerun"):
        seed = cfg.seed if cfg is not None else None
        run.manifest(cfg, seed)
    return status


if __name__ == "__main__":
    sys.exit(main())
