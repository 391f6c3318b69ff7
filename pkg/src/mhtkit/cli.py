"""Command line interface: run scenarios, scaling sweeps, kernel benchmarks."""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

from .radar.scenario import (
    BUILTIN_SCENARIOS,
    ScenarioConfig,
    ScenarioError,
    load_scenario,
    scaled_for_targets,
)
from .radar.sim import simulate
from .radar.tracker import AssociationScorer, RadarTracker

WARMUP_SCANS = 5
SWEEP_TARGET_COUNTS = (10, 25, 50, 100)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhtkit",
        description="Multi-target radar tracking on the hypothesis engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario and track it")
    run.add_argument("--scenario", default="random",
                     help="built-in scenario name or scenario file path "
                          f"(built-ins: {', '.join(sorted(BUILTIN_SCENARIOS))})")
    run.add_argument("--targets", type=int, help="override target count")
    run.add_argument("--scans", type=int, help="override scan count")
    run.add_argument("--seed", type=int, help="override simulation seed")
    run.add_argument("--pd", type=float, help="override detection probability")
    run.add_argument("--clutter", type=float,
                     help="override mean false alarms per scan")
    run.add_argument("--gate", type=float,
                     help="override squared-Mahalanobis gate threshold")
    run.add_argument("--prune-k", type=int,
                     help="override best-k hypothesis limit")
    run.add_argument("--prune-ratio", type=float,
                     help="override probability-ratio prune threshold")
    run.add_argument("--no-events", action="store_true",
                     help="track with facts only, skipping event records")
    run.add_argument("--out-dir", default="mht-run",
                     help="directory for metrics.csv, tracks.jsonl, truth.jsonl")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser(
        "sweep", help="scaling sweep over target counts at fixed density"
    )
    sweep.add_argument("--reps", type=int, default=1,
                       help="repetitions per target count")
    sweep.add_argument("--scans", type=int, default=40,
                       help="scans per run")
    sweep.add_argument("--seed", type=int, default=1, help="base seed")
    sweep.add_argument("--out-dir", default="mht-sweep",
                       help="directory for sweep.csv")
    sweep.set_defaults(func=cmd_sweep)

    bench = sub.add_parser(
        "kernel-bench",
        help="time the compiled kinematics kernels against the numpy fallback",
    )
    bench.add_argument("--states", type=int, default=200,
                       help="tracked states per gating call")
    bench.add_argument("--measurements", type=int, default=200,
                       help="measurements per gating call")
    bench.add_argument("--iterations", type=int, default=50,
                       help="timing iterations per kernel")
    bench.set_defaults(func=cmd_kernel_bench)
    return parser


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    updates = {}
    if args.targets is not None:
        updates["target_count"] = args.targets
    if args.scans is not None:
        updates["scan_count"] = args.scans
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.pd is not None:
        updates["detection_prob"] = args.pd
    if args.clutter is not None:
        updates["clutter_rate"] = args.clutter
    if args.gate is not None:
        updates["gate"] = args.gate
    if args.prune_k is not None:
        updates["prune_k"] = args.prune_k
    if args.prune_ratio is not None:
        updates["prune_ratio"] = args.prune_ratio
    if args.no_events:
        updates["events_enabled"] = False
    if not updates:
        return cfg
    cfg = replace(cfg, **updates)
    if updates.keys() & {"target_count"}:
        # overriding the population invalidates scripted trajectories
        cfg.waypoints = {
            t: w for t, w in cfg.waypoints.items() if t < cfg.target_count
        }
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    try:
        cfg = load_scenario(args.scenario)
        cfg = _apply_overrides(cfg, args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scans, truth = simulate(cfg)
    tracker = RadarTracker(cfg)
    scorer = AssociationScorer()

    wall: list[float] = []
    correct = 0
    peak_leaves = 0
    with open(out_dir / "metrics.csv", "w", newline="") as mf, \
            open(out_dir / "tracks.jsonl", "w") as tf, \
            open(out_dir / "truth.jsonl", "w") as uf:
        writer = csv.writer(mf)
        writer.writerow([
            "tick", "wallTimeMicros", "clusterCount", "totalLeaves",
            "confirmedEventCount",
        ])
        for scan in scans:
            m = tracker.step(scan)
            writer.writerow([
                m.tick, f"{m.wall_us:.1f}", m.cluster_count, m.total_leaves,
                m.certain_events,
            ])
            tf.write(json.dumps({
                "tick": m.tick,
                "tracks": [
                    {
                        "target": list(p.target),
                        "x": p.mean[0], "y": p.mean[1],
                        "vx": p.mean[2], "vy": p.mean[3],
                        "lastSeen": p.last_seen,
                    }
                    for p in m.best_tracks
                ],
            }) + "\n")
            uf.write(json.dumps({
                "tick": scan.tick,
                "targets": [
                    {"id": i, "x": s.x, "y": s.y, "vx": s.vx, "vy": s.vy}
                    for i, s in enumerate(truth[scan.tick])
                ],
            }) + "\n")
            if m.tick >= WARMUP_SCANS:
                wall.append(m.wall_us)
            peak_leaves = max(peak_leaves, m.max_cluster_leaves)
            correct += scorer.score(scan, m)

    mean_us = statistics.fmean(wall) if wall else 0.0
    std_us = statistics.pstdev(wall) if len(wall) > 1 else 0.0
    print(f"scenario {cfg.name}: {cfg.target_count} targets, "
          f"{cfg.scan_count} scans, seed {cfg.seed}")
    print(f"step time: mean {mean_us:.0f} us, stddev {std_us:.0f} us "
          f"(first {WARMUP_SCANS} scans excluded)")
    print(f"peak leaves in one cluster: {peak_leaves}")
    print(f"fully correct scans: {correct}/{len(scans)} "
          f"({100.0 * correct / max(len(scans), 1):.1f}%)")
    print(f"outputs in {out_dir}/")
    return 0


def run_sweep_cell(base: ScenarioConfig, n: int, rep: int, scans: int,
                   seed: int) -> dict:
    cfg = scaled_for_targets(base, n)
    cfg = replace(cfg, scan_count=scans, seed=seed + rep)
    cfg.validate()
    sim_scans, _truth = simulate(cfg)
    tracker = RadarTracker(cfg)
    wall = []
    peak_leaves = 0
    for scan in sim_scans:
        m = tracker.step(scan)
        if m.tick >= WARMUP_SCANS:
            wall.append(m.wall_us)
        peak_leaves = max(peak_leaves, m.max_cluster_leaves)
    return {
        "targets": n,
        "rep": rep,
        "scans": scans,
        "meanStepMicros": statistics.fmean(wall) if wall else 0.0,
        "stddevStepMicros": statistics.pstdev(wall) if len(wall) > 1 else 0.0,
        "maxStepMicros": max(wall) if wall else 0.0,
        "peakClusterLeaves": peak_leaves,
    }


def cmd_sweep(args) -> int:
    from .radar.kinematics import BACKEND

    base = load_scenario("random")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in SWEEP_TARGET_COUNTS:
        for rep in range(args.reps):
            row = run_sweep_cell(base, n, rep, args.scans, args.seed)
            row["backend"] = BACKEND
            rows.append(row)
            print(f"targets {n:4d} rep {rep}: "
                  f"mean {row['meanStepMicros']:.0f} us, "
                  f"peak leaves {row['peakClusterLeaves']}")
    with open(out_dir / "sweep.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)

    by_n = {n: statistics.fmean(
        r["meanStepMicros"] for r in rows if r["targets"] == n
    ) for n in SWEEP_TARGET_COUNTS}
    lo, hi = SWEEP_TARGET_COUNTS[0], SWEEP_TARGET_COUNTS[-1]
    if by_n[lo] > 0:
        print(f"step-time ratio {hi}x/{lo}x targets: "
              f"{by_n[hi] / by_n[lo]:.2f}")
    print(f"outputs in {out_dir}/")
    return 0


def cmd_kernel_bench(args) -> int:
    import numpy as np

    from .radar import _kinematics_py

    impls = [("pure", _kinematics_py)]
    try:
        from .radar import _kinematics_cy

        impls.append(("compiled", _kinematics_cy))
    except ImportError:
        print("compiled backend not built; timing the pure backend only")

    rng = np.random.default_rng(0)
    n, m = args.states, args.measurements
    means = rng.normal(0.0, 1000.0, (n, 4))
    covs = np.tile(np.diag([2500.0, 2500.0, 100.0, 100.0]), (n, 1, 1))
    zs = rng.normal(0.0, 1000.0, (m, 2))
    out = np.empty((n, m))
    mean1 = np.ascontiguousarray(means[0])
    cov1 = np.ascontiguousarray(covs[0])
    om = np.empty(4)
    oc = np.empty((4, 4))

    print(f"{n} states x {m} measurements, {args.iterations} iterations")
    for name, impl in impls:
        t0 = time.perf_counter()
        for _ in range(args.iterations):
            impl.gate_matrix(means, covs, zs, 50.0, out)
        gate_ms = (time.perf_counter() - t0) * 1e3 / args.iterations

        t0 = time.perf_counter()
        for _ in range(args.iterations * 100):
            impl.cv_predict(mean1, cov1, 5.0, 0.5, om, oc)
            impl.cv_update(mean1, cov1, 10.0, -5.0, 50.0, om, oc)
        pair_us = (time.perf_counter() - t0) * 1e6 / (args.iterations * 100)

        print(f"  {name:9s} gate_matrix {gate_ms:8.3f} ms/call   "
              f"predict+update {pair_us:7.2f} us/pair")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
