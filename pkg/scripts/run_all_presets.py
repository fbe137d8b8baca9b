#!/usr/bin/env python3
"""Run every gated preset, write its artifacts, and print a summary table.

Usage:
    python scripts/run_all_presets.py [--jobs N] [--out DIR]

Each preset owns its state and output directory, so presets parallelize
cleanly across processes.
"""

import argparse
import time
from concurrent.futures import ProcessPoolExecutor

from cellflux import presets
from cellflux.harness import run_scenario


def one(name: str, out_root: str | None):
    cfg = presets.preset_config(name)
    out = f"{out_root}/{name}" if out_root else None
    t0 = time.perf_counter()
    rep = run_scenario(cfg, out_dir=out)
    wall = time.perf_counter() - t0
    return name, rep.outcome, rep.steps, rep.mass_drift_max, wall


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None, help="output root (default: per-preset out_dir)")
    args = ap.parse_args()

    names = [n for n in presets.list_presets() if n != "sweep_critical"]
    rows = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(one, names, [args.out] * len(names)))
    else:
        rows = [one(n, args.out) for n in names]

    print(f"{'preset':22s} {'outcome':10s} {'steps':>8s} {'mass drift':>11s} {'wall':>7s}")
    for name, outcome, steps, drift, wall in rows:
        print(f"{name:22s} {outcome:10s} {steps:8d} {drift:11.2e} {wall:6.1f}s")


if __name__ == "__main__":
    main()
