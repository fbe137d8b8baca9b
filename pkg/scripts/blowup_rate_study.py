#!/usr/bin/env python3
"""Fit the blow-up rate exponent at several mesh resolutions.

Usage:
    python scripts/blowup_rate_study.py [--preset moment_bound]

Reports (T_detect, fitted T*, fitted beta) per resolution; the lower-rate
theory guarantees beta >= 1/(2m).
"""

import argparse
import math
from dataclasses import replace

from cellflux import presets
from cellflux.harness import run_config


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="moment_bound",
                    choices=["moment_bound", "critical_above", "superlinear_blowup"])
    args = ap.parse_args()

    base = presets.preset_config(args.preset)
    m = base.problem.nonlinearity.m
    print(f"{args.preset}: m = {m}, guaranteed beta >= {1.0 / (2 * m):.3f}")
    print(f"{'N':>6s} {'T_detect':>12s} {'Tstar_fit':>12s} {'beta_fit':>9s}")
    for scale in (0.5, 1.0, 2.0):
        g = base.grid
        cfg = replace(base, grid=replace(g, N=int(g.N * scale), r=g.r ** (1.0 / scale)))
        _grid, _traj, rep = run_config(cfg)
        ts = f"{rep.Tstar_fit:.6f}" if rep.Tstar_fit is not None else "-"
        bf = f"{rep.beta_fit:.4f}" if rep.beta_fit is not None else "-"
        print(f"{cfg.grid.N:6d} {rep.T_detect:12.6f} {ts:>12s} {bf:>9s}")


if __name__ == "__main__":
    main()
