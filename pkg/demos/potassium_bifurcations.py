"""Equilibria and the first cycle branch in the intracellular potassium concentration.

Follows the resting state from 138 mM downward with pseudo-arclength
continuation, reports Hopf and limit points, then starts the periodic
orbit branch at the first Hopf point and prints period, V range and the
leading Floquet multiplier along it.

    python demos/potassium_bifurcations.py [--cycle-points 8] [--out branch/]
"""

import argparse
from pathlib import Path

import numpy as np

from tp06kit import default_parameters
from tp06kit.continuation import (
    HOPF, StepControl, continue_cycles, continue_equilibria, resting_equilibrium, save_branch,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lower", type=float, default=30.0, help="mM")
    ap.add_argument("--cycle-points", type=int, default=8)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    p = default_parameters()
    rest = resting_equilibrium(p)
    ctl = StepControl(pscale=1.0, ds_max=2.0, max_points=3000)
    eq = continue_equilibria(p, rest, "K_i", (args.lower, 150.0), -1.0, ctl)
    print(f"equilibria: {len(eq.points)} points, stopped: {eq.stop_reason}")
    for e in eq.events:
        print(f"  {e.kind:12s} K_i = {e.parameter:.4f} mM   V = {e.point.state[0]:.2f} mV")

    hopfs = eq.events_of(HOPF)
    if not hopfs or args.cycle_points < 1:
        return
    h = hopfs[0]
    cyc = continue_cycles(p.replace(K_i=h.parameter), h, "K_i", (args.lower, 150.0),
                          control=StepControl(pscale=1.0, ds_max=0.5, max_points=args.cycle_points))
    print(f"cycles from K_i = {h.parameter:.4f}: {len(cyc.points)} points, stopped: {cyc.stop_reason}")
    for pt in cyc.points:
        mu = pt.leading()
        print(f"  K_i = {pt.parameter:8.4f}  T = {pt.cycle.period:7.2f} ms  "
              f"V in [{pt.v_range[0]:.2f}, {pt.v_range[1]:.2f}]  |mu| = {np.abs(mu):.3g}  {pt.stability}")
    for e in cyc.events:
        print(f"  {e.kind:12s} K_i = {e.parameter:.4f} mM")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        save_branch(eq, args.out / "equilibria.csv", args.out / "equilibrium_events.csv")
        save_branch(cyc, args.out / "cycles.csv", args.out / "cycle_events.csv")


if __name__ == "__main__":
    main()
