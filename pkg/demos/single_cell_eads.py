"""Action potentials of the 17-variable cell as the slow delayed rectifier is reduced.

Relaxes the cell at rest, then paces once with each conductance and prints
APD90, EAD count and whether the cell repolarised. A reduced slow current
with the normal rapid current prolongs the plateau; around 0.025 nS/pF the
plateau starts to oscillate.

    python demos/single_cell_eads.py [--csv traces/]
"""

import argparse
from pathlib import Path

from tp06kit import StimulusProtocol, default_parameters
from tp06kit.analysis import ap_features
from tp06kit.integrate import IntegratorConfig, equilibrate, simulate

G_KS = (0.392, 0.07, 0.04, 0.028, 0.02505)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", type=Path, help="directory for the V traces")
    ap.add_argument("--amplitude", type=float, default=71.5, help="stimulus, pA/pF")
    args = ap.parse_args()

    base = default_parameters()
    y0 = equilibrate(base).state
    stim = StimulusProtocol.single(args.amplitude)
    config = IntegratorConfig(dt=0.02, stride=5)
    print(f"{'G_Ks':>8} {'APD90 (ms)':>11} {'EADs':>5} {'repolarised':>12}")
    for g in G_KS:
        trace = simulate(y0, base.replace(G_Ks=g), stim, config, t_end=2000.0)
        f = ap_features(trace)
        print(f"{g:8.5f} {f.apd90:11.1f} {f.ead_count:5d} {str(not f.repolarisation_failure):>12}")
        if args.csv:
            args.csv.mkdir(parents=True, exist_ok=True)
            trace.to_csv(args.csv / f"gks_{g}.csv")


if __name__ == "__main__":
    main()
