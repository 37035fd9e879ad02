"""A plane wave crossing a small sheet of tissue.

Stimulates the left edge, records the activation map and writes greyscale
PGM snapshots. The conduction velocity is read off the activation times of
the middle row.

    python demos/tissue_plane_wave.py --n 80 --t-end 300 --out wave/
"""

import argparse
from pathlib import Path

import numpy as np

from tp06kit import default_parameters
from tp06kit.integrate import equilibrate
from tp06kit.tissue import DX, TissueField, TissueProtocol, run_tissue, save_snapshots


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=80, help="cells per side")
    ap.add_argument("--t-end", type=float, default=300.0, help="ms")
    ap.add_argument("--every", type=float, default=10.0, help="snapshot interval, ms")
    ap.add_argument("--out", type=Path, default=Path("wave"))
    args = ap.parse_args()

    p = default_parameters()
    field = TissueField.uniform(args.n, args.n, p, equilibrate(p).state)
    res = run_tissue(field, TissueProtocol.plane_wave(args.n), args.t_end, snapshot_every=args.every,
                     progress=lambda t: print(f"\rt = {t:6.1f} ms", end="", flush=True))
    print()
    index = save_snapshots(res, args.out, pgm=True)
    row = res.activation[args.n // 2]
    a, b = args.n // 4, 3 * args.n // 4
    if np.isfinite(row[a]) and np.isfinite(row[b]):
        print(f"conduction velocity {(b - a) * DX / (row[b] - row[a]):.4f} cm/ms")
    print(f"activated {np.isfinite(res.activation).mean():.0%} of the cells; "
          f"V now in [{field.V.min():.1f}, {field.V.max():.1f}] mV")
    print(f"snapshots listed in {index}")


if __name__ == "__main__":
    main()
