"""Command-line front end.

    tp06kit --preset fig2a --out results/fig2a
    tp06kit --config my.cfg --out results/mine
    tp06kit --list

Exit status: 0 success, 2 configuration error, 3 numerical failure.
The output directory always receives ``manifest.txt`` holding the fully
resolved configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import ap_features, compare_traces, write_features_csv
from .config import CONTINUATION, SINGLE_CELL, ConfigError, ExperimentConfig, read_config, resolve
from .continuation import (
    BranchVerificationError, HOPF, NewtonFailed, StepControl, continue_cycles, continue_equilibria,
    resting_equilibrium, save_branch, voltage_scan,
)
from .integrate import IntegrationDiverged, IntegratorConfig, equilibrate, simulate
from .model import DomainError, StimulusProtocol, published_initial_state
from .params import CellParameters, ParameterError
from .presets import get_preset, list_presets
from .tissue import (
    ParameterSwitch, Rect, RegionPulse, TissueConfigError, TissueField, TissueProtocol, run_tissue,
    save_snapshots,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
MANIFEST = "manifest.txt"

log = logging.getLogger("tp06kit")


class NumericalFailure(RuntimeError):
    pass


def build_config(preset: str | None = None, config: str | Path | None = None,
                 full_scale: bool = False, seedless: bool = False) -> ExperimentConfig:
    raw: dict[str, str] = {}
    if preset:
        try:
            raw.update(get_preset(preset).raw())
        except KeyError as exc:
            raise ConfigError("preset", exc.args[0]) from None
    if config:
        user = read_config(config)
        if "preset" in user and not preset:
            try:
                raw.update(get_preset(user["preset"]).raw())
            except KeyError as exc:
                raise ConfigError("preset", exc.args[0]) from None
        raw.update(user)
    cfg = resolve(raw, seedless=seedless)
    if full_scale and cfg.experiment == "tissue":
        cfg.values["tissue.nx"] = cfg["tissue.full_nx"]
        cfg.values["tissue.ny"] = cfg["tissue.full_ny"]
    return cfg


def cell_parameters(cfg: ExperimentConfig, variant: str | None = None,
                    prefix: str = "params.") -> CellParameters:
    try:
        return CellParameters(variant or cfg["variant"]).replace(**cfg.params_overrides(prefix))
    except ParameterError as exc:
        raise ConfigError(prefix.rstrip("."), str(exc)) from None


def _initial(cfg: ExperimentConfig, params: CellParameters) -> np.ndarray:
    if cfg["initial.state"] == "published":
        return published_initial_state(params.variant)
    return equilibrate(params, t_relax=cfg["initial.t_relax"]).state


# ---------------------------------------------------------------------------
# Experiments

def run_single_cell(cfg: ExperimentConfig, out: Path) -> list[str]:
    integ = IntegratorConfig(cfg["integrator.method"], cfg["integrator.dt"], cfg["integrator.rtol"],
                             cfg["integrator.atol"], cfg["integrator.stride"])
    runs = [("trace", cfg["variant"], cfg["stimulus.amplitude"])]
    if cfg["compare.variant"]:
        runs.append(("compare", cfg["compare.variant"], cfg["compare.stimulus.amplitude"]))
    feats, traces, written = [], [], []
    kw = dict(ead_prominence=cfg["analysis.ead_prominence"], plateau_floor=cfg["analysis.plateau_floor"],
              dome_window=cfg["analysis.dome_window"])
    for name, variant, amp in runs:
        params = cell_parameters(cfg, variant)
        try:
            params.check_physical()
        except ParameterError as exc:
            raise ConfigError("params", str(exc)) from None
        protocol = StimulusProtocol.single(amp, cfg["stimulus.start"], cfg["stimulus.duration"])
        trace = simulate(_initial(cfg, params), params, protocol, integ, cfg["run.t_end"])
        traces.append(trace)
        if "csv" in cfg["output.formats"]:
            trace.to_csv(out / f"{name}.csv")
            written.append(f"{name}.csv")
        if "binary" in cfg["output.formats"]:
            trace.to_binary(out / f"{name}.bin")
            written.append(f"{name}.bin")
        f = ap_features(trace, **kw)
        feats.append((f"{name}:{variant}:{amp!r}", f))
        log.info("%s (%s, %.1f pA/pF): %s", name, variant, amp, f)
    write_features_csv(feats, out / "features.csv")
    written.append("features.csv")
    if len(traces) == 2:
        c = compare_traces(traces[0], traces[1])
        (out / "comparison.csv").write_text(
            f"sup,rms,delta_apd90\n{c.sup!r},{c.rms!r},{c.delta_apd90!r}\n")
        written.append("comparison.csv")
    return written


def _start_state(start: str, params: CellParameters, pid: str):
    if start == "rest":
        return params, resting_equilibrium(params)
    if start in ("scan-high", "scan-low"):
        eqs = voltage_scan(params, np.arange(-95.0, 40.0, 0.25))
        if not eqs:
            raise NumericalFailure("voltage scan found no equilibrium")
        return params, eqs[-1] if start == "scan-high" else eqs[0]
    p = params.replace(**{pid: float(start)})
    return p, resting_equilibrium(p)


def run_continuation(cfg: ExperimentConfig, out: Path) -> list[str]:
    params = cell_parameters(cfg)
    pid = cfg["continuation.parameter"]
    bounds = (cfg["continuation.lower"], cfg["continuation.upper"])
    ctl = StepControl(ds=cfg["continuation.ds"], ds_max=cfg["continuation.ds_max"],
                      max_points=cfg["continuation.max_points"], pscale=cfg["continuation.pscale"])
    written = []
    hopf = None
    hopf_params = params
    for k, (start, direction) in enumerate(zip(cfg["continuation.starts"], cfg["continuation.directions"])):
        p, x0 = _start_state(start, params, pid)
        branch = continue_equilibria(p, x0, pid, bounds, direction, ctl)
        save_branch(branch, out / f"branch{k}.csv", out / f"events{k}.csv")
        written += [f"branch{k}.csv", f"events{k}.csv"]
        for e in branch.events:
            log.info("branch %d: %s at %s = %.6g", k, e.kind, pid, e.parameter)
        if hopf is None and branch.events_of(HOPF):
            hopf, hopf_params = branch.events_of(HOPF)[0], branch.params
    if cfg["continuation.cycles"] and hopf is not None:
        cctl = StepControl(ds=cfg["continuation.ds"], ds_max=cfg["continuation.cycle_ds_max"],
                           max_points=cfg["continuation.cycle_points"], pscale=cfg["continuation.pscale"])
        cyc = continue_cycles(hopf_params, hopf, pid, bounds, control=cctl)
        save_branch(cyc, out / "cycles0.csv", out / "cycle_events0.csv")
        written += ["cycles0.csv", "cycle_events0.csv"]
        for e in cyc.events:
            log.info("cycles: %s at %s = %.6g", e.kind, pid, e.parameter)
    return written


def tissue_protocol(cfg: ExperimentConfig, nx: int, ny: int) -> TissueProtocol:
    rows = min(cfg["s1.rows"], ny)
    r0 = (ny - rows) // 2
    dur, amp = cfg["s1.duration"], cfg["s1.amplitude"]
    s1 = (RegionPulse(0.0, dur, amp, Rect(r0, r0 + rows, 0, min(cfg["s1.width"], nx))),)
    s2 = None
    if cfg["s2.time"] is not None:
        s2 = RegionPulse(cfg["s2.time"], dur, amp, Rect(ny // 2, ny, 0, nx // 2))
    switch = None
    if cfg["switch.time"] is not None:
        after = cell_parameters(cfg).replace(**cfg.params_overrides("switch.params."))
        switch = ParameterSwitch(cfg["switch.time"], after)
    return TissueProtocol(s1, s2, switch)


def _all_repolarised(f: TissueField, ups: np.ndarray) -> bool:
    return bool(np.all(ups >= 1) and np.all(f.V < -80.0))


def _any_reexcited(f: TissueField, ups: np.ndarray) -> bool:
    return bool(np.any(ups >= 2))


STOP_PREDICATES = {"none": None, "repolarised": _all_repolarised, "reexcited": _any_reexcited}


def run_tissue_experiment(cfg: ExperimentConfig, out: Path) -> list[str]:
    params = cell_parameters(cfg)
    try:
        params.check_physical()
    except ParameterError as exc:
        raise ConfigError("params", str(exc)) from None
    nx, ny = cfg["tissue.nx"], cfg["tissue.ny"]
    field = TissueField.uniform(nx, ny, params, _initial(cfg, params), cfg["tissue.dx"], cfg["tissue.D"])
    protocol = tissue_protocol(cfg, nx, ny)
    protocol.check(field)

    stop = STOP_PREDICATES[cfg["tissue.stop"]]
    result = run_tissue(field, protocol, cfg["tissue.t_end"], cfg["tissue.dt"],
                        snapshot_every=cfg["tissue.snapshot_every"], stop_when=stop,
                        progress=lambda t: log.debug("tissue t = %.1f ms", t))
    save_snapshots(result, out, pgm=cfg["tissue.pgm"])
    np.savetxt(out / "activation.csv", result.activation, delimiter=",", fmt="%.17g")
    with open(out / "summary.csv", "w") as fh:
        fh.write("time,V_max,V_min\n")
        for t, hi, lo in result.extrema:
            fh.write(f"{t!r},{hi!r},{lo!r}\n")
    n_re = int(np.sum(result.upcrossings >= 2))
    (out / "outcome.txt").write_text(
        f"t_final = {result.field.t!r}\n"
        f"activated_cells = {int(np.sum(result.upcrossings >= 1))}\n"
        f"reexcited_cells = {n_re}\n"
        f"all_below_minus80 = {bool(np.all(result.field.V < -80.0))}\n")
    log.info("tissue finished at t = %.1f ms, %d re-excited cells", result.field.t, n_re)
    return ["snapshot_index.csv", "activation.csv", "summary.csv", "outcome.txt"]


RUNNERS = {SINGLE_CELL: run_single_cell, CONTINUATION: run_continuation, "tissue": run_tissue_experiment}


def write_manifest(cfg: ExperimentConfig, out: Path, seedless: bool, full_scale: bool) -> None:
    lines = ["# tp06kit resolved configuration"] + cfg.manifest_lines()
    lines += [f"cli.full_scale = {'true' if full_scale else 'false'}",
              f"cli.seedless = {'true' if seedless else 'false'}"]
    (out / MANIFEST).write_text("\n".join(lines) + "\n")


def run(preset: str | None = None, config: str | Path | None = None, out: str | Path = "tp06kit-out",
        full_scale: bool = False, seedless: bool = False) -> int:
    """Resolve, validate and run one experiment; returns the exit status."""
    try:
        cfg = build_config(preset, config, full_scale, seedless)
        if cfg.experiment != CONTINUATION:
            cell_parameters(cfg)
        if cfg.experiment == "tissue" and cfg["switch.time"] is not None:
            cell_parameters(cfg, prefix="switch.params.")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(cfg, out, seedless, full_scale)
    try:
        RUNNERS[cfg.experiment](cfg, out)
    except (ConfigError, TissueConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationDiverged, NewtonFailed, NumericalFailure, DomainError,
            BranchVerificationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="tp06kit", description="TP06 cell and tissue experiments.")
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--list", action="store_true", help="list the presets and exit")
    src.add_argument("--preset", help="run a canned experiment (see --list)")
    ap.add_argument("--config", help="key = value configuration file (overrides the preset)")
    ap.add_argument("--out", default="tp06kit-out", help="output directory")
    ap.add_argument("--full-scale", action="store_true", help="tissue runs on the full grid")
    ap.add_argument("--seedless", action="store_true", help="reject any nondeterministic option")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(message)s")
    if args.list:
        for name, desc in list_presets():
            print(f"{name:12s} {desc}")
        return EXIT_OK
    if not args.preset and not args.config:
        ap.print_usage(sys.stderr)
        print("tp06kit: one of --preset or --config is required", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.preset, args.config, args.out, args.full_scale, args.seedless)


if __name__ == "__main__":
    sys.exit(main())
