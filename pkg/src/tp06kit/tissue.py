"""2D monodomain tissue: TP06 cells coupled by isotropic diffusion of V.

The field is stored structure-of-arrays, ``states[k]`` being the 2D array
of state component ``k``. Each step reads the previous field and writes a
fresh one (double buffering), visiting cells in row-major order, so runs
are bitwise reproducible. Every cell takes exactly the single-cell
Rush-Larsen/Euler step, with the diffusion current passed to the voltage
equation; with ``D = 0`` a tissue run reproduces single-cell runs bit for
bit.

Boundaries are no-flux: the ghost value outside an edge equals the edge
cell, so the discrete Laplacian sums to zero over the grid and pure
diffusion conserves the total of V.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .integrate import IntegrationDiverged, rl_step_into
from .model import check_state
from .params import CellParameters

# default discretisation: 250 um cells, step below the diffusion limit
DX = 0.025  # cm
D_DEFAULT = 0.00154  # cm^2/ms
DT = 0.0812  # ms
PLANE_WAVE_AMPLITUDE = 26.2  # pA/pF
PLANE_WAVE_WIDTH = 6  # cells

ACTIVATION_THRESHOLD = 0.0  # mV
SNAPSHOT_MAGIC = b"TP6SNAP\x00"
SNAPSHOT_HEADER = struct.Struct("<8sqqd")  # magic, nx, ny, t: 32 bytes
PGM_RANGE = (-90.0, 40.0)


class TissueConfigError(ValueError):
    """Inconsistent grid, protocol or time step."""


class TissueDiverged(IntegrationDiverged):
    """A non-finite value appeared at cell ``(row, col)``."""

    def __init__(self, t: float, row: int, col: int):
        super().__init__(t, f"tissue diverged at t = {t:.6g} ms in cell (row {row}, col {col})")
        self.row, self.col = row, col


# ---------------------------------------------------------------------------
# Kernels

@njit(cache=True, error_model="numpy")
def _lap(V, i, j, inv_dx2):
    ny, nx = V.shape
    c = V[i, j]
    up = V[i - 1, j] if i > 0 else c
    dn = V[i + 1, j] if i < ny - 1 else c
    lf = V[i, j - 1] if j > 0 else c
    rt = V[i, j + 1] if j < nx - 1 else c
    # paired sums keep the stencil exactly symmetric under reflections
    return ((up + dn) + (lf + rt) - 4.0 * c) * inv_dx2


@njit(cache=True, error_model="numpy")
def laplacian_kernel(V, inv_dx2, out):
    ny, nx = V.shape
    for i in range(ny):
        for j in range(nx):
            out[i, j] = _lap(V, i, j, inv_dx2)


@njit(cache=True, error_model="numpy")
def _cell_stimulus(t, i, j, regions):
    # regions rows: start, end, amplitude, row0, row1, col0, col1 (half-open)
    for r in range(regions.shape[0]):
        if regions[r, 0] <= t < regions[r, 1]:
            if regions[r, 3] <= i < regions[r, 4] and regions[r, 5] <= j < regions[r, 6]:
                return regions[r, 2]
    return 0.0


@njit(cache=True, error_model="numpy")
def tissue_run_kernel(S, p, variant, regions, t0, dt, nsteps, D, inv_dx2, ionic,
                      act, ups, act_thr, vmax_track, vmin_track):
    """Advance ``S`` (n, ny, nx) by ``nsteps``; returns (S, status, row, col).

    ``act`` records the first time V exceeds ``act_thr`` (NaN until then)
    and ``ups`` counts upward crossings of ``act_thr``.
    ``vmax_track``/``vmin_track`` accumulate running extrema of V.
    Step ``k`` starts at ``t0 + k*dt``, the same time grid as the
    single-cell integrator.
    """
    n, ny, nx = S.shape
    B = np.empty_like(S)
    y = np.empty(n)
    out = np.empty(n)
    dy = np.empty(n)
    ginf = np.empty(n)
    gtau = np.empty(n)
    cur = np.empty(12)
    for k in range(nsteps):
        t = t0 + k * dt
        t_next = t0 + (k + 1) * dt
        V = S[0]
        for i in range(ny):
            for j in range(nx):
                extra = D * _lap(V, i, j, inv_dx2)
                if ionic:
                    for c in range(n):
                        y[c] = S[c, i, j]
                    istim = _cell_stimulus(t, i, j, regions)
                    rl_step_into(y, p, variant, istim, dt, extra, False, out, dy, ginf, gtau, cur)
                    for c in range(n):
                        B[c, i, j] = out[c]
                else:
                    for c in range(1, n):
                        B[c, i, j] = S[c, i, j]
                    B[0, i, j] = V[i, j] + dt * extra
                v = B[0, i, j]
                if not math.isfinite(v):
                    return S, k, i, j
                if v > act_thr and V[i, j] <= act_thr:
                    ups[i, j] += 1
                    if math.isnan(act[i, j]):
                        act[i, j] = t_next
                if v > vmax_track[i, j]:
                    vmax_track[i, j] = v
                if v < vmin_track[i, j]:
                    vmin_track[i, j] = v
        tmp = S
        S = B
        B = tmp
    return S, -1, 0, 0


# ---------------------------------------------------------------------------
# Types

@dataclass
class TissueField:
    """Grid of cells; ``states`` has shape ``(n_states, ny, nx)``."""

    states: np.ndarray
    params: CellParameters
    dx: float = DX
    D: float = D_DEFAULT
    t: float = 0.0

    def __post_init__(self):
        self.states = np.ascontiguousarray(self.states, dtype=np.float64)
        if self.states.ndim != 3 or self.states.shape[0] != self.params.n_states:
            raise TissueConfigError(f"states must have shape ({self.params.n_states}, ny, nx), "
                                    f"got {self.states.shape}")
        if self.ny < 3 or self.nx < 3:
            raise TissueConfigError(f"grid must be at least 3x3, got {self.ny}x{self.nx}")
        if not self.dx > 0:
            raise TissueConfigError("dx must be positive")
        if not self.D >= 0:
            raise TissueConfigError("D must be non-negative")

    @classmethod
    def uniform(cls, nx: int, ny: int, params: CellParameters, state, dx: float = DX,
                D: float = D_DEFAULT, t: float = 0.0) -> "TissueField":
        state = np.asarray(state, dtype=np.float64)
        check_state(state, params.variant)
        states = np.repeat(state[:, None, None], ny, axis=1).repeat(nx, axis=2)
        return cls(states, params, dx, D, t)

    @property
    def ny(self) -> int:
        return self.states.shape[1]

    @property
    def nx(self) -> int:
        return self.states.shape[2]

    @property
    def V(self) -> np.ndarray:
        return self.states[0]

    def cfl_limit(self) -> float:
        """Largest stable explicit step for the diffusion term."""
        return math.inf if self.D == 0 else self.dx ** 2 / (4.0 * self.D)

    def copy(self) -> "TissueField":
        return TissueField(self.states.copy(), self.params, self.dx, self.D, self.t)


@dataclass(frozen=True)
class Rect:
    """Cells ``row0 <= row < row1``, ``col0 <= col < col1``."""

    row0: int
    row1: int
    col0: int
    col1: int

    def check(self, nx: int, ny: int) -> None:
        if not (0 <= self.row0 < self.row1 <= ny and 0 <= self.col0 < self.col1 <= nx):
            raise TissueConfigError(f"rectangle {self} outside the {ny}x{nx} grid")


@dataclass(frozen=True)
class RegionPulse:
    start: float  # ms
    duration: float  # ms
    amplitude: float  # pA/pF
    rect: Rect

    def __post_init__(self):
        if not self.duration > 0:
            raise TissueConfigError(f"pulse duration must be positive, got {self.duration}")

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class ParameterSwitch:
    time: float  # ms
    params: CellParameters


@dataclass(frozen=True)
class TissueProtocol:
    s1: tuple[RegionPulse, ...] = ()
    s2: RegionPulse | None = None
    switch: ParameterSwitch | None = None

    def pulses(self) -> tuple[RegionPulse, ...]:
        return self.s1 + ((self.s2,) if self.s2 is not None else ())

    def check(self, field_: TissueField) -> None:
        for q in self.pulses():
            q.rect.check(field_.nx, field_.ny)
        s1 = sorted(self.s1, key=lambda q: q.start)
        for a, b in zip(s1, s1[1:]):
            if b.start < a.end:
                raise TissueConfigError(f"S1 pulses overlap: {a} and {b}")
        if self.s2 is not None and s1 and self.s2.start < s1[0].end:
            raise TissueConfigError("S2 must start after the first S1 pulse ends")
        if self.switch is not None:
            if self.switch.params.variant != field_.params.variant:
                raise TissueConfigError("a parameter switch cannot change the model variant")
            self.switch.params.check_physical()

    def region_array(self) -> np.ndarray:
        rows = [(q.start, q.end, q.amplitude, q.rect.row0, q.rect.row1, q.rect.col0, q.rect.col1)
                for q in self.pulses()]
        return np.array(rows, dtype=np.float64).reshape(len(rows), 7)

    @classmethod
    def plane_wave(cls, ny: int, amplitude: float = PLANE_WAVE_AMPLITUDE, width: int = PLANE_WAVE_WIDTH,
                   start: float = 0.0, duration: float = 2.0, rows: int | None = None) -> "TissueProtocol":
        """Left-edge stimulus of ``width`` columns over ``rows`` rows (all by default)."""
        rect = Rect(0, ny if rows is None else min(rows, ny), 0, width)
        return cls((RegionPulse(start, duration, amplitude, rect),))

    @classmethod
    def s1_s2(cls, nx: int, ny: int, s2_time: float, amplitude: float = PLANE_WAVE_AMPLITUDE,
              width: int = PLANE_WAVE_WIDTH, duration: float = 2.0,
              switch: ParameterSwitch | None = None) -> "TissueProtocol":
        """Plane wave from the left, then S2 on the bottom-left quadrant at ``s2_time``."""
        s1 = cls.plane_wave(ny, amplitude, width, 0.0, duration).s1
        s2 = RegionPulse(s2_time, duration, amplitude, Rect(ny // 2, ny, 0, nx // 2))
        return cls(s1, s2, switch)


def laplacian_5pt(V, dx: float) -> np.ndarray:
    """Five-point Laplacian with no-flux (mirrored) edges."""
    V = np.ascontiguousarray(V, dtype=np.float64)
    if V.ndim != 2 or min(V.shape) < 3:
        raise TissueConfigError(f"field must be 2D and at least 3x3, got {V.shape}")
    out = np.empty_like(V)
    laplacian_kernel(V, 1.0 / (dx * dx), out)
    return out


def _check_step(field_: TissueField, dt: float) -> None:
    if not dt > 0:
        raise TissueConfigError("dt must be positive")
    if dt > field_.cfl_limit():
        raise TissueConfigError(f"dt = {dt} exceeds the diffusion stability limit "
                                f"dx^2/(4D) = {field_.cfl_limit():.6g} ms")


def _advance(field_: TissueField, protocol: TissueProtocol, dt: float, nsteps: int, ionic: bool,
             act: np.ndarray, ups: np.ndarray, vmax: np.ndarray, vmin: np.ndarray, k0: int,
             t0: float) -> None:
    """Advance in place by ``nsteps`` steps numbered from ``k0`` on the grid ``t0 + k dt``."""
    if nsteps <= 0:
        return
    S, status, i, j = tissue_run_kernel(
        field_.states, field_.params.as_array(), field_.params.code, protocol.region_array(),
        t0 + k0 * dt, dt, nsteps, field_.D, 1.0 / field_.dx ** 2, ionic, act, ups, ACTIVATION_THRESHOLD,
        vmax, vmin)
    if status >= 0:
        field_.states = S
        field_.t = t0 + (k0 + status) * dt
        raise TissueDiverged(field_.t, i, j)
    field_.states = S
    field_.t = t0 + (k0 + nsteps) * dt


def _switch_step(protocol: TissueProtocol, t0: float, dt: float) -> int | None:
    """Index of the first step starting at or after the switch time."""
    if protocol.switch is None:
        return None
    return max(0, math.ceil((protocol.switch.time - t0) / dt - 1e-9))


def step_tissue(field_: TissueField, protocol: TissueProtocol, dt: float = DT,
                ionic: bool = True) -> TissueField:
    """One step; returns a new field. ``ionic=False`` switches off the cell model (pure diffusion)."""
    _check_step(field_, dt)
    protocol.check(field_)
    out = field_.copy()
    if protocol.switch is not None and out.t >= protocol.switch.time:
        out.params = protocol.switch.params
    shape = out.V.shape
    _advance(out, protocol, dt, 1, ionic, np.full(shape, np.nan), np.zeros(shape, np.int64),
             np.full(shape, -np.inf), np.full(shape, np.inf), 0, out.t)
    return out


@dataclass
class Snapshot:
    t: float
    V: np.ndarray
    states: np.ndarray | None = None


@dataclass
class TissueResult:
    field: TissueField
    snapshots: list[Snapshot]
    activation: np.ndarray  # first time V > 0 mV, NaN where never
    upcrossings: np.ndarray  # number of upward crossings of 0 mV per cell
    v_max: np.ndarray  # running maximum of V per cell
    v_min: np.ndarray
    extrema: list[tuple[float, float, float]] = field(default_factory=list)  # (t, max V, min V)


def run_tissue(field_: TissueField, protocol: TissueProtocol, t_end: float, dt: float = DT,
               snapshot_every: float | None = None, full_state: bool = False, ionic: bool = True,
               progress=None, stop_when=None) -> TissueResult:
    """Integrate from ``field_.t`` to ``t_end``; ``field_`` is advanced in place.

    Snapshots are taken at the start and every ``snapshot_every`` ms, rounded
    to whole steps. ``progress(t)`` is called after each chunk;
    ``stop_when(field, upcrossings)`` returning True ends the run early.
    """
    _check_step(field_, dt)
    protocol.check(field_)
    t0 = field_.t
    nsteps = int(round((t_end - t0) / dt))
    if nsteps < 0:
        raise TissueConfigError("t_end precedes the field time")
    every = nsteps if not snapshot_every else max(1, int(round(snapshot_every / dt)))
    stops = set(range(0, nsteps, every)) | {nsteps}
    sw = _switch_step(protocol, t0, dt)
    if sw is not None and sw <= nsteps:
        stops.add(sw)
    stops = sorted(stops)
    shape = field_.V.shape
    act = np.full(shape, np.nan)
    act[field_.V > ACTIVATION_THRESHOLD] = t0
    ups = (field_.V > ACTIVATION_THRESHOLD).astype(np.int64)
    vmax, vmin = field_.V.copy(), field_.V.copy()
    snaps: list[Snapshot] = []
    extrema: list[tuple[float, float, float]] = []
    k = 0
    for stop in stops:
        _advance(field_, protocol, dt, stop - k, ionic, act, ups, vmax, vmin, k, t0)
        k = stop
        if sw is not None and k == sw:
            field_.params = protocol.switch.params
        if k % every == 0 or k == nsteps:
            if not snaps or snaps[-1].t != field_.t:
                snaps.append(Snapshot(field_.t, field_.V.copy(), field_.states.copy() if full_state else None))
                extrema.append((field_.t, float(field_.V.max()), float(field_.V.min())))
        if progress is not None:
            progress(field_.t)
        if stop_when is not None and stop_when(field_, ups):
            if not snaps or snaps[-1].t != field_.t:
                snaps.append(Snapshot(field_.t, field_.V.copy(), field_.states.copy() if full_state else None))
                extrema.append((field_.t, float(field_.V.max()), float(field_.V.min())))
            break
    return TissueResult(field_, snaps, act, ups, vmax, vmin, extrema)


# ---------------------------------------------------------------------------
# Snapshot files

def write_snapshot(path: str | Path, V: np.ndarray, t: float) -> None:
    V = np.ascontiguousarray(V, dtype="<f8")
    ny, nx = V.shape
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_HEADER.pack(SNAPSHOT_MAGIC, nx, ny, float(t)))
        fh.write(V.tobytes())


def read_snapshot(path: str | Path) -> tuple[float, np.ndarray]:
    data = Path(path).read_bytes()
    magic, nx, ny, t = SNAPSHOT_HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{path} is not a tissue snapshot")
    V = np.frombuffer(data, dtype="<f8", offset=SNAPSHOT_HEADER.size, count=nx * ny)
    return t, V.reshape(ny, nx).copy()


def write_pgm(path: str | Path, V: np.ndarray, v_range: tuple[float, float] = PGM_RANGE) -> None:
    """8-bit binary PGM with V mapped linearly from ``v_range`` to [0, 255]."""
    lo, hi = v_range
    g = np.clip(np.rint((np.asarray(V) - lo) * (255.0 / (hi - lo))), 0, 255).astype(np.uint8)
    ny, nx = g.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode())
        fh.write(g.tobytes())


def save_snapshots(result: TissueResult, directory: str | Path, pgm: bool = False,
                   prefix: str = "snapshot") -> Path:
    """Write every snapshot plus ``<prefix>_index.csv`` (file, time); returns the index path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = directory / f"{prefix}_index.csv"
    with open(index, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "time"])
        for k, s in enumerate(result.snapshots):
            name = f"{prefix}_{k:05d}.bin"
            write_snapshot(directory / name, s.V, s.t)
            if pgm:
                write_pgm(directory / f"{prefix}_{k:05d}.pgm", s.V)
            w.writerow([name, repr(s.t)])
    return index


def reexcited_cells(result: TissueResult) -> np.ndarray:
    """Boolean map of cells that crossed 0 mV upward more than once."""
    return result.upcrossings >= 2


__all__ = [
    "DX", "D_DEFAULT", "DT", "TissueConfigError", "TissueDiverged", "TissueField", "Rect", "RegionPulse",
    "ParameterSwitch", "TissueProtocol", "laplacian_5pt", "step_tissue", "run_tissue", "Snapshot",
    "TissueResult", "write_snapshot", "read_snapshot", "write_pgm", "save_snapshots", "reexcited_cells",
]
