"""Branch data types and CSV persistence."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..model import STATE_NAMES, rhs
from ..params import CellParameters

STABLE = "stable"
UNSTABLE = "unstable"

HOPF = "hopf"
PERIOD_DOUBLING = "period-doubling"
TORUS = "torus"
LIMIT_POINT = "limit-point"
BRANCH_POINT = "branch-point"
FOLD_OF_CYCLES = "fold-of-cycles"


@dataclass
class CycleRepresentation:
    """Periodic orbit as ``m`` shooting nodes equally spaced in time."""

    period: float
    nodes: np.ndarray  # (m, n)
    parameter: float

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64)
        if not self.period > 0:
            raise ValueError("cycle period must be positive")

    @property
    def m(self) -> int:
        return self.nodes.shape[0]


@dataclass
class BranchPoint:
    parameter: float
    stability: str
    spectrum: np.ndarray  # eigenvalues (equilibria) or Floquet multipliers (cycles), complex
    arclength: float = 0.0
    residual: float = 0.0
    state: np.ndarray | None = None
    cycle: CycleRepresentation | None = None
    flags: tuple[str, ...] = ()
    # extrema of V along the orbit (cycles) or V itself (equilibria)
    v_range: tuple[float, float] = (np.nan, np.nan)

    @property
    def is_cycle(self) -> bool:
        return self.cycle is not None

    @property
    def representative(self) -> np.ndarray:
        return self.cycle.nodes[0] if self.cycle is not None else self.state

    def leading(self) -> complex:
        """Eigenvalue with largest real part, or nontrivial multiplier of largest modulus."""
        if self.spectrum.size == 0:
            return complex("nan")
        if self.is_cycle:
            mu = nontrivial_multipliers(self.spectrum)
            return complex(mu[np.argmax(np.abs(mu))]) if mu.size else complex("nan")
        return complex(self.spectrum[np.argmax(self.spectrum.real)])


@dataclass
class BifurcationEvent:
    kind: str
    parameter: float
    point: BranchPoint
    diagnostic: complex
    bracket: tuple[float, float] = (np.nan, np.nan)


@dataclass
class Branch:
    kind: str  # "equilibrium" or "cycle"
    parameter_id: str
    params: CellParameters
    points: list[BranchPoint] = field(default_factory=list)
    events: list[BifurcationEvent] = field(default_factory=list)
    stop_reason: str = ""

    def parameters(self) -> np.ndarray:
        return np.array([pt.parameter for pt in self.points])

    def events_of(self, kind: str) -> list[BifurcationEvent]:
        return [e for e in self.events if e.kind == kind]

    def params_at(self, value: float) -> CellParameters:
        return self.params.replace(**{self.parameter_id: value})


def nontrivial_multipliers(mu: np.ndarray) -> np.ndarray:
    """Drop the multiplier closest to 1."""
    if mu.size == 0:
        return mu
    k = int(np.argmin(np.abs(mu - 1.0)))
    return np.delete(mu, k)


# ---------------------------------------------------------------------------
# CSV persistence

def _num(x) -> str:
    return repr(float(x))


def _fixed_columns(kind: str) -> list[str]:
    cols = ["parameter", "arclength", "stability", "residual"]
    if kind == "cycle":
        cols += ["period", "V_min", "V_max"]
    return cols + ["leading_re", "leading_im"]


def save_branch(branch: Branch, path: str | Path, events_path: str | Path | None = None) -> None:
    """Write one row per point.

    Columns: parameter, arclength, stability, residual, [period, V_min,
    V_max for cycles], leading_re, leading_im, then the state (equilibria)
    or every shooting node ``node<k>.<component>`` (cycles). A ``#`` header
    line records kind, parameter id and variant.
    """
    names = STATE_NAMES[branch.params.variant]
    cols = _fixed_columns(branch.kind)
    if branch.kind == "cycle":
        m = branch.points[0].cycle.m if branch.points else 0
        cols += [f"node{k}.{nm}" for k in range(m) for nm in names]
    else:
        cols += list(names)
    with open(path, "w", newline="") as fh:
        fh.write(f"# kind={branch.kind} parameter={branch.parameter_id} "
                 f"variant={branch.params.variant} stop={branch.stop_reason!r}\n")
        w = csv.writer(fh)
        w.writerow(cols)
        for pt in branch.points:
            lead = pt.leading()
            row = [_num(pt.parameter), _num(pt.arclength), pt.stability, _num(pt.residual)]
            if branch.kind == "cycle":
                row += [_num(pt.cycle.period), _num(pt.v_range[0]), _num(pt.v_range[1])]
            row += [_num(lead.real), _num(lead.imag)]
            vals = pt.cycle.nodes.ravel() if branch.kind == "cycle" else pt.state
            row += [_num(v) for v in vals]
            w.writerow(row)
    if events_path is not None:
        save_events(branch, events_path)


def save_events(branch: Branch, path: str | Path) -> None:
    """Columns: kind, parameter, diagnostic_re, diagnostic_im, bracket_lo, bracket_hi, V."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "parameter", "diagnostic_re", "diagnostic_im", "bracket_lo", "bracket_hi", "V"])
        for e in branch.events:
            w.writerow([e.kind, _num(e.parameter), _num(e.diagnostic.real), _num(e.diagnostic.imag),
                        _num(e.bracket[0]), _num(e.bracket[1]), _num(e.point.representative[0])])


def read_events(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("parameter", "diagnostic_re", "diagnostic_im", "bracket_lo", "bracket_hi", "V"):
            r[k] = float(r[k])
    return rows


class BranchVerificationError(ValueError):
    pass


def load_branch(path: str | Path, params: CellParameters, verify: bool = True,
                tol: float = 1e-8, shoot_tol: float = 1e-6) -> Branch:
    """Read a branch CSV; with ``verify`` every point's defining residual is recomputed.

    ``params`` supplies all constants except the continuation parameter.
    Floquet multipliers and eigenvalues are not stored; ``spectrum`` is empty
    after loading.
    """
    with open(path, newline="") as fh:
        header = fh.readline()
        meta = dict(tok.split("=", 1) for tok in header[1:].split() if "=" in tok)
        rows = list(csv.DictReader(fh))
    kind, pid = meta["kind"], meta["parameter"]
    params = params.replace(variant=meta["variant"])
    names = STATE_NAMES[params.variant]
    branch = Branch(kind, pid, params, stop_reason=meta.get("stop", "").strip("'\""))
    for r in rows:
        lam = float(r["parameter"])
        p = params.replace(**{pid: lam})
        if kind == "cycle":
            m = sum(1 for c in r if c.endswith("." + names[0]) and c.startswith("node"))
            nodes = np.array([[float(r[f"node{k}.{nm}"]) for nm in names] for k in range(m)])
            cyc = CycleRepresentation(float(r["period"]), nodes, lam)
            res = float(r["residual"])
            if verify:
                from .cycles import shooting_residual
                res = shooting_residual(cyc, p)
                if res > shoot_tol:
                    raise BranchVerificationError(f"cycle at {pid}={lam} fails closure: {res:.3e}")
            pt = BranchPoint(lam, r["stability"], np.array([], dtype=complex), float(r["arclength"]),
                             res, cycle=cyc, v_range=(float(r["V_min"]), float(r["V_max"])))
        else:
            x = np.array([float(r[nm]) for nm in names])
            res = float(np.max(np.abs(rhs(x, p))))
            if verify and res > tol:
                raise BranchVerificationError(f"equilibrium at {pid}={lam} has residual {res:.3e}")
            pt = BranchPoint(lam, r["stability"], np.array([], dtype=complex), float(r["arclength"]),
                             res, state=x, v_range=(x[0], x[0]))
        branch.points.append(pt)
    return branch
