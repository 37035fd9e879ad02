"""Action potential features and trace comparison."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.signal import find_peaks

from .integrate import Trace

EAD_PROMINENCE = 1.0  # mV
PLATEAU_FLOOR = -40.0  # mV
REPOLARISED = -80.0  # mV
# the phase-1 notch and the dome that follows it are not afterdepolarisations
DOME_WINDOW = 100.0  # ms after the peak
# an excursion counts as an action potential only if it overshoots this level
AP_MIN_PEAK = -20.0  # mV
AP_MIN_AMPLITUDE = 30.0  # mV


@dataclass(frozen=True)
class APFeatures:
    """Summary of the first action potential in a trace.

    ``has_ap`` is False for traces without a supra-threshold excursion;
    then ``apd90`` and ``upstroke_time`` are NaN and ``ead_count`` is 0.
    """

    resting_v: float
    peak_v: float
    apd90: float
    ead_count: int
    repolarisation_failure: bool
    has_ap: bool = True
    upstroke_time: float = math.nan


def _tv(trace) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(trace, Trace):
        return np.asarray(trace.times, dtype=np.float64), np.asarray(trace.V, dtype=np.float64)
    t, v = trace
    return np.asarray(t, dtype=np.float64), np.asarray(v, dtype=np.float64)


def ap_features(trace, ead_prominence: float = EAD_PROMINENCE, plateau_floor: float = PLATEAU_FLOOR,
                repolarised: float = REPOLARISED, dome_window: float = DOME_WINDOW) -> APFeatures:
    """Features of a :class:`Trace` or a ``(times, V)`` pair.

    The upstroke is the sample of steepest rise. APD90 runs from there to
    the first fall below ``peak - 0.9 (peak - rest)`` after the peak,
    interpolated linearly. EADs are local maxima of V with prominence of at
    least ``ead_prominence`` mV, before the final fall below
    ``plateau_floor``. The search starts at the peak, or at the dome when
    a spike-and-dome shape peaks again within ``dome_window`` ms of the
    spike (set it to 0 to count the dome as well).
    """
    t, v = _tv(trace)
    if t.size < 3 or t.shape != v.shape:
        raise ValueError("a trace needs at least three samples of (t, V)")
    rest = float(v[0])
    dv = np.diff(v) / np.diff(t)
    iu = int(np.argmax(dv))
    ipk = iu + int(np.argmax(v[iu:]))
    peak = float(v[ipk])
    if peak < AP_MIN_PEAK or peak - rest < AP_MIN_AMPLITUDE:
        return APFeatures(rest, float(np.max(v)), math.nan, 0, False, has_ap=False)
    t_up = float(t[iu])

    after = v[ipk:]
    failure = not bool(np.any(after < repolarised))

    level = peak - 0.9 * (peak - rest)
    below = np.flatnonzero(after < level)
    if below.size:
        k = ipk + int(below[0])
        # linear interpolation between samples k-1 and k
        frac = (v[k - 1] - level) / (v[k - 1] - v[k])
        apd90 = float(t[k - 1] + frac * (t[k] - t[k - 1]) - t_up)
    else:
        apd90 = math.nan

    above = np.flatnonzero(after >= plateau_floor)
    end = ipk + int(above[-1]) + 1 if above.size else ipk + 1
    if end >= v.size:
        end = v.size  # never finally repolarised: search the whole remainder
    start = ipk
    if dome_window > 0:
        early = np.flatnonzero(t[ipk:end] <= t[ipk] + dome_window)
        if early.size > 2:
            domes, _ = find_peaks(v[ipk:ipk + early[-1] + 1], prominence=ead_prominence)
            if domes.size:
                start = ipk + int(domes[np.argmax(v[ipk + domes])])
    window = v[start:end]
    peaks, _ = find_peaks(window, prominence=ead_prominence)
    return APFeatures(rest, peak, apd90, int(peaks.size), failure, True, t_up)


@dataclass(frozen=True)
class Comparison:
    sup: float  # mV
    rms: float  # mV
    delta_apd90: float  # ms, a minus b


def compare_traces(a, b) -> Comparison:
    """V mismatch of two traces on their common time window.

    Both traces are linearly interpolated onto the union of their sample
    times inside the window, which makes the sup norm exact for the
    piecewise-linear traces. RMS is the time-weighted (trapezoidal) mean.
    """
    ta, va = _tv(a)
    tb, vb = _tv(b)
    lo, hi = max(ta[0], tb[0]), min(ta[-1], tb[-1])
    if not hi > lo:
        raise ValueError(f"traces do not overlap in time: [{ta[0]}, {ta[-1]}] vs [{tb[0]}, {tb[-1]}]")
    grid = np.union1d(ta[(ta >= lo) & (ta <= hi)], tb[(tb >= lo) & (tb <= hi)])
    grid = np.union1d(grid, [lo, hi])
    d = np.interp(grid, ta, va) - np.interp(grid, tb, vb)
    sup = float(np.max(np.abs(d)))
    rms = float(math.sqrt(np.trapezoid(d * d, grid) / (hi - lo)))
    fa, fb = ap_features((ta, va)), ap_features((tb, vb))
    return Comparison(sup, rms, fa.apd90 - fb.apd90)


FEATURE_COLUMNS = ("id",) + tuple(APFeatures.__dataclass_fields__)


def write_features_csv(rows: Iterable[tuple[str, APFeatures]], path: str | Path) -> None:
    """One row per trace: identifier followed by every :class:`APFeatures` field."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FEATURE_COLUMNS)
        for ident, f in rows:
            d = asdict(f)
            w.writerow([ident] + [repr(d[c]) if isinstance(d[c], float) else d[c] for c in FEATURE_COLUMNS[1:]])


def read_features_csv(path: str | Path) -> list[tuple[str, APFeatures]]:
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out.append((r["id"], APFeatures(float(r["resting_v"]), float(r["peak_v"]), float(r["apd90"]),
                                            int(r["ead_count"]), r["repolarisation_failure"] == "True",
                                            r["has_ap"] == "True", float(r["upstroke_time"]))))
    return out
