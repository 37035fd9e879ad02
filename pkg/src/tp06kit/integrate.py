"""Single-cell time integration.

Two methods:

``rush-larsen-euler``
    fixed step; gates take the exact exponential step for frozen voltage,
    everything else a forward Euler step.
``adaptive-rk``
    Dormand-Prince 5(4) with a standard step-size controller.

The Dormand-Prince kernel integrates a batch of trajectories on one step
sequence chosen by the worst error over all rows. Continuation uses this to obtain finite-
difference sensitivities of the discrete flow map.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numba import njit

from .model import (
    IS_GATE, N_STATES, NO_STIMULUS, P_CM, STATE_NAMES, CellParameters, DomainError,
    StimulusProtocol, check_state, evaluate, rhs, state_scales,
)

RUSH_LARSEN = "rush-larsen-euler"
ADAPTIVE = "adaptive-rk"


class IntegrationDiverged(RuntimeError):
    """A non-finite value appeared; ``t`` is the time of the last good state."""

    def __init__(self, t: float, message: str = ""):
        super().__init__(message or f"integration diverged at t = {t:.6g} ms")
        self.t = t


# ---------------------------------------------------------------------------
# Kernels

@njit(cache=True, error_model="numpy")
def stimulus_at(t, starts, ends, amps):
    for i in range(starts.size):
        if starts[i] <= t < ends[i]:
            return amps[i]
    return 0.0


@njit(cache=True, error_model="numpy")
def rl_step_into(y, p, variant, istim, dt, extra, clamp, out, dy, ginf, gtau, cur):
    """One Rush-Larsen/Euler step from ``y`` into ``out``.

    ``extra`` is an additional membrane current density (pA/pF) added to
    the voltage equation; the tissue solver passes the diffusion term here.
    """
    evaluate(y, p, variant, istim, dy, ginf, gtau, cur)
    n = N_STATES[variant]
    for k in range(1, n):
        if IS_GATE[variant, k]:
            out[k] = ginf[k] + (y[k] - ginf[k]) * math.exp(-dt / gtau[k])
        else:
            out[k] = y[k] + dt * dy[k]
    if clamp:
        out[0] = y[0]
    else:
        out[0] = y[0] + dt * (dy[0] + extra / p[P_CM])


@njit(cache=True, error_model="numpy")
def rl_run(y0, p, variant, starts, ends, amps, t0, dt, nsteps, stride, clamp):
    n = y0.size
    nout = nsteps // stride + 1
    if nsteps % stride != 0:
        nout += 1
    times = np.empty(nout)
    states = np.empty((nout, n))
    y = y0.copy()
    ynew = np.empty(n)
    dy = np.empty(n)
    ginf = np.empty(n)
    gtau = np.empty(n)
    cur = np.empty(12)
    times[0] = t0
    states[0] = y
    j = 1
    for k in range(nsteps):
        t = t0 + k * dt
        istim = stimulus_at(t, starts, ends, amps)
        rl_step_into(y, p, variant, istim, dt, 0.0, clamp, ynew, dy, ginf, gtau, cur)
        for i in range(n):
            if not math.isfinite(ynew[i]):
                return times[:j], states[:j], k
        tmp = y
        y = ynew
        ynew = tmp
        if (k + 1) % stride == 0 or k + 1 == nsteps:
            times[j] = t0 + (k + 1) * dt
            states[j] = y
            j += 1
    return times[:j], states[:j], -1


# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1 = 71 / 57600
_E3 = -71 / 16695
_E4 = 71 / 1920
_E5 = -17253 / 339200
_E6 = 22 / 525
_E7 = -1 / 40


@njit(cache=True, error_model="numpy")
def _eval_rows(Y, P, variant, istim, K, dy, ginf, gtau, cur):
    for r in range(Y.shape[0]):
        evaluate(Y[r], P[r], variant, istim, dy, ginf, gtau, cur)
        K[r] = dy


@njit(cache=True, error_model="numpy")
def dp45_batch(Y0, P, variant, istim, t0, t1, h0, rtol, atol, hmax, max_steps, stride):
    """Integrate every row of ``Y0`` from ``t0`` to ``t1`` on a common step sequence.

    The step is accepted on the worst error estimate over all rows, so
    nearby rows see an identical step sequence (finite differences across
    rows then differentiate the discrete flow). Row 0 is recorded every ``stride``
    accepted steps when ``stride > 0``. Returns ``(Y, t, h, n_accepted,
    status, times, states)``; status 0 = reached ``t1``, 1 = step size
    underflow, 2 = step budget exhausted.
    """
    nr, n = Y0.shape
    Y = Y0.copy()
    Ys = np.empty_like(Y)
    Yn = np.empty_like(Y)
    K1 = np.empty_like(Y)
    K2 = np.empty_like(Y)
    K3 = np.empty_like(Y)
    K4 = np.empty_like(Y)
    K5 = np.empty_like(Y)
    K6 = np.empty_like(Y)
    K7 = np.empty_like(Y)
    dy = np.empty(n)
    ginf = np.empty(n)
    gtau = np.empty(n)
    cur = np.empty(12)

    cap = 1024 if stride > 0 else 1
    times = np.empty(cap)
    states = np.empty((cap, n))
    nstore = 0
    if stride > 0:
        times[0] = t0
        states[0] = Y[0]
        nstore = 1

    _eval_rows(Y, P, variant, istim, K1, dy, ginf, gtau, cur)
    t = t0
    h = min(h0, hmax)
    nacc = 0
    nsteps = 0
    status = 0
    span = t1 - t0
    while t < t1:
        if nsteps >= max_steps:
            status = 2
            break
        nsteps += 1
        last = False
        if t + h >= t1 or t1 - (t + h) < 1e-12 * span:
            h = t1 - t
            last = True
        Ys[:] = Y + h * (_A21 * K1)
        _eval_rows(Ys, P, variant, istim, K2, dy, ginf, gtau, cur)
        Ys[:] = Y + h * (_A31 * K1 + _A32 * K2)
        _eval_rows(Ys, P, variant, istim, K3, dy, ginf, gtau, cur)
        Ys[:] = Y + h * (_A41 * K1 + _A42 * K2 + _A43 * K3)
        _eval_rows(Ys, P, variant, istim, K4, dy, ginf, gtau, cur)
        Ys[:] = Y + h * (_A51 * K1 + _A52 * K2 + _A53 * K3 + _A54 * K4)
        _eval_rows(Ys, P, variant, istim, K5, dy, ginf, gtau, cur)
        Ys[:] = Y + h * (_A61 * K1 + _A62 * K2 + _A63 * K3 + _A64 * K4 + _A65 * K5)
        _eval_rows(Ys, P, variant, istim, K6, dy, ginf, gtau, cur)
        Yn[:] = Y + h * (_B1 * K1 + _B3 * K3 + _B4 * K4 + _B5 * K5 + _B6 * K6)
        _eval_rows(Yn, P, variant, istim, K7, dy, ginf, gtau, cur)

        err = 0.0
        for r in range(nr):
            acc = 0.0
            for i in range(n):
                e = h * (_E1 * K1[r, i] + _E3 * K3[r, i] + _E4 * K4[r, i] + _E5 * K5[r, i]
                         + _E6 * K6[r, i] + _E7 * K7[r, i])
                sc = atol[i] + rtol * max(abs(Y[r, i]), abs(Yn[r, i]))
                q = e / sc
                acc += q * q
            acc = math.sqrt(acc / n)
            if not math.isfinite(acc):
                err = math.inf
                break
            err = max(err, acc)

        if err <= 1.0:
            t = t1 if last else t + h
            Y[:] = Yn
            K1[:] = K7
            nacc += 1
            if stride > 0 and (nacc % stride == 0 or t >= t1):
                if nstore == times.size:
                    times2 = np.empty(2 * times.size)
                    states2 = np.empty((2 * times.size, n))
                    times2[:nstore] = times[:nstore]
                    states2[:nstore] = states[:nstore]
                    times = times2
                    states = states2
                times[nstore] = t
                states[nstore] = Y[0]
                nstore += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * fac, hmax)
        else:
            fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h = h * fac
            if h < 1e-12 * max(1.0, abs(t)):
                status = 1
                break
    return Y, t, h, nacc, status, times[:nstore], states[:nstore]


# ---------------------------------------------------------------------------
# Public API

@dataclass(frozen=True)
class IntegratorConfig:
    """How :func:`simulate` advances the cell.

    ``atol`` is multiplied by each component's typical magnitude
    (:func:`tp06kit.model.state_scales`). ``stride`` keeps every n-th step
    (fixed step) or accepted step (adaptive) in the trace.
    """

    method: str = RUSH_LARSEN
    dt: float = 0.02
    rtol: float = 1e-7
    atol: float = 1e-7
    stride: int = 1
    hmax: float = 1.0
    max_steps: int = 100_000_000

    def __post_init__(self):
        if self.method not in (RUSH_LARSEN, ADAPTIVE):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.dt > 0 or not self.rtol > 0 or not self.atol > 0 or not self.hmax > 0:
            raise ValueError("dt, tolerances and hmax must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass
class Trace:
    times: np.ndarray
    states: np.ndarray
    params: CellParameters
    protocol: StimulusProtocol = NO_STIMULUS
    method: str = RUSH_LARSEN

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.states = np.asarray(self.states, dtype=np.float64)
        if self.times.ndim != 1 or len(self.times) < 2 or len(self.times) != len(self.states):
            raise ValueError("a trace needs >= 2 samples with one state per time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trace times must be strictly increasing")

    @property
    def names(self) -> tuple[str, ...]:
        return STATE_NAMES[self.params.variant]

    @property
    def V(self) -> np.ndarray:
        return self.states[:, 0]

    def component(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].copy()

    def to_csv(self, path: str | Path) -> None:
        header = ",".join(("t",) + self.names)
        data = np.column_stack([self.times, self.states])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")

    def to_binary(self, path: str | Path) -> None:
        """Little-endian file: magic, component count, record count, then (t, state) records."""
        n = self.states.shape[1]
        with open(path, "wb") as fh:
            fh.write(BINARY_MAGIC)
            fh.write(struct.pack("<QQ", n, len(self.times)))
            fh.write(np.column_stack([self.times, self.states]).astype("<f8").tobytes())


BINARY_MAGIC = b"TP06TRC\x00"


def read_trace_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Return ``(names, times, states)`` from a trace CSV."""
    with open(path) as fh:
        names = tuple(fh.readline().strip().split(","))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return names[1:], data[:, 0], data[:, 1:]


def read_trace_binary(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:8] != BINARY_MAGIC:
        raise ValueError(f"{path} is not a trace file")
    n, count = struct.unpack("<QQ", raw[8:24])
    data = np.frombuffer(raw[24:], dtype="<f8").reshape(count, n + 1)
    return data[:, 0].copy(), data[:, 1:].copy()


def _check_inputs(y0, params: CellParameters, protocol: StimulusProtocol | None):
    params.check_physical()
    y0 = np.array(y0, dtype=np.float64)
    if y0.shape != (params.n_states,):
        raise DomainError(f"{params.variant} state needs {params.n_states} components, got {y0.shape}")
    check_state(y0, params.variant)
    return y0, protocol or NO_STIMULUS


def step_rush_larsen(y, params: CellParameters, t: float, dt: float,
                     stimulus: StimulusProtocol | None = None, clamp_voltage: bool = False) -> np.ndarray:
    """Advance one Rush-Larsen/Euler step of size ``dt`` starting at time ``t``.

    ``clamp_voltage`` holds ``V`` fixed (voltage-clamp harness).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (params.n_states,):
        raise DomainError(f"{params.variant} state needs {params.n_states} components")
    istim = (stimulus or NO_STIMULUS).current(t)
    n = params.n_states
    out = np.empty(n)
    rl_step_into(y, params.as_array(), params.code, istim, dt, 0.0, clamp_voltage,
                 out, np.empty(n), np.empty(n), np.empty(n), np.empty(12))
    if not np.all(np.isfinite(out)):
        raise IntegrationDiverged(t)
    return out


def flow_adaptive(Y0, P, variant: int, t_span: float, *, istim: float = 0.0, rtol: float = 1e-8,
                  atol: np.ndarray, h0: float = 0.01, hmax: float = 1.0,
                  max_steps: int = 10_000_000, stride: int = 0):
    """Thin wrapper over :func:`dp45_batch` raising on failure."""
    Y, t, h, nacc, status, times, states = dp45_batch(
        np.ascontiguousarray(Y0, dtype=np.float64), np.ascontiguousarray(P, dtype=np.float64),
        variant, istim, 0.0, float(t_span), h0, rtol, atol, hmax, max_steps, stride)
    if status != 0:
        raise IntegrationDiverged(t, f"adaptive integration stopped at t = {t:.6g} ms "
                                     f"({'step underflow' if status == 1 else 'step budget'})")
    return Y, h, times, states


def simulate(y0, params: CellParameters, protocol: StimulusProtocol | None = None,
             config: IntegratorConfig | None = None, t_end: float = 1000.0, clamp_voltage: bool = False) -> Trace:
    """Integrate one cell from ``t = 0`` to ``t_end`` (ms)."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    config = config or IntegratorConfig()
    y0, protocol = _check_inputs(y0, params, protocol)
    p = params.as_array()
    if config.method == RUSH_LARSEN:
        nsteps = int(round(t_end / config.dt))
        if nsteps * config.dt < t_end * (1 - 1e-12):
            nsteps += 1
        starts, ends, amps = protocol.as_arrays()
        times, states, bad = rl_run(y0, p, params.code, starts, ends, amps, 0.0, config.dt,
                                    nsteps, config.stride, clamp_voltage)
        if bad >= 0:
            raise IntegrationDiverged(bad * config.dt)
        return Trace(times, states, params, protocol, config.method)
    if clamp_voltage:
        raise ValueError("voltage clamp is only available for the fixed-step method")

    atol = config.atol * state_scales(params.variant)
    cuts = [0.0] + [b for b in protocol.breakpoints() if 0.0 < b < t_end] + [t_end]
    all_t, all_y = [np.array([0.0])], [y0[None, :]]
    y = y0
    h = min(config.hmax, 0.01)
    for a, b in zip(cuts, cuts[1:]):
        istim = protocol.current(a)
        try:
            Y, h, times, states = flow_adaptive(y[None, :], p[None, :], params.code, b - a, istim=istim,
                                                rtol=config.rtol, atol=atol, h0=h, hmax=config.hmax,
                                                max_steps=config.max_steps, stride=config.stride)
        except IntegrationDiverged as exc:
            raise IntegrationDiverged(a + exc.t) from None
        all_t.append(times[1:] + a)
        all_y.append(states[1:])
        y = Y[0]
    times = np.concatenate(all_t)
    states = np.concatenate(all_y)
    keep = np.concatenate([[True], np.diff(times) > 0])
    return Trace(times[keep], states[keep], params, protocol, config.method)


@dataclass
class Relaxed:
    state: np.ndarray
    residual: float


def equilibrate(params: CellParameters, guess=None, t_relax: float = 10_000.0,
                config: IntegratorConfig | None = None) -> Relaxed:
    """Relax without stimulus for ``t_relax`` ms; ``residual`` is max |rhs| at the end."""
    from .model import published_initial_state

    if not t_relax > 0:
        raise ValueError("t_relax must be positive")
    if guess is None:
        guess = published_initial_state(params.variant)
    config = config or IntegratorConfig()
    n = int(round(t_relax / config.dt))
    config = replace(config, stride=max(1, n))
    trace = simulate(guess, params, NO_STIMULUS, config, t_relax)
    y = trace.final
    return Relaxed(y, float(np.max(np.abs(rhs(y, params)))))
