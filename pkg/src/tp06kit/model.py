"""TP06 ventricular cell: state layout, gating kinetics, currents and right-hand side.

Two variants share one compiled kernel:

* ``original`` -- the 19-variable model with separate ``h``/``j`` sodium
  inactivation gates and a dynamic intracellular potassium ``K_i``.
* ``modified`` -- 17 variables; ``h`` and ``j`` are merged into one gate
  ``v`` (``I_Na ~ m^3 v^2``) and ``K_i`` is a parameter.

States are plain float64 arrays laid out as in :data:`STATE_NAMES`
(``V`` first, gates alphabetically, then concentrations). Units: ms, mV,
mM, pA/pF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .params import INITIAL_FILE, MODIFIED, ORIGINAL, CellParameters, parse_table

STATE_NAMES = {
    ORIGINAL: ("V", "d", "f", "f2", "fCass", "h", "j", "m", "r", "Rbar", "s",
               "xr1", "xr2", "xs", "Ca_i", "Ca_SR", "Ca_ss", "Na_i", "K_i"),
    MODIFIED: ("V", "d", "f", "f2", "fCass", "m", "r", "Rbar", "s", "v",
               "xr1", "xr2", "xs", "Ca_i", "Ca_SR", "Ca_ss", "Na_i"),
}
# Components advanced by the exponential (Rush-Larsen) update.
GATES = {
    ORIGINAL: ("d", "f", "f2", "fCass", "h", "j", "m", "r", "s", "xr1", "xr2", "xs"),
    MODIFIED: ("d", "f", "f2", "fCass", "m", "r", "s", "v", "xr1", "xr2", "xs"),
}
# Bounded to [0, 1] (gates plus the SR release fraction).
FRACTIONS = {k: tuple(sorted(set(v) | {"Rbar"}, key=STATE_NAMES[k].index)) for k, v in GATES.items()}
CONCENTRATIONS = {ORIGINAL: ("Ca_i", "Ca_SR", "Ca_ss", "Na_i", "K_i"),
                  MODIFIED: ("Ca_i", "Ca_SR", "Ca_ss", "Na_i")}
CURRENT_NAMES = ("I_K1", "I_to", "I_Kr", "I_Ks", "I_CaL", "I_NaK", "I_Na",
                 "I_bNa", "I_NaCa", "I_bCa", "I_pK", "I_pCa")

# Typical magnitudes, used to weight norms and finite-difference steps.
_SCALE_BY_NAME = {"V": 10.0, "Ca_i": 1e-4, "Ca_SR": 1.0, "Ca_ss": 1e-4, "Na_i": 10.0, "K_i": 100.0}


def state_scales(variant: str) -> np.ndarray:
    return np.array([_SCALE_BY_NAME.get(n, 1.0) for n in STATE_NAMES[variant]])


class DomainError(ValueError):
    """Invalid input to a model function (unknown gate, non-finite state, wrong size)."""


# ---------------------------------------------------------------------------
# Slot bookkeeping shared by both variants. Kernels address components
# through a canonical 20-slot numbering and a per-variant layout table.

_CANON = ("V", "d", "f", "f2", "fCass", "h", "j", "m", "r", "Rbar", "s", "v",
          "xr1", "xr2", "xs", "Ca_i", "Ca_SR", "Ca_ss", "Na_i", "K_i")
(S_V, S_D, S_F, S_F2, S_FCASS, S_H, S_J, S_M, S_R, S_RBAR, S_S, S_VG,
 S_XR1, S_XR2, S_XS, S_CAI, S_CASR, S_CASS, S_NAI, S_KI) = range(20)

LAYOUT = np.full((2, 20), -1, dtype=np.int64)
IS_GATE = np.zeros((2, 19), dtype=np.bool_)
for _variant, _code in ((ORIGINAL, 0), (MODIFIED, 1)):
    for _i, _name in enumerate(STATE_NAMES[_variant]):
        LAYOUT[_code, _CANON.index(_name)] = _i
        IS_GATE[_code, _i] = _name in GATES[_variant]
N_STATES = np.array([19, 17], dtype=np.int64)

# Parameter vector indices (must follow params.PARAM_NAMES).
(P_GNA, P_GCAL, P_GKR, P_GKS, P_GK1, P_GTO, P_GPK, P_GPCA, P_GBNA, P_GBCA,
 P_ETA, P_NAO, P_KO, P_CAO, P_KI,
 P_CM, P_CCELL, P_VC, P_VSR, P_VSS, P_F, P_R, P_T,
 P_PKNA, P_PNAK, P_KMK, P_KMNA, P_KNACA, P_KMCA, P_KMNAI, P_KSAT,
 P_ALPHA, P_GAMMA, P_KPCA,
 P_VMAXUP, P_KUP, P_VLEAK, P_VREL, P_VXFER, P_K1P, P_K2P, P_K3, P_K4,
 P_EC, P_MAXSR, P_MINSR, P_BUFC, P_KBUFC, P_BUFSR, P_KBUFSR, P_BUFSS, P_KBUFSS) = range(52)


# ---------------------------------------------------------------------------
# Gating kinetics. Each returns (steady state, time constant in ms).

@njit(cache=True, error_model="numpy")
def _softplus(x):
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


@njit(cache=True, error_model="numpy")
def gate_m(V):
    inf = 1.0 / (1.0 + math.exp((-56.86 - V) / 9.03)) ** 2
    a = 1.0 / (1.0 + math.exp((-60.0 - V) / 5.0))
    b = 0.1 / (1.0 + math.exp((V + 35.0) / 5.0)) + 0.1 / (1.0 + math.exp((V - 50.0) / 200.0))
    return inf, a * b


@njit(cache=True, error_model="numpy")
def _hj_inf(V):
    return 1.0 / (1.0 + math.exp((V + 71.55) / 7.43)) ** 2


@njit(cache=True, error_model="numpy")
def gate_h(V):
    # piecewise at -40 mV, kept discontinuous
    if V < -40.0:
        a = 0.057 * math.exp(-(V + 80.0) / 6.8)
        b = 2.7 * math.exp(0.079 * V) + 3.1e5 * math.exp(0.3485 * V)
    else:
        a = 0.0
        b = 0.77 / (0.13 * (1.0 + math.exp(-(V + 10.66) / 11.1)))
    return _hj_inf(V), 1.0 / (a + b)


@njit(cache=True, error_model="numpy")
def gate_j(V):
    if V < -40.0:
        a = ((-25428.0 * math.exp(0.2444 * V) - 6.948e-6 * math.exp(-0.04391 * V))
             * (V + 37.78) / (1.0 + math.exp(0.311 * (V + 79.23))))
        b = 0.02424 * math.exp(-0.01052 * V) / (1.0 + math.exp(-0.1378 * (V + 40.14)))
    else:
        a = 0.0
        b = 0.6 * math.exp(0.057 * V) / (1.0 + math.exp(-0.1 * (V + 32.0)))
    return _hj_inf(V), 1.0 / (a + b)


@njit(cache=True, error_model="numpy")
def gate_v(V):
    """Merged sodium inactivation gate; smooth replacement for h and j."""
    inf = _hj_inf(V)
    x = 6.468 + 0.07 * V
    if x > 20.0:
        # both v_inf and 1 - tanh(x) underflow here; take the ratio in log space
        ratio = math.exp(-2.0 * _softplus((V + 71.55) / 7.43) - math.log(2.0) + _softplus(2.0 * x))
    else:
        ratio = inf * (1.0 + math.exp(2.0 * x)) / 2.0
    return inf, 0.25 + 2.24 * ratio


@njit(cache=True, error_model="numpy")
def gate_xr1(V):
    inf = 1.0 / (1.0 + math.exp((-26.0 - V) / 7.0))
    a = 450.0 / (1.0 + math.exp((-45.0 - V) / 10.0))
    b = 6.0 / (1.0 + math.exp((V + 30.0) / 11.5))
    return inf, a * b


@njit(cache=True, error_model="numpy")
def gate_xr2(V):
    inf = 1.0 / (1.0 + math.exp((V + 88.0) / 24.0))
    a = 3.0 / (1.0 + math.exp((-60.0 - V) / 20.0))
    b = 1.12 / (1.0 + math.exp((V - 60.0) / 20.0))
    return inf, a * b


@njit(cache=True, error_model="numpy")
def gate_xs(V):
    inf = 1.0 / (1.0 + math.exp((-5.0 - V) / 14.0))
    a = 1400.0 / math.sqrt(1.0 + math.exp((5.0 - V) / 6.0))
    b = 1.0 / (1.0 + math.exp((V - 35.0) / 15.0))
    return inf, a * b + 80.0


@njit(cache=True, error_model="numpy")
def gate_r(V):
    inf = 1.0 / (1.0 + math.exp((20.0 - V) / 6.0))
    return inf, 9.5 * math.exp(-(V + 40.0) ** 2 / 1800.0) + 0.8


@njit(cache=True, error_model="numpy")
def gate_s(V):
    # endocardial form
    inf = 1.0 / (1.0 + math.exp((V + 28.0) / 5.0))
    return inf, 1000.0 * math.exp(-(V + 67.0) ** 2 / 1000.0) + 8.0


@njit(cache=True, error_model="numpy")
def gate_d(V):
    inf = 1.0 / (1.0 + math.exp((-8.0 - V) / 7.5))
    a = 1.4 / (1.0 + math.exp((-35.0 - V) / 13.0)) + 0.25
    b = 1.4 / (1.0 + math.exp((V + 5.0) / 5.0))
    c = 1.0 / (1.0 + math.exp((50.0 - V) / 20.0))
    return inf, a * b + c


@njit(cache=True, error_model="numpy")
def gate_f(V):
    inf = 1.0 / (1.0 + math.exp((V + 20.0) / 7.0))
    tau = (1102.5 * math.exp(-(V + 27.0) ** 2 / 225.0)
           + 200.0 / (1.0 + math.exp((13.0 - V) / 10.0))
           + 180.0 / (1.0 + math.exp((V + 30.0) / 10.0)) + 20.0)
    return inf, tau


@njit(cache=True, error_model="numpy")
def gate_f2(V):
    inf = 0.67 / (1.0 + math.exp((V + 35.0) / 7.0)) + 0.33
    tau = (562.0 * math.exp(-(V + 27.0) ** 2 / 240.0)
           + 31.0 / (1.0 + math.exp((25.0 - V) / 10.0))
           + 80.0 / (1.0 + math.exp((V + 30.0) / 10.0)))
    return inf, tau


@njit(cache=True, error_model="numpy")
def gate_fcass(Ca_ss):
    q = 1.0 + (Ca_ss / 0.05) ** 2
    return 0.6 / q + 0.4, 80.0 / q + 2.0


@njit(cache=True, error_model="numpy")
def _x_over_expm1(x):
    if abs(x) < 1e-8:
        return 1.0 - 0.5 * x
    return x / math.expm1(x)


# ---------------------------------------------------------------------------
# The kernel.

@njit(cache=True, error_model="numpy")
def evaluate(y, p, variant, istim, dy, ginf, gtau, cur):
    """Fill derivative, gate steady states/time constants and currents.

    ``ginf``/``gtau`` are written only at gate slots. ``cur`` receives the
    twelve currents in :data:`CURRENT_NAMES` order.
    """
    lay = LAYOUT[variant]
    V = y[lay[S_V]]
    d = y[lay[S_D]]
    f = y[lay[S_F]]
    f2 = y[lay[S_F2]]
    fcass = y[lay[S_FCASS]]
    m = y[lay[S_M]]
    r = y[lay[S_R]]
    rbar = y[lay[S_RBAR]]
    s = y[lay[S_S]]
    xr1 = y[lay[S_XR1]]
    xr2 = y[lay[S_XR2]]
    xs = y[lay[S_XS]]
    cai = y[lay[S_CAI]]
    casr = y[lay[S_CASR]]
    cass = y[lay[S_CASS]]
    nai = y[lay[S_NAI]]
    if variant == 0:
        hj = y[lay[S_H]] * y[lay[S_J]]
        ki = y[lay[S_KI]]
    else:
        vg = y[lay[S_VG]]
        hj = vg * vg
        ki = p[P_KI]

    rtf = p[P_R] * p[P_T] / p[P_F]
    frt = 1.0 / rtf
    ko = p[P_KO]
    nao = p[P_NAO]
    cao = p[P_CAO]

    ek = rtf * math.log(ko / ki)
    ena = rtf * math.log(nao / nai)
    eca = 0.5 * rtf * math.log(cao / cai)
    eks = rtf * math.log((ko + p[P_PKNA] * nao) / (ki + p[P_PKNA] * nai))

    ina = p[P_GNA] * m * m * m * hj * (V - ena)

    ak1 = 0.1 / (1.0 + math.exp(0.06 * (V - ek - 200.0)))
    bk1 = ((3.0 * math.exp(0.0002 * (V - ek + 100.0)) + math.exp(0.1 * (V - ek - 10.0)))
           / (1.0 + math.exp(-0.5 * (V - ek))))
    sqko = math.sqrt(ko / 5.4)
    ik1 = p[P_GK1] * sqko * ak1 / (ak1 + bk1) * (V - ek)
    ito = p[P_GTO] * r * s * (V - ek)
    ikr = p[P_ETA] * p[P_GKR] * sqko * xr1 * xr2 * (V - ek)
    iks = p[P_ETA] * p[P_GKS] * xs * xs * (V - eks)

    x = 2.0 * (V - 15.0) * frt
    ex = math.exp(x)
    ical = (p[P_GCAL] * d * f * f2 * fcass * 2.0 * p[P_F]
            * _x_over_expm1(x) * (0.25 * cass * ex - cao))

    inak = (p[P_PNAK] * ko / (ko + p[P_KMK]) * nai / (nai + p[P_KMNA])
            / (1.0 + 0.1245 * math.exp(-0.1 * V * frt) + 0.0353 * math.exp(-V * frt)))
    g = p[P_GAMMA]
    e1 = math.exp(g * V * frt)
    e2 = math.exp((g - 1.0) * V * frt)
    kmn3 = p[P_KMNAI] ** 3
    inaca = (p[P_KNACA] * (e1 * nai ** 3 * cao - e2 * nao ** 3 * cai * p[P_ALPHA])
             / ((kmn3 + nao ** 3) * (p[P_KMCA] + cao) * (1.0 + p[P_KSAT] * e2)))
    ipca = p[P_GPCA] * cai / (p[P_KPCA] + cai)
    ipk = p[P_GPK] * (V - ek) / (1.0 + math.exp((25.0 - V) / 5.98))
    ibna = p[P_GBNA] * (V - ena)
    ibca = p[P_GBCA] * (V - eca)

    cur[0] = ik1
    cur[1] = ito
    cur[2] = ikr
    cur[3] = iks
    cur[4] = ical
    cur[5] = inak
    cur[6] = ina
    cur[7] = ibna
    cur[8] = inaca
    cur[9] = ibca
    cur[10] = ipk
    cur[11] = ipca
    iion = ik1 + ito + ikr + iks + ical + inak + ina + ibna + inaca + ibca + ipk + ipca

    # calcium handling
    kcasr = p[P_MAXSR] - (p[P_MAXSR] - p[P_MINSR]) / (1.0 + (p[P_EC] / casr) ** 2)
    k1 = p[P_K1P] / kcasr
    k2 = p[P_K2P] * kcasr
    o = k1 * cass * cass * rbar / (p[P_K3] + k1 * cass * cass)
    irel = p[P_VREL] * o * (casr - cass)
    iup = p[P_VMAXUP] / (1.0 + p[P_KUP] ** 2 / (cai * cai))
    ileak = p[P_VLEAK] * (casr - cai)
    ixfer = p[P_VXFER] * (cass - cai)
    bufc = 1.0 / (1.0 + p[P_BUFC] * p[P_KBUFC] / (cai + p[P_KBUFC]) ** 2)
    bufsr = 1.0 / (1.0 + p[P_BUFSR] * p[P_KBUFSR] / (casr + p[P_KBUFSR]) ** 2)
    bufss = 1.0 / (1.0 + p[P_BUFSS] * p[P_KBUFSS] / (cass + p[P_KBUFSS]) ** 2)
    vc = p[P_VC]
    vsr = p[P_VSR]
    vss = p[P_VSS]
    ccell = p[P_CCELL]
    fa = p[P_F]

    dy[lay[S_V]] = (-iion + istim) / p[P_CM]
    dy[lay[S_RBAR]] = -k2 * cass * rbar + p[P_K4] * (1.0 - rbar)
    dy[lay[S_CAI]] = bufc * ((ileak - iup) * vsr / vc + ixfer
                             - (ibca + ipca - 2.0 * inaca) * ccell / (2.0 * vc * fa))
    dy[lay[S_CASR]] = bufsr * (iup - (irel + ileak))
    dy[lay[S_CASS]] = bufss * (-ical * ccell / (2.0 * vss * fa) + irel * vsr / vss
                               - ixfer * vc / vss)
    dy[lay[S_NAI]] = -(ina + ibna + 3.0 * inak + 3.0 * inaca) * ccell / (vc * fa)
    if variant == 0:
        # the stimulus is carried by potassium ions entering the cell
        dy[lay[S_KI]] = -(ik1 + ito + ikr + iks + ipk - 2.0 * inak - istim) * ccell / (vc * fa)

    # gates
    i = lay[S_M]
    ginf[i], gtau[i] = gate_m(V)
    i = lay[S_XR1]
    ginf[i], gtau[i] = gate_xr1(V)
    i = lay[S_XR2]
    ginf[i], gtau[i] = gate_xr2(V)
    i = lay[S_XS]
    ginf[i], gtau[i] = gate_xs(V)
    i = lay[S_R]
    ginf[i], gtau[i] = gate_r(V)
    i = lay[S_S]
    ginf[i], gtau[i] = gate_s(V)
    i = lay[S_D]
    ginf[i], gtau[i] = gate_d(V)
    i = lay[S_F]
    ginf[i], gtau[i] = gate_f(V)
    i = lay[S_F2]
    ginf[i], gtau[i] = gate_f2(V)
    i = lay[S_FCASS]
    ginf[i], gtau[i] = gate_fcass(cass)
    if variant == 0:
        i = lay[S_H]
        ginf[i], gtau[i] = gate_h(V)
        i = lay[S_J]
        ginf[i], gtau[i] = gate_j(V)
    else:
        i = lay[S_VG]
        ginf[i], gtau[i] = gate_v(V)
    n = N_STATES[variant]
    for k in range(n):
        if IS_GATE[variant, k]:
            dy[k] = (ginf[k] - y[k]) / gtau[k]


@njit(cache=True, error_model="numpy")
def rhs_kernel(y, p, variant, istim, dy):
    n = N_STATES[variant]
    ginf = np.empty(n)
    gtau = np.empty(n)
    cur = np.empty(12)
    evaluate(y, p, variant, istim, dy, ginf, gtau, cur)


# ---------------------------------------------------------------------------
# Stimulus protocols.

@dataclass(frozen=True)
class Pulse:
    start: float
    duration: float
    amplitude: float

    def __post_init__(self):
        if not self.duration > 0.0:
            raise DomainError(f"pulse duration must be positive, got {self.duration}")

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class StimulusProtocol:
    """Ordered, non-overlapping current pulses (amplitude in pA/pF, positive depolarises)."""

    pulses: tuple[Pulse, ...] = ()

    def __post_init__(self):
        pulses = tuple(sorted(self.pulses, key=lambda q: q.start))
        for a, b in zip(pulses, pulses[1:]):
            if b.start < a.end:
                raise DomainError(f"pulses overlap: {a} and {b}")
        object.__setattr__(self, "pulses", pulses)

    @classmethod
    def single(cls, amplitude: float, start: float = 0.0, duration: float = 2.0) -> "StimulusProtocol":
        return cls((Pulse(start, duration, amplitude),))

    def current(self, t: float) -> float:
        for q in self.pulses:
            if q.start <= t < q.end:
                return q.amplitude
        return 0.0

    def breakpoints(self) -> list[float]:
        return sorted({x for q in self.pulses for x in (q.start, q.end)})

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (np.array([q.start for q in self.pulses], dtype=np.float64),
                np.array([q.end for q in self.pulses], dtype=np.float64),
                np.array([q.amplitude for q in self.pulses], dtype=np.float64))


NO_STIMULUS = StimulusProtocol()


# ---------------------------------------------------------------------------
# Python-facing operations.

_GATE_FUNCS = {"m": gate_m, "h": gate_h, "j": gate_j, "v": gate_v, "xr1": gate_xr1,
               "xr2": gate_xr2, "xs": gate_xs, "r": gate_r, "s": gate_s, "d": gate_d,
               "f": gate_f, "f2": gate_f2}


def gate_rates(gate: str, V: float, params: CellParameters | str = MODIFIED,
               Ca_ss: float | None = None) -> tuple[float, float]:
    """Steady state and time constant (ms) of one gate at voltage ``V``.

    ``fCass`` depends on subspace calcium instead of voltage and needs ``Ca_ss``.
    """
    variant = params if isinstance(params, str) else params.variant
    if gate not in GATES[variant]:
        raise DomainError(f"gate {gate!r} does not exist in the {variant} model")
    if gate == "fCass":
        if Ca_ss is None:
            raise DomainError("fCass rates need Ca_ss")
        return gate_fcass(float(Ca_ss))
    if not math.isfinite(V):
        raise DomainError(f"V = {V} is not finite")
    return _GATE_FUNCS[gate](float(V))


def _as_state(y, params: CellParameters) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (params.n_states,):
        raise DomainError(f"{params.variant} state needs {params.n_states} components, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        bad = [STATE_NAMES[params.variant][i] for i in np.flatnonzero(~np.isfinite(y))]
        raise DomainError(f"non-finite state component(s): {bad}")
    return y


def ionic_currents(y, params: CellParameters) -> dict[str, float]:
    y = _as_state(y, params)
    n = params.n_states
    dy, ginf, gtau, cur = np.empty(n), np.empty(n), np.empty(n), np.empty(12)
    evaluate(y, params.as_array(), params.code, 0.0, dy, ginf, gtau, cur)
    return dict(zip(CURRENT_NAMES, cur.tolist()))


def rhs(y, params: CellParameters, t: float = 0.0,
        stimulus: StimulusProtocol | float | None = None) -> np.ndarray:
    """Time derivative of the state. ``stimulus`` is a protocol or a constant current."""
    y = _as_state(y, params)
    if stimulus is None:
        istim = 0.0
    elif isinstance(stimulus, StimulusProtocol):
        istim = stimulus.current(t)
    else:
        istim = float(stimulus)
    dy = np.empty(params.n_states)
    rhs_kernel(y, params.as_array(), params.code, istim, dy)
    return dy


def state_index(variant: str, name: str) -> int:
    try:
        return STATE_NAMES[variant].index(name)
    except ValueError:
        raise DomainError(f"{variant} state has no component {name!r}") from None


def state_from_mapping(values: Mapping[str, float], variant: str) -> np.ndarray:
    return np.array([values[n] for n in STATE_NAMES[variant]], dtype=np.float64)


def state_to_dict(y: Sequence[float], variant: str) -> dict[str, float]:
    return dict(zip(STATE_NAMES[variant], map(float, y)))


def published_initial_state(variant: str = MODIFIED) -> np.ndarray:
    """Published resting values; the merged gate starts at sqrt(h*j)."""
    text = resources.files("tp06kit.data").joinpath(INITIAL_FILE).read_text()
    values = {k: v for k, (v, _unit) in parse_table(text).items()}
    if variant == MODIFIED:
        values["v"] = math.sqrt(values["h"] * values["j"])
    return state_from_mapping(values, variant)


def to_modified(y_original) -> np.ndarray:
    """Project an original-variant state onto the modified layout (v = sqrt(h*j))."""
    d = state_to_dict(y_original, ORIGINAL)
    d["v"] = math.sqrt(d["h"] * d["j"])
    return state_from_mapping(d, MODIFIED)


def to_original(y_modified, K_i: float = 138.0) -> np.ndarray:
    """Embed a modified-variant state in the original layout (h = j = v)."""
    d = state_to_dict(y_modified, MODIFIED)
    d["h"] = d["j"] = d["v"]
    d["K_i"] = K_i
    return state_from_mapping(d, ORIGINAL)


def check_state(y, variant: str) -> None:
    """Raise :class:`DomainError` unless fractions lie in [0, 1] and concentrations are positive."""
    y = np.asarray(y)
    names = STATE_NAMES[variant]
    if y.shape != (len(names),):
        raise DomainError(f"{variant} state needs {len(names)} components, got shape {y.shape}")
    for name in FRACTIONS[variant]:
        x = y[names.index(name)]
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"{name} = {x} outside [0, 1]")
    for name in CONCENTRATIONS[variant]:
        x = y[names.index(name)]
        if not x > 0.0:
            raise DomainError(f"{name} = {x} is not positive")
