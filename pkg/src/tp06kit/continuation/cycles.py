"""Periodic orbits by multiple shooting, Floquet multipliers and cycle bifurcations."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..integrate import dp45_batch
from ..params import CellParameters
from .branch import (
    FOLD_OF_CYCLES, HOPF, PERIOD_DOUBLING, STABLE, TORUS, UNSTABLE,
    BifurcationEvent, Branch, BranchPoint, CycleRepresentation, nontrivial_multipliers,
)
from .equilibria import IMAG_TOL, StepControl, _System, eigenvalues

SHOOT_TOL = 1e-8
FLOQUET_TOL = 1e-3
MULTIPLIER_TOL = 1e-4
N_NODES = 20
EPS_MONODROMY = 1e-7


@dataclass(frozen=True)
class ShootingOptions:
    """Accuracy settings of the segment flows and the shooting Newton."""

    m: int | None = None  # None: N_NODES, raised so no segment amplifies errors beyond e**max_growth
    max_growth: float = 2.5
    rtol: float = 1e-10
    atol: float = 1e-10  # in scaled units
    shoot_tol: float = SHOOT_TOL
    max_iter: int = 8
    eps: float = EPS_MONODROMY
    period_factor: float = 8.0  # stop when T exceeds this multiple of the first period


class _Shooter:
    """Residual and Jacobian of the multiple-shooting system in scaled variables.

    Unknowns U = (z_0, ..., z_{m-1}, T / tscale, lam / pscale) with
    z_k = x_k / scale. Residual rows: closure of every segment, then the
    phase condition, then the arclength condition.
    """

    def __init__(self, params: CellParameters, parameter_id: str, pscale: float, tscale: float,
                 opts: ShootingOptions, reference=None):
        self.sys = _System(params, parameter_id)
        self.n = self.sys.n
        self.m = opts.m or N_NODES
        self.opts = opts
        self.pscale = pscale
        self.tscale = tscale
        # typical magnitudes, raised to the actual levels on this branch (overloaded Ca stores)
        self.S = self.sys.scale.copy()
        if reference is not None:
            self.S[1:] = np.maximum(self.S[1:], np.abs(reference[1:]))
        self.atol = opts.atol * self.S
        self.last_residual = float("nan")  # closure residual of the last converged solve

    # packing ---------------------------------------------------------------
    def pack(self, nodes, T, lam) -> np.ndarray:
        return np.concatenate([(nodes / self.S).ravel(), [T / self.tscale, lam / self.pscale]])

    def unpack(self, U):
        nodes = U[:-2].reshape(self.m, self.n) * self.S
        return nodes, U[-2] * self.tscale, U[-1] * self.pscale

    def cycle(self, U) -> CycleRepresentation:
        nodes, T, lam = self.unpack(U)
        return CycleRepresentation(T, nodes, lam)

    # flows -----------------------------------------------------------------
    def flow_segments(self, nodes, T, lam, derivatives: bool):
        """End points of every segment; with ``derivatives`` also dphi/dx and dphi/dlam."""
        n, m = self.n, self.m
        tau = T / m
        p = self.sys.p(lam)
        ends = np.empty((m, n))
        Ms = np.empty((m, n, n)) if derivatives else None
        dl = np.empty((m, n)) if derivatives else None
        eps = self.opts.eps
        hp = eps * max(abs(lam), self.pscale) if derivatives else 0.0
        for k in range(m):
            x = nodes[k]
            if derivatives:
                Y0 = np.repeat(x[None, :], n + 2, axis=0)
                hs = eps * self.S
                Y0[1 + np.arange(n), np.arange(n)] += hs
                P = np.repeat(p[None, :], n + 2, axis=0)
                P[n + 1, self.sys.ip] += hp
            else:
                Y0 = x[None, :].copy()
                P = p[None, :].copy()
            Y, t, h, nacc, status, _, _ = dp45_batch(Y0, P, self.sys.variant, 0.0, 0.0, tau, min(0.01, tau),
                                                      self.opts.rtol, self.atol, tau, 50_000_000, 0)
            if status != 0 or not np.all(np.isfinite(Y)):
                return None
            ends[k] = Y[0]
            if derivatives:
                Ms[k] = ((Y[1:n + 1] - Y[0]) / hs[:, None]).T
                dl[k] = (Y[n + 1] - Y[0]) / hp
        return ends, Ms, dl

    def closure(self, nodes, ends) -> np.ndarray:
        return (ends - np.roll(nodes, -1, axis=0)) / self.S

    def residual_norm(self, cyc: CycleRepresentation) -> float:
        out = self.flow_segments(cyc.nodes, cyc.period, cyc.parameter, False)
        if out is None:
            return math.inf
        return float(np.max(np.abs(self.closure(cyc.nodes, out[0]))))

    def fields(self, nodes, lam) -> np.ndarray:
        return np.array([self.sys.f(x, lam) for x in nodes])

    # Newton ----------------------------------------------------------------
    def solve(self, U0, phase_ref, t_arc, U_pred):
        """Newton on closure + phase + arclength. Returns (U, iterations, Ms, A) or None.

        ``A`` is the last Newton matrix; its first ``m*n + 1`` rows are the
        Jacobian of closure and phase, used for the branch tangent.

        ``phase_ref`` is (z_ref, zdot_ref): the integral phase condition is
        sum_k <z_k - z_ref_k, zdot_ref_k> = 0.
        """
        n, m = self.n, self.m
        N = m * n + 2
        zref, zdot = phase_ref
        U = U0.copy()
        A, last_step = None, math.inf
        for it in range(1, self.opts.max_iter + 1):
            nodes, T, lam = self.unpack(U)
            if T <= 0 or not all(self.sys.admissible(x) for x in nodes):
                return None
            out = self.flow_segments(nodes, T, lam, True)
            if out is None:
                return None
            ends, Ms, dl = out
            R = np.empty(N)
            R[:m * n] = self.closure(nodes, ends).ravel()
            Z = U[:-2].reshape(m, n)
            R[m * n] = np.sum((Z - zref) * zdot)
            R[m * n + 1] = t_arc @ (U - U_pred)
            res = float(np.max(np.abs(R[:m * n])))
            if A is not None and res <= self.opts.shoot_tol and last_step < 1e-6:
                self.last_residual = res
                return U, it - 1, Ms, A
            A = np.zeros((N, N))
            fe = self.fields(ends, lam)
            S = self.S
            for k in range(m):
                r = slice(k * n, (k + 1) * n)
                A[r, r] = Ms[k] * S[None, :] / S[:, None]
                k1 = (k + 1) % m
                A[r, k1 * n:(k1 + 1) * n] -= np.eye(n)
                A[r, m * n] = fe[k] / S / m * self.tscale
                A[r, m * n + 1] = dl[k] / S * self.pscale
            A[m * n, :m * n] = zdot.ravel()
            A[m * n + 1] = t_arc
            try:
                dU = np.linalg.solve(A, -R)
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(dU)):
                return None
            # damp large steps so nodes stay admissible
            step = 1.0
            for _ in range(20):
                nodes_t, T_t, _ = self.unpack(U + step * dU)
                if T_t > 0 and all(self.sys.admissible(x) for x in nodes_t):
                    break
                step *= 0.5
            else:
                return None
            U = U + step * dU
            last_step = float(np.max(np.abs(step * dU)))
        return None


def _tangent(A: np.ndarray, t_old: np.ndarray) -> np.ndarray:
    """Unit null vector of the closure and phase rows of ``A``, oriented along ``t_old``."""
    B = A.copy()
    B[-1] = t_old
    rhs = np.zeros(len(t_old))
    rhs[-1] = 1.0
    try:
        t = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError:
        return t_old / np.linalg.norm(t_old)
    if not np.all(np.isfinite(t)):
        return t_old / np.linalg.norm(t_old)
    return t / np.linalg.norm(t)


def _floquet(Ms: np.ndarray) -> np.ndarray:
    """Floquet multipliers from the per-segment monodromies.

    The plain product of the segments is hopelessly conditioned for orbits
    with a strongly unstable direction, so the multipliers are taken from
    the cyclic block matrix C (segment k maps block k to block k+1): each
    eigenvalue of C is an m-th root of a multiplier. The m roots of one
    multiplier are grouped back together after raising to the m-th power.
    """
    m, n, _ = Ms.shape
    if m == 1:
        mu = np.linalg.eigvals(Ms[0])
        return mu[np.argsort(-np.abs(mu))]
    C = np.zeros((m * n, m * n))
    for k in range(m):
        k1 = (k + 1) % m
        C[k1 * n:(k1 + 1) * n, k * n:(k + 1) * n] = Ms[k]
    lam = np.linalg.eigvals(C)
    with np.errstate(over="ignore", under="ignore"):
        logs = m * np.log(lam.astype(complex))
    # cluster the m copies of every multiplier in log space
    free = np.ones(lam.size, dtype=bool)
    out = []
    for _ in range(n):
        i = int(np.flatnonzero(free)[np.argmax(logs[free].real)])
        d = np.abs(np.exp(1j * (logs.imag - logs[i].imag)) - 1.0) + np.abs(logs.real - logs[i].real)
        d[~free] = np.inf
        group = np.argsort(d)[:m]
        free[group] = False
        g = logs[group]
        mag = np.median(g.real)
        phase = np.angle(np.mean(np.exp(1j * g.imag)))
        out.append(np.exp(mag + 1j * phase) if mag < 700 else complex(np.inf))
    mu = np.array(out)
    return mu[np.argsort(-np.abs(mu))]


def _crossing_counts(mu: np.ndarray) -> tuple[int, int, int]:
    """(real < -1, complex outside, real > +1) among nontrivial multipliers."""
    nt = nontrivial_multipliers(mu)
    real = np.abs(nt.imag) <= IMAG_TOL * max(1.0, float(np.max(np.abs(nt))) if nt.size else 1.0)
    return (int(np.sum(real & (nt.real < -1.0))),
            int(np.sum(~real & (np.abs(nt) > 1.0))),
            # slow modes sit next to the trivial multiplier; demand a clear crossing of +1
            int(np.sum(real & (nt.real > 1.0 + FLOQUET_TOL))))


def _make_point(sh: _Shooter, U, Ms, s: float, closure: float) -> BranchPoint:
    cyc = sh.cycle(U)
    mu = _floquet(Ms)
    nt = nontrivial_multipliers(mu)
    flags = []
    trivial = mu[np.argmin(np.abs(mu - 1.0))]
    if abs(trivial - 1.0) > FLOQUET_TOL:
        flags.append("ill-conditioned-multipliers")
    stable = STABLE if np.all(np.abs(nt) < 1.0) else UNSTABLE
    vmin, vmax = _v_range(sh, cyc)
    return BranchPoint(cyc.parameter, stable, mu, s, closure, cycle=cyc, flags=tuple(flags),
                       v_range=(vmin, vmax))


def _v_range(sh: _Shooter, cyc: CycleRepresentation) -> tuple[float, float]:
    """V extrema along the orbit, sampled densely segment by segment."""
    p = sh.sys.p(cyc.parameter)
    tau = cyc.period / cyc.m
    lo, hi = math.inf, -math.inf
    for k in range(cyc.m):
        Y, t, h, nacc, status, times, states = dp45_batch(
            cyc.nodes[k:k + 1].copy(), p[None, :].copy(), sh.sys.variant, 0.0, 0.0, tau, 0.01,
            1e-8, sh.atol, tau / 10.0, 50_000_000, 1)
        V = states[:, 0] if states.shape[0] else cyc.nodes[k:k + 1, 0]
        lo, hi = min(lo, float(np.min(V))), max(hi, float(np.max(V)))
    return lo, hi


def shooting_residual(cycle: CycleRepresentation, params: CellParameters,
                      opts: ShootingOptions | None = None) -> float:
    """Largest scaled closure defect over all segments of ``cycle`` at its parameter value.

    ``params`` supplies the constants; the cycle's own parameter value is
    not known without the parameter id, so ``params`` must already carry it.
    """
    opts = replace(opts or ShootingOptions(), m=cycle.m)
    sh = _Shooter(params, None, 1.0, 1.0, opts, reference=np.max(np.abs(cycle.nodes), axis=0))
    out = sh.flow_segments(cycle.nodes, cycle.period, None, False)
    if out is None:
        return math.inf
    return float(np.max(np.abs(sh.closure(cycle.nodes, out[0]))))


def floquet_multipliers(cycle: CycleRepresentation, params: CellParameters,
                        opts: ShootingOptions | None = None) -> np.ndarray:
    """Multipliers of the composed finite-difference monodromy, sorted by modulus.

    Perturbations are scaled to the orbit's own levels, as on the branch, so
    overloaded calcium stores are not perturbed below the integration noise.
    """
    opts = replace(opts or ShootingOptions(), m=cycle.m)
    sh = _Shooter(params, None, 1.0, 1.0, opts, reference=np.max(np.abs(cycle.nodes), axis=0))
    out = _flow_plain_monodromy(sh, cycle)
    return _floquet(out)


def _flow_plain_monodromy(sh: _Shooter, cycle: CycleRepresentation) -> np.ndarray:
    n, m = sh.n, cycle.m
    p = sh.sys.base
    tau = cycle.period / m
    Ms = np.empty((m, n, n))
    hs = sh.opts.eps * sh.S
    for k in range(m):
        Y0 = np.repeat(cycle.nodes[k][None, :], n + 1, axis=0)
        Y0[1 + np.arange(n), np.arange(n)] += hs
        P = np.repeat(p[None, :], n + 1, axis=0)
        Y, t, h, nacc, status, _, _ = dp45_batch(Y0, P, sh.sys.variant, 0.0, 0.0, tau, min(0.01, tau),
                                                  sh.opts.rtol, sh.atol, tau, 50_000_000, 0)
        Ms[k] = ((Y[1:] - Y[0]) / hs[:, None]).T
    return Ms


def _sample_orbit(sys: _System, x0, T, lam, m, atol) -> np.ndarray:
    """Nodes at multiples of T/m along the trajectory through ``x0``."""
    p = sys.p(lam)
    nodes = np.empty((m, sys.n))
    x = np.array(x0, dtype=np.float64)
    for k in range(m):
        nodes[k] = x
        Y, *_ = dp45_batch(x[None, :].copy(), p[None, :].copy(), sys.variant, 0.0, 0.0, T / m,
                           0.01, 1e-10, atol, T / m, 50_000_000, 0)
        x = Y[0]
    return nodes


def _critical_multiplier(mu: np.ndarray, kind: str, near: complex | None) -> complex:
    nt = nontrivial_multipliers(mu)
    if kind == PERIOD_DOUBLING:
        cand = nt[(np.abs(nt.imag) <= IMAG_TOL) & (nt.real < 0)]
    elif kind == FOLD_OF_CYCLES:
        cand = nt[(np.abs(nt.imag) <= IMAG_TOL) & (nt.real > 0)]
    else:
        cand = nt[nt.imag > IMAG_TOL]
    if cand.size == 0:
        return complex("nan")
    if near is None or not np.isfinite(near):
        return complex(cand[np.argmin(np.abs(np.abs(cand) - 1.0))])
    return complex(cand[np.argmin(np.abs(cand - near))])


def _g(mu: complex, kind: str) -> float:
    if kind == PERIOD_DOUBLING:
        return -mu.real - 1.0
    if kind == FOLD_OF_CYCLES:
        return mu.real - 1.0
    return abs(mu) - 1.0


def _refine_cycle_event(sh, ua, ub, pa, pb, kind, phase_of, ctl, max_iter=40):
    """Bisection along the chord ua -> ub on |critical multiplier| - 1."""
    chord = ub - ua
    t = chord / np.linalg.norm(chord)
    ma = _critical_multiplier(pa.spectrum, kind, None)
    mb = _critical_multiplier(pb.spectrum, kind, ma)
    ga, gb = _g(ma, kind), _g(mb, kind)
    if not (np.isfinite(ga) and np.isfinite(gb)) or ga * gb > 0:
        return None
    lo, hi = 0.0, 1.0
    lam_a, lam_b = pa.parameter, pb.parameter
    ptol = ctl.event_tol * sh.pscale
    best = None
    for _ in range(max_iter):
        sig = 0.5 * (lo + hi) if gb == ga else min(max(lo + ga * (hi - lo) / (ga - gb), lo + 0.1 * (hi - lo)),
                                                   hi - 0.1 * (hi - lo))
        up = ua + sig * chord
        out = sh.solve(up, phase_of(up), t, up)
        if out is None:
            return None
        u, _, Ms, _ = out
        pt = _make_point(sh, u, Ms, pa.arclength + sig * (pb.arclength - pa.arclength), sh.last_residual)
        mu = _critical_multiplier(pt.spectrum, kind, ma + sig * (mb - ma))
        g = _g(mu, kind)
        best = (pt, mu, g)
        if g * ga > 0:
            lo, ga = sig, g
        else:
            hi, gb = sig, g
        width = (hi - lo) * abs(lam_b - lam_a)
        if abs(g) < MULTIPLIER_TOL and width < ptol:
            break
    pt, mu, g = best
    if not abs(g) < MULTIPLIER_TOL:
        return None
    lam_lo, lam_hi = lam_a + lo * (lam_b - lam_a), lam_a + hi * (lam_b - lam_a)
    return BifurcationEvent(kind, pt.parameter, pt, mu, (min(lam_lo, lam_hi), max(lam_lo, lam_hi)))


def start_from_hopf(event: BifurcationEvent, params: CellParameters, parameter_id: str,
                    amplitude: float = 0.05, m: int = N_NODES):
    """Small-amplitude cycle guess and its tangent from a Hopf event.

    Returns (nodes, period, tangent_nodes) where ``tangent_nodes`` is the
    scaled direction of the emerging orbit. ``amplitude`` is in scaled
    units (V moves by roughly ``10 * amplitude`` mV).
    """
    if event.kind != HOPF:
        raise ValueError("cycle branches start from a Hopf event")
    sys = _System(params.replace(**{parameter_id: event.parameter}), parameter_id)
    x0 = event.point.state
    S = sys.scale
    Jz = sys.jac(x0, event.parameter) * S[None, :] / S[:, None]
    w, V = eigenvalues(Jz, vectors=True)
    k = int(np.argmin(np.abs(w - 1j * abs(event.diagnostic.imag))))
    omega = abs(w[k].imag)
    q = V[:, k] if w[k].imag > 0 else np.conj(V[:, k])
    q = q / np.linalg.norm(q)
    theta = 2.0 * np.pi * np.arange(m) / m
    shape = np.real(q[None, :] * np.exp(1j * theta)[:, None])
    shape /= np.max(np.abs(shape))
    nodes = x0[None, :] + amplitude * shape * S[None, :]
    return nodes, 2.0 * np.pi / omega, shape


def continue_cycles(params: CellParameters, start, parameter_id: str, bounds: tuple[float, float],
                    direction: float = 0.0, control: StepControl | None = None,
                    options: ShootingOptions | None = None, tangent=None) -> Branch:
    """Follow a branch of periodic orbits.

    ``start`` is a Hopf :class:`BifurcationEvent` (the branch is seeded with
    a small orbit along the critical eigenvector) or a converged
    :class:`CycleRepresentation` at ``params``. ``direction`` is the sign
    of the initial parameter change; 0 lets the Hopf normal form decide.
    Period doubling, torus and fold-of-cycles events are located by
    bisection on the critical multiplier. Continuation stops when the
    parameter leaves ``bounds``, the period grows beyond
    ``options.period_factor`` times its first value (orbit approaching an
    equilibrium: homoclinic-like end), Newton fails at the minimum step, or
    the point budget is spent.
    """
    control = control or StepControl(ds=0.02, ds_max=0.5)
    opts = options or ShootingOptions()
    lo, hi = min(bounds), max(bounds)
    if isinstance(start, BifurcationEvent):
        lam0 = start.parameter
        base = params.replace(**{parameter_id: lam0})
        if opts.m is None:
            growth = max(0.0, float(np.max(start.point.spectrum.real)))
            T_h = 2.0 * np.pi / abs(start.diagnostic.imag)
            opts = replace(opts, m=max(N_NODES, math.ceil(T_h * growth / opts.max_growth)))
        nodes0, T0, shape = start_from_hopf(start, base, parameter_id, m=opts.m)
        eq_nodes = np.repeat(start.point.state[None, :], opts.m, axis=0)
    else:
        lam0 = start.parameter
        base = params.replace(**{parameter_id: lam0})
        nodes0, T0, shape = start.nodes, start.period, None
        if opts.m != start.m:
            opts = replace(opts, m=start.m)
    pscale = control.pscale or 0.01 * max(abs(lam0), 1.0)
    ref = np.max(np.abs(nodes0), axis=0)
    sh = _Shooter(base, parameter_id, pscale, T0, opts, reference=ref)
    if shape is not None:
        # re-express the eigen-orbit in the shooter's scaling
        shape = shape * _System(base).scale[None, :] / sh.S[None, :]
    branch = Branch("cycle", parameter_id, base)

    def phase_of(U):
        nodes, T, lam = sh.unpack(U)
        return U[:-2].reshape(sh.m, sh.n).copy(), sh.fields(nodes, lam) / sh.S * sh.tscale

    if shape is not None:
        # Hopf start: the degenerate orbit is the equilibrium, the tangent is the eigen-orbit.
        U_eq = sh.pack(eq_nodes, T0, lam0)
        t = np.concatenate([shape.ravel(), [0.0, 0.0]])
        t /= np.linalg.norm(t)
        # first orbit: about 0.1 mV of V amplitude, no component moved by more than 0.1 scale units
        nrm = np.linalg.norm(shape)
        ds0 = min(0.01 * nrm / max(np.max(np.abs(shape[:, 0])), 1e-12), 0.1 * nrm / np.max(np.abs(shape)))
        U_pred = U_eq + ds0 * t
        out = sh.solve(U_pred, phase_of(U_pred), t, U_pred)
        if out is None:
            branch.stop_reason = "shooting Newton failed at the first orbit"
            return branch
        U, _, Ms, A = out
    else:
        U0 = sh.pack(nodes0, T0, lam0)
        t = np.zeros_like(U0)
        t[-1] = 1.0
        out = sh.solve(U0, phase_of(U0), t, U0)
        if out is None:
            branch.stop_reason = "starting cycle does not converge"
            return branch
        U, _, Ms, A = out
    pt = _make_point(sh, U, Ms, 0.0, sh.residual_norm(sh.cycle(U)))
    branch.points.append(pt)
    if tangent is not None:
        t = np.asarray(tangent, dtype=np.float64)
        t = t / np.linalg.norm(t)
    elif shape is None:
        t = np.zeros_like(U)
        t[-1] = 1.0 if direction >= 0 else -1.0
        t = _tangent(A, t)
    else:
        # oriented along the Hopf eigen-orbit: the first step grows the amplitude
        t = _tangent(A, t)
    ds = control.ds
    s = 0.0
    counts = _crossing_counts(pt.spectrum)
    while len(branch.points) < control.max_points:
        pred = U + ds * t
        out = sh.solve(pred, phase_of(U), t, pred)
        if out is not None and np.linalg.norm(out[0] - pred) > 0.5 * ds + 1e-9:
            out = None
        if out is None:
            ds *= 0.5
            if ds < control.ds_min:
                branch.stop_reason = "step-size underflow"
                break
            continue
        Un, its, Ms, A = out
        sn = s + float(np.linalg.norm(Un - U))
        ptn = _make_point(sh, Un, Ms, sn, sh.last_residual)
        lam = ptn.parameter
        if not lo <= lam <= hi:
            branch.stop_reason = "left parameter range"
            break
        if ptn.cycle.period > opts.period_factor * T0:
            branch.points.append(ptn)
            branch.stop_reason = "period blow-up (homoclinic-like end)"
            break
        cn = _crossing_counts(ptn.spectrum)
        for kind, a, b in ((PERIOD_DOUBLING, counts[0], cn[0]), (TORUS, counts[1], cn[1]),
                           (FOLD_OF_CYCLES, counts[2], cn[2])):
            if a != b:
                ev = _refine_cycle_event(sh, U, Un, pt, ptn, kind, phase_of, control)
                if ev is not None:
                    branch.events.append(ev)
        branch.points.append(ptn)
        t = _tangent(A, (Un - U) / np.linalg.norm(Un - U))
        U, s, pt, counts = Un, sn, ptn, cn
        if its <= 3:
            ds = min(2.0 * ds, control.ds_max)
    else:
        branch.stop_reason = "max points"
    return branch


def period_doubled_start(event: BifurcationEvent, params: CellParameters, parameter_id: str,
                         amplitude: float = 0.02, options: ShootingOptions | None = None):
    """Seed for the period-doubled branch at a PD event.

    Returns (cycle, tangent): the PD orbit traversed twice, sampled on the
    same number of nodes, and the scaled unknown-space direction of the
    bifurcating doubled orbit (the critical Floquet vector, which flips
    sign after one period).
    """
    if event.kind != PERIOD_DOUBLING:
        raise ValueError("need a period-doubling event")
    cyc = event.point.cycle
    opts = replace(options or ShootingOptions(), m=cyc.m)
    p = params.replace(**{parameter_id: event.parameter})
    sh = _Shooter(p, parameter_id, 0.01 * max(abs(event.parameter), 1.0), 2.0 * cyc.period, opts)
    Ms = _flow_plain_monodromy(sh, cyc)
    M = Ms[0]
    for k in range(1, len(Ms)):
        M = Ms[k] @ M
    w, V = np.linalg.eig(M)
    k = int(np.argmin(np.abs(w + 1.0)))
    v = np.real(V[:, k])
    v /= np.max(np.abs(v / sh.S))
    nodes2 = _sample_orbit(sh.sys, cyc.nodes[0], 2.0 * cyc.period, event.parameter, opts.m, sh.atol)
    # propagate the Floquet vector along the doubled orbit
    dirs = np.empty_like(nodes2)
    full = np.concatenate([Ms, Ms])
    vec = v.copy()
    for j in range(opts.m):
        dirs[j] = vec
        # two original segments per doubled segment
        vec = full[2 * j + 1] @ (full[2 * j] @ vec) if 2 * j + 1 < len(full) else vec
    tangent = np.concatenate([(dirs / sh.S).ravel(), [0.0, 0.0]])
    cycle2 = CycleRepresentation(2.0 * cyc.period, nodes2 + amplitude * dirs, event.parameter)
    return cycle2, tangent
