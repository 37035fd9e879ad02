"""Equilibria: Newton solves, Jacobians, spectra and pseudo-arclength continuation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import root

from ..model import CONCENTRATIONS, FRACTIONS, GATES, STATE_NAMES, gate_rates, rhs_kernel, state_scales
from ..params import PARAM_INDEX, CellParameters, ParameterError
from .branch import (
    BRANCH_POINT, HOPF, LIMIT_POINT, STABLE, UNSTABLE, BifurcationEvent, Branch, BranchPoint,
)

NEWTON_TOL = 1e-10
EPS_FD = 1e-8
IMAG_TOL = 1e-9
# |Re| of the critical eigenvalue required to accept a located event
EVENT_RE_TOL = 1e-6


class NewtonFailed(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class SingularJacobian(NewtonFailed):
    pass


@dataclass(frozen=True)
class StepControl:
    """Pseudo-arclength step settings.

    Arclength is measured in scaled coordinates: each state component is
    divided by its typical magnitude and the parameter by ``pscale``
    (default ``0.01 * max(|start|, 1)``). ``event_tol`` is relative to
    ``pscale``.
    """

    ds: float = 0.05
    ds_min: float = 1e-7
    ds_max: float = 0.5
    max_points: int = 5000
    newton_tol: float = NEWTON_TOL
    max_iter: int = 12
    pscale: float | None = None
    event_tol: float = 1e-4


class _System:
    """rhs as a function of (state, parameter value) without per-call object churn."""

    def __init__(self, params: CellParameters, parameter_id: str | None = None):
        if parameter_id is not None and parameter_id not in PARAM_INDEX:
            raise ParameterError(f"unknown continuation parameter {parameter_id!r}")
        self.params = params
        self.variant = params.code
        self.n = params.n_states
        self.base = params.as_array()
        self.ip = PARAM_INDEX[parameter_id] if parameter_id else -1
        self.scale = state_scales(params.variant)
        names = STATE_NAMES[params.variant]
        self.positive = np.array([names.index(c) for c in CONCENTRATIONS[params.variant]])
        self.fraction = np.array([names.index(c) for c in FRACTIONS[params.variant]])

    def p(self, lam: float | None = None) -> np.ndarray:
        if lam is None or self.ip < 0:
            return self.base
        q = self.base.copy()
        q[self.ip] = lam
        return q

    def f(self, x, lam=None) -> np.ndarray:
        dy = np.empty(self.n)
        rhs_kernel(x, self.p(lam), self.variant, 0.0, dy)
        return dy

    def admissible(self, x) -> bool:
        return bool(np.all(np.isfinite(x)) and np.all(x[self.positive] > 0.0))

    def jac(self, x, lam=None, eps_fd: float = EPS_FD) -> np.ndarray:
        p = self.p(lam)
        f0 = np.empty(self.n)
        rhs_kernel(x, p, self.variant, 0.0, f0)
        J = np.empty((self.n, self.n))
        fj = np.empty(self.n)
        for j in range(self.n):
            h = eps_fd * max(1.0, abs(x[j]))
            xj = x.copy()
            xj[j] += h
            h = xj[j] - x[j]
            rhs_kernel(xj, p, self.variant, 0.0, fj)
            J[:, j] = (fj - f0) / h
        return J


def jacobian(state, params: CellParameters, eps_fd: float = EPS_FD) -> np.ndarray:
    """Forward-difference Jacobian of the rhs, step ``eps_fd * max(1, |x_j|)`` per column."""
    x = np.asarray(state, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("state must be finite")
    return _System(params).jac(x, eps_fd=eps_fd)


def eigenvalues(matrix, vectors: bool = False):
    """Full spectrum sorted by descending real part (LAPACK ``geev``)."""
    A = np.asarray(matrix, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.all(np.isfinite(A)):
        raise ValueError("eigenvalues need a finite square matrix")
    w, V = np.linalg.eig(A)
    order = np.lexsort((-w.imag, -w.real))
    return (w[order], V[:, order]) if vectors else w[order]


def _classify(spectrum: np.ndarray) -> str:
    return STABLE if np.all(spectrum.real < 0.0) else UNSTABLE


def _point(sys: _System, x, lam, arclength=0.0, flags=()) -> BranchPoint:
    J = sys.jac(x, lam)
    w = eigenvalues(J)
    res = float(np.max(np.abs(sys.f(x, lam))))
    return BranchPoint(float(lam) if lam is not None else math.nan, _classify(w), w, arclength, res,
                       state=x.copy(), flags=tuple(flags), v_range=(x[0], x[0]))


def newton_equilibrium(params: CellParameters, guess, tol: float = NEWTON_TOL,
                       max_iter: int = 50) -> BranchPoint:
    """Damped Newton for rhs(x) = 0 starting at ``guess``.

    Steps are halved until the iterate keeps positive concentrations and a
    finite rhs. Raises :class:`NewtonFailed` or :class:`SingularJacobian`.
    """
    sys = _System(params)
    x = np.array(guess, dtype=np.float64)
    if x.shape != (sys.n,) or not np.all(np.isfinite(x)):
        raise ValueError("guess must be a finite state of the right size")
    S = sys.scale
    f = sys.f(x)
    res = float(np.max(np.abs(f)))
    for _ in range(max_iter):
        if res <= tol:
            break
        Jz = sys.jac(x) * S[None, :]
        try:
            dz = np.linalg.solve(Jz, -f)
        except np.linalg.LinAlgError:
            raise SingularJacobian("singular Jacobian in Newton", res) from None
        if not np.all(np.isfinite(dz)):
            raise SingularJacobian("singular Jacobian in Newton", res)
        step = 1.0
        for _ in range(40):
            xt = x + step * dz * S
            if sys.admissible(xt):
                ft = sys.f(xt)
                rt = float(np.max(np.abs(ft)))
                if np.isfinite(rt) and (rt < res or step < 1e-3):
                    break
            step *= 0.5
        else:
            raise NewtonFailed("no admissible Newton step", res)
        x, f, res = xt, ft, rt
    if not res <= tol:
        raise NewtonFailed(f"Newton did not converge in {max_iter} iterations", res)
    return _point(sys, x, None)


def _clamped_state(sys: _System, V: float, w: np.ndarray) -> np.ndarray:
    names = STATE_NAMES[sys.params.variant]
    x = np.empty(sys.n)
    x[0] = V
    w = np.clip(w, -60.0, 60.0)
    conc = np.exp(w[:-1])
    for k, i in enumerate(sys.positive):
        x[i] = conc[k]
    ca_ss = x[names.index("Ca_ss")]
    for g in GATES[sys.params.variant]:
        x[names.index(g)] = gate_rates(g, V, sys.params, Ca_ss=ca_ss)[0]
    x[names.index("Rbar")] = 1.0 / (1.0 + math.exp(-w[-1]))
    return x


def voltage_scan(params: CellParameters, voltages, guess=None) -> list[BranchPoint]:
    """All equilibria whose voltage lies in the span of ``voltages``.

    At each clamped voltage the gates sit at steady state and the slow
    variables (concentrations in log form, the release-channel fraction
    as a logit) are solved to steady state. A sign change of dV/dt
    between grid voltages brackets an equilibrium, which is then polished
    by :func:`newton_equilibrium`. Useful for seeding depolarised branches
    that time stepping never reaches.
    """
    sys = _System(params)
    names = STATE_NAMES[params.variant]
    free = list(sys.positive) + [names.index("Rbar")]
    if guess is None:
        ref = {"Ca_i": 3e-5, "Ca_SR": 0.25, "Ca_ss": 2.7e-4, "Na_i": 4.0, "K_i": 138.0}
        w = np.array([math.log(ref[names[i]]) for i in sys.positive] + [5.0])
    else:
        g = np.asarray(guess, dtype=np.float64)
        rb = min(max(g[names.index("Rbar")], 1e-6), 1 - 1e-6)
        w = np.append(np.log(g[sys.positive]), math.log(rb / (1 - rb)))
    rows = []
    for V in voltages:
        def resid(wk, V=V):
            # time derivatives of the log / logit variables
            x = _clamped_state(sys, V, wk)
            try:
                f = sys.f(x)
            except ZeroDivisionError:
                return np.full(len(free), 1e6)
            rb = x[free[-1]]
            return np.append(f[sys.positive] / x[sys.positive], f[free[-1]] / (rb * (1.0 - rb)))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            sol = root(resid, w, method="hybr", options={"xtol": 1e-13})
        if not np.all(np.isfinite(sol.x)):
            continue
        w = sol.x
        x = _clamped_state(sys, V, w)
        rows.append((V, sys.f(x)[0], x, bool(sol.success)))
    found = []
    for a, b in zip(rows, rows[1:]):
        if a[3] and b[3] and np.sign(a[1]) != np.sign(b[1]):
            frac = a[1] / (a[1] - b[1])
            x = a[2] + frac * (b[2] - a[2])
            try:
                found.append(newton_equilibrium(params, x))
            except NewtonFailed:
                continue
    return found


def resting_equilibrium(params: CellParameters, t_relax: float = 10_000.0) -> BranchPoint:
    """Equilibrium reached by relaxing without stimulus, polished to Newton accuracy.

    Slow concentration modes can stall Newton a little short of the
    tolerance from the relaxed state; the voltage scan then supplies the
    equilibrium nearest to the relaxed voltage.
    """
    from ..integrate import equilibrate

    relaxed = equilibrate(params, t_relax=t_relax).state
    try:
        return newton_equilibrium(params, relaxed)
    except NewtonFailed:
        eqs = voltage_scan(params, np.arange(-95.0, 40.0, 0.25))
        if not eqs:
            raise NewtonFailed("no equilibrium found near the relaxed state", math.nan) from None
        return min(eqs, key=lambda e: abs(e.state[0] - relaxed[0]))


# ---------------------------------------------------------------------------
# Continuation

class _Continuer:
    """Pseudo-arclength machinery in scaled coordinates u = (x / scale, lam / pscale)."""

    def __init__(self, params: CellParameters, parameter_id: str, control: StepControl, lam0: float):
        self.sys = _System(params, parameter_id)
        self.ctl = control
        self.pscale = control.pscale or 0.01 * max(abs(lam0), 1.0)
        self.n = self.sys.n

    def to_u(self, x, lam):
        return np.append(x / self.sys.scale, lam / self.pscale)

    def from_u(self, u):
        return u[:-1] * self.sys.scale, u[-1] * self.pscale

    def F(self, u):
        x, lam = self.from_u(u)
        return self.sys.f(x, lam) / self.sys.scale

    def DF(self, u):
        x, lam = self.from_u(u)
        S = self.sys.scale
        Jz = self.sys.jac(x, lam) * S[None, :] / S[:, None]
        h = 1e-7 * max(1.0, abs(u[-1]))
        up = u.copy()
        up[-1] += h
        Jl = (self.F(up) - self.F(u)) / h
        return np.column_stack([Jz, Jl])

    def tangent(self, u, direction: float) -> np.ndarray:
        D = self.DF(u)
        # null vector of the n x (n+1) Jacobian
        _, _, vt = np.linalg.svd(D)
        t = vt[-1]
        if t[-1] * direction < 0:
            t = -t
        return t / np.linalg.norm(t)

    def correct(self, u_pred, t):
        """Newton on [F(u); t.(u - u_pred)] = 0. Returns (u, iterations) or None."""
        u = u_pred.copy()
        tol = self.ctl.newton_tol
        for it in range(1, self.ctl.max_iter + 1):
            x, lam = self.from_u(u)
            if not self.sys.admissible(x):
                return None
            Fu = self.F(u)
            G = np.append(Fu, t @ (u - u_pred))
            A = np.vstack([self.DF(u), t])
            try:
                du = np.linalg.solve(A, -G)
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(du)):
                return None
            u = u + du
            x, lam = self.from_u(u)
            if not self.sys.admissible(x):
                return None
            res = float(np.max(np.abs(self.sys.f(x, lam))))
            if res <= tol and np.max(np.abs(du)) < 1e-7:
                return u, it
        return None

    def make_point(self, u, s) -> BranchPoint:
        x, lam = self.from_u(u)
        return _point(self.sys, x, lam, s)


def _n_unstable(w: np.ndarray) -> tuple[int, int]:
    cplx = np.abs(w.imag) > IMAG_TOL
    return int(np.sum((w.real > 0) & cplx)), int(np.sum((w.real > 0) & ~cplx))


def _critical(w: np.ndarray, complex_pair: bool, near: complex | None = None) -> complex:
    if complex_pair:
        cand = w[w.imag > IMAG_TOL]
    else:
        cand = w[np.abs(w.imag) <= IMAG_TOL]
    if cand.size == 0:
        return complex("nan")
    if near is None or not np.isfinite(near):
        return complex(cand[np.argmin(np.abs(cand.real))])
    return complex(cand[np.argmin(np.abs(cand - near))])


def _refine(C: _Continuer, ua, ub, sa, sb, kind: str, ga: complex, gb: complex,
            max_iter: int = 80) -> BifurcationEvent | None:
    """Bracketed (Illinois) search along the chord ua -> ub for Re(critical eigenvalue) = 0."""
    chord = ub - ua
    t = chord / np.linalg.norm(chord)
    pair = kind == HOPF
    lo, hi = 0.0, 1.0
    glo, ghi = ga.real, gb.real
    lam_a, lam_b = ua[-1] * C.pscale, ub[-1] * C.pscale
    ptol = C.ctl.event_tol * C.pscale
    best = None
    side = 0
    for _ in range(max_iter):
        sig = hi - ghi * (hi - lo) / (ghi - glo) if ghi != glo else 0.5 * (lo + hi)
        if not lo < sig < hi:
            sig = 0.5 * (lo + hi)
        out = C.correct(ua + sig * chord, t)
        if out is None:
            sig = 0.5 * (lo + hi)
            out = C.correct(ua + sig * chord, t)
            if out is None:
                return None
        u = out[0]
        pt = C.make_point(u, sa + sig * (sb - sa))
        near = ga + sig * (gb - ga)
        g = _critical(pt.spectrum, pair, near)
        best = (pt, g, u)
        if g.real == 0.0:
            break
        if (g.real > 0) == (ghi > 0):
            hi, ghi = sig, g.real
            if side == 1:
                glo *= 0.5
            side = 1
        else:
            lo, glo = sig, g.real
            if side == -1:
                ghi *= 0.5
            side = -1
        width = abs(hi - lo) * abs(lam_b - lam_a)
        if abs(g.real) < 1e-7 and width < ptol:
            break
        if width < 1e-3 * ptol and abs(g.real) < 1e-6:
            break
    pt, g, u = best
    if not abs(g.real) < EVENT_RE_TOL:
        # e.g. a complex pair colliding on the real axis inside the right half plane
        return None
    return BifurcationEvent(kind, pt.parameter, pt, g,
                            (min(lam_a + lo * (lam_b - lam_a), lam_a + hi * (lam_b - lam_a)),
                             max(lam_a + lo * (lam_b - lam_a), lam_a + hi * (lam_b - lam_a))))


def continue_equilibria(params: CellParameters, start: BranchPoint | np.ndarray, parameter_id: str,
                        bounds: tuple[float, float], direction: float = -1.0,
                        control: StepControl | None = None) -> Branch:
    """Follow a curve of equilibria in ``parameter_id`` until it leaves ``bounds``.

    ``start`` is an equilibrium of ``params`` (the parameter's current
    value is the starting value). ``direction`` picks the initial sense of
    the parameter. Hopf points (complex pair crossing the imaginary axis)
    and limit points (real eigenvalue crossing zero) are located by a
    bracketed search along the chord between consecutive points.
    """
    control = control or StepControl()
    lam0 = params[parameter_id]
    x0 = start.state if isinstance(start, BranchPoint) else np.asarray(start, dtype=np.float64)
    C = _Continuer(params, parameter_id, control, lam0)
    lo, hi = min(bounds), max(bounds)
    branch = Branch("equilibrium", parameter_id, params)

    u = C.to_u(x0, lam0)
    out = C.correct(u, np.eye(C.n + 1)[-1])
    if out is None:
        raise NewtonFailed("starting point does not converge", math.nan)
    u = out[0]
    pt = C.make_point(u, 0.0)
    branch.points.append(pt)
    t = C.tangent(u, direction)
    ds = control.ds
    s = 0.0
    prev_counts = _n_unstable(pt.spectrum)
    while len(branch.points) < control.max_points:
        pred = u + ds * t
        out = C.correct(pred, t)
        if out is not None and np.linalg.norm(out[0] - pred) > 0.5 * ds + 1e-9:
            out = None  # large corrector jump: likely branch switching
        if out is None:
            ds *= 0.5
            if ds < control.ds_min:
                branch.stop_reason = "step-size underflow"
                break
            continue
        un, its = out
        sn = s + float(np.linalg.norm(un - u))
        ptn = C.make_point(un, sn)
        lam = ptn.parameter
        if not lo <= lam <= hi:
            branch.stop_reason = "left parameter range"
            break
        counts = _n_unstable(ptn.spectrum)
        if counts[0] != prev_counts[0]:
            ga = _critical(pt.spectrum, True)
            gb = _critical(ptn.spectrum, True, ga)
            ev = _refine(C, u, un, s, sn, HOPF, ga, gb)
            if ev is not None:
                branch.events.append(ev)
        if counts[1] != prev_counts[1]:
            ga = _critical(pt.spectrum, False)
            gb = _critical(ptn.spectrum, False, ga)
            ev = _refine(C, u, un, s, sn, LIMIT_POINT, ga, gb)
            if ev is not None:
                branch.events.append(ev)
        cpair = ptn.spectrum[np.abs(ptn.spectrum.imag) > IMAG_TOL]
        if counts == prev_counts and cpair.size and np.min(np.abs(cpair.real)) < 1e-7:
            ptn.flags = ptn.flags + ("near-hopf",)
        branch.points.append(ptn)
        t = (un - u) / np.linalg.norm(un - u)
        u, s, pt, prev_counts = un, sn, ptn, counts
        if its <= 3:
            ds = min(2.0 * ds, control.ds_max)
    else:
        branch.stop_reason = "max points"
    _classify_real_crossings(branch)
    return branch


def _classify_real_crossings(branch: Branch) -> None:
    """A real eigenvalue through zero is a fold only if the parameter turns there."""
    s = np.array([pt.arclength for pt in branch.points])
    lam = branch.parameters()
    for ev in branch.events:
        if ev.kind != LIMIT_POINT:
            continue
        i = int(np.searchsorted(s, ev.point.arclength))
        before = lam[max(i - 1, 1)] - lam[max(i - 2, 0)]
        after = lam[min(i + 1, len(lam) - 1)] - lam[min(i, len(lam) - 2)]
        if i < 2 or i > len(lam) - 2 or before * after > 0:
            ev.kind = BRANCH_POINT
            ev.point.flags = ev.point.flags + ("branch-point",)
