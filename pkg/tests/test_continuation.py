import numpy as np
import pytest

from tp06kit.continuation import (
    HOPF, NewtonFailed, StepControl, continue_cycles, continue_equilibria, eigenvalues,
    floquet_multipliers, jacobian, load_branch, newton_equilibrium, read_events, save_branch,
    shooting_residual, start_from_hopf, voltage_scan,
)
from tp06kit.continuation.cycles import FLOQUET_TOL, SHOOT_TOL
from tp06kit.model import state_scales


@pytest.fixture(scope="module")
def ki_branch(params, rest):
    ctl = StepControl(pscale=1.0, ds_max=2.0, max_points=3000)
    return continue_equilibria(params, rest, "K_i", (45.0, 150.0), -1.0, ctl)


@pytest.fixture(scope="module")
def ki_cycles(params, ki_branch):
    h = ki_branch.events_of(HOPF)[0]
    ctl = StepControl(pscale=1.0, ds_max=0.5, max_points=2)
    return continue_cycles(params.replace(K_i=h.parameter), h, "K_i", (40.0, 60.0), control=ctl)


def test_newton_returns_to_rest(params, rest):
    guess = rest + 1e-3 * state_scales(params.variant) * np.linspace(-1, 1, rest.size)
    guess[1:13] = np.clip(guess[1:13], 0.0, 1.0)
    pt = newton_equilibrium(params, guess)
    np.testing.assert_allclose(pt.state, rest, rtol=1e-6, atol=1e-9)
    assert pt.stability == "stable"


def test_newton_failure_is_reported(params, rest):
    guess = rest.copy()
    guess[0] = -40.0
    with pytest.raises(NewtonFailed, match="did not converge"):
        newton_equilibrium(params, guess, max_iter=0)


def test_jacobian_matches_central_differences(params, rest):
    J = jacobian(rest, params)
    from tp06kit import rhs
    S = state_scales(params.variant)
    C = np.empty_like(J)
    for k in range(rest.size):
        h = 1e-6 * S[k]
        e = np.zeros(rest.size)
        e[k] = h
        C[:, k] = (rhs(rest + e, params) - rhs(rest - e, params)) / (2 * h)
    scale = np.maximum(np.abs(C).max(axis=0), 1e-12)
    assert np.max(np.abs(J - C).max(axis=0) / scale) < 1e-4


def test_voltage_scan_finds_rest(params, rest):
    eqs = voltage_scan(params, np.arange(-95.0, -60.0, 0.5))
    assert any(abs(e.state[0] - rest[0]) < 1e-6 for e in eqs)


def test_branch_reaches_bound_and_finds_hopf(ki_branch):
    assert ki_branch.stop_reason == "left parameter range"
    hopfs = ki_branch.events_of(HOPF)
    assert len(hopfs) == 1
    h = hopfs[0]
    assert 45.0 < h.parameter < 55.0
    # the refined point sits on the imaginary axis
    J = jacobian(h.point.state, ki_branch.params_at(h.parameter))
    w = eigenvalues(J)
    assert abs(w.real.max()) < 1e-5
    assert abs(w[np.argmax(w.real)].imag) > 1e-3


def test_branch_round_trip(tmp_path, ki_branch):
    path, ev = tmp_path / "b.csv", tmp_path / "e.csv"
    save_branch(ki_branch, path, ev)
    back = load_branch(path, ki_branch.params, verify=True)
    assert back.parameter_id == "K_i" and len(back.points) == len(ki_branch.points)
    np.testing.assert_array_equal(back.parameters(), ki_branch.parameters())
    np.testing.assert_array_equal(back.points[-1].state, ki_branch.points[-1].state)
    rows = read_events(ev)
    assert [r["kind"] for r in rows] == [e.kind for e in ki_branch.events]
    assert float(rows[0]["parameter"]) == ki_branch.events[0].parameter


def test_hopf_seed_has_the_linear_period(params, ki_branch):
    h = ki_branch.events_of(HOPF)[0]
    nodes, T, shape = start_from_hopf(h, params, "K_i", m=8)
    assert nodes.shape == (8, params.n_states)
    assert T == pytest.approx(2 * np.pi / abs(h.diagnostic.imag), rel=1e-3)


def test_cycle_points_close_and_carry_the_trivial_multiplier(params, ki_cycles):
    assert len(ki_cycles.points) == 2
    for pt in ki_cycles.points:
        assert pt.residual <= SHOOT_TOL
        p = params.replace(K_i=pt.parameter)
        assert shooting_residual(pt.cycle, p) <= 10 * SHOOT_TOL
        # once from the branch's Newton matrices, once recomputed from the orbit
        for mu in (pt.spectrum, floquet_multipliers(pt.cycle, p)):
            assert np.min(np.abs(mu - 1.0)) < FLOQUET_TOL
        assert "ill-conditioned-multipliers" not in pt.flags
        assert pt.v_range[0] < pt.v_range[1]
