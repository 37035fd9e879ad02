import numpy as np
import pytest

from tp06kit import StimulusProtocol, default_parameters, published_initial_state
from tp06kit.analysis import ap_features
from tp06kit.integrate import (
    ADAPTIVE, IntegrationDiverged, IntegratorConfig, Trace, equilibrate, read_trace_binary,
    read_trace_csv, simulate, step_rush_larsen,
)


def test_one_tissue_sized_step_with_stimulus_depolarises(params, rest):
    stim = StimulusProtocol.single(52.0)
    y1 = step_rush_larsen(rest, params, 0.0, 0.0812, stim)
    y0 = step_rush_larsen(rest, params, 0.0, 0.0812)
    assert y1[0] > rest[0] + 52.0 * 0.0812 * 0.9
    assert y1[0] - y0[0] == pytest.approx(52.0 * 0.0812, rel=1e-9)


def test_clamp_holds_voltage(params, rest):
    y = rest.copy()
    y[0] = 0.0
    out = step_rush_larsen(y, params, 0.0, 0.5, clamp_voltage=True)
    assert out[0] == 0.0
    assert not np.array_equal(out[1:], y[1:])


def test_rest_is_stationary(params, rest):
    tr = simulate(rest, params, t_end=200.0, config=IntegratorConfig(stride=100))
    assert np.max(np.abs(tr.V - rest[0])) < 1e-6


def test_equilibrate_residual_small(params, relaxed):
    r = equilibrate(params, relaxed, t_relax=1000.0)
    assert r.residual < 1e-3


def test_fixed_and_adaptive_agree(params, relaxed):
    stim = StimulusProtocol.single(71.5)
    a = simulate(relaxed, params, stim, IntegratorConfig(dt=0.005, stride=4), t_end=500.0)
    b = simulate(relaxed, params, stim, IntegratorConfig(method=ADAPTIVE, rtol=1e-8, atol=1e-8), t_end=500.0)
    fa, fb = ap_features(a), ap_features(b)
    assert fa.has_ap and fb.has_ap
    assert abs(fa.apd90 - fb.apd90) < 2.0
    assert abs(fa.peak_v - fb.peak_v) < 2.0


def test_trace_files_round_trip(tmp_path, params, relaxed):
    tr = simulate(relaxed, params, StimulusProtocol.single(71.5), IntegratorConfig(stride=50), t_end=50.0)
    tr.to_csv(tmp_path / "t.csv")
    names, t, s = read_trace_csv(tmp_path / "t.csv")
    assert names == tr.names
    np.testing.assert_array_equal(t, tr.times)
    np.testing.assert_array_equal(s, tr.states)
    tr.to_binary(tmp_path / "t.bin")
    t2, s2 = read_trace_binary(tmp_path / "t.bin")
    np.testing.assert_array_equal(t2, tr.times)
    np.testing.assert_array_equal(s2, tr.states)


def test_trace_validation(params):
    y = published_initial_state()
    with pytest.raises(ValueError):
        Trace(np.array([0.0, 0.0]), np.vstack([y, y]), params)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(stride=0)


def test_divergence_is_reported(params):
    with pytest.raises(IntegrationDiverged):
        simulate(published_initial_state(), params, StimulusProtocol.single(1e300),
                 IntegratorConfig(dt=0.02), t_end=5.0)


def test_negative_conductance_rejected_in_simulation():
    p = default_parameters(G_Kr=-0.05)
    with pytest.raises(ValueError):
        simulate(published_initial_state(), p, t_end=1.0)
