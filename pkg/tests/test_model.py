import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tp06kit import (
    MODIFIED, ORIGINAL, STATE_NAMES, DomainError, ParameterError, Pulse, StimulusProtocol,
    default_parameters, gate_rates, ionic_currents, published_initial_state, rhs,
)
from tp06kit.model import GATES, check_state, state_index, to_modified, to_original
from tp06kit.params import PARAM_NAMES, read_table


def test_state_sizes():
    assert len(STATE_NAMES[MODIFIED]) == 17
    assert len(STATE_NAMES[ORIGINAL]) == 19
    assert default_parameters(MODIFIED).n_states == 17
    assert default_parameters(ORIGINAL).n_states == 19
    assert "K_i" not in STATE_NAMES[MODIFIED] and "v" in STATE_NAMES[MODIFIED]


def test_table_covers_every_parameter():
    assert set(read_table()) == set(PARAM_NAMES)


def test_replace_rejects_unknown_names():
    with pytest.raises(ParameterError, match="G_Foo"):
        default_parameters().replace(G_Foo=1.0)


def test_gks_block():
    p = default_parameters()
    assert p.with_gks_block(0.75)["G_Ks"] == pytest.approx(0.25 * p["G_Ks"])


def test_negative_conductance_only_in_continuation():
    with pytest.raises(ParameterError, match="negative"):
        default_parameters(G_Kr=-0.1).check_physical()
    default_parameters(G_Kr=-0.1).as_array()  # allowed as a value


def test_eta_scales_both_delayed_rectifiers():
    y = published_initial_state()
    y[state_index(MODIFIED, "V")] = 10.0
    full = ionic_currents(y, default_parameters())
    half = ionic_currents(y, default_parameters(eta=0.5))
    off = ionic_currents(y, default_parameters(eta=0.0))
    for name in ("I_Kr", "I_Ks"):
        assert full[name] != 0.0
        assert half[name] == pytest.approx(0.5 * full[name], rel=1e-14)
        assert off[name] == 0.0
    assert off["I_K1"] == full["I_K1"]


def test_modified_and_original_agree_when_gates_coincide():
    """With h = j = v and K_i at its fixed value both variants give the same currents."""
    pm, po = default_parameters(MODIFIED), default_parameters(ORIGINAL)
    ym = published_initial_state(MODIFIED)
    yo = to_original(ym, pm["K_i"])
    cm, co = ionic_currents(ym, pm), ionic_currents(yo, po)
    for k in cm:
        assert cm[k] == pytest.approx(co[k], rel=1e-12, abs=1e-15)
    dm, do = rhs(ym, pm), rhs(yo, po)
    assert dm[0] == pytest.approx(do[0], rel=1e-12)


def test_variant_conversion_round_trip():
    ym = published_initial_state(MODIFIED)
    np.testing.assert_allclose(to_modified(to_original(ym)), ym, rtol=1e-15)


def test_check_state_rejects_bad_values():
    y = published_initial_state()
    check_state(y, MODIFIED)
    bad = y.copy()
    bad[state_index(MODIFIED, "m")] = 1.5
    with pytest.raises(DomainError, match="m"):
        check_state(bad, MODIFIED)
    bad = y.copy()
    bad[state_index(MODIFIED, "Ca_i")] = -1e-5
    with pytest.raises(DomainError, match="Ca_i"):
        check_state(bad, MODIFIED)
    with pytest.raises(DomainError):
        check_state(y[:-1], MODIFIED)


def test_overlapping_pulses_rejected():
    with pytest.raises(DomainError, match="overlap"):
        StimulusProtocol((Pulse(0.0, 2.0, 50.0), Pulse(1.0, 2.0, 50.0)))


@settings(max_examples=60, deadline=None)
@given(amp=st.floats(-100.0, 100.0))
def test_stimulus_enters_dvdt_additively(amp):
    p = default_parameters()
    y = published_initial_state()
    d = rhs(y, p, stimulus=amp)[0] - rhs(y, p)[0]
    assert d == pytest.approx(amp, rel=1e-9, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(V=st.floats(-100.0, 60.0), gate=st.sampled_from([g for g in GATES[MODIFIED] if g != "fCass"]))
def test_gate_rates_are_physical(V, gate):
    inf, tau = gate_rates(gate, V)
    assert 0.0 <= inf <= 1.0
    assert tau > 0.0 and np.isfinite(tau)


def test_fcass_needs_calcium():
    with pytest.raises(DomainError):
        gate_rates("fCass", -80.0)
    inf, tau = gate_rates("fCass", -80.0, Ca_ss=2e-4)
    assert 0.0 < inf <= 1.0 and tau > 0.0


def test_unknown_gate():
    with pytest.raises(DomainError):
        gate_rates("h", 0.0, MODIFIED)
