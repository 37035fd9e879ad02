import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tp06kit.analysis import (
    APFeatures, ap_features, compare_traces, read_features_csv, write_features_csv,
)


def _trapezoid(t, rest=-85.0, peak=35.0, t_up=10.0, rise=1.0, plateau=200.0, fall=100.0, sag=25.0):
    """Piecewise-linear action potential whose plateau sags by ``sag`` mV."""
    knots_t = [0.0, t_up, t_up + rise, t_up + rise + plateau, t_up + rise + plateau + fall, t[-1]]
    knots_v = [rest, rest, peak, peak - sag, rest, rest]
    return np.interp(t, knots_t, knots_v)


T = np.linspace(0.0, 600.0, 60001)


def test_apd90_of_piecewise_linear_ap():
    v = _trapezoid(T)
    f = ap_features((T, v))
    assert f.has_ap and f.ead_count == 0 and not f.repolarisation_failure
    # the 90% level (-73 mV) is crossed 83/95 of the way down the fall from 10 mV
    assert f.apd90 == pytest.approx(1.0 + 200.0 + 100.0 * 83.0 / 95.0, abs=0.02)
    assert f.peak_v == 35.0 and f.resting_v == -85.0


def test_subthreshold_trace_has_no_ap():
    v = -85.0 + 5.0 * np.exp(-((T - 50.0) / 5.0) ** 2)
    f = ap_features((T, v))
    assert not f.has_ap and math.isnan(f.apd90) and f.ead_count == 0


def test_plateau_bumps_count_as_eads():
    v = _trapezoid(T, plateau=300.0)
    for centre in (200.0, 260.0):
        v = v + 8.0 * np.exp(-((T - centre) / 6.0) ** 2)
    assert ap_features((T, v)).ead_count == 2


def test_spike_and_dome_is_not_an_ead():
    v = _trapezoid(T)
    v = v - 15.0 * np.exp(-((T - 16.0) / 3.0) ** 2)  # notch right after the spike
    f = ap_features((T, v))
    assert f.ead_count == 0
    assert ap_features((T, v), dome_window=0.0).ead_count == 1


def test_repolarisation_failure():
    v = _trapezoid(T, plateau=1000.0)
    assert ap_features((T, v)).repolarisation_failure


def test_features_csv_round_trip(tmp_path):
    rows = [("a", APFeatures(-85.0, 35.0, 291.0, 0, False, True, 10.0)),
            ("b", APFeatures(-85.0, -70.0, math.nan, 0, False, False))]
    write_features_csv(rows, tmp_path / "f.csv")
    back = read_features_csv(tmp_path / "f.csv")
    assert [k for k, _ in back] == ["a", "b"]
    assert back[0][1] == rows[0][1]
    assert math.isnan(back[1][1].apd90) and back[1][1].has_ap is False


def test_compare_identical_is_zero():
    v = _trapezoid(T)
    c = compare_traces((T, v), (T, v))
    assert c.sup == 0.0 and c.rms == 0.0 and c.delta_apd90 == 0.0


def test_compare_disjoint_raises():
    with pytest.raises(ValueError):
        compare_traces((T, _trapezoid(T)), (T + 1000.0, _trapezoid(T)))


_plateau = st.floats(150.0, 300.0)
_fall = st.floats(40.0, 150.0)


@settings(max_examples=25, deadline=None)
@given(p1=_plateau, p2=_plateau, f1=_fall, f2=_fall, shift=st.floats(-500.0, 500.0))
def test_comparison_is_time_shift_invariant(p1, p2, f1, f2, shift):
    t = np.linspace(0.0, 600.0, 6001)
    a, b = _trapezoid(t, plateau=p1, fall=f1), _trapezoid(t, plateau=p2, fall=f2)
    c0 = compare_traces((t, a), (t, b))
    c1 = compare_traces((t + shift, a), (t + shift, b))
    assert c1.sup == pytest.approx(c0.sup, abs=1e-9)
    assert c1.rms == pytest.approx(c0.rms, rel=1e-6, abs=1e-9)
    assert c1.delta_apd90 == pytest.approx(c0.delta_apd90, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(p1=_plateau, p2=_plateau, f1=_fall, f2=_fall)
def test_comparison_is_symmetric(p1, p2, f1, f2):
    t = np.linspace(0.0, 600.0, 6001)
    a, b = (t, _trapezoid(t, plateau=p1, fall=f1)), (t, _trapezoid(t, plateau=p2, fall=f2))
    ab, ba = compare_traces(a, b), compare_traces(b, a)
    assert ab.sup == ba.sup and ab.rms == pytest.approx(ba.rms, rel=1e-12)
    assert ab.delta_apd90 == pytest.approx(-ba.delta_apd90, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(p=st.lists(_plateau, min_size=3, max_size=3), n=st.lists(st.integers(500, 3000), min_size=3, max_size=3))
def test_sup_distance_obeys_triangle_inequality(p, n):
    traces = []
    for plateau, size in zip(p, n):
        t = np.linspace(0.0, 600.0, size)
        traces.append((t, _trapezoid(t, plateau=plateau)))
    a, b, c = traces
    assert compare_traces(a, c).sup <= compare_traces(a, b).sup + compare_traces(b, c).sup + 1e-9
