import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tp06kit import ORIGINAL, default_parameters
from tp06kit.tissue import (
    DT, DX, ParameterSwitch, Rect, RegionPulse, TissueConfigError, TissueDiverged, TissueField,
    TissueProtocol, laplacian_5pt, read_snapshot, reexcited_cells, run_tissue, save_snapshots,
    step_tissue,
)

NO_STIM = TissueProtocol()


def test_laplacian_of_constant_is_zero():
    assert np.array_equal(laplacian_5pt(np.full((5, 7), -85.0), DX), np.zeros((5, 7)))


def test_laplacian_of_ramp():
    V = np.tile(np.arange(6.0), (4, 1))  # rises along x
    L = laplacian_5pt(V, 1.0)
    assert np.all(L[:, 1:-1] == 0.0)
    # no-flux edges see a ghost equal to the edge cell
    assert np.all(L[:, 0] == 1.0) and np.all(L[:, -1] == -1.0)


def test_laplacian_of_spike():
    V = np.zeros((5, 5))
    V[2, 2] = 1.0
    L = laplacian_5pt(V, 0.5)
    assert L[2, 2] == -16.0
    for i, j in ((1, 2), (3, 2), (2, 1), (2, 3)):
        assert L[i, j] == 4.0
    assert L.sum() == 0.0


_fields = arrays(np.float64, st.tuples(st.integers(3, 9), st.integers(3, 9)),
                 elements=st.floats(-90.0, 50.0))


@settings(max_examples=60, deadline=None)
@given(V=_fields)
def test_laplacian_reflection_symmetry(V):
    L = laplacian_5pt(V, DX)
    assert np.array_equal(laplacian_5pt(V[::-1], DX), L[::-1])
    assert np.array_equal(laplacian_5pt(V[:, ::-1], DX), L[:, ::-1])


@settings(max_examples=60, deadline=None)
@given(V=_fields)
def test_laplacian_conserves_total(V):
    L = laplacian_5pt(V, 1.0)
    assert abs(L.sum()) <= 1e-12 * np.abs(V).sum() * 8


def test_laplacian_rejects_thin_fields():
    with pytest.raises(TissueConfigError):
        laplacian_5pt(np.zeros((2, 5)), DX)


def test_stability_guard(params, rest):
    f = TissueField.uniform(4, 4, params, rest)
    assert DT < f.cfl_limit()
    step_tissue(f, NO_STIM, DT)
    with pytest.raises(TissueConfigError, match="stability"):
        step_tissue(f, NO_STIM, 1.01 * f.cfl_limit())


def test_rest_stays_at_rest(params, rest):
    f = TissueField.uniform(8, 8, params, rest)
    run_tissue(f, NO_STIM, 100.0)
    assert np.max(np.abs(f.V - rest[0])) < 1e-6


def test_symmetric_stimulus_gives_symmetric_field(params, rest):
    f = TissueField.uniform(10, 12, params, rest)
    proto = TissueProtocol((RegionPulse(0.0, 2.0, 60.0, Rect(4, 8, 0, 3)),))
    run_tissue(f, proto, 15.0)
    assert f.V.max() > 0.0
    assert np.array_equal(f.states, f.states[:, ::-1, :])


def _velocity(params, rest, D, t_end):
    f = TissueField.uniform(60, 3, params, rest, D=D)
    res = run_tissue(f, TissueProtocol.plane_wave(3, amplitude=60.0), t_end)
    a = res.activation[1]
    assert np.isfinite(a[20]) and np.isfinite(a[40])
    return 20 * DX / (a[40] - a[20])


def test_conduction_slows_with_weaker_coupling(params, rest):
    fast = _velocity(params, rest, 0.00154, 80.0)
    slow = _velocity(params, rest, 0.00154 / 4, 160.0)
    assert 0.01 < fast < 0.1  # cm/ms
    # the cable velocity scales roughly with sqrt(D)
    assert 0.35 < slow / fast < 0.65


def test_switch_changes_parameters_mid_run(params, rest):
    new = params.replace(G_Kr=0.0)
    f = TissueField.uniform(4, 4, params, rest)
    proto = TissueProtocol(switch=ParameterSwitch(1.0, new))
    run_tissue(f, proto, 0.5)
    assert f.params == params
    run_tissue(f, proto, 2.0)
    assert f.params == new
    g = step_tissue(f, proto)
    assert g.params == new and g.t == pytest.approx(f.t + DT)


def test_protocol_validation(params, rest):
    f = TissueField.uniform(5, 5, params, rest)
    with pytest.raises(TissueConfigError, match="outside"):
        TissueProtocol((RegionPulse(0.0, 1.0, 10.0, Rect(0, 6, 0, 2)),)).check(f)
    with pytest.raises(TissueConfigError, match="overlap"):
        TissueProtocol((RegionPulse(0.0, 2.0, 10.0, Rect(0, 2, 0, 2)),
                        RegionPulse(1.0, 2.0, 10.0, Rect(0, 2, 0, 2)))).check(f)
    with pytest.raises(TissueConfigError, match="variant"):
        TissueProtocol(switch=ParameterSwitch(1.0, default_parameters(ORIGINAL))).check(f)
    with pytest.raises(TissueConfigError):
        TissueField(np.zeros((3, 5, 5)), params)


def test_divergence_names_the_cell(params, rest):
    f = TissueField.uniform(5, 5, params, rest)
    proto = TissueProtocol((RegionPulse(0.0, 1.0, 1e300, Rect(2, 3, 3, 4)),))
    with pytest.raises(TissueDiverged) as err:
        run_tissue(f, proto, 1.0)
    assert (err.value.row, err.value.col) == (2, 3)


def test_snapshots_round_trip(tmp_path, params, rest):
    f = TissueField.uniform(6, 4, params, rest)
    proto = TissueProtocol.plane_wave(4, amplitude=60.0, width=2)
    res = run_tissue(f, proto, 5.0, dt=0.05, snapshot_every=1.0)
    assert len(res.snapshots) == 6
    index = save_snapshots(res, tmp_path, pgm=True)
    with open(index) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    for r, s in zip(rows, res.snapshots):
        t, V = read_snapshot(tmp_path / r["file"])
        assert t == float(r["time"]) == s.t
        assert np.array_equal(V, s.V)
    pgm = (tmp_path / "snapshot_00005.pgm").read_bytes()
    assert pgm.startswith(b"P5\n6 4\n255\n") and len(pgm) == len(b"P5\n6 4\n255\n") + 24
    assert not reexcited_cells(res).any()


def test_pure_diffusion_spreads_and_conserves(params, rest):
    f = TissueField.uniform(9, 9, params, rest)
    f.states[0, 4, 4] = 0.0
    total = f.V.sum()
    res = run_tissue(f, NO_STIM, 50.0, ionic=False)
    assert f.V.sum() == pytest.approx(total, rel=1e-12)
    assert f.V.max() < -60.0 and np.ptp(f.V) > 0.0
    assert res.field is f
