import numpy as np
import pytest

from tp06kit.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, MANIFEST, build_config, main, run
from tp06kit.config import ConfigError, parse_text, resolve
from tp06kit.presets import PRESETS, get_preset, list_presets

CHEAP = {
    "single-cell": "run.t_end = 20.0\ninitial.state = published\nintegrator.stride = 50\n",
    "continuation": ("initial.t_relax = 500.0\ncontinuation.starts = rest\ncontinuation.directions = -1.0\n"
                     "continuation.max_points = 5\ncontinuation.cycles = false\n"),
    "tissue": ("initial.state = published\ntissue.nx = 8\ntissue.ny = 6\ns1.width = 3\ns1.amplitude = 60.0\ntissue.t_end = 10.0\n"
               "tissue.snapshot_every = 1.0\ntissue.stop = none\ns2.time = none\nswitch.time = none\n"),
}


def _cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_list_mentions_every_preset(capsys):
    assert main(["--list"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("fig2a", "fig2b", "fig3", "fig4", "fig5a", "fig5b", "fig5c", "fig5d", "fig6", "fig7",
                 "fig8-left", "fig8-right", "fig9"):
        assert name in out
    fig9 = next(line for line in out.splitlines() if line.startswith("fig9"))
    assert "4 s" in fig9


def test_every_preset_resolves():
    for name in PRESETS:
        cfg = build_config(name)
        assert cfg["preset"] == name
    assert get_preset("figures/fig9").name == "fig9"
    assert len(list_presets()) == 13


def test_unknown_parameter_names_the_field(tmp_path, capsys):
    cfg = _cfg(tmp_path, "params.G_Foo = 1.0\n")
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "params.G_Foo" in err
    assert not out.exists()


def test_unknown_option_and_bad_values():
    with pytest.raises(ConfigError) as e:
        resolve({"stimulus.amplitud": "3"})
    assert e.value.field == "stimulus.amplitud"
    with pytest.raises(ConfigError) as e:
        resolve({"run.t_end": "soon"})
    assert e.value.field == "run.t_end"
    with pytest.raises(ConfigError) as e:
        resolve({"experiment": "tissue", "tissue.dt": "0.2"})
    assert e.value.field == "tissue.dt"
    with pytest.raises(ConfigError) as e:
        resolve({"experiment": "continuation", "continuation.starts": "rest, 10.0"})
    assert e.value.field == "continuation.directions"


def test_sections_and_comments():
    raw = parse_text("# comment\nexperiment = tissue\n[tissue]\nnx = 12  # columns\n[switch.params]\nG_Kr = 0\n")
    assert raw == {"experiment": "tissue", "tissue.nx": "12", "switch.params.G_Kr": "0"}
    with pytest.raises(ConfigError):
        parse_text("just words\n")


def test_missing_source_is_a_config_error(tmp_path):
    assert main(["--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["--preset", "fig99", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


@pytest.mark.parametrize("preset,kind", [("fig2a", "single-cell"), ("fig8-right", "tissue"), ("fig4", "continuation")])
def test_preset_runs_with_cheap_overrides(tmp_path, preset, kind):
    out = tmp_path / preset
    assert run(preset, _cfg(tmp_path, CHEAP[kind]), out) == EXIT_OK
    manifest = (out / MANIFEST).read_text()
    assert f"preset = {preset}" in manifest
    if kind == "single-cell":
        assert (out / "trace.csv").exists() and (out / "comparison.csv").exists()
    elif kind == "tissue":
        assert "params.G_Ks = 0.098" in manifest
        act = np.loadtxt(out / "activation.csv", delimiter=",")
        assert act.shape == (6, 8) and np.isfinite(act[:, 0]).all()
        assert (out / "snapshot_index.csv").exists()
    else:
        assert (out / "branch0.csv").exists() and (out / "events0.csv").exists()


def test_manifest_and_outputs_are_reproducible(tmp_path):
    cfg = _cfg(tmp_path, "preset = fig3\n" + CHEAP["single-cell"])
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(config=cfg, out=a) == EXIT_OK
    assert run(config=cfg, out=b) == EXIT_OK
    assert (a / MANIFEST).read_bytes() == (b / MANIFEST).read_bytes()
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_numerical_failure_exit_status(tmp_path, capsys):
    cfg = _cfg(tmp_path, "stimulus.amplitude = 1e300\n" + CHEAP["single-cell"])
    out = tmp_path / "o"
    assert run(config=cfg, out=out) == EXIT_NUMERIC
    assert "numerical failure" in capsys.readouterr().err
    assert (out / MANIFEST).exists()


def test_seedless_rejects_nondeterministic_options(tmp_path, capsys):
    cfg = _cfg(tmp_path, "run.seed = 3\n")
    assert run(config=cfg, out=tmp_path / "o", seedless=True) == EXIT_CONFIG
    assert "--seedless" in capsys.readouterr().err
    out = tmp_path / "ok"
    assert run(config=_cfg(tmp_path, CHEAP["single-cell"], "ok.cfg"), out=out, seedless=True) == EXIT_OK
    assert "cli.seedless = true" in (out / MANIFEST).read_text()


def test_full_scale_switches_grid():
    cfg = build_config("fig8-left", full_scale=True)
    assert (cfg["tissue.nx"], cfg["tissue.ny"]) == (1000, 1000)
    assert build_config("fig8-left")["tissue.nx"] == 200


def test_negative_conductance_in_single_cell_is_a_config_error(tmp_path):
    cfg = _cfg(tmp_path, "params.G_Kr = -0.1\n" + CHEAP["single-cell"])
    assert run(config=cfg, out=tmp_path / "o") == EXIT_CONFIG
