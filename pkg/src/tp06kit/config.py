"""Experiment configuration: ``key = value`` text with dotted sections.

Lines look like ``stimulus.amplitude = 71.5``; ``#`` starts a comment.
A bracketed line ``[tissue]`` prefixes the following keys with ``tissue.``.
Every key is validated against a schema before anything is computed;
parameter overrides live under ``params.`` (and ``switch.params.`` for the
tissue parameter switch) and must name real model parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .params import PARAM_INDEX, VARIANTS

SINGLE_CELL = "single-cell"
CONTINUATION = "continuation"
TISSUE = "tissue"
EXPERIMENTS = (SINGLE_CELL, CONTINUATION, TISSUE)


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted key at fault."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# Value types

def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(text: str) -> int:
    return int(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _str(text: str) -> str:
    return text.strip()


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else _float(text)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(repr(o) for o in options)}, got {t!r}")
        return t
    return parse


def _list(item: Callable[[str], object]) -> Callable[[str], list]:
    def parse(text: str) -> list:
        return [item(x) for x in text.split(",") if x.strip()]
    return parse


def _parameter_name(text: str) -> str:
    t = text.strip()
    if t not in PARAM_INDEX:
        raise ValueError(f"unknown parameter {t!r}")
    return t


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], object]
    default: str
    help: str = ""


COMMON = {
    "experiment": Key(_choice(*EXPERIMENTS), SINGLE_CELL, "experiment kind"),
    "variant": Key(_choice(*VARIANTS), "modified", "cell model variant"),
    "preset": Key(_str, "", "preset the configuration was built from"),
    "description": Key(_str, ""),
    "output.formats": Key(_list(_choice("csv", "binary")), "csv", "trace formats"),
    "initial.state": Key(_choice("equilibrated", "published"), "equilibrated",
                         "start from the relaxed resting state or the published initial values"),
    "initial.t_relax": Key(_float, "10000.0", "relaxation time for the resting state (ms)"),
}

SINGLE = {
    "stimulus.amplitude": Key(_float, "71.5", "pA/pF"),
    "stimulus.start": Key(_float, "0.0", "ms"),
    "stimulus.duration": Key(_float, "2.0", "ms"),
    "run.t_end": Key(_float, "1000.0", "ms"),
    "integrator.method": Key(_choice("rush-larsen-euler", "adaptive-rk"), "rush-larsen-euler"),
    "integrator.dt": Key(_float, "0.02", "ms, fixed-step method"),
    "integrator.rtol": Key(_float, "1e-07"),
    "integrator.atol": Key(_float, "1e-07"),
    "integrator.stride": Key(_int, "5", "keep every n-th step"),
    "compare.variant": Key(_choice("", *VARIANTS), "", "second run for comparison (empty: none)"),
    "compare.stimulus.amplitude": Key(_float, "52.0", "pA/pF"),
    "analysis.ead_prominence": Key(_float, "1.0", "mV"),
    "analysis.plateau_floor": Key(_float, "-40.0", "mV"),
    "analysis.dome_window": Key(_float, "100.0", "ms"),
}

CONT = {
    "continuation.parameter": Key(_parameter_name, "K_i"),
    "continuation.lower": Key(_float, "5.0"),
    "continuation.upper": Key(_float, "150.0"),
    "continuation.starts": Key(_list(_str), "rest",
                               "per branch: rest, scan-high, scan-low or a parameter value to relax at"),
    "continuation.directions": Key(_list(_float), "-1.0", "per branch: initial sense of the parameter"),
    "continuation.ds": Key(_float, "0.05"),
    "continuation.ds_max": Key(_float, "0.5"),
    "continuation.max_points": Key(_int, "3000"),
    "continuation.pscale": Key(_optional_float, "none",
                               "parameter unit of the arclength (none: 1% of the start value)"),
    "continuation.cycles": Key(_bool, "false", "follow the cycle branch born at the first Hopf point"),
    "continuation.cycle_points": Key(_int, "40"),
    "continuation.cycle_ds_max": Key(_float, "0.5"),
}

TISS = {
    "tissue.nx": Key(_int, "200"),
    "tissue.ny": Key(_int, "200"),
    "tissue.full_nx": Key(_int, "1000", "grid used with --full-scale"),
    "tissue.full_ny": Key(_int, "1000"),
    "tissue.dx": Key(_float, "0.025", "cm"),
    "tissue.D": Key(_float, "0.00154", "cm^2/ms"),
    "tissue.dt": Key(_float, "0.0812", "ms"),
    "tissue.t_end": Key(_float, "600.0", "ms"),
    "tissue.snapshot_every": Key(_float, "10.0", "ms"),
    "tissue.pgm": Key(_bool, "false"),
    "tissue.stop": Key(_choice("none", "repolarised", "reexcited"), "none",
                       "end early once every activated cell is back below -80 mV, or on re-excitation"),
    "s1.amplitude": Key(_float, "26.2", "pA/pF"),
    "s1.width": Key(_int, "6", "columns at the left edge"),
    "s1.rows": Key(_int, "200", "rows, centred vertically"),
    "s1.duration": Key(_float, "2.0", "ms"),
    "s2.time": Key(_optional_float, "none", "ms; bottom-left quadrant pulse"),
    "switch.time": Key(_optional_float, "none", "ms; global parameter switch"),
}

SECTIONS = {SINGLE_CELL: SINGLE, CONTINUATION: CONT, TISSUE: TISS}
# options that would make a run depend on a random seed; none are implemented
NONDETERMINISTIC = ("seed", "random_seed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved configuration: every key of the experiment's schema."""

    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def experiment(self) -> str:
        return self.values["experiment"]

    def params_overrides(self, prefix: str = "params.") -> dict[str, float]:
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def manifest_lines(self) -> list[str]:
        return [f"{k} = {_format(v)}" for k, v in sorted(self.values.items())]


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Raw ``key -> value`` pairs; later keys override earlier ones."""
    raw: dict[str, str] = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}", "empty key")
        raw[f"{section}.{key}" if section else key] = value
    return raw


def read_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file {str(path)!r} does not exist")
    return parse_text(path.read_text(), str(path))


def resolve(raw: dict[str, str], seedless: bool = False) -> ExperimentConfig:
    """Validate ``raw`` and fill in every default."""
    for key, value in raw.items():
        last = key.rsplit(".", 1)[-1]
        if seedless and (last in NONDETERMINISTIC or value.strip().lower() == "random"):
            raise ConfigError(key, "nondeterministic option rejected by --seedless")
    exp_text = raw.get("experiment", COMMON["experiment"].default)
    try:
        experiment = COMMON["experiment"].parse(exp_text)
    except ValueError as exc:
        raise ConfigError("experiment", str(exc)) from None
    schema = dict(COMMON)
    schema.update(SECTIONS[experiment])
    values: dict[str, object] = {}
    for key, spec in schema.items():
        text = raw.get(key, spec.default)
        try:
            values[key] = spec.parse(text)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    prefixes = ["params."] + (["switch.params."] if experiment == TISSUE else [])
    for key, text in raw.items():
        if key in schema:
            continue
        prefix = next((p for p in prefixes if key.startswith(p)), None)
        if prefix is None:
            raise ConfigError(key, f"unknown option for a {experiment} experiment")
        name = key[len(prefix):]
        if name not in PARAM_INDEX:
            raise ConfigError(key, f"unknown parameter {name!r}")
        try:
            values[key] = _float(text)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    _check_consistency(values)
    return ExperimentConfig(values)


def _check_consistency(v: dict) -> None:
    if v["initial.t_relax"] <= 0:
        raise ConfigError("initial.t_relax", "must be positive")
    exp = v["experiment"]
    if exp == SINGLE_CELL:
        for k in ("run.t_end", "integrator.dt", "stimulus.duration"):
            if v[k] <= 0:
                raise ConfigError(k, "must be positive")
        if v["integrator.stride"] < 1:
            raise ConfigError("integrator.stride", "must be at least 1")
    elif exp == CONTINUATION:
        if not v["continuation.lower"] < v["continuation.upper"]:
            raise ConfigError("continuation.upper", "must exceed continuation.lower")
        if len(v["continuation.starts"]) != len(v["continuation.directions"]):
            raise ConfigError("continuation.directions", "needs one entry per start")
        for s in v["continuation.starts"]:
            if s not in ("rest", "scan-high", "scan-low"):
                try:
                    float(s)
                except ValueError:
                    raise ConfigError("continuation.starts", f"bad start {s!r}") from None
    else:
        for k in ("tissue.nx", "tissue.ny", "tissue.full_nx", "tissue.full_ny"):
            if v[k] < 3:
                raise ConfigError(k, "grid dimensions must be at least 3")
        for k in ("tissue.dx", "tissue.dt", "tissue.t_end", "s1.duration"):
            if v[k] <= 0:
                raise ConfigError(k, "must be positive")
        if v["tissue.D"] < 0:
            raise ConfigError("tissue.D", "must be non-negative")
        if v["tissue.D"] > 0 and v["tissue.dt"] > v["tissue.dx"] ** 2 / (4 * v["tissue.D"]):
            raise ConfigError("tissue.dt", "exceeds the diffusion stability limit dx^2/(4D)")
        switch = any(k.startswith("switch.params.") for k in v)
        if switch and v["switch.time"] is None:
            raise ConfigError("switch.time", "switch parameters given without a switch time")
