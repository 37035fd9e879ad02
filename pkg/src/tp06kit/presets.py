"""Canned experiments, one per published figure.

Each preset is a set of raw configuration entries in the same form as a
configuration file; a user file given together with a preset overrides
individual keys.
"""

from __future__ import annotations

from dataclasses import dataclass

# 75% block of the slow delayed rectifier (baseline 0.392 nS/pF) and no rapid one
_EAD = {"params.G_Ks": "0.098", "params.G_Kr": "0.0"}


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    entries: dict

    def raw(self) -> dict[str, str]:
        out = {"preset": self.name, "description": self.description}
        out.update(self.entries)
        return out


def _single(amplitude: float, t_end: float = 1000.0, compare: str = "original", **params: str) -> dict:
    d = {"experiment": "single-cell", "stimulus.amplitude": repr(amplitude), "run.t_end": repr(t_end),
         "compare.variant": compare, "compare.stimulus.amplitude": "52.0"}
    d.update({f"params.{k}": v for k, v in params.items()})
    return d


def _gks(value: str, amplitude: float) -> dict:
    return _single(amplitude, 2000.0, G_Ks=value, G_Kr="0.153")


_PRESETS = [
    Preset("fig2a", "normal action potential: modified cell at 71.5 pA/pF against the original at 52 pA/pF",
           _single(71.5)),
    Preset("fig2b", "early afterdepolarisations with a 75% slow-current block and no rapid current, "
                    "modified cell at 73.5 pA/pF against the original at 52 pA/pF",
           {**_single(73.5, 2000.0), **_EAD}),
    Preset("fig3", "both variants driven by the same 52 pA/pF stimulus",
           {**_single(52.0), "compare.stimulus.amplitude": "52.0"}),
    Preset("fig4", "equilibria and cycles in the intracellular potassium concentration, "
                   "from the resting state at 138 mM downward and from 10 mM upward",
           {"experiment": "continuation", "continuation.parameter": "K_i",
            "continuation.lower": "5.0", "continuation.upper": "150.0",
            "continuation.starts": "rest, 10.0", "continuation.directions": "-1.0, 1.0",
            "continuation.pscale": "1.0",
            "continuation.cycles": "true", "continuation.cycle_points": "30"}),
    Preset("fig5a", "slow delayed rectifier reduced to 0.02505 nS/pF, stimulus 73.5 pA/pF", _gks("0.02505", 73.5)),
    Preset("fig5b", "slow delayed rectifier reduced to 0.02505 nS/pF, stimulus 71.5 pA/pF", _gks("0.02505", 71.5)),
    Preset("fig5c", "slow delayed rectifier reduced to 0.028 nS/pF, stimulus 71.5 pA/pF", _gks("0.028", 71.5)),
    Preset("fig5d", "slow delayed rectifier reduced to 0.04 nS/pF, stimulus 71.5 pA/pF", _gks("0.04", 71.5)),
    Preset("fig6", "equilibria and cycles in the rapid delayed rectifier conductance under a 75% "
                   "slow-current block, including negative conductances",
           {"experiment": "continuation", "params.G_Ks": "0.098", "continuation.parameter": "G_Kr",
            "continuation.lower": "-0.5", "continuation.upper": "0.153",
            "continuation.starts": "scan-high", "continuation.directions": "-1.0",
            "continuation.cycles": "true", "continuation.cycle_points": "30"}),
    Preset("fig7", "equilibria and cycles under a common scaling of both delayed rectifiers",
           {"experiment": "continuation", "continuation.parameter": "eta",
            "continuation.lower": "0.0", "continuation.upper": "1.0",
            "continuation.starts": "scan-high", "continuation.directions": "-1.0",
            "continuation.cycles": "true", "continuation.cycle_points": "30"}),
    Preset("fig8-left", "tissue plane wave with normal parameters: a single passage",
           {"experiment": "tissue", "tissue.t_end": "800.0", "tissue.stop": "repolarised"}),
    Preset("fig8-right", "tissue plane wave with the early-afterdepolarisation parameters: re-excitation",
           {"experiment": "tissue", "tissue.t_end": "2500.0", "tissue.stop": "reexcited",
            **_EAD}),
    Preset("fig9", "S1-S2 spiral wave with normal parameters; at 4 s the parameters switch to the "
                   "early-afterdepolarisation settings",
           {"experiment": "tissue", "tissue.t_end": "5000.0", "tissue.snapshot_every": "50.0",
            "s2.time": "380.0", "switch.time": "4000.0",
            **{f"switch.{k}": v for k, v in _EAD.items()}}),
]

PRESETS = {p.name: p for p in _PRESETS}


def list_presets() -> list[tuple[str, str]]:
    """``(name, one-line description)`` for every preset."""
    return [(p.name, p.description) for p in _PRESETS]


def get_preset(name: str) -> Preset:
    name = name.strip()
    if name.startswith("figures/"):
        name = name[len("figures/"):]
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
