"""Model parameters and the shipped TP06 constant table."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

ORIGINAL = "original"
MODIFIED = "modified"
VARIANTS = (ORIGINAL, MODIFIED)
VARIANT_CODE = {ORIGINAL: 0, MODIFIED: 1}

# Index order of the flat parameter vector handed to the compiled kernels.
PARAM_NAMES = (
    "G_Na", "G_CaL", "G_Kr", "G_Ks", "G_K1", "G_to", "G_pK", "G_pCa", "G_bNa", "G_bCa",
    "eta", "Na_o", "K_o", "Ca_o", "K_i",
    "C_m", "C_cell", "V_c", "V_sr", "V_ss", "F", "R", "T",
    "P_kna", "P_NaK", "K_mk", "K_mNa", "K_NaCa", "Km_Ca", "Km_Nai", "K_sat",
    "alpha_NaCa", "gamma_NaCa", "K_pCa",
    "Vmax_up", "K_up", "V_leak", "V_rel", "V_xfer", "k1_prime", "k2_prime", "k3", "k4",
    "EC", "max_sr", "min_sr", "Buf_c", "K_buf_c", "Buf_sr", "K_buf_sr", "Buf_ss", "K_buf_ss",
)
PARAM_INDEX = {name: i for i, name in enumerate(PARAM_NAMES)}

CONDUCTANCES = ("G_Na", "G_CaL", "G_Kr", "G_Ks", "G_K1", "G_to", "G_pK", "G_pCa", "G_bNa", "G_bCa")

TABLE_FILE = "tp06_endo.params"
INITIAL_FILE = "tp06_endo_initial.state"


class ParameterError(ValueError):
    """Unknown parameter name, bad value or malformed table line."""


def read_table(source: str | Path | None = None) -> dict[str, tuple[float, str]]:
    """Parse a ``name value unit`` table.

    ``source`` is a path; ``None`` reads the shipped parameter table.
    Text after ``#`` is ignored.
    """
    if source is None:
        text = resources.files("tp06kit.data").joinpath(TABLE_FILE).read_text()
    else:
        text = Path(source).read_text()
    return parse_table(text)


def parse_table(text: str) -> dict[str, tuple[float, str]]:
    table: dict[str, tuple[float, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParameterError(f"line {lineno}: expected 'name value unit', got {raw!r}")
        try:
            value = float(parts[1])
        except ValueError:
            raise ParameterError(f"line {lineno}: value {parts[1]!r} is not a number") from None
        table[parts[0]] = (value, parts[2] if len(parts) == 3 else "1")
    return table


def _default_values() -> dict[str, float]:
    table = read_table()
    missing = set(PARAM_NAMES) - set(table)
    if missing:
        raise ParameterError(f"shipped table lacks {sorted(missing)}")
    return {name: table[name][0] for name in PARAM_NAMES}


_DEFAULTS = _default_values()


@dataclass(frozen=True)
class CellParameters:
    """All constants of one cell plus the model variant.

    ``values`` maps every name in :data:`PARAM_NAMES` to a float. Use
    :meth:`replace` to derive modified sets; instances are immutable.
    """

    variant: str = MODIFIED
    values: Mapping[str, float] = field(default_factory=lambda: dict(_DEFAULTS))

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        unknown = set(self.values) - set(PARAM_INDEX)
        if unknown:
            raise ParameterError(f"unknown parameter(s): {sorted(unknown)}")
        full = dict(_DEFAULTS)
        full.update({k: float(v) for k, v in self.values.items()})
        for k, v in full.items():
            if not math.isfinite(v):
                raise ParameterError(f"parameter {k} is not finite")
        object.__setattr__(self, "values", full)

    @classmethod
    def from_table(cls, path: str | Path, variant: str = MODIFIED) -> "CellParameters":
        table = read_table(path)
        values = {}
        for name, (value, _unit) in table.items():
            if name not in PARAM_INDEX:
                raise ParameterError(f"unknown parameter {name!r} in {path}")
            values[name] = value
        return cls(variant, values)

    def __getitem__(self, name: str) -> float:
        try:
            return self.values[name]
        except KeyError:
            raise ParameterError(f"unknown parameter {name!r}") from None

    def replace(self, variant: str | None = None, **overrides: float) -> "CellParameters":
        for name in overrides:
            if name not in PARAM_INDEX:
                raise ParameterError(f"unknown parameter {name!r}")
        values = dict(self.values)
        values.update(overrides)
        return CellParameters(variant or self.variant, values)

    def with_gks_block(self, fraction: float) -> "CellParameters":
        """Block ``fraction`` of the slow delayed rectifier (0.75 for a 75% block)."""
        return self.replace(G_Ks=(1.0 - fraction) * self["G_Ks"])

    @property
    def code(self) -> int:
        return VARIANT_CODE[self.variant]

    @property
    def n_states(self) -> int:
        return 19 if self.variant == ORIGINAL else 17

    def as_array(self) -> np.ndarray:
        return np.array([self.values[n] for n in PARAM_NAMES], dtype=np.float64)

    def check_physical(self) -> None:
        """Reject settings that only make sense inside continuation."""
        for name in CONDUCTANCES:
            if self.values[name] < 0.0:
                raise ParameterError(f"{name} = {self.values[name]} is negative; "
                                     "negative conductances are only allowed in continuation")
        eta = self.values["eta"]
        if not 0.0 <= eta <= 1.0:
            raise ParameterError(f"eta = {eta} outside [0, 1]")

    def diff(self, other: "CellParameters") -> dict[str, tuple[float, float]]:
        return {k: (v, other.values[k]) for k, v in self.values.items() if other.values[k] != v}


def default_parameters(variant: str = MODIFIED, **overrides: float) -> CellParameters:
    return CellParameters(variant).replace(**overrides)
