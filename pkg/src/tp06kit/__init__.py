"""Original and 17-variable TP06 cardiac cell models with continuation and tissue tools."""

from .params import MODIFIED, ORIGINAL, CellParameters, ParameterError, default_parameters
from .model import (
    STATE_NAMES, DomainError, Pulse, StimulusProtocol, gate_rates, ionic_currents,
    published_initial_state, rhs,
)

__version__ = "0.1.0"

__all__ = [
    "MODIFIED", "ORIGINAL", "CellParameters", "ParameterError", "default_parameters",
    "STATE_NAMES", "DomainError", "Pulse", "StimulusProtocol", "gate_rates", "ionic_currents",
    "published_initial_state", "rhs",
]
