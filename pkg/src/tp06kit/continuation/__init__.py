"""Numerical continuation of equilibria and periodic orbits."""

from .branch import (
    BRANCH_POINT, FOLD_OF_CYCLES, HOPF, LIMIT_POINT, PERIOD_DOUBLING, STABLE, TORUS, UNSTABLE,
    BifurcationEvent, Branch, BranchPoint, BranchVerificationError, CycleRepresentation,
    load_branch, read_events, save_branch, save_events,
)
from .equilibria import (
    NewtonFailed, SingularJacobian, StepControl, continue_equilibria, eigenvalues, jacobian,
    newton_equilibrium, resting_equilibrium, voltage_scan,
)
from .cycles import (
    ShootingOptions, continue_cycles, floquet_multipliers, period_doubled_start, shooting_residual,
    start_from_hopf,
)

__all__ = [
    "BRANCH_POINT", "FOLD_OF_CYCLES", "HOPF", "LIMIT_POINT", "PERIOD_DOUBLING", "STABLE", "TORUS", "UNSTABLE",
    "BifurcationEvent", "Branch", "BranchPoint", "BranchVerificationError", "CycleRepresentation",
    "load_branch", "read_events", "save_branch", "save_events",
    "NewtonFailed", "SingularJacobian", "StepControl", "continue_equilibria", "eigenvalues",
    "jacobian", "newton_equilibrium", "resting_equilibrium", "voltage_scan",
    "ShootingOptions", "continue_cycles", "floquet_multipliers", "period_doubled_start",
    "shooting_residual", "start_from_hopf",
]
