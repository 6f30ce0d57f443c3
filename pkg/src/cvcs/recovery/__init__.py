"""Block recovery by basis pursuit over the DCT basis."""
from .operator import MeasurementOperator, build_measurement_operator
from .oracle import l0_oracle, l0_solutions
from .pipeline import TraceRecovery, recover_block, recover_trace, recover_traces
from .solvers import ALGORITHMS, RecoveryResult, SolverConfig, relative_residual, solve_basis_pursuit

__all__ = [
    "ALGORITHMS",
    "MeasurementOperator",
    "RecoveryResult",
    "SolverConfig",
    "TraceRecovery",
    "build_measurement_operator",
    "l0_oracle",
    "l0_solutions",
    "recover_block",
    "recover_trace",
    "recover_traces",
    "relative_residual",
    "solve_basis_pursuit",
]
