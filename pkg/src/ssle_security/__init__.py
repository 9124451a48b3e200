"""Security of longest-chain proof-of-stake under single-secret vs probabilistic leader election."""
__version__ = "0.1.0"

from .core import (  # noqa: E402
    DomainError,
    GameKind,
    GameParams,
    GapPmf,
    LogProb,
    ParameterError,
    SolverError,
    StepProbs,
    step_probs,
)
from .grinding import (  # noqa: E402
    GrindingTable,
    grinding_series,
    grinding_table,
    grinding_win_probability,
    security_threshold,
    speed_gamma,
    threshold_report,
)
from .montecarlo import SimConfig  # noqa: E402
from .persistence import fit_decay, persistence_parameter, reduction_ratio  # noqa: E402
from .private_game import (  # noqa: E402
    catch_up_probability,
    expected_gap,
    expected_gap_coefficient,
    fixed_length_win_probability,
    gap_pmf,
    win_probability,
)

__all__ = [
    "DomainError", "GameKind", "GameParams", "GapPmf", "LogProb", "ParameterError",
    "SolverError", "StepProbs", "step_probs", "GrindingTable", "grinding_series",
    "grinding_table", "grinding_win_probability", "security_threshold", "speed_gamma",
    "threshold_report", "SimConfig", "fit_decay", "persistence_parameter",
    "reduction_ratio", "catch_up_probability", "expected_gap", "expected_gap_coefficient",
    "fixed_length_win_probability", "gap_pmf", "win_probability",
]
