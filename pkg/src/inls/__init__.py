"""Radial energy-critical inhomogeneous NLS toolkit.

Coefficient condition checks, the explicit ground state and shooting, a
split-step radial solver with diagnostics, and a threshold classifier that
turns runs into scattering/blowup evidence.
"""

__version__ = "0.1.0"

from .classifier import (  # noqa: E402
    RegionAssessment,
    Verdict,
    assess_region,
    classify_initial,
    monitor_negative,
    monitor_trapping,
    verdict,
)
from .coefficient import (  # noqa: E402
    CoefficientReport,
    PiecewisePlateau,
    ProblemParams,
    PurePower,
    Rational,
    Tabulated,
    Zero,
    check_conditions,
    make_coefficient,
)
from .config import RunConfig  # noqa: E402
from .diagnostics import DiagnosticsRecord, VirialWeight, record  # noqa: E402
from .errors import (  # noqa: E402
    ConfigError,
    NumericFailure,
    ParameterDomainError,
    StageError,
    TruncationError,
    UnsupportedWeight,
)
from .evolution import EvolveControls, evolve, read_checkpoint, step, write_checkpoint  # noqa: E402
from .groundstate import GroundState, build_ground_state, shoot  # noqa: E402
from .state import RadialGrid, RadialState, prepare_initial  # noqa: E402

__all__ = [
    "CoefficientReport", "ConfigError", "DiagnosticsRecord", "EvolveControls", "GroundState",
    "NumericFailure", "ParameterDomainError", "PiecewisePlateau", "ProblemParams", "PurePower",
    "RadialGrid", "RadialState", "Rational", "RegionAssessment", "RunConfig", "StageError",
    "Tabulated", "TruncationError", "UnsupportedWeight", "Verdict", "VirialWeight", "Zero",
    "assess_region", "build_ground_state", "check_conditions", "classify_initial", "evolve",
    "make_coefficient", "monitor_negative", "monitor_trapping", "prepare_initial",
    "read_checkpoint", "record", "shoot", "step", "verdict", "write_checkpoint",
]
