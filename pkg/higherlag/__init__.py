from ._version import __version__
from .algebroid import (
    AlgebroidStructure,
    TEVector,
    TEStarVector,
    TStarEVector,
    anchor_flip_residual,
    bracket_sections,
    check_axioms,
    check_frame,
    epsilon_apply,
    frame_structure,
    is_second_order,
    kappa_apply,
    pairing_cotangent,
    pairing_tangent,
)
from .config import DEFAULTS, NumericDefaults
from .errors import (
    ConsistencyError,
    ContractViolation,
    DomainError,
    ExprSyntaxError,
    HigherLagError,
    IdentityFailure,
    InapplicableFamily,
    NonFiniteError,
    NotInRelation,
    NumericError,
    SchemaError,
    StepRejected,
    UnboundIdentifierError,
    UnknownFunctionError,
)
from .jetcalc import Jet
from .mechanics import (
    AdmissiblePath,
    BoundaryCondition,
    ExprCurve,
    Lagrangian,
    action,
    force,
    force_samples,
    gauge_residual,
    integrate_base,
    momentum,
    transversality_check,
    variation_apply,
    variational_identity_residual,
)
from .oracles import DEFAULT_ORACLES, oracle_el, oracle_momentum
from .presets import DEFAULT_PRESETS, preset
from .problem import ProblemFile, load_problem, parse_problem
from .solver import CollocationProblem, EndpointData, Solution, solve, verify_solution
from .suites import DEFAULT_SUITES, run_suites, verify_problem

__all__ = [
    "__version__",
    # Structures
    "AlgebroidStructure",
    "TEVector",
    "TEStarVector",
    "TStarEVector",
    "anchor_flip_residual",
    "bracket_sections",
    "check_axioms",
    "check_frame",
    "epsilon_apply",
    "frame_structure",
    "is_second_order",
    "kappa_apply",
    "pairing_cotangent",
    "pairing_tangent",
    "DEFAULT_PRESETS",
    "preset",
    # Numbers
    "Jet",
    "DEFAULTS",
    "NumericDefaults",
    # Mechanics
    "AdmissiblePath",
    "BoundaryCondition",
    "ExprCurve",
    "Lagrangian",
    "action",
    "force",
    "force_samples",
    "gauge_residual",
    "integrate_base",
    "momentum",
    "transversality_check",
    "variation_apply",
    "variational_identity_residual",
    "DEFAULT_ORACLES",
    "oracle_el",
    "oracle_momentum",
    # Solving and checking
    "CollocationProblem",
    "EndpointData",
    "Solution",
    "solve",
    "verify_solution",
    "DEFAULT_SUITES",
    "run_suites",
    "verify_problem",
    "ProblemFile",
    "load_problem",
    "parse_problem",
    # Errors
    "HigherLagError",
    "SchemaError",
    "ExprSyntaxError",
    "UnknownFunctionError",
    "UnboundIdentifierError",
    "NumericError",
    "ContractViolation",
    "DomainError",
    "NonFiniteError",
    "StepRejected",
    "ConsistencyError",
    "NotInRelation",
    "InapplicableFamily",
    "IdentityFailure",
]
