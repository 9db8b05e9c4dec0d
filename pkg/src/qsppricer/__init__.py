"""QSP payoff encoding for derivative pricing at desk scale.

Pipeline: fit a bounded definite-parity Chebyshev approximation of the payoff
amplitude, compute QSP phase factors realizing it, assemble the comparator
based circuits, verify against exact classical oracles on a dense statevector
simulator, and account the Clifford+T cost of the fault-tolerant version.
"""
from .builders import (
    BlockEncoding,
    BuildError,
    build_comparator,
    build_const_adder,
    build_grover_q,
    build_projector_rotation,
    build_qsp,
    build_u_sin,
    build_u_sqrt,
    u_sqrt_exact_probability,
)
from .estimator import (
    TABLE1_ROWS,
    AdvantageReport,
    MethodRow,
    advantage_report,
    compare_methods,
    iqae_query_count,
    rotation_budget,
)
from .fixedpoint import FixedPointFormat
from .ir import Circuit, Gate, Register
from .phases import (
    ConvergenceError,
    NormViolationError,
    PhaseFactors,
    find_phases,
    su2_eval,
    verify_phases,
)
from .polyapprox import (
    ChebyshevGrid,
    ChebyshevPolynomial,
    FitInfeasibleError,
    InvalidTargetError,
    TargetFunction,
    fit_minimax,
    make_grid,
    max_error,
)
from .pricing import (
    Autocallable,
    BinaryPayoff,
    EuropeanCall,
    PricePair,
    autocall_target,
    build_autocallable_indicators,
    build_autocallable_pipeline,
    build_call_pipeline,
    call_target,
    classical_price_autocallable,
    classical_price_call,
    normal_grid_probs,
    price_pipeline,
    quantum_price,
)
from .resources import CostRules, ResourceCount, count_resources
from .simulator import (
    CapacityError,
    ProjectorSpec,
    StateVector,
    inject_distribution,
    probability,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "AdvantageReport", "Autocallable", "BinaryPayoff", "BlockEncoding", "BuildError",
    "CapacityError", "ChebyshevGrid", "ChebyshevPolynomial", "Circuit",
    "ConvergenceError", "CostRules", "EuropeanCall", "FitInfeasibleError",
    "FixedPointFormat", "Gate", "InvalidTargetError", "MethodRow",
    "NormViolationError", "PhaseFactors", "PricePair", "ProjectorSpec", "Register",
    "ResourceCount", "StateVector", "TABLE1_ROWS", "TargetFunction",
    "advantage_report", "autocall_target", "build_autocallable_indicators",
    "build_autocallable_pipeline", "build_call_pipeline",
    "build_comparator", "build_const_adder", "build_grover_q",
    "build_projector_rotation", "build_qsp", "build_u_sin", "build_u_sqrt",
    "call_target", "classical_price_autocallable", "classical_price_call",
    "compare_methods", "count_resources", "find_phases", "fit_minimax",
    "inject_distribution", "iqae_query_count", "make_grid", "max_error",
    "normal_grid_probs", "price_pipeline", "probability", "quantum_price",
    "rotation_budget", "run", "su2_eval", "u_sqrt_exact_probability",
    "verify_phases",
]
