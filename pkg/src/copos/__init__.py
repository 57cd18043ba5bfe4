"""LP-based synthesis of positive Takagi-Sugeno fuzzy controllers, applied
end-to-end to the reformed Stepanova tumor-immune model under combined
chemotherapy and immunotherapy."""

__version__ = "0.1.0"

from .model import (
    EPS_POS,
    STEPANOVA_TABLE1,
    Equilibrium,
    ModelParams,
    State,
    Trajectory,
    derivatives,
    find_equilibria,
    gompertz,
    integrate_rk4,
    jacobian,
    zero_policy,
)
from .fuzzy import (
    CONTROL_DOMAIN,
    DEFAULT_DOMAIN,
    DEFAULT_T,
    AugmentedVertexSystem,
    DegenerateSectorError,
    Domain,
    PremiseBounds,
    VertexSystem,
    augment,
    blend,
    build_vertices,
    clamp_premises,
    discretize_euler,
    membership,
    premise_bounds,
    premise_values,
)
from .lp import LinearProgram, LpOutcome, lp_to_text, solve, strictify
from .synthesis import (
    ClosedLoopReport,
    StabilityCertificate,
    SynthesisOptions,
    SynthesisResult,
    check_positivity,
    default_control_system,
    lcplf_stability,
    spectral_radius,
    synthesize_pdc,
    verify_closed_loop,
)
from .sim import (
    OutcomeMetrics,
    Scenario,
    pdc_control,
    recover_inputs,
    run_closed_loop,
    run_scenarios,
    summarize,
    trajectory_to_csv,
)
from .config import ConfigError, RunConfig, load_config

__all__ = [
    "AugmentedVertexSystem", "ClosedLoopReport", "ConfigError",
    "CONTROL_DOMAIN", "DEFAULT_DOMAIN", "DEFAULT_T", "DegenerateSectorError",
    "Domain", "EPS_POS", "Equilibrium", "LinearProgram", "LpOutcome",
    "ModelParams", "OutcomeMetrics", "PremiseBounds", "RunConfig",
    "STEPANOVA_TABLE1", "Scenario", "StabilityCertificate", "State",
    "SynthesisOptions", "SynthesisResult", "Trajectory", "VertexSystem",
    "augment", "blend", "build_vertices", "check_positivity",
    "clamp_premises", "default_control_system", "derivatives",
    "discretize_euler", "find_equilibria", "gompertz", "integrate_rk4",
    "jacobian", "lcplf_stability", "load_config", "lp_to_text", "membership",
    "pdc_control", "premise_bounds", "premise_values", "recover_inputs",
    "run_closed_loop", "run_scenarios", "solve", "spectral_radius",
    "strictify", "summarize", "synthesize_pdc", "trajectory_to_csv",
    "verify_closed_loop", "zero_policy",
]
