"""Output synchronization and dynamic average consensus over networks.

The package simulates diffusively coupled nonlinear oscillators whose
internal-model controllers reject constant and sinusoidal disturbances,
and constructively designs the matching dynamic average consensus
estimators, verifying every design condition with rational arithmetic.
"""

from .agents import (
    AgentModel,
    GoodwinParams,
    goodwin_iofp_gain,
    goodwin_rhs,
    hill_max_slope,
    linear_agent,
    sync_condition_holds,
)
from .config import ConfigError, parse_scenario, serialize_scenario
from .control import AdaptationGains, ControllerConfig, InternalModelController
from .dac import (
    DacDesign,
    build_dac_network,
    check_closed_loop_stability,
    check_divisibility,
    check_generator_match,
    design_dac_filter,
)
from .exosystem import (
    AuxEnsemble,
    AuxiliarySystem,
    DisturbanceEnsemble,
    Exosystem,
    NodeSignal,
    SignalSpec,
    canonical_generator,
    design_aux_systems,
    observability_matrix,
)
from .lti import (
    InfeasibleDesignError,
    Polynomial,
    SprVerdict,
    StateSpace,
    TransferFunction,
    char_poly,
    is_spr,
    max_spr_epsilon,
    realize,
    resolvent_transfer,
    routh_stable,
)
from .netgraph import (
    GraphConnectivityError,
    Laplacian,
    ProjectionPair,
    WeightedGraph,
    algebraic_connectivity,
    build_laplacian,
    is_connected,
    laplacian_pseudoinverse,
    projection_pair,
    symmetric_eigenvalues,
)
from .presets import PRESET_IDS, evaluate_preset, load_preset, preset_text
from .sim import (
    Scenario,
    SimulationDivergenceError,
    Trace,
    peak_to_peak,
    rk4_step,
    simulate,
    sync_error,
    trace_to_csv,
    tracking_error,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptationGains",
    "AgentModel",
    "AuxEnsemble",
    "AuxiliarySystem",
    "ConfigError",
    "ControllerConfig",
    "DacDesign",
    "DisturbanceEnsemble",
    "Exosystem",
    "GoodwinParams",
    "GraphConnectivityError",
    "InfeasibleDesignError",
    "InternalModelController",
    "Laplacian",
    "NodeSignal",
    "PRESET_IDS",
    "Polynomial",
    "ProjectionPair",
    "Scenario",
    "SignalSpec",
    "SimulationDivergenceError",
    "SprVerdict",
    "StateSpace",
    "Trace",
    "TransferFunction",
    "WeightedGraph",
    "algebraic_connectivity",
    "build_dac_network",
    "build_laplacian",
    "canonical_generator",
    "char_poly",
    "check_closed_loop_stability",
    "check_divisibility",
    "check_generator_match",
    "design_aux_systems",
    "design_dac_filter",
    "evaluate_preset",
    "goodwin_iofp_gain",
    "goodwin_rhs",
    "hill_max_slope",
    "is_connected",
    "is_spr",
    "laplacian_pseudoinverse",
    "linear_agent",
    "load_preset",
    "max_spr_epsilon",
    "observability_matrix",
    "parse_scenario",
    "peak_to_peak",
    "preset_text",
    "projection_pair",
    "realize",
    "resolvent_transfer",
    "rk4_step",
    "routh_stable",
    "serialize_scenario",
    "simulate",
    "symmetric_eigenvalues",
    "sync_condition_holds",
    "sync_error",
    "trace_to_csv",
    "tracking_error",
]
