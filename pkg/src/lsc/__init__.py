"""Reflecting-barrier singular control of Levy processes.

Solves for the optimal barrier of a discounted control problem with
state-dependent control costs via its optimal-stopping connection, certifies
the solution against the variational (HJB) system, and cross-checks it by
Monte Carlo simulation of the reflected process.
"""

__version__ = "0.1.0"

from .cost_model import (
    CostModel,
    ExpExpCost,
    ExpQuadraticCost,
    MonomialLinearCost,
    growth_scan,
    q_function,
)
from .errors import (
    Assumption4Violation,
    ConfigError,
    ConvergenceError,
    DegenerateError,
    DomainError,
    IntegrabilityError,
    LscError,
    NoRootError,
    ScenarioError,
)
from .exppoly import ExpPolynomial, PiecewiseExpPolynomial
from .fluctuation import (
    ExtremumLaw,
    RootSet,
    Side,
    compose_expectation,
    expect,
    extremum_law,
    mgf_inf,
    mgf_sup,
    moments,
    solve_phi_equals_delta,
)
from .levy_model import (
    Assumption1Report,
    LevyModel,
    ProcessKind,
    check_assumption1,
)
from .mc_simulator import (
    CostEstimate,
    SimConfig,
    barrier_sweep,
    estimate_cost,
    reflect_at_barrier,
    simulate_path,
)
from .scenario import Scenario, bundled_scenario, load_scenario, parse_scenario
from .threshold_solver import (
    GridSpec,
    HjbReport,
    ThresholdSolution,
    apply_generator,
    closed_form_threshold,
    find_threshold,
    hjb_residual_check,
    solve,
    stopping_value,
    value_function,
)

__all__ = [name for name in dir() if not name.startswith("_")]
