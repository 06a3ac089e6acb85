"""Interval observer/predictor based robust output-feedback MPC.

Propagates guaranteed state enclosures for nonlinear systems with bounded
noise through a sign-stable remainder decomposition, couples them with a
feedback-parameterized tube MPC, and ships reproducible reactor-tracking and
robot-exploration benchmarks.
"""

from .intervals import Interval, IntervalError, SplitMatrix, bound_product, pmbox, split
from .decomposition import (DecomposedModel, DecompositionError, JacobianBounds,
                            decomp_eval, jss_decompose, remainder_box)
from .estimation import (Estimator, EstimationError, EstimatorState, NoiseBounds,
                         feedback_input, make_estimator_state, observer_step,
                         observer_width_bound, point_observer_step,
                         refine_with_prediction)
from .gains import (GainCertificate, GainError, GainSearchConfig, dlqr,
                    kalman_gain, spectral_radius, synthesize, verify)
from .prediction import (PredictionError, PredictionTrajectory, Predictor,
                         PredictorState, WidthBound, init_from_estimate,
                         predictor_step, rollout, steady_width)
from .nlp import NlpConfig, NlpEvaluationError, NlpProblem, NlpSolution, minimize
from .mpc import (ConstraintSets, ControllerInfeasible, IrofController, MpcConfig,
                  MpcCost, MpcError, MpcStepOutput, NominalController, Obstacle,
                  QuadraticStage, TerminalIngredients, design_terminal_linear,
                  design_terminal_regulation, terminal_decrease_check,
                  validate_terminal_sets)
from .scenarios import (OccupancyMap, Scenario, build, default_cstr_scenario,
                        default_unicycle_scenario, gini_entropy, make_controller,
                        make_map, make_stream, measure_output, shannon_entropy,
                        simulate_plant)
from .harness import TrialResult, run_trial, sweep, verify_gains_report, write_sweep, write_trial

__version__ = "0.1.0"

__all__ = [
    "Interval", "IntervalError", "SplitMatrix", "bound_product", "pmbox", "split",
    "DecomposedModel", "DecompositionError", "JacobianBounds", "decomp_eval",
    "jss_decompose", "remainder_box",
    "Estimator", "EstimationError", "EstimatorState", "NoiseBounds",
    "feedback_input", "make_estimator_state", "observer_step",
    "observer_width_bound", "point_observer_step", "refine_with_prediction",
    "GainCertificate", "GainError", "GainSearchConfig", "dlqr", "kalman_gain",
    "spectral_radius", "synthesize", "verify",
    "PredictionError", "PredictionTrajectory", "Predictor", "PredictorState",
    "WidthBound", "init_from_estimate", "predictor_step", "rollout",
    "steady_width",
    "NlpConfig", "NlpEvaluationError", "NlpProblem", "NlpSolution", "minimize",
    "ConstraintSets", "ControllerInfeasible", "IrofController", "MpcConfig",
    "MpcCost", "MpcError", "MpcStepOutput", "NominalController", "Obstacle",
    "QuadraticStage", "TerminalIngredients", "design_terminal_linear",
    "design_terminal_regulation", "terminal_decrease_check",
    "validate_terminal_sets",
    "OccupancyMap", "Scenario", "build", "default_cstr_scenario",
    "default_unicycle_scenario", "gini_entropy", "make_controller", "make_map",
    "make_stream", "measure_output", "shannon_entropy", "simulate_plant",
    "TrialResult", "run_trial", "sweep", "verify_gains_report", "write_sweep",
    "write_trial",
]
