"""Structured robust LQR synthesis and data-driven gain learning."""

from .bounds import (BoundReport, applicability, bound_constants, bound_report,
                     operator_v_matrix, suboptimality_bound)
from .consensus import make_consensus_system
from .errors import (AsymmetricP, AvailabilityViolated, Diverged, FloorViolated,
                     InvalidEdge, InvalidProblem, NoConvergence, NotHurwitz,
                     NotSettled, NotStabilizing, OperatorSingular, RankDeficient,
                     ShapeMismatch, SingularSystem, StructLqrError,
                     WindowOutOfRange)
from .estimators import RsrlGainLearner, StructuredLqr
from .experiment import ExperimentConfig, run_experiment, synth_only
from .learner import (DataMatrices, LearnerConfig, LearnerDiagnostics, RankReport,
                      build_data_matrices, ls_policy_step, rank_check, rsrl,
                      window_starts)
from .linalg import (duplication_matrix, hadamard, kron, solve_lyapunov,
                     spectral_abscissa, sym_pack, sym_unpack, unvec, vec)
from .model import (LqrWeights, LtiSystem, RobustnessParams, StructurePattern,
                    SynthesisProblem, ValidationReport, q_floor, validate_problem)
from .sim import (CostReport, ExoModel, ExplorationSignal, IssReport, Trajectory,
                  evaluate_cost, iss_envelope, simulate)
from .synthesis import (SynthesisResult, complement_part, kleinman_step,
                        project_structure, stabilizing_gain,
                        structured_policy_iteration, verify_modified_are)

__version__ = "0.1.0"

__all__ = [
    "AsymmetricP", "AvailabilityViolated", "BoundReport", "CostReport",
    "DataMatrices", "Diverged", "ExoModel", "ExperimentConfig",
    "ExplorationSignal", "FloorViolated", "InvalidEdge", "InvalidProblem",
    "IssReport", "LearnerConfig", "LearnerDiagnostics", "LqrWeights",
    "LtiSystem", "NoConvergence", "NotHurwitz", "NotSettled", "NotStabilizing",
    "OperatorSingular", "RankDeficient", "RankReport", "RobustnessParams",
    "RsrlGainLearner", "ShapeMismatch", "SingularSystem", "StructLqrError",
    "StructurePattern", "StructuredLqr", "SynthesisProblem", "SynthesisResult",
    "Trajectory", "ValidationReport", "WindowOutOfRange", "applicability",
    "bound_constants", "bound_report", "build_data_matrices", "complement_part",
    "duplication_matrix", "evaluate_cost", "hadamard", "iss_envelope",
    "kleinman_step", "kron", "ls_policy_step", "make_consensus_system",
    "operator_v_matrix", "project_structure", "q_floor", "rank_check", "rsrl",
    "run_experiment", "simulate", "solve_lyapunov", "spectral_abscissa",
    "stabilizing_gain", "structured_policy_iteration", "suboptimality_bound",
    "sym_pack", "sym_unpack", "synth_only", "unvec", "validate_problem", "vec",
    "verify_modified_are", "window_starts",
]
