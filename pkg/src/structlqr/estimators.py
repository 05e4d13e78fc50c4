"""Estimator-style front doors for the two gain computations.

Both classes follow the scikit-learn contract: hyperparameters are stored
verbatim in ``__init__``, ``fit`` computes trailing-underscore attributes
and returns ``self``, and ``get_params``/``set_params``/``clone`` work out
of the box. ``predict`` maps state rows to feedback inputs u = -K x, so a
fitted controller drops into any pipeline expecting that interface.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .learner import LearnerConfig, build_data_matrices, rsrl, window_starts
from .model import (LqrWeights, LtiSystem, RobustnessParams, StructurePattern,
                    SynthesisProblem)
from .sim import Trajectory
from .synthesis import structured_policy_iteration
from .validation import as_matrix


def _as_pattern(indicator, m, n):
    if indicator is None:
        return StructurePattern.dense(m, n)
    if isinstance(indicator, StructurePattern):
        return indicator
    return StructurePattern(indicator)


class StructuredLqr(BaseEstimator):
    """Model-based structured gain synthesizer.

    Parameters
    ----------
    q, r : state and input weights (arrays).
    indicator : binary permitted-entry mask, dense when None.
    alpha, beta, d : robustness parameters.
    initial_gain : optional stabilizing start for the iteration.
    tol, max_iter : policy-iteration stopping controls.

    Attributes after fit
    --------------------
    gain_, value_matrix_, off_pattern_, n_iter_, residual_, history_
    """

    def __init__(self, q=None, r=None, indicator=None, alpha=0.0, beta=0.0,
                 d=0.0, initial_gain=None, tol=1e-9, max_iter=100):
        self.q = q
        self.r = r
        self.indicator = indicator
        self.alpha = alpha
        self.beta = beta
        self.d = d
        self.initial_gain = initial_gain
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, A, B):
        """Synthesize the gain for the system pair (A, B)."""
        system = LtiSystem(a=as_matrix(A, "A"), b=as_matrix(B, "B"))
        problem = SynthesisProblem(
            system=system,
            pattern=_as_pattern(self.indicator, system.m, system.n),
            weights=LqrWeights(q=self.q, r=self.r),
            robustness=RobustnessParams(alpha=self.alpha, beta=self.beta, d=self.d),
        )
        result = structured_policy_iteration(
            problem, initial_gain=self.initial_gain, tol=self.tol,
            max_iters=self.max_iter)
        self.problem_ = problem
        self.gain_ = result.gain
        self.value_matrix_ = result.value_matrix
        self.off_pattern_ = result.off_pattern
        self.n_iter_ = result.iterations
        self.residual_ = result.residual
        self.history_ = result.history
        return self

    def predict(self, X):
        """Feedback inputs u = -K x for state rows X of shape (n_samples, n)."""
        check_is_fitted(self, "gain_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return -(self.gain_ @ X.T).T


class RsrlGainLearner(BaseEstimator):
    """Data-driven structured gain learner; the state matrix is never used.

    Fit on a Trajectory (or a CSV path in the simulator's export format)
    recorded under probing inputs with disturbance measurements.

    Parameters
    ----------
    b : known input matrix.
    q, r : weights; indicator : permitted-entry mask (dense when None).
    alpha, beta, d : robustness parameters.
    initial_gain : stabilizing start (zero assumes a stable open loop).
    mode : "reduced" or "paper-faithful" least-squares parametrization.
    tol, max_iter : outer-iteration stopping controls.
    window_steps, window_count, window_layout : data-window geometry;
        window_count defaults to twice the identifiability requirement.
    availability : optional list of (start, end) measurement intervals.

    Attributes after fit
    --------------------
    gain_, value_matrix_, off_pattern_, n_iter_, history_, rank_report_,
    diagnostics_
    """

    def __init__(self, b=None, q=None, r=None, indicator=None, alpha=0.0,
                 beta=0.0, d=0.0, initial_gain=None, mode="reduced", tol=1e-6,
                 max_iter=30, window_steps=1, window_count=None,
                 window_layout="contiguous", availability=None):
        self.b = b
        self.q = q
        self.r = r
        self.indicator = indicator
        self.alpha = alpha
        self.beta = beta
        self.d = d
        self.initial_gain = initial_gain
        self.mode = mode
        self.tol = tol
        self.max_iter = max_iter
        self.window_steps = window_steps
        self.window_count = window_count
        self.window_layout = window_layout
        self.availability = availability

    def fit(self, trajectory, y=None):
        """Learn the structured gain from one recorded trajectory."""
        if isinstance(trajectory, (str, bytes)) or hasattr(trajectory, "__fspath__"):
            trajectory = Trajectory.from_csv(trajectory)
        b = as_matrix(self.b, "b")
        n, m = b.shape
        pattern = _as_pattern(self.indicator, m, n)
        # the learner ignores the state matrix; a placeholder keeps the
        # problem container well formed
        problem = SynthesisProblem(
            system=LtiSystem(a=np.zeros((n, n)), b=b),
            pattern=pattern,
            weights=LqrWeights(q=self.q, r=self.r),
            robustness=RobustnessParams(alpha=self.alpha, beta=self.beta, d=self.d),
        )
        count = self.window_count
        if count is None:
            count = 2 * (n * (n + 1) // 2 + pattern.nnz + n * m)
        starts = window_starts(trajectory, count, window_steps=self.window_steps,
                               layout=self.window_layout)
        data = build_data_matrices(trajectory, window_steps=self.window_steps,
                                   start_indices=starts,
                                   availability=self.availability)
        config = LearnerConfig(varsigma=self.tol, max_iters=self.max_iter,
                               ls_mode=self.mode)
        result, diagnostics = rsrl(problem, data,
                                   initial_gain=self.initial_gain, config=config)
        self.gain_ = result.gain
        self.value_matrix_ = result.value_matrix
        self.off_pattern_ = result.off_pattern
        self.n_iter_ = result.iterations
        self.history_ = result.history
        self.rank_report_ = diagnostics.rank
        self.diagnostics_ = diagnostics
        return self

    def predict(self, X):
        """Feedback inputs u = -K x for state rows X of shape (n_samples, n)."""
        check_is_fitted(self, "gain_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return -(self.gain_ @ X.T).T
