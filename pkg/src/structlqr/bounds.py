"""Suboptimality certificate for structured versus unconstrained gains.

The gap between the structured objective J and the unconstrained optimum
J_bar obeys ||J - J_bar|| <= (l / 2g) ||x0||^2, provided an applicability
condition on the off-pattern magnitude holds. Here g = ||B R^-1 B^T||_2 and
l is the reciprocal operator norm of the inverse of

    V W = (A - B R^-1 B^T)^T W + W (A - B R^-1 B^T),

taken verbatim with the open-loop style M = A - B R^-1 B^T; pass a value
matrix via ``closed_loop_p`` to use M = A - B R^-1 B^T P instead for
comparison with the perturbation-theoretic closed-loop convention.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OperatorSingular
from .linalg import lyapunov_operator_matrix
from .validation import as_matrix, as_vector

OPERATOR_RCOND = 1e-12


def _operator_m(a, b, r, closed_loop_p=None):
    brb = b @ np.linalg.solve(r, b.T)
    if closed_loop_p is None:
        return a - brb
    return a - brb @ as_matrix(closed_loop_p, "closed_loop_p")


def operator_v_matrix(a, b, r, closed_loop_p=None):
    """n^2 x n^2 matrixization of the gap operator, acting on vec(W)."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    r = as_matrix(r, "r")
    return lyapunov_operator_matrix(_operator_m(a, b, r, closed_loop_p))


def bound_constants(a, b, r, closed_loop_p=None):
    """Return (g, l): g = ||B R^-1 B^T||_2, l = smallest singular value of V."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    r = as_matrix(r, "r")
    g = float(np.linalg.norm(b @ np.linalg.solve(r, b.T), 2))
    singular_values = np.linalg.svd(operator_v_matrix(a, b, r, closed_loop_p),
                                    compute_uv=False)
    if singular_values[-1] <= OPERATOR_RCOND * singular_values[0] or singular_values[-1] == 0:
        raise OperatorSingular("gap operator is numerically singular")
    return g, float(singular_values[-1])


def suboptimality_bound(x0, g, l_value):
    """(l / 2g) * ||x0||^2; uses ||x0^T (x) x0^T||_2 = ||x0||^2."""
    x0 = as_vector(x0, "x0")
    if g <= 0:
        raise ValueError("g must be positive")
    return float(l_value / (2.0 * g) * (x0 @ x0))


def applicability(l_value, g, off_pattern, r):
    """Strict test sqrt(l g eps) < l / 2 with eps = ||L^T R L||_2 / l.

    Returns ``(applicable, eps)``.
    """
    if l_value <= 0:
        raise ValueError("l must be positive")
    off_pattern = as_matrix(off_pattern, "off_pattern")
    r = as_matrix(r, "r")
    eps = float(np.linalg.norm(off_pattern.T @ r @ off_pattern, 2) / l_value)
    return bool(np.sqrt(l_value * g * eps) < l_value / 2.0), eps


@dataclass(frozen=True)
class BoundReport:
    g: float
    l_value: float
    epsilon: float
    applicable: bool
    bound: float
    measured_gap: float = None

    def to_dict(self):
        return {
            "g": self.g,
            "l_value": self.l_value,
            "epsilon": self.epsilon,
            "applicable": self.applicable,
            "bound": self.bound,
            "measured_gap": self.measured_gap,
        }


def bound_report(problem, off_pattern, x0, structured_p=None, dense_p=None,
                 closed_loop_p=None):
    """Assemble the full certificate; measures the gap when both values given."""
    a, b = problem.system.a, problem.system.b
    r = problem.weights.r
    g, l_value = bound_constants(a, b, r, closed_loop_p)
    applicable, eps = applicability(l_value, g, off_pattern, r)
    bound = suboptimality_bound(x0, g, l_value)
    gap = None
    if structured_p is not None and dense_p is not None:
        x0 = as_vector(x0, "x0")
        gap = float(abs(x0 @ as_matrix(structured_p, "structured_p") @ x0
                        - x0 @ as_matrix(dense_p, "dense_p") @ x0))
    return BoundReport(g=g, l_value=l_value, epsilon=eps, applicable=applicable,
                       bound=bound, measured_gap=gap)
