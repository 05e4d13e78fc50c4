"""Model-based structured robust LQR synthesis.

The gain is computed by a modified policy iteration: each sweep solves the
shifted closed-loop Lyapunov equation (policy evaluation) and then projects
the unconstrained update onto the permitted sparsity pattern (policy
improvement). At the fixed point the value matrix satisfies the modified
Riccati equation

    (A + beta I)^T P + P (A + beta I) - P B R^-1 B^T P + Q + L^T R L = 0

with L the forbidden-entry part of R^-1 B^T P, and K = R^-1 B^T P - L is a
stabilizing gain that is exactly zero on forbidden entries.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import FloorViolated, NoConvergence, NotStabilizing, ShapeMismatch
from .linalg import solve_lyapunov, spectral_abscissa
from .model import SynthesisProblem, q_floor
from .validation import as_matrix, check_symmetric

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 100
ARE_RESIDUAL_RTOL = 1e-8


def project_structure(m, pattern):
    """Zero the forbidden entries of a gain-shaped matrix.

    Multiplication by the binary indicator gives exact zeros at forbidden
    positions, never rounded small values.
    """
    m = as_matrix(m, "m")
    if m.shape != pattern.shape:
        raise ShapeMismatch(f"matrix {m.shape} vs pattern {pattern.shape}")
    return m * pattern.indicator


def complement_part(m, pattern):
    """The part of a matrix living on forbidden entries; dual of project_structure."""
    m = as_matrix(m, "m")
    if m.shape != pattern.shape:
        raise ShapeMismatch(f"matrix {m.shape} vs pattern {pattern.shape}")
    return m * pattern.complement


@dataclass(frozen=True)
class SynthesisResult:
    """Converged value matrix and structured gain split.

    Invariants: ``gain * complement(pattern) == 0`` exactly, and
    ``gain + off_pattern == R^-1 B^T value_matrix``.
    """

    value_matrix: np.ndarray   # P
    gain: np.ndarray           # K, exact zeros off pattern
    off_pattern: np.ndarray    # L
    iterations: int
    residual: float
    history: tuple             # ||P_k - P_{k-1}||_F per sweep

    def to_dict(self):
        return {
            "value_matrix": self.value_matrix.tolist(),
            "gain": self.gain.tolist(),
            "off_pattern": self.off_pattern.tolist(),
            "iterations": self.iterations,
            "residual": self.residual,
            "history": list(self.history),
        }


def stabilizing_gain(a, b, margin=1.0):
    """Lyapunov-based pre-stabilizer: K with A - B K Hurwitz.

    Solves (A + g I) W + W (A + g I)^T = 2 B B^T with g past the spectral
    radius and returns K = B^T W^-1, which shifts the whole spectrum left of
    -g. Requires a controllable pair; raises NotStabilizing otherwise.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    gamma = margin + max(0.0, -float(np.min(np.linalg.eigvals(a).real)))
    shifted = -(a + gamma * np.eye(a.shape[0])).T
    try:
        w = solve_lyapunov(shifted, 2.0 * b @ b.T)
        if np.min(np.linalg.eigvalsh(w)) <= 0:
            raise NotStabilizing("stabilization Gramian is not positive definite")
        k = np.linalg.solve(w, b).T
    except Exception as exc:
        raise NotStabilizing(
            f"could not construct a stabilizing initial gain: {exc}") from exc
    if spectral_abscissa(a - b @ k) >= 0:
        raise NotStabilizing("pre-stabilizer failed to produce a Hurwitz closed loop")
    return k


def kleinman_step(problem, gain):
    """One policy-evaluation / policy-improvement sweep.

    Returns ``(P, next_gain)`` where P solves
    ``(A - B K + beta I)^T P + P (A - B K + beta I) + Q + K^T R K = 0`` and
    the next gain is the on-pattern part of ``R^-1 B^T P``.
    """
    a, b = problem.system.a, problem.system.b
    q, r = problem.weights.q, problem.weights.r
    beta = problem.robustness.beta
    gain = as_matrix(gain, "gain")
    a_shift = a - b @ gain + beta * np.eye(problem.system.n)
    sa = spectral_abscissa(a_shift)
    if sa >= 0.0:
        raise NotStabilizing(
            f"gain does not stabilize the beta-shifted loop (abscissa {sa:.3e})")
    p = solve_lyapunov(a_shift, q + gain.T @ r @ gain)
    phi = np.linalg.solve(r, b.T @ p)
    return p, project_structure(phi, problem.pattern)


def structured_policy_iteration(problem, initial_gain=None, tol=DEFAULT_TOL,
                                max_iters=DEFAULT_MAX_ITERS):
    """Run the modified policy iteration to convergence.

    Parameters
    ----------
    problem : SynthesisProblem
    initial_gain : optional (m, n) array stabilizing A - B K0 + beta I.
        When omitted, zero is used if A + beta I is already Hurwitz and a
        Lyapunov pre-stabilizer is constructed otherwise.
    tol : Frobenius threshold on ||P_k - P_{k-1}||.
    max_iters : sweep cap; exceeded caps raise NoConvergence.

    Returns
    -------
    SynthesisResult
    """
    if not isinstance(problem, SynthesisProblem):
        raise TypeError("problem must be a SynthesisProblem")
    a, b = problem.system.a, problem.system.b
    q, r = problem.weights.q, problem.weights.r
    beta = problem.robustness.beta

    if problem.robustness.robust:
        floor = q_floor(problem.robustness.alpha, problem.robustness.d, r)
        if np.min(np.linalg.eigvalsh(q)) < floor - 1e-12:
            warnings.warn(
                f"q is below the robustness floor {floor:.6g}; proceeding without "
                "the disturbance rejection guarantee", FloorViolated, stacklevel=2)

    n = problem.system.n
    if initial_gain is None:
        if spectral_abscissa(a + beta * np.eye(n)) < 0.0:
            gain = np.zeros((problem.system.m, n))
        else:
            gain = stabilizing_gain(a + beta * np.eye(n), b)
    else:
        gain = as_matrix(initial_gain, "initial_gain")
        sa = spectral_abscissa(a - b @ gain + beta * np.eye(n))
        if sa >= 0.0:
            raise NotStabilizing(
                f"initial gain leaves the shifted loop unstable (abscissa {sa:.3e})")

    history = []
    p_prev = None
    p = None
    best_change = np.inf
    stagnant = 0
    for iteration in range(1, max_iters + 1):
        try:
            p, gain = kleinman_step(problem, gain)
        except NotStabilizing as exc:
            raise NotStabilizing(
                f"iterate {iteration} lost stabilizability; the structured "
                f"Riccati solution may not exist for this pattern ({exc})") from exc
        if p_prev is not None:
            change = float(np.linalg.norm(p - p_prev, "fro"))
            history.append(change)
            if change < tol:
                break
            # badly scaled problems can floor out above an absolute tol;
            # accept a stagnated iterate only if it already certifies
            if change < best_change:
                best_change = change
                stagnant = 0
            else:
                stagnant += 1
                if stagnant >= 8 and (verify_modified_are(problem, p)
                                      <= ARE_RESIDUAL_RTOL * (1.0 + np.linalg.norm(q, "fro"))):
                    break
        p_prev = p
    else:
        raise NoConvergence(
            f"no convergence in {max_iters} sweeps; last change "
            f"{history[-1] if history else float('nan'):.3e}",
            last_change=history[-1] if history else None)

    phi = np.linalg.solve(r, b.T @ p)
    k_final = project_structure(phi, problem.pattern)
    l_final = complement_part(phi, problem.pattern)
    residual = verify_modified_are(problem, p)
    return SynthesisResult(
        value_matrix=p,
        gain=k_final,
        off_pattern=l_final,
        iterations=iteration,
        residual=residual,
        history=tuple(history),
    )


def verify_modified_are(problem, p):
    """Frobenius residual of the modified Riccati equation at a candidate P.

    The off-pattern term L is recomputed from P itself, so the residual is a
    self-contained certificate for the returned value matrix.
    """
    p = check_symmetric(as_matrix(p, "p"), "p", tol=1e-9)
    a, b = problem.system.a, problem.system.b
    q, r = problem.weights.q, problem.weights.r
    a_shift = a + problem.robustness.beta * np.eye(problem.system.n)
    ell = complement_part(np.linalg.solve(r, b.T @ p), problem.pattern)
    res = (a_shift.T @ p + p @ a_shift
           - p @ b @ np.linalg.solve(r, b.T @ p)
           + q + ell.T @ r @ ell)
    return float(np.linalg.norm(res, "fro"))
