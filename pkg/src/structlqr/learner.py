"""Gain learning from trajectory data with unknown state matrix.

Each outer sweep solves one least-squares problem assembled from windowed
trajectory statistics: quadratic state increments, and window integrals of
the state crossed with itself, with the probing input, and with the measured
disturbance. The regressor blocks are

    Theta_k = [ S_xx + 2 beta T_xx |
                -2 T_xx (I (x) K_k^T R) - 2 T_xu0 (I (x) R) |
                -2 T_xzeta ]

acting on [vec(P_k); vec(K_{k+1} + F_k); vec(B^T P_k)] with right-hand side
-T_xx vec(Q + K_k^T R K_k). Nothing here reads the state matrix; the input
matrix B, the weights, the shift beta, and the sparsity pattern are the only
model knowledge used.

Two parametrizations are provided. The "reduced" mode substitutes
vec(B^T P) = (I (x) B^T) vec(P), folds the disturbance block into the value
block, and parametrizes P by its packed upper triangle; it stays solvable
when the recorded disturbance is identically zero. The "paper-faithful" mode
keeps the three dense unknown blocks and symmetrizes P afterwards.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import (AsymmetricP, AvailabilityViolated, NoConvergence,
                     NotStabilizing, RankDeficient, WindowOutOfRange)
from .linalg import duplication_matrix, sym_unpack, unvec, vec
from .synthesis import SynthesisResult, complement_part, project_structure
from .validation import as_matrix

log = logging.getLogger("structlqr")

RANK_THRESHOLD_FACTOR = 1e3
ASYM_RTOL = 1e-6
DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class LearnerConfig:
    varsigma: float = 1e-6
    max_iters: int = 30
    ls_mode: str = "reduced"
    symmetric_p: bool = False   # optional packed-P variant of paper-faithful mode

    def __post_init__(self):
        if self.varsigma <= 0:
            raise ValueError("varsigma must be positive")
        if self.ls_mode not in ("reduced", "paper-faithful"):
            raise ValueError(f"unknown ls_mode {self.ls_mode!r}")


@dataclass(frozen=True)
class DataMatrices:
    """Windowed regression blocks plus the window geometry that built them."""

    s_xx: np.ndarray      # (l, n^2) increments of x (x) x over each window
    t_xx: np.ndarray      # (l, n^2) window integrals of x (x) x
    t_xu0: np.ndarray     # (l, n m) window integrals of x (x) u0
    t_xzeta: np.ndarray   # (l, n m) window integrals of x (x) zeta
    window_length: float
    sample_times: np.ndarray

    @property
    def rows(self):
        return self.s_xx.shape[0]

    @property
    def n(self):
        return int(round(np.sqrt(self.s_xx.shape[1])))

    @property
    def m(self):
        return self.t_xu0.shape[1] // self.n

    def concatenated(self):
        return np.hstack([self.t_xx, self.t_xu0, self.t_xzeta])


def window_starts(trajectory, count, window_steps=1, layout="contiguous",
                  spacing_steps=None):
    """Node indices of window starts for the requested layout.

    "contiguous" tiles windows back to back (spacing defaults to the window
    length); "spread" distributes them evenly over the whole record.
    """
    steps = len(trajectory.t) - 1
    last = steps - window_steps
    if last < 0:
        raise WindowOutOfRange(
            f"window of {window_steps} steps does not fit a {steps}-step record")
    if layout == "contiguous":
        spacing = window_steps if spacing_steps is None else spacing_steps
        starts = np.arange(count) * spacing
        if starts[-1] > last:
            raise WindowOutOfRange(
                f"{count} contiguous windows of {window_steps} steps need "
                f"{starts[-1] + window_steps} steps, record has {steps}")
    elif layout == "spread":
        starts = np.unique(np.round(np.linspace(0, last, count)).astype(int))
        if len(starts) < count:
            raise WindowOutOfRange(
                f"record too short to place {count} distinct windows")
    else:
        raise ValueError(f"unknown layout {layout!r}")
    return starts


def build_data_matrices(trajectory, window_steps=1, start_indices=None,
                        sample_times=None, availability=None):
    """Assemble the four regression blocks by trapezoidal window quadrature.

    Windows are ``[t_i, t_i + window_steps * dt]`` over trajectory nodes.
    ``sample_times`` (seconds, must sit on the node grid) may be given
    instead of ``start_indices``. When ``availability`` intervals are set,
    every window must fall inside one of them; disturbance records outside
    those intervals are treated as unusable.
    """
    dt = trajectory.dt
    steps = len(trajectory.t) - 1
    if window_steps < 1:
        raise ValueError("window_steps must be >= 1")
    if sample_times is not None:
        if start_indices is not None:
            raise ValueError("give either start_indices or sample_times, not both")
        times = np.asarray(sample_times, dtype=float)
        idx = np.round((times - trajectory.t[0]) / dt)
        if np.max(np.abs(times - (trajectory.t[0] + idx * dt))) > 1e-9 * max(1.0, dt):
            raise ValueError("sample_times must lie on the trajectory node grid")
        start_indices = idx.astype(int)
    if start_indices is None:
        raise ValueError("start_indices or sample_times is required")
    starts = np.asarray(start_indices, dtype=int)
    if np.any(starts < 0) or np.any(starts + window_steps > steps):
        raise WindowOutOfRange(
            "every window [t_i, t_i + T] must lie inside the trajectory")
    if availability is not None:
        for s in starts:
            t_lo = trajectory.t[s]
            t_hi = trajectory.t[s + window_steps]
            if not any(lo - 1e-12 <= t_lo and t_hi <= hi + 1e-12
                       for (lo, hi) in availability):
                raise AvailabilityViolated(
                    f"window [{t_lo:.6g}, {t_hi:.6g}] is outside every "
                    "disturbance-availability interval")

    x, u0, z = trajectory.x, trajectory.u0, trajectory.zeta
    kxx = np.einsum("ti,tj->tij", x, x).reshape(len(x), -1)
    kxu = np.einsum("ti,tj->tij", x, u0).reshape(len(x), -1)
    kxz = np.einsum("ti,tj->tij", x, z).reshape(len(x), -1)

    def window_integrals(rows):
        # cumulative trapezoid: window integral = cum[b] - cum[a], exact
        # relative to per-window trapezoid sums
        seg = 0.5 * dt * (rows[1:] + rows[:-1])
        cum = np.vstack([np.zeros((1, rows.shape[1])), np.cumsum(seg, axis=0)])
        return cum[starts + window_steps] - cum[starts]

    s_xx = kxx[starts + window_steps] - kxx[starts]
    return DataMatrices(
        s_xx=s_xx,
        t_xx=window_integrals(kxx),
        t_xu0=window_integrals(kxu),
        t_xzeta=window_integrals(kxz),
        window_length=window_steps * dt,
        sample_times=trajectory.t[starts],
    )


@dataclass(frozen=True)
class RankReport:
    observed: int
    required: int
    passed: bool
    threshold: float

    def to_dict(self):
        return {"observed": self.observed, "required": self.required,
                "passed": self.passed, "threshold": self.threshold}


def rank_check(data, pattern):
    """Numerical rank of [T_xx T_xu0 T_xzeta] against n(n+1)/2 + nnz + n m."""
    concat = data.concatenated()
    n, m = data.n, data.m
    required = n * (n + 1) // 2 + pattern.nnz + n * m
    sv = np.linalg.svd(concat, compute_uv=False)
    threshold = sv[0] * max(concat.shape) * np.finfo(float).eps * RANK_THRESHOLD_FACTOR
    observed = int(np.sum(sv > threshold))
    return RankReport(observed=observed, required=required,
                      passed=bool(observed >= required), threshold=float(threshold))


def _ls_rcond(shape):
    return max(shape) * np.finfo(float).eps * RANK_THRESHOLD_FACTOR


def ls_policy_step(data, gain, q, r, beta, b, pattern, config=None):
    """One least-squares policy evaluation plus structured policy update.

    Returns ``(P, next_gain, residual)`` with the next gain exactly zero on
    forbidden entries. Raises RankDeficient when the chosen parametrization
    is not identifiable from the data, and AsymmetricP when the dense-mode
    estimate needs a symmetrization correction beyond ``ASYM_RTOL``.
    """
    config = config or LearnerConfig()
    q = as_matrix(q, "q")
    r = as_matrix(r, "r")
    b = as_matrix(b, "b")
    gain = as_matrix(gain, "gain")
    n, m = data.n, data.m
    eye = np.eye(n)
    qbar = q + gain.T @ r @ gain
    phi = -data.t_xx @ vec(qbar)
    gain_block = (-2.0 * data.t_xx @ np.kron(eye, gain.T @ r)
                  - 2.0 * data.t_xu0 @ np.kron(eye, r))
    n_sym = n * (n + 1) // 2

    if config.ls_mode == "reduced":
        dup = duplication_matrix(n)
        p_block = (data.s_xx + 2.0 * beta * data.t_xx
                   - 2.0 * data.t_xzeta @ np.kron(eye, b.T)) @ dup
        theta = np.hstack([p_block, gain_block])
        sol, _, ls_rank, _ = np.linalg.lstsq(theta, phi, rcond=_ls_rcond(theta.shape))
        if ls_rank < theta.shape[1]:
            raise RankDeficient(
                f"reduced regressor rank {ls_rank} < {theta.shape[1]} unknowns; "
                "the exploration data does not identify the value matrix")
        p = sym_unpack(sol[:n_sym], n)
        g = unvec(sol[n_sym:], m, n)
    else:
        zeta_scale = np.linalg.norm(data.t_xzeta)
        ref_scale = np.linalg.norm(data.t_xx)
        if zeta_scale <= np.finfo(float).eps * RANK_THRESHOLD_FACTOR * max(ref_scale, 1.0):
            raise RankDeficient(
                "disturbance block is numerically zero, so vec(B^T P) is "
                "undetermined in paper-faithful mode; use the reduced mode")
        p_cols = data.s_xx + 2.0 * beta * data.t_xx
        if config.symmetric_p:
            p_cols = p_cols @ duplication_matrix(n)
        theta = np.hstack([p_cols, gain_block, -2.0 * data.t_xzeta])
        sol, _, _, _ = np.linalg.lstsq(theta, phi, rcond=_ls_rcond(theta.shape))
        if config.symmetric_p:
            p = sym_unpack(sol[:n_sym], n)
            offset = n_sym
        else:
            p_hat = unvec(sol[:n * n], n, n)
            correction = 0.5 * np.linalg.norm(p_hat - p_hat.T, "fro")
            p = 0.5 * (p_hat + p_hat.T)
            if correction > ASYM_RTOL * max(np.linalg.norm(p, "fro"), 1e-30):
                raise AsymmetricP(
                    f"symmetrization moved P by {correction:.3e}; the data is "
                    "inconsistent with a symmetric value matrix")
            offset = n * n
        g = unvec(sol[offset:offset + n * m], m, n)

    residual = float(np.linalg.norm(theta @ sol - phi))
    f = complement_part(np.linalg.solve(r, b.T @ p), pattern)
    next_gain = project_structure(g - f, pattern)
    return p, next_gain, residual


@dataclass(frozen=True)
class LearnerDiagnostics:
    changes: tuple
    residuals: tuple
    rank: RankReport
    mode: str
    windows: int

    def to_dict(self):
        return {"changes": list(self.changes), "residuals": list(self.residuals),
                "rank": self.rank.to_dict(), "mode": self.mode, "windows": self.windows}


def rsrl(problem, data, initial_gain=None, config=None):
    """Iterate the least-squares policy step on recorded data.

    ``problem`` supplies B, the weights, the shift, and the pattern; its
    state matrix is never read, matching the unknown-A setting. ``data`` is
    a DataMatrices bundle (build one from a Trajectory first). The initial
    gain must stabilize the shifted loop; with a stable open loop zero is
    fine.

    Returns ``(SynthesisResult, LearnerDiagnostics)``. The result's residual
    field holds the final least-squares residual; certifying the value
    matrix against the modified Riccati equation needs the true system and
    is left to the caller (see ``verify_modified_are``).
    """
    config = config or LearnerConfig()
    b = problem.system.b
    q, r = problem.weights.q, problem.weights.r
    beta = problem.robustness.beta
    pattern = problem.pattern
    n, m = problem.system.n, problem.system.m

    gain = np.zeros((m, n)) if initial_gain is None else as_matrix(initial_gain, "initial_gain")
    rank = rank_check(data, pattern)
    if not rank.passed:
        log.warning("rank bookkeeping: observed %d < required %d "
                    "(the solve proceeds if the parametrization is identifiable)",
                    rank.observed, rank.required)

    changes = []
    residuals = []
    p_prev = None
    p = None
    for iteration in range(1, config.max_iters + 1):
        p, gain, residual = ls_policy_step(data, gain, q, r, beta, b, pattern,
                                           config=config)
        residuals.append(residual)
        if not np.all(np.isfinite(p)) or np.linalg.norm(p, "fro") > DIVERGENCE_NORM:
            raise NotStabilizing(
                "value iterates diverged; the initial gain likely fails to "
                "stabilize the system that produced this data")
        if np.min(np.linalg.eigvalsh(0.5 * (p + p.T))) <= 0:
            # every legitimate iterate is a positive definite value matrix;
            # losing that is a model-free sign of a non-stabilizing start
            raise NotStabilizing(
                "estimated value matrix is not positive definite; the initial "
                "gain likely fails to stabilize the system behind this data")
        if p_prev is not None:
            change = float(np.linalg.norm(p - p_prev, "fro"))
            changes.append(change)
            if change < config.varsigma:
                break
        p_prev = p
    else:
        raise NoConvergence(
            f"no convergence in {config.max_iters} sweeps; last change "
            f"{changes[-1] if changes else float('nan'):.3e}",
            last_change=changes[-1] if changes else None)

    phi = np.linalg.solve(r, b.T @ p)
    result = SynthesisResult(
        value_matrix=p,
        gain=project_structure(phi, pattern),
        off_pattern=complement_part(phi, pattern),
        iterations=iteration,
        residual=residuals[-1],
        history=tuple(changes),
    )
    diagnostics = LearnerDiagnostics(
        changes=tuple(changes), residuals=tuple(residuals), rank=rank,
        mode=config.ls_mode, windows=data.rows)
    return result, diagnostics
