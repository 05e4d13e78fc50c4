"""Fixed-step simulation, cost quadrature, and the decay-envelope check.

Integration is the classical 4-stage Runge-Kutta scheme at a fixed step so
that the learner's window quadrature can reuse node values directly.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import Diverged, NotHurwitz, NotSettled, ShapeMismatch
from .linalg import spectral_abscissa
from .validation import as_matrix, as_vector

BLOWUP_THRESHOLD = 1e9
DEFAULT_FREQ_RANGE = (0.5, 25.0)
ADMISSIBILITY_SLACK = 1e-12
CSV_FORMAT = "%.15g"


@dataclass(frozen=True)
class ExplorationSignal:
    """Per-channel sums of sinusoids, evaluated as u0(t).

    ``terms[c]`` is a list of (amplitude, angular frequency rad/s, phase rad)
    triples for channel c.
    """

    terms: tuple

    def __post_init__(self):
        frozen = tuple(tuple((float(a), float(w), float(p)) for (a, w, p) in channel)
                       for channel in self.terms)
        object.__setattr__(self, "terms", frozen)
        # dense (channels, max_terms) coefficient arrays so evaluation is a
        # single vectorized expression; absent terms get zero amplitude
        width = max((len(ch) for ch in frozen), default=0)
        amps = np.zeros((len(frozen), max(width, 1)))
        freqs = np.zeros_like(amps)
        phases = np.zeros_like(amps)
        for c, channel in enumerate(frozen):
            for j, (a, w, p) in enumerate(channel):
                amps[c, j] = a
                freqs[c, j] = w
                phases[c, j] = p
        object.__setattr__(self, "_amps", amps)
        object.__setattr__(self, "_freqs", freqs)
        object.__setattr__(self, "_phases", phases)

    @property
    def channels(self):
        return len(self.terms)

    @property
    def amplitude_bound(self):
        return max((sum(abs(a) for (a, _, _) in ch) for ch in self.terms), default=0.0)

    def __call__(self, t):
        if self.channels == 0:
            return np.zeros(0)
        return np.sum(self._amps * np.sin(self._freqs * t + self._phases), axis=1)

    @classmethod
    def zero(cls, channels):
        return cls(tuple(() for _ in range(channels)))

    @classmethod
    def seeded(cls, channels, seed, n_terms=10, amplitude=0.5,
               freq_range=DEFAULT_FREQ_RANGE):
        """Deterministic signal bank: distinct frequencies across all channels."""
        rng = np.random.default_rng(seed)
        lo, hi = freq_range
        freqs = rng.uniform(lo, hi, size=(channels, n_terms))
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(channels, n_terms))
        terms = tuple(
            tuple((amplitude, float(freqs[c, j]), float(phases[c, j]))
                  for j in range(n_terms))
            for c in range(channels))
        return cls(terms)


@dataclass(frozen=True)
class ExoModel:
    """Matched state-proportional disturbance with declared bound alpha.

    kinds: "none"; "scalar-sinusoid" gives zeta = c sin(t) x (square systems);
    "schedule" evaluates a caller-supplied l(t) with zeta = l(t) x.
    """

    kind: str = "none"
    alpha: float = 0.0
    c: float = 0.0
    schedule: object = None

    def __post_init__(self):
        if self.kind not in ("none", "scalar-sinusoid", "schedule"):
            raise ValueError(f"unknown exogenous model kind {self.kind!r}")
        if self.kind == "scalar-sinusoid" and abs(self.c) > self.alpha:
            raise ValueError(
                f"|c| = {abs(self.c)} exceeds the declared bound alpha = {self.alpha}")
        if self.kind == "schedule" and self.schedule is None:
            raise ValueError("schedule kind requires a schedule callable")

    def __call__(self, x, t, m=None):
        x = np.asarray(x, dtype=float)
        if self.kind == "none":
            return np.zeros(len(x) if m is None else m)
        if self.kind == "scalar-sinusoid":
            if m is not None and m != len(x):
                raise ShapeMismatch(
                    "scalar-sinusoid disturbance needs as many input channels "
                    f"as states (m={m}, n={len(x)}); use a schedule instead")
            zeta = self.c * np.sin(t) * x
        else:
            zeta = np.asarray(self.schedule(t), dtype=float) @ x
        norm_x = np.linalg.norm(x)
        if np.linalg.norm(zeta) > self.alpha * norm_x + ADMISSIBILITY_SLACK:
            raise ValueError(
                f"disturbance at t={t:.6g} violates ||zeta|| <= alpha ||x||")
        return zeta


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled records (t, x, u0, zeta, u_fb)."""

    dt: float
    t: np.ndarray
    x: np.ndarray       # (steps+1, n)
    u0: np.ndarray      # (steps+1, m)
    zeta: np.ndarray    # (steps+1, m)
    u_fb: np.ndarray    # (steps+1, m)

    def __post_init__(self):
        t = as_vector(self.t, "t")
        if len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("t must be strictly increasing with >= 2 samples")
        spacing = np.diff(t)
        if np.max(np.abs(spacing - self.dt)) > 1e-9 * max(1.0, self.dt):
            raise ValueError("samples must be uniformly spaced at dt")
        for name in ("x", "u0", "zeta", "u_fb"):
            arr = as_matrix(getattr(self, name), name)
            if arr.shape[0] != len(t):
                raise ShapeMismatch(f"{name} has {arr.shape[0]} rows, expected {len(t)}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "t", t)

    @property
    def n(self):
        return self.x.shape[1]

    @property
    def m(self):
        return self.u0.shape[1]

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def to_csv(self, path):
        n, m = self.n, self.m
        header = ",".join(
            ["t"]
            + [f"x{i+1}" for i in range(n)]
            + [f"u0{j+1}" for j in range(m)]
            + [f"zeta{j+1}" for j in range(m)]
            + [f"ufb{j+1}" for j in range(m)])
        data = np.hstack([self.t[:, None], self.x, self.u0, self.zeta, self.u_fb])
        np.savetxt(path, data, fmt=CSV_FORMAT, delimiter=",", header=header, comments="")

    @classmethod
    def from_csv(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            names = fh.readline().strip().split(",")
        n = sum(1 for c in names if c.startswith("x"))
        m = sum(1 for c in names if c.startswith("u0"))
        expected = 1 + n + 3 * m
        if len(names) != expected or names[0] != "t":
            raise ValueError(f"unrecognized trajectory header: {names}")
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        t = data[:, 0]
        dt = float(t[1] - t[0])
        return cls(dt=dt, t=t,
                   x=data[:, 1:1 + n],
                   u0=data[:, 1 + n:1 + n + m],
                   zeta=data[:, 1 + n + m:1 + n + 2 * m],
                   u_fb=data[:, 1 + n + 2 * m:])


def simulate(system, gain=None, exploration=None, exo=None, x0=None,
             t_end=1.0, dt=0.01, blowup=BLOWUP_THRESHOLD):
    """Integrate x' = (A - B K) x + B (u0(t) + zeta(x, t)) and sample at nodes.

    ``gain=None`` runs the open loop. Raises Diverged once ||x|| passes the
    blow-up threshold, which catches unstable exploration early.
    """
    a, b = system.a, system.b
    n, m = system.n, system.m
    if dt <= 0 or t_end < dt:
        raise ValueError("need dt > 0 and t_end >= dt")
    k = np.zeros((m, n)) if gain is None else as_matrix(gain, "gain")
    if k.shape != (m, n):
        raise ShapeMismatch(f"gain shape {k.shape} != ({m}, {n})")
    u0 = exploration if exploration is not None else ExplorationSignal.zero(m)
    zeta = exo if exo is not None else ExoModel()
    x0 = np.zeros(n) if x0 is None else as_vector(x0, "x0")
    if len(x0) != n:
        raise ShapeMismatch(f"x0 length {len(x0)} != {n}")

    a_cl = a - b @ k
    steps = int(round(t_end / dt))

    def rhs(t, x):
        return a_cl @ x + b @ (u0(t) + zeta(x, t, m=m))

    ts = np.arange(steps + 1) * dt
    xs = np.empty((steps + 1, n))
    u0s = np.empty((steps + 1, m))
    zs = np.empty((steps + 1, m))
    x = x0.copy()
    for i in range(steps + 1):
        t = ts[i]
        if np.linalg.norm(x) > blowup:
            raise Diverged(f"state norm passed {blowup:g} at t = {t:.6g}")
        xs[i] = x
        u0s[i] = u0(t)
        zs[i] = zeta(x, t, m=m)
        if i < steps:
            k1 = rhs(t, x)
            k2 = rhs(t + dt / 2, x + dt / 2 * k1)
            k3 = rhs(t + dt / 2, x + dt / 2 * k2)
            k4 = rhs(t + dt, x + dt * k3)
            x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    ufb = -(k @ xs.T).T if gain is not None else np.zeros((steps + 1, m))
    return Trajectory(dt=dt, t=ts, x=xs, u0=u0s, zeta=zs, u_fb=ufb)


@dataclass(frozen=True)
class CostReport:
    j_quadrature: float
    settled_ratio: float
    j_analytic: float = None
    rel_difference: float = None

    def to_dict(self):
        return {"j_quadrature": self.j_quadrature, "settled_ratio": self.settled_ratio,
                "j_analytic": self.j_analytic, "rel_difference": self.rel_difference}


def evaluate_cost(trajectory, q, r, gain, value_matrix=None,
                  settle_rtol=1e-6):
    """Trapezoidal quadrature of the quadratic cost along a closed-loop run.

    The feedback u = -K x is recomputed from the sampled states. Raises
    NotSettled unless the terminal state norm is below ``settle_rtol`` times
    the initial one. When a value matrix is supplied the analytic cost
    x0^T P x0 and the relative difference are reported alongside.
    """
    q = as_matrix(q, "q")
    r = as_matrix(r, "r")
    gain = as_matrix(gain, "gain")
    xs = trajectory.x
    norm0 = np.linalg.norm(xs[0])
    ratio = float(np.linalg.norm(xs[-1]) / norm0) if norm0 > 0 else 0.0
    if norm0 > 0 and ratio > settle_rtol:
        raise NotSettled(
            f"terminal norm ratio {ratio:.3e} exceeds {settle_rtol:.1e}; "
            "simulate longer before integrating the cost")
    us = -(gain @ xs.T).T
    integrand = (np.einsum("ti,ij,tj->t", xs, q, xs)
                 + np.einsum("ti,ij,tj->t", us, r, us))
    j = float(np.trapezoid(integrand, dx=trajectory.dt))
    analytic = None
    rel = None
    if value_matrix is not None:
        p = as_matrix(value_matrix, "value_matrix")
        analytic = float(xs[0] @ p @ xs[0])
        rel = abs(j - analytic) / abs(analytic) if analytic != 0 else abs(j)
    return CostReport(j_quadrature=j, settled_ratio=ratio,
                      j_analytic=analytic, rel_difference=rel)


@dataclass(frozen=True)
class IssReport:
    k: float
    decay_rate: float
    holds: bool
    min_margin: float

    def to_dict(self):
        return {"k": self.k, "decay_rate": self.decay_rate, "holds": self.holds,
                "min_margin": self.min_margin}


def iss_envelope(a_cl, b, trajectory, rate_margin=1e-3):
    """Check every sample against the disturbance-to-state envelope.

    With lambda just inside the closed-loop decay rate and
    k = max_t ||e^{A_cl t}||_2 e^{lambda t} over the trajectory's grid, each
    sample must satisfy

        ||x(t)|| <= k e^{-lambda (t - t0)} ||x(t0)||
                    + (k ||B||_2 / lambda) sup_{tau <= t} ||zeta(tau)||.
    """
    a_cl = as_matrix(a_cl, "a_cl")
    b = as_matrix(b, "b")
    sa = spectral_abscissa(a_cl)
    if sa >= 0:
        raise NotHurwitz(f"closed loop is not Hurwitz (abscissa {sa:.3e})")
    lam = -sa - rate_margin
    ts = trajectory.t - trajectory.t[0]
    step = expm(a_cl * trajectory.dt)
    power = np.eye(a_cl.shape[0])
    k_const = 0.0
    for t in ts:
        k_const = max(k_const, np.linalg.norm(power, 2) * np.exp(lam * t))
        power = power @ step
    norms = np.linalg.norm(trajectory.x, axis=1)
    zeta_sup = np.maximum.accumulate(np.linalg.norm(trajectory.zeta, axis=1))
    envelope = (k_const * np.exp(-lam * ts) * norms[0]
                + k_const * np.linalg.norm(b, 2) / lam * zeta_sup)
    margin = float(np.min(envelope - norms))
    return IssReport(k=float(k_const), decay_rate=float(lam),
                     holds=bool(margin >= 0.0), min_margin=margin)
