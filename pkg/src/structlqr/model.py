"""Problem data model: systems, gain patterns, weights, robustness parameters.

All types are frozen after construction and validate their own invariants,
so a `SynthesisProblem` that exists is dimensionally coherent. Whether it is
also well posed (stabilizable, observable, above the robustness floor) is
the job of `validate_problem`, which reports rather than raises: downstream
solvers refuse problems whose report failed.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import spectral_abscissa
from .validation import as_matrix, check_binary, check_spd, check_square


@dataclass(frozen=True)
class LtiSystem:
    """Continuous-time pair (A, B) for x' = A x + B (u + zeta)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = check_square(as_matrix(self.a, "a"), "a")
        b = as_matrix(self.b, "b")
        if b.shape[0] != a.shape[0]:
            raise ValueError(f"b has {b.shape[0]} rows but a is {a.shape[0]}x{a.shape[0]}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def m(self):
        return self.b.shape[1]


@dataclass(frozen=True)
class StructurePattern:
    """Binary indicator of permitted feedback-gain entries (m x n)."""

    indicator: np.ndarray

    def __post_init__(self):
        ind = check_binary(as_matrix(self.indicator, "indicator"))
        if ind.sum() < 1:
            raise ValueError("indicator must permit at least one gain entry")
        object.__setattr__(self, "indicator", ind)

    @property
    def complement(self):
        return 1.0 - self.indicator

    @property
    def nnz(self):
        return int(self.indicator.sum())

    @property
    def shape(self):
        return self.indicator.shape

    def zero_rows(self):
        """Indices of actuators whose entire gain row is forbidden."""
        return [i for i in range(self.shape[0]) if self.indicator[i].sum() == 0]

    @classmethod
    def dense(cls, m, n):
        return cls(np.ones((m, n)))

    @classmethod
    def from_zeroed_entries(cls, m, n, entries, one_based=True):
        """Pattern with ones everywhere except the listed (row, col) entries."""
        ind = np.ones((m, n))
        off = 1 if one_based else 0
        for (i, j) in entries:
            ind[i - off, j - off] = 0.0
        return cls(ind)


@dataclass(frozen=True)
class LqrWeights:
    """Symmetric positive definite state and input weights."""

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", check_spd(as_matrix(self.q, "q"), "q"))
        object.__setattr__(self, "r", check_spd(as_matrix(self.r, "r"), "r"))


@dataclass(frozen=True)
class RobustnessParams:
    """Disturbance bound alpha, stability margin beta, gain cap d."""

    alpha: float = 0.0
    beta: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "d"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, value)

    @property
    def robust(self):
        """Whether a disturbance rejection guarantee is being requested."""
        return self.alpha > 0.0 or self.beta > 0.0


@dataclass(frozen=True)
class SynthesisProblem:
    """A complete structured-gain design instance."""

    system: LtiSystem
    pattern: StructurePattern
    weights: LqrWeights
    robustness: RobustnessParams = field(default_factory=RobustnessParams)

    def __post_init__(self):
        n, m = self.system.n, self.system.m
        if self.pattern.shape != (m, n):
            raise ValueError(
                f"pattern shape {self.pattern.shape} does not match gain shape ({m}, {n})")
        if self.weights.q.shape != (n, n):
            raise ValueError(f"q shape {self.weights.q.shape} != ({n}, {n})")
        if self.weights.r.shape != (m, m):
            raise ValueError(f"r shape {self.weights.r.shape} != ({m}, {m})")


def q_floor(alpha, d, r):
    """Minimum uniform Q scaling for the robust stability guarantee.

    Returns ``alpha^2 * lmax(R)^2 / lmin(R) + 2 * alpha * d``; the caller
    checks that Q - floor * I is positive semidefinite.
    """
    r = check_spd(as_matrix(r, "r"), "r")
    eigs = np.linalg.eigvalsh(r)
    alpha = float(alpha)
    d = float(d)
    return alpha**2 * eigs[-1] ** 2 / eigs[0] + 2.0 * alpha * d


@dataclass(frozen=True)
class ValidationReport:
    """Pass/fail flags from `validate_problem`; carries no exceptions."""

    stabilizable: bool
    observable: bool
    q_positive_definite: bool
    r_positive_definite: bool
    floor_value: float
    floor_satisfied: bool
    pattern_nonempty: bool
    pattern_zero_rows: tuple
    pbh_checks: tuple       # (eigenvalue, full_rank) per tested eigenvalue
    notes: tuple = ()

    @property
    def passed(self):
        """Everything a solver strictly requires (the floor only warns)."""
        return (self.stabilizable and self.observable and
                self.q_positive_definite and self.r_positive_definite and
                self.pattern_nonempty)

    def to_dict(self):
        return {
            "stabilizable": self.stabilizable,
            "observable": self.observable,
            "q_positive_definite": self.q_positive_definite,
            "r_positive_definite": self.r_positive_definite,
            "floor_value": self.floor_value,
            "floor_satisfied": self.floor_satisfied,
            "pattern_nonempty": self.pattern_nonempty,
            "pattern_zero_rows": list(self.pattern_zero_rows),
            "pbh_checks": [[z.real, z.imag, ok] for (z, ok) in self.pbh_checks],
            "passed": self.passed,
            "notes": list(self.notes),
        }


PBH_REAL_PART_CUTOFF = -1e-9


def validate_problem(problem):
    """Check stabilizability, observability, definiteness, and the Q floor.

    The PBH test runs only at eigenvalues of A with real part above a small
    negative cutoff; strictly stable modes cannot break stabilizability.
    """
    a, b = problem.system.a, problem.system.b
    n = problem.system.n
    q, r = problem.weights.q, problem.weights.r

    eigs = np.linalg.eigvals(a)
    pbh_checks = []
    for lam in eigs:
        if lam.real < PBH_REAL_PART_CUTOFF:
            continue
        pencil = np.hstack([a - lam * np.eye(n), b]).astype(complex)
        pbh_checks.append((complex(lam), bool(np.linalg.matrix_rank(pencil) == n)))
    stabilizable = all(ok for (_, ok) in pbh_checks)

    q_eigs = np.linalg.eigvalsh(q)
    q_pd = bool(q_eigs[0] > 0)
    r_pd = bool(np.linalg.eigvalsh(r)[0] > 0)

    observable = False
    if q_pd:
        evals, evecs = np.linalg.eigh(q)
        q_sqrt = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
        blocks = [q_sqrt]
        for _ in range(n - 1):
            blocks.append(blocks[-1] @ a)
        observable = bool(np.linalg.matrix_rank(np.vstack(blocks)) == n)

    floor = q_floor(problem.robustness.alpha, problem.robustness.d, r) if r_pd else np.inf
    floor_ok = bool(q_eigs[0] >= floor - 1e-12) if np.isfinite(floor) else False

    zero_rows = tuple(problem.pattern.zero_rows())
    notes = []
    if zero_rows:
        notes.append(
            f"pattern rows {list(zero_rows)} are all-zero; those actuators stay "
            "inactive, which may break stabilizability of the closed loop")
    if problem.robustness.robust and not floor_ok:
        notes.append(
            f"q is below the robustness floor {floor:.6g}; the disturbance "
            "rejection guarantee does not apply")
    if spectral_abscissa(a) >= 0:
        notes.append("open loop is not Hurwitz; an initial stabilizing gain is needed")

    return ValidationReport(
        stabilizable=stabilizable,
        observable=observable,
        q_positive_definite=q_pd,
        r_positive_definite=r_pd,
        floor_value=float(floor),
        floor_satisfied=floor_ok,
        pattern_nonempty=problem.pattern.nnz >= 1,
        pattern_zero_rows=zero_rows,
        pbh_checks=tuple(pbh_checks),
        notes=tuple(notes),
    )
