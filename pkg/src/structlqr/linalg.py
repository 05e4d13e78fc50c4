"""Dense numerical primitives: Lyapunov solves, spectra, Kronecker tools.

Everything here is a pure function of its arguments and sized for desk-scale
state dimensions (n up to a few tens), where forming the n^2 x n^2
vectorized operator explicitly is the simplest reliable route.
"""

import numpy as np

from .errors import NotHurwitz, ShapeMismatch, SingularSystem
from .validation import as_matrix, check_square, check_symmetric

LYAP_RESIDUAL_RTOL = 1e-10


def spectral_abscissa(m):
    """Largest real part over the eigenvalues of a square matrix."""
    m = check_square(as_matrix(m, "m"), "m")
    return float(np.max(np.linalg.eigvals(m).real))


def is_hurwitz(m, margin=0.0):
    return spectral_abscissa(m) < -margin


def kron(a, b):
    """Kronecker product with shape/finiteness validation."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    return np.kron(a, b)


def hadamard(a, b):
    """Entrywise product; operands must have equal shapes."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise ShapeMismatch(f"hadamard operands {a.shape} vs {b.shape}")
    return a * b


def vec(m):
    """Column-stacking vectorization, the convention behind vec(AXB) = (B^T (x) A) vec(X)."""
    return np.asarray(m).flatten(order="F")


def unvec(v, rows, cols):
    return np.asarray(v).reshape((rows, cols), order="F")


def lyapunov_operator_matrix(m):
    """Matrix of P -> M^T P + P M acting on vec(P)."""
    m = check_square(as_matrix(m, "m"), "m")
    n = m.shape[0]
    eye = np.eye(n)
    return np.kron(eye, m.T) + np.kron(m.T, eye)


def solve_lyapunov(m, s):
    """Solve M^T P + P M + S = 0 for symmetric P.

    Parameters
    ----------
    m : (n, n) array, must be Hurwitz
    s : (n, n) array, must be symmetric

    Returns
    -------
    (n, n) symmetric array with residual below
    ``LYAP_RESIDUAL_RTOL * (1 + ||S||_F)``.

    Raises
    ------
    NotHurwitz
        If the spectral abscissa of ``m`` is nonnegative.
    SingularSystem
        If the vectorized system cannot be solved to the residual bound.
    """
    m = check_square(as_matrix(m, "m"), "m")
    s = check_symmetric(as_matrix(s, "s"), "s")
    if m.shape != s.shape:
        raise ShapeMismatch(f"m {m.shape} and s {s.shape} must agree")
    sa = spectral_abscissa(m)
    if sa >= 0.0:
        raise NotHurwitz(f"m has spectral abscissa {sa:.3e} >= 0")
    op = lyapunov_operator_matrix(m)
    try:
        p = np.linalg.solve(op, -vec(s))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"vectorized Lyapunov system is singular: {exc}") from exc
    pm = unvec(p, *s.shape)
    pm = 0.5 * (pm + pm.T)
    residual = np.linalg.norm(m.T @ pm + pm @ m + s, "fro")
    bound = LYAP_RESIDUAL_RTOL * (1.0 + np.linalg.norm(s, "fro"))
    if residual > bound:
        raise SingularSystem(
            f"Lyapunov residual {residual:.3e} exceeds bound {bound:.3e}; "
            "the system is too ill-conditioned")
    return pm


def sym_pack(m):
    """Pack a symmetric matrix into its n(n+1)/2 upper-triangle entries."""
    m = check_square(as_matrix(m, "m"), "m")
    iu = np.triu_indices(m.shape[0])
    return m[iu]


def sym_unpack(v, n):
    """Inverse of sym_pack; exact round trip on symmetric input."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != n * (n + 1) // 2:
        raise ShapeMismatch(f"packed length {v.size} != n(n+1)/2 for n={n}")
    out = np.zeros((n, n))
    iu = np.triu_indices(n)
    out[iu] = v
    out[(iu[1], iu[0])] = v
    return out


def duplication_matrix(n):
    """(n^2, n(n+1)/2) matrix mapping packed upper-triangle entries to vec."""
    iu = np.triu_indices(n)
    d = np.zeros((n * n, len(iu[0])))
    for col, (i, j) in enumerate(zip(*iu)):
        d[i + j * n, col] = 1.0
        if i != j:
            d[j + i * n, col] = 1.0
    return d
