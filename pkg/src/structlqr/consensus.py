"""Consensus-network system builder.

Agents couple through weighted undirected edges, each integrating
x_i' = sum_j a_ij (x_j - x_i) + u_i + zeta_i, which yields a state matrix
with zero row sums (A 1 = 0) and identity input matrix.
"""

import numpy as np

from .errors import InvalidEdge
from .model import LtiSystem


def make_consensus_system(n, edges):
    """Build the Laplacian-style pair (A, I_n) from weighted edges.

    Parameters
    ----------
    n : number of agents
    edges : iterable of (i, j, weight) with 1-based agent indices, i != j,
        weight > 0. Each undirected edge is listed once.

    The diagonal is the negated off-diagonal row sum, so A @ ones(n) is
    exactly zero in floating point.
    """
    if n < 1:
        raise InvalidEdge("need at least one agent")
    a = np.zeros((n, n))
    for edge in edges:
        try:
            i, j, weight = edge
        except (TypeError, ValueError) as exc:
            raise InvalidEdge(f"edge {edge!r} is not an (i, j, weight) triple") from exc
        i, j = int(i), int(j)
        weight = float(weight)
        if i == j:
            raise InvalidEdge(f"self-loop on agent {i}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise InvalidEdge(f"edge ({i}, {j}) outside 1..{n}")
        if weight <= 0 or not np.isfinite(weight):
            raise InvalidEdge(f"edge ({i}, {j}) has weight {weight}, must be > 0")
        if a[i - 1, j - 1] != 0.0:
            raise InvalidEdge(f"edge ({i}, {j}) listed twice")
        a[i - 1, j - 1] = weight
        a[j - 1, i - 1] = weight
    for i in range(n):
        a[i, i] = -np.sum(a[i])
    return LtiSystem(a=a, b=np.eye(n))
