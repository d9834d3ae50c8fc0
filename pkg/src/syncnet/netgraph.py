"""Weighted undirected graphs, Laplacians and their spectral utilities.

The coupling topology of a network enters the closed loop only through
weighted graph Laplacians, their second-smallest eigenvalue and the
pseudoinverse restricted to the disagreement subspace.  Eigenvalues come
from a cyclic Jacobi iteration, which is exact enough at these sizes and
keeps results bit-reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linsolve import SingularMatrixError, inv

__all__ = [
    "CONNECTIVITY_TOL",
    "GraphConnectivityError",
    "WeightedGraph",
    "Laplacian",
    "ProjectionPair",
    "build_laplacian",
    "symmetric_eigenvalues",
    "algebraic_connectivity",
    "is_connected",
    "bfs_reachable",
    "projection_pair",
    "laplacian_pseudoinverse",
]

# A graph counts as connected when the second-smallest Laplacian
# eigenvalue exceeds this; breadth-first search is only a diagnostic.
CONNECTIVITY_TOL = 1e-9

_SYMMETRY_TOL = 1e-10
_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


class GraphConnectivityError(ValueError):
    """Raised when an operation requires a connected graph."""


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive edge weights.

    Edges are ``(i, j, weight)`` with 0-based node indices ``i < j``.
    Each unordered pair may appear at most once.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        canonical = []
        seen = set()
        for edge in self.edges:
            if len(edge) != 3:
                raise ValueError(f"edge {edge!r} is not an (i, j, weight) triple")
            i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not 0 <= i < self.n_nodes or not 0 <= j < self.n_nodes:
                raise ValueError(f"edge ({i}, {j}) out of range for {self.n_nodes} nodes")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if w <= 0.0:
                raise ValueError(f"edge ({i}, {j}) has non-positive weight {w}")
            seen.add((i, j))
            canonical.append((i, j, w))
        object.__setattr__(self, "edges", tuple(canonical))

    @classmethod
    def cycle(cls, n_nodes: int, weight: float = 1.0) -> "WeightedGraph":
        """Cycle graph 1-2-...-n-1 with a uniform weight."""
        if n_nodes < 3:
            raise ValueError("a cycle needs at least three nodes")
        edges = [(k, k + 1, weight) for k in range(n_nodes - 1)]
        edges.append((0, n_nodes - 1, weight))
        return cls(n_nodes, tuple(edges))

    @classmethod
    def path(cls, n_nodes: int, weight: float = 1.0) -> "WeightedGraph":
        """Path graph 1-2-...-n with a uniform weight."""
        if n_nodes < 2:
            raise ValueError("a path needs at least two nodes")
        return cls(n_nodes, tuple((k, k + 1, weight) for k in range(n_nodes - 1)))

    def with_weights(self, weights) -> "WeightedGraph":
        """Copy of the graph with the same edges and new weights."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(self.edges),):
            raise ValueError(f"expected {len(self.edges)} weights, got shape {weights.shape}")
        return WeightedGraph(
            self.n_nodes,
            tuple((i, j, float(w)) for (i, j, _), w in zip(self.edges, weights)),
        )

    @property
    def weight_vector(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges])

    def incidence_matrix(self) -> np.ndarray:
        """Node-by-edge incidence matrix with +1 at i and -1 at j."""
        b = np.zeros((self.n_nodes, len(self.edges)))
        for e, (i, j, _) in enumerate(self.edges):
            b[i, e] = 1.0
            b[j, e] = -1.0
        return b


@dataclass(frozen=True, eq=False)
class Laplacian:
    """Weighted Laplacian matrix together with the graph it came from."""

    matrix: np.ndarray
    graph: WeightedGraph

    def __post_init__(self) -> None:
        self.matrix.setflags(write=False)


def build_laplacian(graph: WeightedGraph) -> Laplacian:
    """Weighted Laplacian: degree matrix minus weighted adjacency.

    Row sums are zero and the matrix is symmetric positive semidefinite
    by construction.
    """
    n = graph.n_nodes
    m = np.zeros((n, n))
    for i, j, w in graph.edges:
        m[i, i] += w
        m[j, j] += w
        m[i, j] -= w
        m[j, i] -= w
    return Laplacian(m, graph)


def symmetric_eigenvalues(matrix, vectors: bool = False, max_sweeps: int = _JACOBI_MAX_SWEEPS):
    """Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi.

    Parameters
    ----------
    matrix : (n, n) array_like
        Symmetric up to an absolute tolerance of 1e-10.
    vectors : bool
        When true also return the orthonormal eigenvector matrix ``v``
        with ``matrix ~ v @ diag(vals) @ v.T``.
    max_sweeps : int
        Sweep budget; non-convergence raises ``RuntimeError``.

    The iteration stops once the off-diagonal Frobenius norm falls below
    1e-12 relative to the Frobenius norm of the input.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if np.abs(a - a.T).max() > _SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    scale = float(np.sqrt((a * a).sum()))
    v = np.eye(n)
    if n == 1 or scale == 0.0:
        vals = np.diag(a).copy()
        return (vals, v) if vectors else vals

    threshold = _JACOBI_TOL * scale
    converged = False
    for _ in range(max_sweeps):
        off = float(np.sqrt(2.0 * (np.triu(a, 1) ** 2).sum()))
        if off <= threshold:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-20 * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0.0 else 1.0
                t = t / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        converged = False
    if not converged:
        off = float(np.sqrt(2.0 * (np.triu(a, 1) ** 2).sum()))
        if off > threshold:
            raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    if vectors:
        return vals, v[:, order]
    return vals


def algebraic_connectivity(laplacian: Laplacian) -> float:
    """Second-smallest Laplacian eigenvalue."""
    vals = symmetric_eigenvalues(laplacian.matrix)
    if len(vals) < 2:
        raise ValueError("connectivity needs at least two nodes")
    return float(vals[1])


def is_connected(laplacian: Laplacian) -> bool:
    """Spectral connectivity test against ``CONNECTIVITY_TOL``."""
    return algebraic_connectivity(laplacian) > CONNECTIVITY_TOL


def bfs_reachable(graph: WeightedGraph, start: int = 0) -> np.ndarray:
    """Boolean reachability mask from ``start``, ignoring weights.

    Diagnostic companion to :func:`is_connected`; the spectral test is
    the single source of truth for connectivity decisions.
    """
    if not 0 <= start < graph.n_nodes:
        raise ValueError(f"start node {start} out of range")
    adjacency: list[list[int]] = [[] for _ in range(graph.n_nodes)]
    for i, j, _ in graph.edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    seen = np.zeros(graph.n_nodes, dtype=bool)
    seen[start] = True
    queue = [start]
    while queue:
        node = queue.pop()
        for other in adjacency[node]:
            if not seen[other]:
                seen[other] = True
                queue.append(other)
    return seen


@dataclass(frozen=True, eq=False)
class ProjectionPair:
    """Centering projector and a matching orthonormal complement basis.

    ``centering`` is the orthogonal projector onto the subspace of
    zero-mean vectors.  ``helmert`` has shape (n-1, n), annihilates the
    all-ones vector, satisfies ``helmert @ helmert.T = I`` and
    ``helmert.T @ helmert = centering``.
    """

    centering: np.ndarray
    helmert: np.ndarray

    def __post_init__(self) -> None:
        self.centering.setflags(write=False)
        self.helmert.setflags(write=False)


def projection_pair(n_nodes: int) -> ProjectionPair:
    """Build the centering projector and Helmert basis for ``n_nodes``."""
    if n_nodes < 2:
        raise ValueError("projection onto disagreement space needs n >= 2")
    centering = np.eye(n_nodes) - np.full((n_nodes, n_nodes), 1.0 / n_nodes)
    helmert = np.zeros((n_nodes - 1, n_nodes))
    for k in range(1, n_nodes):
        r = 1.0 / np.sqrt(k * (k + 1.0))
        helmert[k - 1, :k] = r
        helmert[k - 1, k] = -k * r
    return ProjectionPair(centering, helmert)


def laplacian_pseudoinverse(laplacian: Laplacian) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a connected graph's Laplacian.

    Computed as ``Q.T @ inv(Q L Q.T) @ Q`` with ``Q`` the Helmert basis,
    which stays within the zero-mean subspace and never differentiates
    through the zero eigenvalue.
    """
    n = laplacian.graph.n_nodes
    if not is_connected(laplacian):
        raise GraphConnectivityError(
            "graph is not connected: algebraic connectivity below tolerance"
        )
    pair = projection_pair(n)
    q = pair.helmert
    reduced = q @ laplacian.matrix @ q.T
    try:
        reduced_inv = inv(reduced)
    except SingularMatrixError as exc:  # pragma: no cover - guarded by the mu2 check
        raise GraphConnectivityError("reduced Laplacian is singular") from exc
    return q.T @ reduced_inv @ q
