"""Locality networks: ingestion, normalization, degree statistics, and
Perron-Frobenius spectral computations.

A locality graph is a weighted directed network over population centers.
Row u of the weight matrix lists the infection pressure *received* by u:
entry (u, v) multiplies the contribution of active cases at v to the
growth rate at u.  The diagonal is identically zero; within-locality
growth is carried by a separate per-node modulation vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

# Dense storage below this node count, compressed sparse rows beyond.
DENSE_NODE_LIMIT = 2048


class EdgeListError(ValueError):
    """Malformed or invalid edge-list input."""


class SpectralError(RuntimeError):
    """Power iteration failed to reach the requested residual.

    Attributes:
        residual: infinity-norm residual at the final iterate.
        iterations: number of iterations performed.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class LocalityGraph:
    """Immutable weighted directed graph over localities.

    Attributes:
        labels: node identifiers in first-appearance order.
        weights: nonnegative weight matrix with zero diagonal; dense
            ndarray up to DENSE_NODE_LIMIT nodes, CSR beyond.
    """

    labels: tuple[str, ...]
    weights: np.ndarray | sp.csr_matrix

    def __post_init__(self):
        n = len(self.labels)
        if n < 1:
            raise ValueError("graph needs at least one node")
        if len(set(self.labels)) != n:
            raise ValueError("node labels must be unique")
        w = self.weights
        if w.shape != (n, n):
            raise ValueError(f"weight matrix shape {w.shape} != ({n}, {n})")
        if sp.issparse(w):
            if w.data.size and (w.data < 0).any():
                raise ValueError("negative edge weight")
        else:
            if (w < 0).any():
                raise ValueError("negative edge weight")
            w.setflags(write=False)
        if n and np.any(_diagonal(w) != 0):
            raise ValueError("diagonal weights must be zero")

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @property
    def is_dense(self) -> bool:
        return not sp.issparse(self.weights)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown node label {label!r}") from None

    def dense_weights(self) -> np.ndarray:
        """Weight matrix as a dense ndarray (copy-free when already dense)."""
        if self.is_dense:
            return self.weights
        return self.weights.toarray()

    def with_weights(self, weights) -> "LocalityGraph":
        return LocalityGraph(self.labels, _freeze(weights))

    def subgraph(self, labels: Sequence[str]) -> "LocalityGraph":
        """Induced subgraph on the given labels, preserving their order."""
        idx = [self.index(lab) for lab in labels]
        if self.is_dense:
            sub = self.weights[np.ix_(idx, idx)].copy()
        else:
            sub = self.weights[idx, :][:, idx]
        return LocalityGraph(tuple(labels), _freeze(sub))


@dataclass(frozen=True)
class DiagonalModulation:
    """Strictly positive per-node multipliers for within-locality growth."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("modulation must be a nonempty vector")
        if (v <= 0).any():
            raise ValueError("modulation entries must be strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls, node_count: int, eta: float = 1.0) -> "DiagonalModulation":
        return cls(np.full(node_count, float(eta)))

    @property
    def is_scalar(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SpectralInfo:
    """Perron root estimate with its positive eigenvector.

    eigvec is normalized to unit sum; residual is the infinity norm of
    M @ eigvec - radius * eigvec at the final iterate.
    """

    radius: float
    eigvec: np.ndarray
    q_min: float
    q_max: float
    residual: float
    iterations: int


def _diagonal(w) -> np.ndarray:
    return w.diagonal() if sp.issparse(w) else np.diagonal(w)


def _freeze(w):
    if sp.issparse(w):
        return sp.csr_matrix(w)
    arr = np.array(w, dtype=float)
    arr.setflags(write=False)
    return arr


def _as_matrix(weights: np.ndarray, n: int):
    if n > DENSE_NODE_LIMIT:
        return sp.csr_matrix(weights)
    return weights


def load_edge_list(source: str | Iterable[str]) -> LocalityGraph:
    """Parse a whitespace-separated edge list into a locality graph.

    Each nonempty line is ``src dst weight``; ``#`` starts a comment.
    The weight on line ``src dst w`` is the pressure received by ``src``
    from ``dst``.  Labels are collected in first-appearance order and
    absent pairs default to weight zero.

    Args:
        source: text content (a string with newlines) or an iterable of
            lines, e.g. an open text file.

    Raises:
        EdgeListError: malformed line, negative weight, nonzero
            self-loop, or duplicate (src, dst) pair; messages carry the
            one-based line number.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    order: dict[str, int] = {}
    edges: dict[tuple[str, str], float] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise EdgeListError(
                f"line {lineno}: expected 'src dst weight', got {raw!r}")
        src, dst, wtext = fields
        try:
            weight = float(wtext)
        except ValueError:
            raise EdgeListError(
                f"line {lineno}: weight {wtext!r} is not a number") from None
        if not np.isfinite(weight):
            raise EdgeListError(f"line {lineno}: weight must be finite")
        if weight < 0:
            raise EdgeListError(f"line {lineno}: negative weight {weight}")
        if src == dst and weight != 0:
            raise EdgeListError(
                f"line {lineno}: self-loop {src!r} must have weight 0")
        if (src, dst) in edges:
            raise EdgeListError(f"line {lineno}: duplicate edge {src}->{dst}")
        for lab in (src, dst):
            order.setdefault(lab, len(order))
        edges[(src, dst)] = weight

    if not order:
        raise EdgeListError("edge list is empty")
    n = len(order)
    weights = np.zeros((n, n))
    for (src, dst), weight in edges.items():
        if src != dst:
            weights[order[src], order[dst]] = weight
    return LocalityGraph(tuple(order), _freeze(_as_matrix(weights, n)))


def load_edge_list_file(path) -> LocalityGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return load_edge_list(fh)


def total_weight(g: LocalityGraph) -> float:
    return float(g.weights.sum())


def normalize_mean_column_weight(g: LocalityGraph) -> LocalityGraph:
    """Rescale all weights so the average column sum becomes one.

    Divides every entry by (total weight / node count).  Idempotent up
    to floating point; relative weight structure is preserved.

    Raises:
        ValueError: if the graph has no nonzero weight.
    """
    total = total_weight(g)
    if total == 0:
        raise ValueError("cannot normalize an all-zero graph")
    scale = total / g.node_count
    return g.with_weights(g.weights / scale)


def is_strongly_connected(g: LocalityGraph) -> bool:
    """True iff every node reaches every other along positive-weight edges."""
    if g.node_count == 1:
        return True
    if g.is_dense:
        structure = sp.csr_matrix(g.weights > 0)
    else:
        structure = g.weights > 0
    n_comp, _ = connected_components(structure, directed=True,
                                     connection="strong")
    return n_comp == 1


def weighted_degrees(g: LocalityGraph) -> tuple[float, float]:
    """(max, min) weighted in-degree, i.e. row-sum extremes."""
    sums = np.asarray(g.weights.sum(axis=1)).ravel()
    return float(sums.max()), float(sums.min())


def symmetrized_upper(g: LocalityGraph):
    """Arithmetic-mean symmetrization (W + W^T) / 2."""
    w = g.weights
    return (w + w.T) / 2


def geometric_lower(g: LocalityGraph):
    """Entrywise geometric-mean symmetrization sqrt(W o W^T)."""
    w = g.weights
    if sp.issparse(w):
        return w.multiply(w.T).sqrt().tocsr()
    return np.sqrt(w * w.T)


def effective_matrix(g: LocalityGraph, modulation: DiagonalModulation,
                     beta_inf: float, betaint_inf: float):
    """Asymptotic growth-rate matrix beta_inf * W + betaint_inf * diag(D).

    The Perron root of this matrix is the sharp curing-rate threshold
    for the general weighted directed model.
    """
    if beta_inf < 0 or betaint_inf < 0:
        raise ValueError("asymptotic rates must be nonnegative")
    if len(modulation) != g.node_count:
        raise ValueError(
            f"modulation length {len(modulation)} != {g.node_count} nodes")
    if g.is_dense:
        out = beta_inf * g.weights
        out[np.diag_indices_from(out)] += betaint_inf * modulation.values
        return out
    return (beta_inf * g.weights
            + sp.diags(betaint_inf * modulation.values)).tocsr()


def spectral_radius(matrix, tol: float = 1e-12,
                    max_iterations: int = 1_000_000) -> SpectralInfo:
    """Perron root and eigenvector of a nonnegative square matrix.

    Power iteration on the shifted matrix M + cI with c = (max row
    sum)/2, which is aperiodic whenever M is irreducible, so the
    iteration converges even for periodic structures (e.g. bipartite
    graphs).  The reported radius and residual refer to M itself.

    Convergence is declared when the infinity-norm residual drops below
    ``tol * max(1, radius)``; the residual achieved is reported in the
    result.  For an irreducible M the eigenvector is strictly positive
    (unit sum).

    Args:
        matrix: nonnegative dense or CSR square matrix.
        tol: residual tolerance, scaled by max(1, radius).
        max_iterations: iteration cap.

    Raises:
        ValueError: non-square input or negative entries.
        SpectralError: cap reached before the residual target.
    """
    m = matrix
    sparse = sp.issparse(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if sparse:
        if m.data.size and (m.data < 0).any():
            raise ValueError("matrix entries must be nonnegative")
        m = m.tocsr()
    else:
        m = np.asarray(m, dtype=float)
        if (m < 0).any():
            raise ValueError("matrix entries must be nonnegative")
    n = m.shape[0]

    row_max = float(np.asarray(m.sum(axis=1)).max()) if n else 0.0
    x = np.full(n, 1.0 / n)
    if row_max == 0.0:
        return SpectralInfo(0.0, x, 1.0 / n, 1.0 / n, 0.0, 0)

    shift = row_max / 2.0
    z = np.asarray(m @ x).ravel()
    radius = float(z.sum())  # Collatz-Wielandt average at the uniform start
    residual = float(np.abs(z - radius * x).max())
    iterations = 0
    while residual > tol * max(1.0, abs(radius)):
        if iterations >= max_iterations:
            raise SpectralError(
                f"power iteration did not converge in {max_iterations} "
                f"iterations (residual {residual:.3e})",
                residual=residual, iterations=iterations)
        iterations += 1
        y = z + shift * x
        x = y / y.sum()
        z = np.asarray(m @ x).ravel()
        radius = float(z.sum())  # sum(x) == 1, so this is x-weighted mean growth
        residual = float(np.abs(z - radius * x).max())
    return SpectralInfo(radius=radius, eigvec=x, q_min=float(x.min()),
                        q_max=float(x.max()), residual=residual,
                        iterations=iterations)


def top_nodes_by_total_weight(g: LocalityGraph, k: int) -> list[str]:
    """Labels of the k nodes ranked by total incident weight (in + out).

    Ties break by first appearance.  This is the ranking assumed when a
    dataset is reduced to its "top k" busiest nodes.
    """
    if not 1 <= k <= g.node_count:
        raise ValueError(f"k must be in 1..{g.node_count}")
    in_sums = np.asarray(g.weights.sum(axis=1)).ravel()
    out_sums = np.asarray(g.weights.sum(axis=0)).ravel()
    score = in_sums + out_sums
    ranked = sorted(range(g.node_count), key=lambda i: (-score[i], i))
    return [g.labels[i] for i in ranked[:k]]
