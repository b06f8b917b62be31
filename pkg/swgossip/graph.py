"""
Undirected communication graphs.

Graphs are immutable: the adjacency array is made read-only at construction, so a
graph can be shared between concurrent experiment workers.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order
from scipy.spatial.distance import pdist, squareform

from .core.exceptions import ValidationError


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected sensor graph.

    Attributes:
        n: Node count N
        adjacency: Symmetric 0/1 matrix with zero diagonal
        points: Node positions in the unit square (RGG only, not part of equality)
        seed: Generation seed (RGG only)
        r0: Radius factor (RGG only)
    """

    n: int
    adjacency: np.ndarray
    points: Optional[np.ndarray] = field(default=None, repr=False)
    seed: Optional[int] = None
    r0: Optional[float] = None

    def __post_init__(self) -> None:
        a = np.array(self.adjacency, dtype=np.int8)
        if self.n < 2:
            raise ValidationError("a graph needs at least 2 nodes", {"n": self.n})
        if a.shape != (self.n, self.n):
            raise ValidationError("adjacency shape mismatch", {"shape": a.shape, "n": self.n})
        if not np.array_equal(a, a.T) or np.any(np.diag(a) != 0) or np.any((a != 0) & (a != 1)):
            raise ValidationError("adjacency must be symmetric 0/1 with zero diagonal")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(np.int64)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    @property
    def laplacian(self) -> np.ndarray:
        """L = D − A."""
        return np.diag(self.degrees).astype(float) - self.adjacency

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def edges(self) -> List[Tuple[int, int]]:
        """Undirected edges (i < j), sorted lexicographically."""
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(i), int(j)) for i, j in zip(rows, cols)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self) -> int:
        return hash((self.n, self.adjacency.tobytes()))


def rgg_radius(n: int, r0: float) -> float:
    """Connection radius sqrt(r0 · ln(n) / n)."""
    return float(np.sqrt(r0 * np.log(n) / n))


def generate_rgg(n: int, r0: float, seed: int) -> Graph:
    """Random geometric graph on uniform points in the unit square.

    Nodes i, j are linked iff their distance is strictly below ``rgg_radius(n, r0)``.
    The result may be disconnected; check with ``is_connected``.

    Args:
        n: Node count (>= 2)
        r0: Radius factor (> 0)
        seed: Seed of the point draw

    Returns:
        The graph, with its points retained
    """
    if n < 2:
        raise ValidationError("n must be >= 2", {"n": n})
    if not r0 > 0:
        raise ValidationError("r0 must be > 0", {"r0": r0})
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, 1.0, size=(n, 2))
    radius = rgg_radius(n, r0)
    adjacency = (squareform(pdist(points)) < radius).astype(np.int8)
    np.fill_diagonal(adjacency, 0)
    points.setflags(write=False)
    graph = Graph(n=n, adjacency=adjacency, points=points, seed=seed, r0=r0)
    logger.debug(f"rgg n={n} r0={r0} seed={seed}: radius {radius:.5f}, {len(graph.edges())} edges")
    return graph


def from_edge_list(n: int, edges: Iterable[Tuple[int, int]]) -> Graph:
    """Build a graph from undirected edges; duplicates collapse.

    Raises:
        ValidationError: On an out-of-range index or a self-loop
    """
    if n < 2:
        raise ValidationError("n must be >= 2", {"n": n})
    adjacency = np.zeros((n, n), dtype=np.int8)
    for edge in edges:
        i, j = (int(v) for v in edge)
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"edge ({i}, {j}) out of range for n={n}", {"edge": [i, j]})
        if i == j:
            raise ValidationError(f"self-loop on node {i}", {"edge": [i, j]})
        adjacency[i, j] = adjacency[j, i] = 1
    return Graph(n=n, adjacency=adjacency)


def complete_graph(n: int) -> Graph:
    adjacency = np.ones((n, n), dtype=np.int8)
    np.fill_diagonal(adjacency, 0)
    return Graph(n=n, adjacency=adjacency)


def is_connected(g: Graph) -> bool:
    """True iff a breadth-first traversal from node 0 reaches every node."""
    order = breadth_first_order(csr_matrix(g.adjacency), 0, directed=False, return_predecessors=False)
    return len(order) == g.n


def graph_to_dict(g: Graph) -> Dict[str, Any]:
    """JSON document ``{n, edges, seed?, r0?}`` with sorted edges."""
    data: Dict[str, Any] = {"n": g.n, "edges": [list(e) for e in g.edges()]}
    if g.seed is not None:
        data["seed"] = g.seed
    if g.r0 is not None:
        data["r0"] = g.r0
    return data


def graph_from_dict(data: Dict[str, Any]) -> Graph:
    try:
        g = from_edge_list(int(data["n"]), [tuple(e) for e in data.get("edges", [])])
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"malformed graph document: {e}")
    return Graph(n=g.n, adjacency=g.adjacency, seed=data.get("seed"), r0=data.get("r0"))
