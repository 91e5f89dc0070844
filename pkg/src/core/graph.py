"""
Finite weighted graphs for graphpq.

This module provides the WeightedGraph model used by every numerical layer:
- Vertex ids are opaque strings mapped to dense indices at construction
- Each unordered edge is stored once with a positive weight
- Each vertex carries a positive measure mu(x); mu0 = min mu is cached
- Degree, hop distance, ball truncation and validation of the standing
  assumptions (positive weights and measure, connectivity)

Graphs are immutable after construction. Truncation returns a new graph.
Connectivity and breadth-first distances are delegated to networkx; the
signed incidence matrix used by the calculus layer is a scipy sparse matrix.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from src.core.exceptions import GraphFormatError, GraphValidationError, UnknownVertexError
from src.services.logging_service import get_logger

logger = get_logger(__name__)

EdgeSpec = Tuple[str, str, float]


@dataclass(frozen=True)
class ValidationReport:
    """
    Result of checking a graph against the standing assumptions.

    An empty violation list means the graph is valid.
    """
    violations: List[str] = field(default_factory=list)
    mu0: float = float("nan")

    @property
    def is_valid(self) -> bool:
        """True when no assumption is violated."""
        return not self.violations


class WeightedGraph:
    """
    A finite weighted graph with vertex measure.

    The constructor only enforces structure (known endpoints, unique ids).
    Semantic invariants are checked by validate(), so that an invalid
    description can still be loaded and reported on.
    """

    def __init__(
        self,
        vertices: Sequence[str],
        mu: Sequence[float],
        edges: Iterable[EdgeSpec],
    ) -> None:
        """
        Initialize the graph.

        Args:
            vertices: Ordered vertex ids.
            mu: Measure per vertex, aligned with vertices.
            edges: (u, v, weight) triples; each unordered pair listed once.

        Raises:
            GraphFormatError: On duplicate ids, length mismatch or unknown endpoints.
        """
        ids = tuple(str(v) for v in vertices)
        if not ids:
            raise GraphFormatError("graph has no vertices")
        if len(set(ids)) != len(ids):
            raise GraphFormatError("duplicate vertex id")

        mu_values = np.asarray(mu, dtype=float)
        if mu_values.shape != (len(ids),):
            raise GraphFormatError(
                f"expected {len(ids)} measure values, got {mu_values.size}"
            )

        self._ids: Tuple[str, ...] = ids
        self._index: Dict[str, int] = {v: i for i, v in enumerate(ids)}
        self._mu = mu_values.copy()
        self._mu.flags.writeable = False

        tails, heads, weights = [], [], []
        for edge in edges:
            try:
                a, b, w = edge
            except (TypeError, ValueError) as e:
                raise GraphFormatError(f"malformed edge {edge!r}") from e
            for endpoint in (a, b):
                if str(endpoint) not in self._index:
                    raise GraphFormatError(f"edge references unknown vertex {endpoint!r}")
            tails.append(self._index[str(a)])
            heads.append(self._index[str(b)])
            weights.append(float(w))

        self._tail = np.asarray(tails, dtype=np.int64)
        self._head = np.asarray(heads, dtype=np.int64)
        self._weight = np.asarray(weights, dtype=float)
        for array in (self._tail, self._head, self._weight):
            array.flags.writeable = False

    # ─── Basic accessors ──────────────────────────────────────────────────

    @property
    def vertices(self) -> Tuple[str, ...]:
        """Vertex ids in index order."""
        return self._ids

    @property
    def n(self) -> int:
        """Number of vertices."""
        return len(self._ids)

    @property
    def mu(self) -> np.ndarray:
        """Read-only measure array."""
        return self._mu

    @cached_property
    def mu0(self) -> float:
        """Smallest vertex measure."""
        return float(np.min(self._mu))

    @property
    def tail(self) -> np.ndarray:
        """Edge tail indices."""
        return self._tail

    @property
    def head(self) -> np.ndarray:
        """Edge head indices."""
        return self._head

    @property
    def weight(self) -> np.ndarray:
        """Edge weights, aligned with tail/head."""
        return self._weight

    @property
    def edges(self) -> List[EdgeSpec]:
        """Edges as (u, v, weight) id triples in storage order."""
        return [
            (self._ids[a], self._ids[b], float(w))
            for a, b, w in zip(self._tail, self._head, self._weight)
        ]

    def index(self, x: str) -> int:
        """Dense index of vertex x."""
        try:
            return self._index[str(x)]
        except KeyError:
            raise UnknownVertexError(x) from None

    def __contains__(self, x: object) -> bool:
        return str(x) in self._index

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, edges={self._weight.size})"

    # ─── Derived structure ────────────────────────────────────────────────

    @cached_property
    def adjacency(self) -> Tuple[Tuple[Tuple[str, float], ...], ...]:
        """Per-vertex tuple of (neighbor id, weight)."""
        lists: List[List[Tuple[str, float]]] = [[] for _ in self._ids]
        for a, b, w in zip(self._tail, self._head, self._weight):
            lists[a].append((self._ids[b], float(w)))
            if a != b:
                lists[b].append((self._ids[a], float(w)))
        return tuple(tuple(entries) for entries in lists)

    @cached_property
    def degrees(self) -> np.ndarray:
        """deg(x) = sum of incident edge weights, per vertex."""
        deg = np.bincount(self._tail, weights=self._weight, minlength=self.n)
        deg = deg + np.bincount(self._head, weights=self._weight, minlength=self.n)
        deg.flags.writeable = False
        return deg

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Signed edge-vertex incidence B (m x n): (B u)_e = u(head) - u(tail)."""
        m = self._weight.size
        rows = np.concatenate([np.arange(m), np.arange(m)])
        cols = np.concatenate([self._head, self._tail])
        data = np.concatenate([np.ones(m), -np.ones(m)])
        return sp.csr_matrix((data, (rows, cols)), shape=(m, self.n))

    @cached_property
    def abs_incidence_t(self) -> sp.csr_matrix:
        """|B| transposed (n x m): sums an edge quantity onto both endpoints."""
        return abs(self.incidence).T.tocsr()

    @cached_property
    def nx_graph(self) -> nx.Graph:
        """Unweighted networkx view on dense indices (hop metric only)."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(zip(self._tail.tolist(), self._head.tolist()))
        return graph


# ─── Operations ───────────────────────────────────────────────────────────


def validate(g: WeightedGraph) -> ValidationReport:
    """
    Check the standing assumptions on a graph.

    Reports nonpositive or non-finite measure and weights, self-loops,
    duplicate or asymmetric edges, and disconnection.
    """
    violations: List[str] = []
    ids = g.vertices

    for i in np.flatnonzero(~np.isfinite(g.mu)):
        violations.append(f"non-finite measure at {ids[i]}")
    for i in np.flatnonzero(np.isfinite(g.mu) & (g.mu <= 0)):
        violations.append(f"nonpositive measure at {ids[i]}")

    seen: Dict[frozenset, float] = {}
    for a, b, w in zip(g.tail, g.head, g.weight):
        label = f"({ids[a]}, {ids[b]})"
        if a == b:
            violations.append(f"self-loop at {ids[a]}")
            continue
        if not np.isfinite(w):
            violations.append(f"non-finite weight on edge {label}")
        elif w <= 0:
            violations.append(f"nonpositive weight on edge {label}")
        key = frozenset((int(a), int(b)))
        if key in seen:
            if seen[key] != w:
                violations.append(f"asymmetric weight on edge {label}")
            else:
                violations.append(f"duplicate edge {label}")
        else:
            seen[key] = float(w)

    # Degrees can still overflow to inf
    if not np.all(np.isfinite(g.degrees)):
        violations.append("infinite degree")

    if not nx.is_connected(g.nx_graph):
        violations.append("disconnected")

    mu0 = g.mu0 if np.all(np.isfinite(g.mu)) else float("nan")
    return ValidationReport(violations=violations, mu0=mu0)


def require_valid(g: WeightedGraph) -> WeightedGraph:
    """Return g unchanged, or raise GraphValidationError listing its violations."""
    report = validate(g)
    if not report.is_valid:
        raise GraphValidationError(report)
    return g


def degree(g: WeightedGraph, x: str) -> float:
    """deg(x) = sum over neighbours y of the edge weight w_xy."""
    return float(g.degrees[g.index(x)])


def distances_from(g: WeightedGraph, x0: str, cutoff: Optional[int] = None) -> Dict[int, int]:
    """Hop distances from x0 to every reachable vertex index (up to cutoff)."""
    source = g.index(x0)
    return dict(nx.single_source_shortest_path_length(g.nx_graph, source, cutoff=cutoff))


def distance_array(g: WeightedGraph, x0: str) -> np.ndarray:
    """Hop distance from x0 to every vertex as a float array."""
    lengths = distances_from(g, x0)
    if len(lengths) != g.n:
        raise GraphValidationError(ValidationReport(violations=["disconnected"], mu0=g.mu0))
    out = np.empty(g.n, dtype=float)
    for i, d in lengths.items():
        out[i] = d
    return out


def dist(g: WeightedGraph, x: str, y: str) -> int:
    """Minimal number of edges joining x and y."""
    target = g.index(y)
    lengths = distances_from(g, x)
    if target not in lengths:
        raise GraphValidationError(ValidationReport(violations=["disconnected"], mu0=g.mu0))
    return int(lengths[target])


def diameter(g: WeightedGraph) -> int:
    """Largest hop distance between two vertices."""
    if g.n == 1:
        return 0
    return int(nx.diameter(g.nx_graph))


def ball_truncate(g: WeightedGraph, x0: str, R: int) -> WeightedGraph:
    """
    Induced subgraph on the closed hop ball of radius R around x0.

    Vertex order and edge order of the original graph are preserved.
    """
    if R < 0:
        raise ValueError(f"radius must be nonnegative, got {R}")
    keep = sorted(distances_from(g, x0, cutoff=int(R)))
    kept = set(keep)
    vertices = [g.vertices[i] for i in keep]
    mu = [g.mu[i] for i in keep]
    edges = [
        (g.vertices[a], g.vertices[b], float(w))
        for a, b, w in zip(g.tail, g.head, g.weight)
        if a in kept and b in kept
    ]
    truncated = WeightedGraph(vertices, mu, edges)
    logger.debug(f"Ball of radius {R} around {x0}: {truncated.n} of {g.n} vertices")
    return truncated


# ─── Builders ─────────────────────────────────────────────────────────────


def from_networkx(
    graph: nx.Graph,
    mu_attr: str = "mu",
    weight_attr: str = "weight",
    default_mu: float = 1.0,
    default_weight: float = 1.0,
) -> WeightedGraph:
    """Build a WeightedGraph from a networkx graph; node labels become string ids."""
    nodes = list(graph.nodes)
    vertices = [str(v) for v in nodes]
    mu = [float(graph.nodes[v].get(mu_attr, default_mu)) for v in nodes]
    edges = [
        (str(a), str(b), float(data.get(weight_attr, default_weight)))
        for a, b, data in graph.edges(data=True)
    ]
    return WeightedGraph(vertices, mu, edges)


def path_graph(n: int, weight: float = 1.0, mu: float = 1.0, prefix: str = "v") -> WeightedGraph:
    """Path v0 - v1 - ... - v{n-1} with uniform weight and measure."""
    graph = nx.relabel_nodes(nx.path_graph(n), {i: f"{prefix}{i}" for i in range(n)})
    return from_networkx(graph, default_mu=mu, default_weight=weight)


def star_graph(leaves: int, weight: float = 1.0, mu: float = 1.0) -> WeightedGraph:
    """Star with center 'c' and leaves 'l1'..'l{leaves}'."""
    mapping = {0: "c"}
    mapping.update({i: f"l{i}" for i in range(1, leaves + 1)})
    graph = nx.relabel_nodes(nx.star_graph(leaves), mapping)
    return from_networkx(graph, default_mu=mu, default_weight=weight)


def grid_graph(rows: int, cols: int, weight: float = 1.0, mu: float = 1.0) -> WeightedGraph:
    """Rectangular lattice patch with ids 'r,c' (a finite piece of Z^2)."""
    graph = nx.grid_2d_graph(rows, cols)
    graph = nx.relabel_nodes(graph, {node: f"{node[0]},{node[1]}" for node in graph.nodes})
    return from_networkx(graph, default_mu=mu, default_weight=weight)


def random_connected_graph(
    n: int,
    rng: np.random.Generator,
    weight_range: Tuple[float, float] = (1e-3, 2.0),
    mu_range: Tuple[float, float] = (0.5, 2.0),
    extra_edge_prob: float = 0.2,
) -> WeightedGraph:
    """
    Random connected graph: a random spanning tree plus independent extra edges.

    Weights and measures are drawn uniformly from the given ranges.
    """
    pairs = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        pairs.add((j, i))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in pairs and rng.random() < extra_edge_prob:
                pairs.add((i, j))
    ordered = sorted(pairs)
    weights = rng.uniform(weight_range[0], weight_range[1], size=len(ordered))
    mu = rng.uniform(mu_range[0], mu_range[1], size=n)
    vertices = [f"x{i}" for i in range(n)]
    edges = [(vertices[a], vertices[b], float(w)) for (a, b), w in zip(ordered, weights)]
    return WeightedGraph(vertices, mu, edges)
