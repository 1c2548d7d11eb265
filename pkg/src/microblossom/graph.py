"""Decoding graphs: vertices, weighted edges, standard code families and JSON I/O."""

from __future__ import annotations

import json
import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

#: internal weights are stored doubled so that two covers growing towards each
#: other become tight after an integer growth length
WEIGHT_SCALE = 2
DEFAULT_MAX_WEIGHT = 14


class GraphFormatError(ValueError):
    """A graph document or descriptor set violates the schema or invariants."""


@dataclass(frozen=True)
class VertexDescriptor:
    id: int
    is_virtual: bool = False
    layer: int = 0
    position: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class EdgeDescriptor:
    id: int
    endpoints: tuple[int, int]
    weight: int


@dataclass(eq=True)
class DecodingGraph:
    """Weighted decoding graph ``G = (V, E, W)`` with layer ids.

    Weights are in internal units: even integers (quantized weight times
    :data:`WEIGHT_SCALE`). ``logical_edges`` is the edge set whose crossing
    parity defines a logical error for the code family that generated the
    graph; it may be empty for externally supplied graphs.
    """

    vertices: list[VertexDescriptor]
    edges: list[EdgeDescriptor]
    max_weight: int = DEFAULT_MAX_WEIGHT
    logical_edges: frozenset[int] = field(default_factory=frozenset)
    edge_probabilities: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        self.vertices = list(self.vertices)
        self.edges = list(self.edges)
        self.logical_edges = frozenset(self.logical_edges)
        if self.edge_probabilities is not None:
            self.edge_probabilities = tuple(float(p) for p in self.edge_probabilities)
        self._validate()

    def _validate(self) -> None:
        for k, vert in enumerate(self.vertices):
            if vert.id != k:
                raise GraphFormatError(f"vertices[{k}].id: expected dense id {k}, got {vert.id}")
            if vert.layer < 0:
                raise GraphFormatError(f"vertices[{k}].layer: must be non-negative")
        n = len(self.vertices)
        seen: set[tuple[int, int]] = set()
        for k, edge in enumerate(self.edges):
            if edge.id != k:
                raise GraphFormatError(f"edges[{k}].id: expected dense id {k}, got {edge.id}")
            u, v = edge.endpoints
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edges[{k}].endpoints: vertex out of range")
            if u == v:
                raise GraphFormatError(f"edges[{k}].endpoints: self-loop at {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(f"edges[{k}]: duplicate edge {key}")
            seen.add(key)
            if edge.weight < 0 or edge.weight % 2:
                raise GraphFormatError(f"edges[{k}].weight: must be a non-negative even integer")
        if any(e >= len(self.edges) or e < 0 for e in self.logical_edges):
            raise GraphFormatError("logical_edges: edge id out of range")
        if self.edge_probabilities is not None and len(self.edge_probabilities) != len(self.edges):
            raise GraphFormatError("edge_probabilities: length must equal number of edges")
        if n:
            n_comp, _ = connected_components(self._sparse(), directed=False)
            if n_comp != 1:
                raise GraphFormatError("graph is not connected")

    def _sparse(self):
        n = len(self.vertices)
        if not self.edges:
            return coo_matrix((n, n))
        uv = np.array([e.endpoints for e in self.edges], dtype=np.int64)
        return coo_matrix((np.ones(len(uv)), (uv[:, 0], uv[:, 1])), shape=(n, n))

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def max_layer(self) -> int:
        return max((v.layer for v in self.vertices), default=0)

    @cached_property
    def adjacency(self) -> list[list[int]]:
        """Incident edge ids per vertex, in increasing edge id order."""
        adj: list[list[int]] = [[] for _ in self.vertices]
        for edge in self.edges:
            u, v = edge.endpoints
            adj[u].append(edge.id)
            adj[v].append(edge.id)
        return adj

    @cached_property
    def is_virtual(self) -> np.ndarray:
        return np.array([v.is_virtual for v in self.vertices], dtype=np.bool_)

    @cached_property
    def layers(self) -> np.ndarray:
        return np.array([v.layer for v in self.vertices], dtype=np.int64)

    @cached_property
    def endpoints(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([e.endpoints for e in self.edges], dtype=np.int64)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges], dtype=np.int64)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(indptr, neighbor, edge_id)`` arrays of the adjacency."""
        indptr = np.zeros(self.num_vertices + 1, dtype=np.int64)
        nbr: list[int] = []
        eid: list[int] = []
        for v, incident in enumerate(self.adjacency):
            for e in incident:
                a, b = self.edges[e].endpoints
                nbr.append(b if a == v else a)
                eid.append(e)
            indptr[v + 1] = len(nbr)
        return indptr, np.array(nbr, dtype=np.int64), np.array(eid, dtype=np.int64)

    @cached_property
    def weight_matrix(self) -> csr_matrix:
        """Sparse upper-triangular weight matrix, for undirected shortest-path routines."""
        n = self.num_vertices
        ends = self.endpoints
        return csr_matrix((self.weights.astype(np.float64), (ends[:, 0], ends[:, 1])), shape=(n, n))

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs shortest-path weights (float, ``inf`` when disconnected)."""
        return dijkstra(self.weight_matrix, directed=False)

    def layer_vertices(self, layer: int) -> np.ndarray:
        """Vertex ids of one layer, in increasing order."""
        return np.flatnonzero(self.layers == layer)

    def regular_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.is_virtual)

    def edge_between(self, u: int, v: int) -> int | None:
        for e in self.adjacency[u]:
            if v in self.edges[e].endpoints:
                return e
        return None


def weight_from_probability(p: float) -> float:
    """Log-likelihood weight ``log((1 - p) / p)`` of an edge flipping with probability ``p``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    return math.log((1.0 - p) / p)


def quantize_weights(real_weights: Sequence[float], max_weight: int = DEFAULT_MAX_WEIGHT) -> list[int]:
    """Scale real weights to integers in ``[1, max_weight]`` and double them.

    Non-positive weights are clamped to 1 with a warning. Rounding is half-up so
    results do not depend on banker's rounding.
    """
    weights = [float(w) for w in real_weights]
    if not weights:
        raise ValueError("quantize_weights requires at least one weight")
    if max_weight < 1:
        raise ValueError("max_weight must be at least 1")
    if any(w <= 0 for w in weights):
        warnings.warn("non-positive weights clamped to the smallest representable weight", stacklevel=2)
    top = max(weights)
    out = []
    for w in weights:
        if w <= 0 or top <= 0:
            q = 1
        else:
            q = max(1, math.floor(w * max_weight / top + 0.5))
        out.append(q * WEIGHT_SCALE)
    return out


def _check_distance(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 3 or d % 2 == 0:
        raise ValueError(f"code distance must be an odd integer >= 3, got {d!r}")


def _check_probability(p: float, name: str) -> None:
    if not 0.0 < p < 0.5:
        raise ValueError(f"{name} must lie in (0, 0.5), got {p}")


def build_repetition_graph(d: int, p: float, max_weight: int = DEFAULT_MAX_WEIGHT) -> DecodingGraph:
    """Chain of ``d - 1`` checks between two virtual endpoints.

    Vertex 0 and vertex ``d`` are virtual; edge ``i`` joins vertices ``i`` and
    ``i + 1``. The logical cut is edge 0.
    """
    _check_distance(d)
    _check_probability(p, "p")
    vertices = [
        VertexDescriptor(i, is_virtual=i in (0, d), layer=0, position=(0.0, float(i), 0.0))
        for i in range(d + 1)
    ]
    weight = quantize_weights([weight_from_probability(p)], max_weight)[0]
    edges = [EdgeDescriptor(i, (i, i + 1), weight) for i in range(d)]
    return DecodingGraph(vertices, edges, max_weight, frozenset({0}), (p,) * d)


def _z_stabilizers(d: int) -> list[tuple[int, int]]:
    # plaquette corners (i, j) covering qubits (i..i+1, j..j+1) clipped to the lattice
    stabs = [(i, j) for i in range(d - 1) for j in range(d - 1) if (i + j) % 2 == 0]
    stabs += [(i, -1) for i in range(d - 1) if i % 2 == 1]
    stabs += [(i, d - 1) for i in range(d - 1) if i % 2 == 0]
    return sorted(stabs)


def build_surface_graph_3d(
    d: int,
    rounds: int,
    p_space: float,
    p_time: float | None = None,
    max_weight: int = DEFAULT_MAX_WEIGHT,
) -> DecodingGraph:
    """Phenomenological Z-check graph of the rotated surface code over ``rounds`` layers.

    Each data qubit on the top or bottom row touches a single Z check and is
    joined to a virtual vertex owned by that check and side; two qubits sharing
    the same check and side share one edge. The logical cut is the set of
    top-side boundary edges in every layer.
    """
    _check_distance(d)
    if not isinstance(rounds, (int, np.integer)) or rounds < 1:
        raise ValueError(f"rounds must be a positive integer, got {rounds!r}")
    p_time = p_space if p_time is None else p_time
    _check_probability(p_space, "p_space")
    _check_probability(p_time, "p_time")

    stabs = _z_stabilizers(d)
    index = {s: k for k, s in enumerate(stabs)}
    members: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for si, sj in stabs:
        for qi in (si, si + 1):
            for qj in (sj, sj + 1):
                if 0 <= qi < d and 0 <= qj < d:
                    members.setdefault((qi, qj), []).append((si, sj))

    spatial: list[tuple[int, int]] = []
    boundary: list[tuple[int, str]] = []
    for qubit in sorted(members):
        checks = members[qubit]
        if len(checks) == 2:
            pair = (index[checks[0]], index[checks[1]])
            if pair not in spatial:
                spatial.append(pair)
        else:
            side = "top" if qubit[0] == 0 else "bottom"
            key = (index[checks[0]], side)
            if key not in boundary:
                boundary.append(key)
    spatial.sort()
    boundary.sort(key=lambda kv: (kv[1] != "top", kv[0]))

    w_space, w_time = quantize_weights(
        [weight_from_probability(p_space), weight_from_probability(p_time)], max_weight
    )
    n_reg = len(stabs)
    per_layer = n_reg + len(boundary)
    vertices: list[VertexDescriptor] = []
    edges: list[EdgeDescriptor] = []
    probs: list[float] = []
    logical: set[int] = set()

    def add_edge(u: int, v: int, w: int, p: float) -> int:
        edges.append(EdgeDescriptor(len(edges), (u, v), w))
        probs.append(p)
        return len(edges) - 1

    for layer in range(rounds):
        base = layer * per_layer
        for si, sj in stabs:
            vertices.append(VertexDescriptor(len(vertices), False, layer, (si + 0.5, sj + 0.5, float(layer))))
        for k, side in boundary:
            si, sj = stabs[k]
            row = si - 0.5 if side == "top" else si + 1.5
            vertices.append(VertexDescriptor(len(vertices), True, layer, (row, sj + 0.5, float(layer))))
        for a, b in spatial:
            add_edge(base + a, base + b, w_space, p_space)
        for k, (stab, side) in enumerate(boundary):
            e = add_edge(base + stab, base + n_reg + k, w_space, p_space)
            if side == "top":
                logical.add(e)
    for layer in range(rounds - 1):
        base = layer * per_layer
        for k in range(n_reg):
            add_edge(base + k, base + per_layer + k, w_time, p_time)
    return DecodingGraph(vertices, edges, max_weight, frozenset(logical), tuple(probs))


def graph_to_dict(graph: DecodingGraph) -> dict:
    doc: dict = {
        "vertices": [
            {
                "id": v.id,
                "is_virtual": v.is_virtual,
                "layer": v.layer,
                **({"position": list(v.position)} if v.position is not None else {}),
            }
            for v in graph.vertices
        ],
        "edges": [{"id": e.id, "endpoints": list(e.endpoints), "weight": e.weight} for e in graph.edges],
        "adjacency": graph.adjacency,
        "max_weight": graph.max_weight,
        "weight_scale": WEIGHT_SCALE,
        "logical_edges": sorted(graph.logical_edges),
    }
    if graph.edge_probabilities is not None:
        doc["edge_probabilities"] = list(graph.edge_probabilities)
    return doc


def _field(obj: dict, key: str, where: str, kind: type):
    if not isinstance(obj, dict) or key not in obj:
        raise GraphFormatError(f"{where}.{key}: missing")
    value = obj[key]
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise GraphFormatError(f"{where}.{key}: wrong type")
    return value


def graph_from_dict(doc: dict) -> DecodingGraph:
    if not isinstance(doc, dict):
        raise GraphFormatError("document: expected a JSON object")
    raw_vertices = _field(doc, "vertices", "document", list)
    raw_edges = _field(doc, "edges", "document", list)
    max_weight = _field(doc, "max_weight", "document", int)
    scale = _field(doc, "weight_scale", "document", int)
    if scale != WEIGHT_SCALE:
        raise GraphFormatError(f"document.weight_scale: expected {WEIGHT_SCALE}, got {scale}")
    vertices = []
    for k, raw in enumerate(raw_vertices):
        where = f"vertices[{k}]"
        position = raw.get("position") if isinstance(raw, dict) else None
        if position is not None:
            if not (isinstance(position, list) and len(position) == 3):
                raise GraphFormatError(f"{where}.position: expected three coordinates")
            position = tuple(float(x) for x in position)
        vertices.append(
            VertexDescriptor(
                _field(raw, "id", where, int),
                _field(raw, "is_virtual", where, bool),
                _field(raw, "layer", where, int),
                position,
            )
        )
    edges = []
    for k, raw in enumerate(raw_edges):
        where = f"edges[{k}]"
        ends = _field(raw, "endpoints", where, list)
        if len(ends) != 2 or not all(isinstance(x, int) and not isinstance(x, bool) for x in ends):
            raise GraphFormatError(f"{where}.endpoints: expected two vertex ids")
        edges.append(EdgeDescriptor(_field(raw, "id", where, int), (ends[0], ends[1]), _field(raw, "weight", where, int)))
    probs = doc.get("edge_probabilities")
    graph = DecodingGraph(vertices, edges, max_weight, frozenset(doc.get("logical_edges", [])), probs)
    if "adjacency" in doc and [list(a) for a in doc["adjacency"]] != graph.adjacency:
        raise GraphFormatError("document.adjacency: inconsistent with edges")
    return graph


def save_graph(graph: DecodingGraph, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(graph_to_dict(graph), indent=1) + "\n", encoding="utf-8")
    return path


def load_graph(path: str | Path) -> DecodingGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"document: invalid JSON ({exc})") from exc
    return graph_from_dict(doc)


def relabel_graph(graph: DecodingGraph, seed: int = 0) -> tuple[DecodingGraph, list[int]]:
    """Copy of ``graph`` with vertex and edge ids shuffled; returns it with the old-to-new vertex map."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(graph.num_vertices).tolist()
    inverse = [0] * graph.num_vertices
    for old, new in enumerate(perm):
        inverse[new] = old
    vertices = [
        VertexDescriptor(new, graph.vertices[old].is_virtual, graph.vertices[old].layer, graph.vertices[old].position)
        for new, old in enumerate(inverse)
    ]
    order = rng.permutation(graph.num_edges).tolist()
    edges = []
    for new, old in enumerate(order):
        u, v = graph.edges[old].endpoints
        edges.append(EdgeDescriptor(new, (perm[u], perm[v]), graph.edges[old].weight))
    edge_map = {old: new for new, old in enumerate(order)}
    probs = None
    if graph.edge_probabilities is not None:
        probs = tuple(graph.edge_probabilities[old] for old in order)
    logical = frozenset(edge_map[e] for e in graph.logical_edges)
    return DecodingGraph(vertices, edges, graph.max_weight, logical, probs), perm
