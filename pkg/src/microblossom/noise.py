"""Independent edge-flip noise, syndromes and logical-error checks.

Every shot draws from its own Philox4x64 stream keyed by ``(seed, shot)``, so
results depend only on those two integers and not on how shots are batched or
ordered.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .graph import DecodingGraph
from .primal import MatchingSolution

_MASK64 = (1 << 64) - 1
_ALL_PAIRS_LIMIT = 4096


@dataclass(frozen=True)
class ErrorSample:
    flipped_edges: frozenset[int]
    seed: int
    shot: int
    probabilities: tuple[float, ...]


def shot_rng(seed: int, shot: int = 0) -> np.random.Generator:
    """Counter-based generator for one shot."""
    key = np.array([seed & _MASK64, shot & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def edge_probabilities(graph: DecodingGraph, probabilities=None) -> np.ndarray:
    """Per-edge probabilities from a scalar, a sequence, a mapping or the graph's own."""
    m = graph.num_edges
    if probabilities is None:
        if graph.edge_probabilities is None:
            raise ValueError("graph carries no edge probabilities; pass them explicitly")
        probs = np.asarray(graph.edge_probabilities, dtype=np.float64)
    elif isinstance(probabilities, Mapping):
        probs = np.full(m, np.nan)
        for e, p in probabilities.items():
            probs[int(e)] = p
        if np.isnan(probs).any():
            raise ValueError("probability map must define every edge")
    elif np.ndim(probabilities) == 0:
        probs = np.full(m, float(probabilities))
    else:
        probs = np.asarray(probabilities, dtype=np.float64)
    if probs.shape != (m,):
        raise ValueError(f"expected {m} edge probabilities, got shape {probs.shape}")
    if ((probs < 0) | (probs > 1)).any():
        raise ValueError("edge probabilities must lie in [0, 1]")
    return probs


def sample_errors(graph: DecodingGraph, probabilities=None, seed: int = 0, shot: int = 0) -> ErrorSample:
    probs = edge_probabilities(graph, probabilities)
    draws = shot_rng(seed, shot).random(graph.num_edges)
    flipped = np.flatnonzero(draws < probs)
    return ErrorSample(frozenset(flipped.tolist()), seed, shot, tuple(probs.tolist()))


def draw_defects(graph: DecodingGraph, probabilities: np.ndarray, seed: int, shot: int) -> list[int]:
    """Syndrome of ``sample_errors(graph, probabilities, seed, shot)`` without building the sample."""
    flipped = shot_rng(seed, shot).random(graph.num_edges) < probabilities
    parity = np.bincount(graph.endpoints[flipped].ravel(), minlength=graph.num_vertices) % 2 == 1
    return np.flatnonzero(parity & ~graph.is_virtual).tolist()


def syndrome_from_errors(graph: DecodingGraph, sample: ErrorSample | set[int]) -> list[int]:
    """Regular vertices incident to an odd number of flipped edges."""
    flipped = sample.flipped_edges if isinstance(sample, ErrorSample) else sample
    if not flipped:
        return []
    ends = graph.endpoints[np.fromiter(flipped, dtype=np.int64)].ravel()
    parity = np.bincount(ends, minlength=graph.num_vertices) % 2 == 1
    parity &= ~graph.is_virtual
    return np.flatnonzero(parity).tolist()


def correction_edges(graph: DecodingGraph, solution: MatchingSolution) -> set[int]:
    """Symmetric difference of one shortest path per matched pair.

    Among equal-length paths the lexicographically smallest vertex sequence is
    taken, walking from the smaller endpoint towards the other.
    """
    ends = [tuple(sorted(p)) for p in solution.pairs] + [tuple(b) for b in solution.boundary_matches]
    if not ends:
        return set()
    targets = sorted({b for _, b in ends})
    if graph.num_vertices <= _ALL_PAIRS_LIMIT:
        dist = graph.distance_matrix
        row = {t: t for t in targets}
    else:
        dist = dijkstra(graph.weight_matrix, directed=False, indices=targets)
        row = {t: k for k, t in enumerate(targets)}
    indptr, nbr, eid = graph.csr
    weights = graph.weights
    out: set[int] = set()
    for a, b in ends:
        d = dist[row[b]]
        v = a
        while v != b:
            step = None
            for k in range(indptr[v], indptr[v + 1]):
                u = nbr[k]
                if d[u] + weights[eid[k]] == d[v] and (step is None or u < nbr[step]):
                    step = k
            if step is None:
                raise ValueError(f"no shortest path from {a} to {b}")
            out ^= {int(eid[step])}
            v = int(nbr[step])
    return out


def check_logical_error(graph: DecodingGraph, sample: ErrorSample, solution: MatchingSolution) -> bool:
    """True iff errors combined with the correction cross the logical cut an odd number of times."""
    if sorted(solution.defects) != syndrome_from_errors(graph, sample):
        raise ValueError("solution does not match the syndrome of the sample")
    residual = set(sample.flipped_edges) ^ correction_edges(graph, solution)
    return len(residual & graph.logical_edges) % 2 == 1
