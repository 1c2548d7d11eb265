"""Exact reference matcher: shortest-path syndrome graph plus exhaustive minimisation.

Deliberately shares no code with the accelerator or primal solver. Distances
come from a plain binary-heap Dijkstra with every virtual vertex collapsed into
one super-boundary; the minimum is found by dynamic programming over defect
subsets, which enumerates exactly the same space as listing every partition
into pairs and boundary singletons.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import lru_cache

from .graph import DecodingGraph

MAX_DEFECTS = 12


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class SyndromeGraph:
    defects: tuple[int, ...]
    pairwise_dist: tuple[tuple[float, ...], ...]
    boundary_dist: tuple[float, ...]


@dataclass
class Verdict:
    ok: bool
    weight: float | None = None
    optimum: float | None = None
    diagnostics: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _dijkstra(graph: DecodingGraph, sources: list[int]) -> list[float]:
    dist = [math.inf] * graph.num_vertices
    heap = []
    for s in sources:
        dist[s] = 0
        heap.append((0, s))
    heapq.heapify(heap)
    edges = graph.edges
    adjacency = graph.adjacency
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for e in adjacency[v]:
            a, b = edges[e].endpoints
            u = b if a == v else a
            nd = d + edges[e].weight
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


def build_syndrome_graph(graph: DecodingGraph, defects) -> SyndromeGraph:
    """Pairwise and boundary shortest-path distances between defects."""
    defects = tuple(sorted(set(int(v) for v in defects)))
    virtual = [v.id for v in graph.vertices if v.is_virtual]
    for v in defects:
        if not 0 <= v < graph.num_vertices or graph.vertices[v].is_virtual:
            raise OracleError(f"defect {v} is not a regular vertex")
    to_boundary = _dijkstra(graph, virtual) if virtual else [math.inf] * graph.num_vertices
    rows = []
    for v in defects:
        dist = _dijkstra(graph, [v])
        rows.append(tuple(dist[u] for u in defects))
        if math.isinf(to_boundary[v]) and all(math.isinf(dist[u]) for u in defects if u != v):
            raise OracleError(f"defect {v} is disconnected")
    return SyndromeGraph(defects, tuple(rows), tuple(to_boundary[v] for v in defects))


def exhaustive_mwpm(sg: SyndromeGraph) -> tuple[float, list[tuple[int, int | None]]]:
    """Minimum total weight over all pairings with optional boundary singletons.

    Returns ``(weight, matching)`` where a boundary match is ``(defect, None)``.
    """
    n = len(sg.defects)
    if n > MAX_DEFECTS:
        raise OracleError(f"exhaustive search is limited to {MAX_DEFECTS} defects, got {n}")
    pair, bnd = sg.pairwise_dist, sg.boundary_dist

    @lru_cache(maxsize=None)
    def best(mask: int) -> tuple[float, tuple]:
        if mask == 0:
            return 0.0, ()
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        w, m = best(rest)
        cand = (bnd[i] + w, ((i, None),) + m)
        j_mask = rest
        while j_mask:
            j = (j_mask & -j_mask).bit_length() - 1
            j_mask &= j_mask - 1
            w, m = best(rest & ~(1 << j))
            total = pair[i][j] + w
            if total < cand[0]:
                cand = (total, ((i, j),) + m)
        return cand

    weight, raw = best((1 << n) - 1)
    if math.isinf(weight):
        raise OracleError("no perfect matching exists")
    d = sg.defects
    matching = [(d[i], None if j is None else d[j]) for i, j in raw]
    return weight, matching


def solution_weight(sg: SyndromeGraph, pairs, boundary_defects) -> tuple[float, list[str]]:
    """Weight of a matching under ``sg`` distances, with coverage diagnostics."""
    index = {v: k for k, v in enumerate(sg.defects)}
    seen: dict[int, int] = {}
    issues = []
    total = 0.0
    for a, b in pairs:
        for v in (a, b):
            seen[v] = seen.get(v, 0) + 1
        if a in index and b in index:
            total += sg.pairwise_dist[index[a]][index[b]]
    for a in boundary_defects:
        seen[a] = seen.get(a, 0) + 1
        if a in index:
            total += sg.boundary_dist[index[a]]
    for v, count in sorted(seen.items()):
        if v not in index:
            issues.append(f"vertex {v} is not a defect")
        elif count > 1:
            issues.append(f"defect {v} matched {count} times")
    for v in sg.defects:
        if v not in seen:
            issues.append(f"defect {v} unmatched")
    return total, issues


def verify(solution, sg: SyndromeGraph) -> Verdict:
    """True iff ``solution`` covers every defect once and has the optimal weight."""
    weight, issues = solution_weight(sg, solution.pairs, [d for d, _ in solution.boundary_matches])
    if issues:
        return Verdict(False, weight, None, issues)
    optimum, _ = exhaustive_mwpm(sg)
    if weight != optimum:
        return Verdict(False, weight, optimum, [f"weight {weight} differs from optimum {optimum}"])
    return Verdict(True, weight, optimum)


def check_certificate(solution, sg: SyndromeGraph) -> list[str]:
    """Dual feasibility and complementary slackness of ``solution.duals`` under ``sg`` distances."""
    c = solution.duals
    if c is None:
        return ["solution carries no dual certificate"]
    idx = {v: k for k, v in enumerate(sg.defects)}
    out = []
    for a in sg.defects:
        if c.separating_sum(a, None) > sg.boundary_dist[idx[a]]:
            out.append(f"boundary constraint of {a} violated")
        for b in sg.defects:
            if a < b and c.separating_sum(a, b) > sg.pairwise_dist[idx[a]][idx[b]]:
                out.append(f"pair constraint {a},{b} violated")
    for a, b in solution.pairs:
        if c.separating_sum(a, b) != sg.pairwise_dist[idx[a]][idx[b]]:
            out.append(f"matched pair {a},{b} not tight")
    for a, _ in solution.boundary_matches:
        if c.separating_sum(a, None) != sg.boundary_dist[idx[a]]:
            out.append(f"boundary match of {a} not tight")
    if any(y < 0 for _, y in c.blossoms):
        out.append("negative blossom dual")
    return out
