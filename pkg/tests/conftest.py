from __future__ import annotations

import numpy as np
import pytest

from microblossom.oracle import check_certificate
from microblossom.graph import DecodingGraph, EdgeDescriptor, VertexDescriptor


def chain_graph(weights, virtual=(True, True), logical=(0,)) -> DecodingGraph:
    """Path 0 - 1 - ... - n with edge i = (i, i + 1) and optional virtual ends."""
    n = len(weights)
    vertices = [
        VertexDescriptor(i, is_virtual=(i == 0 and virtual[0]) or (i == n and virtual[1]))
        for i in range(n + 1)
    ]
    edges = [EdgeDescriptor(i, (i, i + 1), w) for i, w in enumerate(weights)]
    return DecodingGraph(vertices, edges, max(weights) // 2, frozenset(logical))


def custom_graph(n, edges, virtual=(), layers=None) -> DecodingGraph:
    vertices = [
        VertexDescriptor(i, is_virtual=i in virtual, layer=0 if layers is None else layers[i]) for i in range(n)
    ]
    eds = [EdgeDescriptor(k, (u, v), w) for k, (u, v, w) in enumerate(edges)]
    return DecodingGraph(vertices, eds, max(w for *_, w in edges) // 2)


def reweighted(graph: DecodingGraph, rng, choices=(2, 4, 6, 8, 10, 12, 14, 18, 22, 28)) -> DecodingGraph:
    edges = [EdgeDescriptor(e.id, e.endpoints, int(rng.choice(choices))) for e in graph.edges]
    return DecodingGraph(graph.vertices, edges, graph.max_weight, graph.logical_edges)


certificate_problems = check_certificate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record a criterion outcome; parts recorded under one number are combined."""

    def record(number: int, ok: bool, detail: str) -> bool:
        print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        if number in ACCEPTANCE:
            prev_ok, prev_detail = ACCEPTANCE[number]
            ok, detail = prev_ok and ok, f"{prev_detail}; {detail}"
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
