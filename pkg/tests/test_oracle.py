import itertools
import math

import networkx as nx
import numpy as np
import pytest
from conftest import chain_graph, custom_graph
from hypothesis import given, settings
from hypothesis import strategies as st

from microblossom.graph import build_surface_graph_3d
from microblossom.oracle import (
    MAX_DEFECTS,
    OracleError,
    SyndromeGraph,
    build_syndrome_graph,
    exhaustive_mwpm,
    solution_weight,
    verify,
)
from microblossom.primal import MatchingSolution, decode_batch


def test_chain_distances():
    g = chain_graph([2, 2, 2, 2], virtual=(False, False))
    sg = build_syndrome_graph(g, [0, 2])
    assert sg.pairwise_dist[0][1] == 4
    assert math.isinf(sg.boundary_dist[0])
    g2 = chain_graph([2, 6, 6])
    assert build_syndrome_graph(g2, [1]).boundary_dist == (2,)


def test_grid_distances_by_hand():
    # 3x3 grid, horizontal weight 2, vertical weight 4
    idx = lambda i, j: 3 * i + j  # noqa: E731
    edges = [(idx(i, j), idx(i, j + 1), 2) for i in range(3) for j in range(2)]
    edges += [(idx(i, j), idx(i + 1, j), 4) for i in range(2) for j in range(3)]
    g = custom_graph(9, edges)
    sg = build_syndrome_graph(g, [idx(0, 0), idx(2, 2), idx(1, 2)])
    assert sg.defects == (0, 5, 8)
    assert sg.pairwise_dist[0][2] == 2 * 2 + 2 * 4
    assert sg.pairwise_dist[0][1] == 2 * 2 + 4
    assert sg.pairwise_dist[1][2] == 4


def _sg(pair, b1, b2):
    return SyndromeGraph((0, 1), ((0, pair), (pair, 0)), (b1, b2))


def test_two_defect_choices():
    assert exhaustive_mwpm(SyndromeGraph((), (), ())) == (0.0, [])
    assert exhaustive_mwpm(_sg(4, 3, 3)) == (4, [(0, 1)])
    assert exhaustive_mwpm(_sg(8, 3, 3)) == (6, [(0, None), (1, None)])


def test_defect_cap_and_errors():
    n = MAX_DEFECTS + 1
    sg = SyndromeGraph(tuple(range(n)), tuple((1.0,) * n for _ in range(n)), (1.0,) * n)
    with pytest.raises(OracleError):
        exhaustive_mwpm(sg)
    g = chain_graph([2, 2])
    with pytest.raises(OracleError):
        build_syndrome_graph(g, [0])
    inf = math.inf
    with pytest.raises(OracleError):
        exhaustive_mwpm(SyndromeGraph((0,), ((0,),), (inf,)))


def _enumerate(sg):
    """Brute force over every partition into pairs and boundary singletons."""
    n = len(sg.defects)
    best = math.inf

    def rec(rest, acc):
        nonlocal best
        if not rest:
            best = min(best, acc)
            return
        i, others = rest[0], rest[1:]
        rec(others, acc + sg.boundary_dist[i])
        for k, j in enumerate(others):
            rec(others[:k] + others[k + 1 :], acc + sg.pairwise_dist[i][j])

    rec(list(range(n)), 0)
    return best


def _networkx_weight(sg):
    """Minimum weight via max-weight matching on the boundary-copy reduction."""
    n = len(sg.defects)
    G = nx.Graph()
    big = 1 + 2 * (sum(sg.boundary_dist) + sum(map(sum, sg.pairwise_dist)))
    for i in range(n):
        G.add_edge(("d", i), ("b", i), weight=big - sg.boundary_dist[i])
        for j in range(i + 1, n):
            G.add_edge(("d", i), ("d", j), weight=big - sg.pairwise_dist[i][j])
            G.add_edge(("b", i), ("b", j), weight=big)
    m = nx.max_weight_matching(G, maxcardinality=True)
    return sum(big - G.edges[u, v]["weight"] for u, v in m)


random_sg = st.integers(0, 8).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.integers(1, 40), min_size=n * n, max_size=n * n),
        st.lists(st.integers(1, 40), min_size=n, max_size=n),
    )
)


def _metric(n, raw, bnd):
    d = np.array(raw, dtype=float).reshape(n, n) if n else np.zeros((0, 0))
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0)
    return SyndromeGraph(tuple(range(n)), tuple(tuple(r) for r in d.tolist()), tuple(float(b) for b in bnd))


@settings(max_examples=150, deadline=None)
@given(random_sg)
def test_dp_equals_enumeration_and_networkx(data):
    sg = _metric(*data)
    w, matching = exhaustive_mwpm(sg)
    assert w == _enumerate(sg)
    assert w == _networkx_weight(sg)
    pairs = [(a, b) for a, b in matching if b is not None]
    bnd = [a for a, b in matching if b is None]
    assert solution_weight(sg, pairs, bnd) == (w, [])


@settings(max_examples=60, deadline=None)
@given(random_sg, st.randoms(use_true_random=False))
def test_reorder_invariance(data, rnd):
    sg = _metric(*data)
    n = len(sg.defects)
    perm = list(range(n))
    rnd.shuffle(perm)
    pd = tuple(tuple(sg.pairwise_dist[perm[i]][perm[j]] for j in range(n)) for i in range(n))
    shuffled = SyndromeGraph(tuple(range(n)), pd, tuple(sg.boundary_dist[p] for p in perm))
    assert exhaustive_mwpm(shuffled)[0] == exhaustive_mwpm(sg)[0]


def test_verify_outcomes():
    g = build_surface_graph_3d(3, 2, 0.01)
    defects = [0, 1, 8, 9]
    sg = build_syndrome_graph(g, defects)
    sol = decode_batch(g, defects)
    assert verify(sol, sg)
    # every alternative pairing that is strictly heavier must be rejected
    opt = verify(sol, sg).optimum
    rejected = 0
    for a, b, c, d in itertools.permutations(defects):
        if a < b and c < d and a < c:
            alt = MatchingSolution([(a, b), (c, d)], [], [], 0)
            weight, _ = solution_weight(sg, alt.pairs, [])
            if weight > opt:
                assert not verify(alt, sg)
                rejected += 1
    assert rejected > 0
    twice = MatchingSolution([(0, 1), (1, 8)], [(9, 4)], [], 0)
    v = verify(twice, sg)
    assert not v and any("matched 2 times" in m for m in v.diagnostics)
    missing = MatchingSolution([(0, 1)], [], [], 0)
    assert any("unmatched" in m for m in verify(missing, sg).diagnostics)
