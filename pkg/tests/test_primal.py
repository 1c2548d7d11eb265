from fractions import Fraction

import numpy as np
import pytest
from conftest import certificate_problems, chain_graph, custom_graph, reweighted
from hypothesis import given, settings
from hypothesis import strategies as st

from microblossom.graph import build_repetition_graph, build_surface_graph_3d
from microblossom.isa import Conflict
from microblossom.oracle import build_syndrome_graph, exhaustive_mwpm, verify
from microblossom.primal import Pipeline, PrimalError, PrimalSolver, decode_batch


def start(graph, defects, prematch=False):
    pl = Pipeline(graph, prematch)
    primal = pl.fresh()
    mask = np.zeros(graph.num_vertices, dtype=bool)
    mask[list(defects)] = True
    for layer in pl.layer_ids:
        primal.add_defects(pl.accel.load_defects(layer, mask[pl.layer_vertices[layer]]))
    return pl, primal


def test_empty():
    sol = decode_batch(build_surface_graph_3d(3, 3, 0.01), [])
    assert sol.pairs == [] and sol.boundary_matches == [] and sol.total_weight == 0


def test_single_defect_boundary():
    g = chain_graph([6, 10, 10, 10])
    sol = decode_batch(g, [1])
    assert sol.pairs == [] and sol.boundary_matches == [(1, 0)] and sol.total_weight == 6


def test_close_pair():
    g = chain_graph([20, 4, 6, 20])
    sol = decode_batch(g, [1, 3], prematch=False)
    assert sol.pairs == [(1, 3)] and sol.total_weight == 10


def test_two_isolated_nodes_match():
    g = chain_graph([8, 4, 8])
    pl, primal = start(g, [1, 2])
    pl.accel.grow(pl.accel.find_conflict().max_growth)
    primal.time += 2
    c = pl.accel.find_conflict()
    assert isinstance(c, Conflict)
    primal.resolve_conflict(c)
    assert primal.nodes[1].match == 2 and primal.nodes[2].match == 1
    assert primal.nodes[1].direction == 0 and primal.nodes[2].direction == 0
    assert pl.accel.dirn[1] == 0 and pl.accel.dirn[2] == 0


def test_virtual_conflict_boundary_match():
    g = chain_graph([4, 12, 12])
    pl, primal = start(g, [1])
    primal.run()
    assert primal.nodes[1].match == 0 and primal.nodes[1].match_virtual
    assert primal.extract().boundary_matches == [(1, 0)]


def test_triangle_blossom_trace():
    g = custom_graph(4, [(0, 1, 4), (1, 2, 4), (0, 2, 4), (0, 3, 20)], virtual=(3,))
    pl, primal = start(g, [0, 1, 2])
    issued = []
    acc = pl.accel
    set_cover, set_direction = acc.set_cover, acc.set_direction
    acc.set_cover = lambda old, new: (issued.append(("cover", old, new)), set_cover(old, new))[1]
    acc.set_direction = lambda node, d: (issued.append(("dir", node, d)), set_direction(node, d))[1]
    primal.run()
    blossoms = [r for r in primal.nodes.values() if r.is_blossom]
    assert len(blossoms) == 1
    bid = blossoms[0].id
    assert sorted(blossoms[0].children) == [0, 1, 2]
    covers = [x for x in issued if x[0] == "cover"]
    assert sorted(covers) == [("cover", 0, bid), ("cover", 1, bid), ("cover", 2, bid)]
    assert issued.index(("dir", bid, 1)) > max(issued.index(c) for c in covers)
    assert (acc.node[[0, 1, 2]] == bid).all()
    sol = primal.extract()
    assert sol.pairs == [(1, 2)] and sol.boundary_matches == [(0, 3)] and sol.total_weight == 24
    with pytest.raises(PrimalError):
        primal.expand_blossom(bid)


def _expansion_instance(gseed, defects):
    g = reweighted(build_surface_graph_3d(5, 3, 0.05), np.random.default_rng(gseed))
    return g, defects


# instances found by a random search over reweighted d=5, 3-round graphs
PLAIN = _expansion_instance(0, [9, 20, 23, 24, 37, 45])
NESTED = _expansion_instance(4, [3, 18, 25, 26, 28, 42, 46])


@pytest.mark.parametrize("instance,nested", [(PLAIN, False), (NESTED, True)])
def test_blossom_expansion(instance, nested, monkeypatch):
    g, defects = instance
    seen = []
    original = PrimalSolver.expand_blossom

    def spy(self, bid):
        rec = self.nodes[bid]
        inner = [c for c in rec.children if self.nodes[c].is_blossom]
        assert rec.direction == -1 and self.y(rec) == 0
        original(self, bid)
        assert bid not in self.nodes
        for c in rec.children:
            assert self.nodes[c].parent_blossom is None
        for c in inner:
            assert self.nodes[c].is_blossom
        _check_directions(self)
        seen.append(bool(inner))

    monkeypatch.setattr(PrimalSolver, "expand_blossom", spy)
    sol = Pipeline(g, False).decode(defects)
    assert seen and (nested in seen)
    sg = build_syndrome_graph(g, defects)
    assert verify(sol, sg)
    assert certificate_problems(sol, sg) == []


def _check_directions(primal):
    for rec in primal.nodes.values():
        if rec.parent_blossom is not None:
            continue
        if rec.match is not None and rec.tree_parent is None and not rec.tree_children:
            assert rec.direction == 0
        if rec.tree_parent is not None:
            parent = primal.nodes[rec.tree_parent]
            assert rec.direction == -parent.direction
        elif rec.tree_children or rec.match is None:
            if rec.tree_children or rec.direction != 0:
                assert rec.direction == 1


def test_prematched_pairs_leave_registry_unresolved():
    g = chain_graph([20, 4, 20, 20, 4, 20])
    pl, primal = start(g, [1, 2, 4, 5], prematch=True)
    primal.run()
    assert primal.interactions == 0
    assert all(rec.match is None for rec in primal.nodes.values())
    sol = primal.extract()
    assert sol.pairs == [(1, 2), (4, 5)] and sol.prematched_edges == [1, 4]
    assert sol.total_weight == 8


def test_blossom_matched_externally_resolves_interior():
    g = custom_graph(4, [(0, 1, 4), (1, 2, 4), (0, 2, 4), (0, 3, 20)], virtual=(3,))
    sol = decode_batch(g, [0, 1, 2], prematch=False)
    assert len(sol.pairs) == 1 and len(sol.boundary_matches) == 1


@pytest.mark.parametrize("prematch", [True, False])
def test_random_instances_against_oracle(prematch):
    rng = np.random.default_rng(3)
    graphs = [build_surface_graph_3d(5, 3, 0.05, 0.02), build_repetition_graph(11, 0.1)]
    graphs += [reweighted(g, rng) for g in graphs]
    for g in graphs:
        pl = Pipeline(g, prematch)
        reg = g.regular_vertices()
        for _ in range(60):
            defects = sorted(rng.choice(reg, size=min(int(rng.integers(0, 11)), len(reg)), replace=False).tolist())
            sol = pl.decode(defects)
            sg = build_syndrome_graph(g, defects)
            v = verify(sol, sg)
            assert v, (defects, v.diagnostics)
            assert sol.total_weight == exhaustive_mwpm(sg)[0]
            assert certificate_problems(sol, sg) == []
            assert sol.stats.grows <= 4 * g.num_vertices + 4 * len(defects)


class _Audited(PrimalSolver):
    """Checks accelerator claims against oracle distances as the solver runs."""

    def resolve_conflict(self, c):
        dist = self.accel.graph.distance_matrix
        cert = self.certificate()
        t1, t2 = c.touch1, c.touch2
        if t1 not in cert.radius:
            t1, t2 = t2, t1
        # the reported touches are joined by a tight path in the syndrome graph
        partner = t2 if t2 in cert.radius else None
        ys = cert.separating_sum(t1, partner)
        assert ys == dist[t1, t2], (c, ys, dist[t1, t2])
        super().resolve_conflict(c)

    def run(self):
        accel = self.accel
        original = accel.grow

        def grow(length):
            original(length)
            self._feasible()

        accel.grow = grow
        try:
            super().run()
        finally:
            del accel.grow

    def _feasible(self):
        acc = self.accel
        assert (acc.res >= 0).all()
        for e, (u, v) in enumerate(acc.graph.endpoints):
            nu, nv = acc.node[u], acc.node[v]
            if nu >= 0 and nv >= 0 and nu != nv:
                assert acc.res[u] + acc.res[v] <= acc.w[e]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 10), st.booleans())
def test_tightness_soundness_and_growth_safety(seed, k, prematch):
    rng = np.random.default_rng(seed)
    g = reweighted(build_surface_graph_3d(3, 3, 0.05), rng)
    pl = Pipeline(g, prematch)
    primal = _Audited(pl.accel)
    pl.accel.cycle_count = 0
    pl.accel.reset()
    defects = sorted(rng.choice(g.regular_vertices(), size=k, replace=False).tolist())
    mask = np.zeros(g.num_vertices, dtype=bool)
    mask[defects] = True
    for layer in pl.layer_ids:
        primal.add_defects(pl.accel.load_defects(layer, mask[pl.layer_vertices[layer]]))
    primal.run()
    sol = pl.finish(primal)
    assert verify(sol, build_syndrome_graph(g, defects))


def test_certificate_units():
    sol = decode_batch(chain_graph([4, 2, 4]), [1, 2], prematch=False)
    assert sol.duals.radius == {1: Fraction(1), 2: Fraction(1)}
    assert sol.duals.separating_sum(1, 2) == 2


def test_defect_validation():
    g = build_repetition_graph(5, 0.01)
    with pytest.raises(ValueError):
        decode_batch(g, [0])
    with pytest.raises(ValueError):
        decode_batch(g, [17])
