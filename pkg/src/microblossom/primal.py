"""Primal phase of the blossom algorithm driving a :class:`DualAccelerator`.

The solver owns the node registry: alternating trees, matched pairs and the
blossom hierarchy. The accelerator only knows node ids, directions and covers;
every structural change is pushed to it as ``set_direction`` / ``set_cover``.
Node ids below ``|V|`` are defect vertices (or boundary vertices when absent
from the registry); blossom ids are allocated from ``|V|`` upward.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .accelerator import DualAccelerator
from .graph import DecodingGraph
from .isa import Conflict, NoObstacle


class PrimalError(RuntimeError):
    """The primal registry and the accelerator state disagree."""


@dataclass(eq=False)
class NodeRecord:
    id: int
    is_blossom: bool = False
    children: list[int] = field(default_factory=list)
    # cycle_touches[i] joins children[i] and children[i + 1]: (defect in i, defect in i + 1)
    cycle_touches: list[tuple[int, int]] = field(default_factory=list)
    parent_blossom: int | None = None
    tree_parent: int | None = None
    tree_parent_touch: tuple[int, int] | None = None  # (defect in self, defect in parent)
    tree_children: list[int] = field(default_factory=list)
    match: int | None = None
    match_touch: tuple[int, int] | None = None  # (defect in self, defect or vertex of peer)
    match_virtual: bool = False
    y_base: int = 0
    t_base: int = 0
    direction: int = 1


@dataclass(frozen=True)
class DualCertificate:
    """Radii of defects and blossom duals at termination, in graph weight units."""

    radius: dict[int, Fraction]
    blossoms: list[tuple[frozenset[int], Fraction]]

    def separating_sum(self, a: int, b: int | None) -> Fraction:
        """Sum of duals of nodes containing exactly one of ``a`` and ``b`` (``None``: boundary)."""
        total = self.radius[a] + (self.radius[b] if b is not None else 0)
        if b is not None:
            for members, y in self.blossoms:
                if a in members and b in members:
                    total -= 2 * y
        return total


@dataclass
class DecodeStats:
    cycle_count: int = 0
    interactions: int = 0
    grows: int = 0
    round_cycles: list[int] = field(default_factory=list)


@dataclass
class MatchingSolution:
    pairs: list[tuple[int, int]]
    boundary_matches: list[tuple[int, int]]
    prematched_edges: list[int]
    total_weight: int
    duals: DualCertificate | None = None
    stats: DecodeStats = field(default_factory=DecodeStats)

    @property
    def defects(self) -> list[int]:
        out = [v for pair in self.pairs for v in pair] + [d for d, _ in self.boundary_matches]
        return sorted(out)


class PrimalSolver:
    def __init__(self, accel: DualAccelerator) -> None:
        self.accel = accel
        self.n = accel.graph.num_vertices
        self.nodes: dict[int, NodeRecord] = {}
        self.time = 0
        self._scale = accel.scale
        self._zero_heap: list[tuple[int, int]] = []
        self._free_ids = list(range(self.n, 2 * self.n))
        self.interactions = 0
        self.grows = 0

    # -- dual bookkeeping ------------------------------------------------

    def y(self, rec: NodeRecord) -> int:
        if rec.parent_blossom is not None:
            return rec.y_base
        return rec.y_base + rec.direction * (self.time - rec.t_base)

    def _set_dir(self, rec: NodeRecord, direction: int, force: bool = False) -> None:
        if rec.direction == direction and not force:
            return
        rec.y_base = self.y(rec)
        rec.t_base = self.time
        rec.direction = direction
        self.accel.set_direction(rec.id, direction)
        if direction == -1 and rec.is_blossom:
            heapq.heappush(self._zero_heap, (self.time + rec.y_base, rec.id))

    def _sync_scale(self) -> None:
        if self.accel.scale == self._scale:
            return
        factor = self.accel.scale // self._scale
        self._scale = self.accel.scale
        self.time *= factor
        for rec in self.nodes.values():
            rec.y_base *= factor
            rec.t_base *= factor
        self._zero_heap = [(t * factor, i) for t, i in self._zero_heap]

    def _next_zero(self) -> tuple[int, int] | None:
        heap = self._zero_heap
        while heap:
            when, bid = heap[0]
            rec = self.nodes.get(bid)
            if (
                rec is not None and rec.is_blossom and rec.parent_blossom is None
                and rec.direction == -1 and rec.t_base + rec.y_base == when
            ):
                return when, bid
            heapq.heappop(heap)
        return None

    # -- registry helpers ---------------------------------------------------

    def add_defects(self, vertices) -> None:
        for v in vertices:
            v = int(v)
            if v in self.nodes:
                raise PrimalError(f"defect {v} registered twice")
            self.nodes[v] = NodeRecord(v, t_base=self.time)

    def outer(self, node_id: int) -> NodeRecord:
        rec = self.nodes[node_id]
        while rec.parent_blossom is not None:
            rec = self.nodes[rec.parent_blossom]
        return rec

    def _child_containing(self, blossom: NodeRecord, defect: int) -> int:
        rec = self.nodes[defect]
        while rec.parent_blossom != blossom.id:
            if rec.parent_blossom is None:
                raise PrimalError(f"defect {defect} is not inside blossom {blossom.id}")
            rec = self.nodes[rec.parent_blossom]
        return rec.id

    def _defects_of(self, rec: NodeRecord) -> list[int]:
        if not rec.is_blossom:
            return [rec.id]
        out: list[int] = []
        for c in rec.children:
            out.extend(self._defects_of(self.nodes[c]))
        return out

    def _root(self, rec: NodeRecord) -> NodeRecord:
        while rec.tree_parent is not None:
            rec = self.nodes[rec.tree_parent]
        return rec

    # -- main loop ----------------------------------------------------------

    def run(self) -> None:
        """Alternate conflict resolution and growth until no obstacle remains."""
        accel = self.accel
        while True:
            resp = accel.find_conflict()
            self._sync_scale()
            if isinstance(resp, Conflict):
                self.interactions += 1
                self.resolve_conflict(resp)
                continue
            zero = self._next_zero()
            if zero is not None and zero[0] == self.time:
                self.expand_blossom(zero[1])
                continue
            length = resp.max_growth
            if zero is not None:
                gap = zero[0] - self.time
                length = gap if length is None else min(length, gap)
            if length is None:
                return
            if length <= 0:
                raise PrimalError("no progress: zero growth length without an obstacle")
            accel.grow(length)
            self.time += length
            self.grows += 1

    # -- conflict resolution ---------------------------------------------

    def resolve_conflict(self, c: Conflict) -> None:
        a_id, b_id, ta, tb = c.node1, c.node2, c.touch1, c.touch2
        if a_id not in self.nodes:
            a_id, b_id, ta, tb = b_id, a_id, tb, ta
        if a_id not in self.nodes:
            raise PrimalError(f"conflict between two boundary vertices {c}")
        a = self.nodes[a_id]
        b = self.nodes.get(b_id)
        if a.direction != 1 and b is not None and b.direction == 1:
            a, b, ta, tb = b, a, tb, ta
        if a.direction != 1 or a.parent_blossom is not None:
            raise PrimalError(f"conflict without a growing outer node: {c}")
        if b is None:
            self._augment(a, ta, b_id, tb, virtual=True)
        elif b.parent_blossom is not None:
            raise PrimalError(f"conflict names inner node {b.id}")
        elif b.direction == 1:
            if self._root(a) is self._root(b):
                self._form_blossom(a, b, ta, tb)
            else:
                self._augment(a, ta, b.id, tb)
                self._augment(b, tb, a.id, ta)
        elif b.direction == 0:
            if b.match is None:
                raise PrimalError(f"node {b.id} has direction 0 but no match")
            if b.match_virtual:
                self._augment(a, ta, b.id, tb)
                b.match, b.match_touch, b.match_virtual = a.id, (tb, ta), False
            else:
                m = self.nodes[b.match]
                b.tree_parent, b.tree_parent_touch = a.id, (tb, ta)
                a.tree_children.append(b.id)
                m.tree_parent, m.tree_parent_touch = b.id, m.match_touch
                b.tree_children = [m.id]
                self._set_dir(b, -1)
                self._set_dir(m, 1)
        else:
            raise PrimalError(f"conflict between growing and shrinking nodes: {c}")

    def _augment(self, x: NodeRecord, tx: int, peer: int, tp: int, virtual: bool = False) -> None:
        x.match, x.match_touch, x.match_virtual = peer, (tx, tp), virtual
        cur = x
        while cur.tree_parent is not None:
            y = self.nodes[cur.tree_parent]
            z = self.nodes[y.tree_parent]
            ty, tz = y.tree_parent_touch
            y.match, y.match_touch, y.match_virtual = z.id, (ty, tz), False
            z.match, z.match_touch, z.match_virtual = y.id, (tz, ty), False
            cur = z
        stack = [cur]
        while stack:
            rec = stack.pop()
            stack.extend(self.nodes[k] for k in rec.tree_children)
            rec.tree_parent = rec.tree_parent_touch = None
            rec.tree_children = []
            self._set_dir(rec, 0)

    def _alloc_id(self) -> int:
        if not self._free_ids:
            raise PrimalError("blossom id space exhausted")
        return heapq.heappop(self._free_ids)

    def _form_blossom(self, a: NodeRecord, b: NodeRecord, ta: int, tb: int) -> None:
        path_a = [a]
        while path_a[-1].tree_parent is not None:
            path_a.append(self.nodes[path_a[-1].tree_parent])
        on_a = {rec.id: k for k, rec in enumerate(path_a)}
        path_b = [b]
        while path_b[-1].id not in on_a:
            path_b.append(self.nodes[path_b[-1].tree_parent])
        lca = path_b[-1]
        path_a = path_a[: on_a[lca.id] + 1]

        cycle: list[NodeRecord] = []
        touches: list[tuple[int, int]] = []
        for k in range(len(path_a) - 1, 0, -1):
            child = path_a[k - 1]
            cycle.append(path_a[k])
            mine, theirs = child.tree_parent_touch
            touches.append((theirs, mine))
        cycle.append(a)
        touches.append((ta, tb))
        for k in range(len(path_b) - 1):
            cycle.append(path_b[k])
            touches.append(path_b[k].tree_parent_touch)
        if len(cycle) % 2 == 0 or len(cycle) < 3:
            raise PrimalError("blossom cycle must be odd with at least three nodes")

        bid = self._alloc_id()
        blossom = NodeRecord(bid, is_blossom=True, direction=0, t_base=self.time)
        blossom.children = [rec.id for rec in cycle]
        blossom.cycle_touches = touches
        blossom.tree_parent, blossom.tree_parent_touch = lca.tree_parent, lca.tree_parent_touch
        if lca.tree_parent is not None:
            parent = self.nodes[lca.tree_parent]
            parent.tree_children = [bid if k == lca.id else k for k in parent.tree_children]
        if lca.match is not None:
            blossom.match, blossom.match_touch, blossom.match_virtual = lca.match, lca.match_touch, lca.match_virtual
            if not lca.match_virtual:
                self.nodes[lca.match].match = bid
        in_cycle = set(blossom.children)
        for rec in cycle:
            for k in rec.tree_children:
                if k not in in_cycle:
                    blossom.tree_children.append(k)
                    self.nodes[k].tree_parent = bid
        self.nodes[bid] = blossom
        for rec in cycle:
            rec.y_base = self.y(rec)
            rec.parent_blossom = bid
            rec.direction = 0
            rec.tree_parent = rec.tree_parent_touch = None
            rec.tree_children = []
            rec.match = rec.match_touch = None
            rec.match_virtual = False
            self.accel.set_cover(rec.id, bid)
        self._set_dir(blossom, 1)

    # -- blossom expansion -----------------------------------------------

    def expand_blossom(self, bid: int) -> None:
        """Dissolve the outer layer of a shrinking blossom whose dual reached zero."""
        b = self.nodes.get(bid)
        if b is None or not b.is_blossom:
            raise PrimalError(f"node {bid} is not a blossom")
        if b.parent_blossom is not None or b.direction != -1 or self.y(b) != 0:
            raise PrimalError(f"blossom {bid} is not a zero-dual shrinking outer node")
        parent = self.nodes[b.tree_parent]
        t_in_parent_edge, t_parent = b.tree_parent_touch
        child = self.nodes[b.match]
        t_in_child_edge, t_child = b.match_touch

        kids, ct = b.children, b.cycle_touches
        k = len(kids)
        ia = kids.index(self._child_containing(b, t_in_parent_edge))
        ib = kids.index(self._child_containing(b, t_in_child_edge))
        fwd = (ib - ia) % k
        if fwd % 2 == 0:
            path = [kids[(ia + j) % k] for j in range(fwd + 1)]
            links = [ct[(ia + j) % k] for j in range(fwd)]
            rest_start, rest_len = (ib + 1) % k, k - fwd - 1
        else:
            back = k - fwd
            path = [kids[(ia - j) % k] for j in range(back + 1)]
            links = [tuple(reversed(ct[(ia - j - 1) % k])) for j in range(back)]
            rest_start, rest_len = (ia + 1) % k, k - back - 1

        for c in kids:
            rec = self.nodes[c]
            rec.parent_blossom = None
            rec.t_base = self.time
        for d in self._defects_of(b):
            self.accel.set_cover(d, self._child_containing_after(d, kids))

        first = self.nodes[path[0]]
        first.tree_parent, first.tree_parent_touch = parent.id, (t_in_parent_edge, t_parent)
        parent.tree_children = [path[0] if x == bid else x for x in parent.tree_children]
        for j in range(len(path) - 1):
            u, v = self.nodes[path[j]], self.nodes[path[j + 1]]
            tu, tv = links[j]
            v.tree_parent, v.tree_parent_touch = u.id, (tv, tu)
            u.tree_children = [v.id]
            if j % 2 == 0:
                u.match, u.match_touch, u.match_virtual = v.id, (tu, tv), False
                v.match, v.match_touch, v.match_virtual = u.id, (tv, tu), False
        last = self.nodes[path[-1]]
        last.tree_children = [child.id]
        last.match, last.match_touch, last.match_virtual = child.id, (t_in_child_edge, t_child), False
        child.tree_parent, child.tree_parent_touch = last.id, (t_child, t_in_child_edge)
        child.match, child.match_touch = last.id, (t_child, t_in_child_edge)

        for j in range(0, rest_len, 2):
            i1, i2 = (rest_start + j) % k, (rest_start + j + 1) % k
            u, v = self.nodes[kids[i1]], self.nodes[kids[i2]]
            tu, tv = ct[i1]
            u.match, u.match_touch, u.match_virtual = v.id, (tu, tv), False
            v.match, v.match_touch, v.match_virtual = u.id, (tv, tu), False

        del self.nodes[bid]
        heapq.heappush(self._free_ids, bid)
        for j, c in enumerate(path):
            self._set_dir(self.nodes[c], -1 if j % 2 == 0 else 1, force=True)
        on_path = set(path)
        for c in kids:
            if c not in on_path:
                self._set_dir(self.nodes[c], 0, force=True)

    def _child_containing_after(self, defect: int, kids: list[int]) -> int:
        rec = self.nodes[defect]
        members = set(kids)
        while rec.id not in members:
            rec = self.nodes[rec.parent_blossom]
        return rec.id

    # -- stream support ------------------------------------------------------

    def release_boundary(self, vertices) -> int:
        """Unmatch outer nodes matched to any of ``vertices`` (former boundary); returns how many."""
        released = set(int(v) for v in vertices)
        count = 0
        for rec in list(self.nodes.values()):
            if rec.parent_blossom is None and rec.match_virtual and rec.match in released:
                rec.match = rec.match_touch = None
                rec.match_virtual = False
                self._set_dir(rec, 1)
                count += 1
        return count

    # -- extraction ------------------------------------------------------------

    def _expand_pairs(self, rec: NodeRecord, touch: int, out: list[tuple[int, int]]) -> None:
        if not rec.is_blossom:
            if touch != rec.id:
                raise PrimalError(f"touch {touch} does not belong to defect node {rec.id}")
            return
        kids, ct = rec.children, rec.cycle_touches
        k = len(kids)
        j = kids.index(self._child_containing(rec, touch))
        self._expand_pairs(self.nodes[kids[j]], touch, out)
        for i in range(1, k, 2):
            c1, c2 = (j + i) % k, (j + i + 1) % k
            t1, t2 = ct[c1]
            out.append((t1, t2))
            self._expand_pairs(self.nodes[kids[c1]], t1, out)
            self._expand_pairs(self.nodes[kids[c2]], t2, out)

    def extract(self) -> MatchingSolution:
        pairs: list[tuple[int, int]] = []
        boundary: list[tuple[int, int]] = []
        prematched = self.accel.prematched_edges()
        used_edges: set[int] = set()
        endpoints = self.accel.graph.endpoints
        for rec in self.nodes.values():
            if rec.parent_blossom is not None:
                continue
            if rec.match is None:
                if rec.is_blossom or rec.tree_children or rec.id not in prematched:
                    raise PrimalError(f"node {rec.id} left unmatched")
                e = prematched[rec.id]
                u, v = (int(x) for x in endpoints[e])
                other = v if u == rec.id else u
                if other in self.nodes:
                    if prematched.get(other) != e or self.nodes[other].match is not None:
                        raise PrimalError(f"inconsistent pre-matched pair on edge {e}")
                    if e not in used_edges:
                        pairs.append((rec.id, other))
                else:
                    boundary.append((rec.id, other))
                used_edges.add(e)
                continue
            mine, theirs = rec.match_touch
            if rec.match_virtual:
                boundary.append((mine, theirs))
                self._expand_pairs(rec, mine, pairs)
            elif rec.id < rec.match:
                pairs.append((mine, theirs))
                self._expand_pairs(rec, mine, pairs)
                self._expand_pairs(self.nodes[rec.match], theirs, pairs)
        covered = [v for p in pairs for v in p] + [d for d, _ in boundary]
        defects = [k for k, rec in self.nodes.items() if not rec.is_blossom]
        if sorted(covered) != sorted(defects):
            raise PrimalError("matching does not cover every defect exactly once")
        pairs = sorted(tuple(sorted(p)) for p in pairs)
        boundary.sort()
        weight = matching_weight(self.accel.graph, pairs, boundary)
        return MatchingSolution(pairs, boundary, sorted(used_edges), weight, self.certificate())

    def certificate(self) -> DualCertificate:
        scale = self.accel.scale
        radius = {k: Fraction(int(self.accel.res[k]), scale) for k, rec in self.nodes.items() if not rec.is_blossom}
        blossoms = [
            (frozenset(self._defects_of(rec)), Fraction(self.y(rec), scale))
            for rec in self.nodes.values()
            if rec.is_blossom
        ]
        return DualCertificate(radius, blossoms)


_ALL_PAIRS_LIMIT = 4096


def matching_weight(graph: DecodingGraph, pairs, boundary) -> int:
    """Sum of shortest-path distances of matched pairs and boundary matches."""
    ends = list(pairs) + list(boundary)
    if not ends:
        return 0
    if graph.num_vertices <= _ALL_PAIRS_LIMIT:
        dist = graph.distance_matrix
        total = sum(dist[a, b] for a, b in ends)
    else:
        sources = sorted({a for a, _ in ends})
        rows = dijkstra(graph.weight_matrix, directed=False, indices=sources)
        row = {s: k for k, s in enumerate(sources)}
        total = sum(rows[row[a], b] for a, b in ends)
    if not np.isfinite(total):
        raise PrimalError("matched vertices are disconnected")
    return int(round(total))


class Pipeline:
    """Reusable accelerator plus primal driver for one graph."""

    def __init__(self, graph: DecodingGraph, prematch: bool = True) -> None:
        self.graph = graph
        self.prematch = prematch
        self.accel = DualAccelerator(graph, prematch=prematch)
        self.layer_ids = sorted(set(int(x) for x in graph.layers))
        self.layer_vertices = {layer: graph.layer_vertices(layer) for layer in self.layer_ids}
        self._virtual = graph.is_virtual

    def check_defects(self, defects) -> np.ndarray:
        arr = np.unique(np.asarray(list(defects), dtype=np.int64))
        if arr.size and (arr[0] < 0 or arr[-1] >= self.graph.num_vertices):
            raise ValueError("defect vertex out of range")
        if arr.size and self._virtual[arr].any():
            raise ValueError("defects must be regular vertices")
        return arr

    def fresh(self) -> PrimalSolver:
        """Reset the accelerator and return a new primal solver bound to it."""
        self.accel.cycle_count = 0
        self.accel.reset()
        return PrimalSolver(self.accel)

    def decode(self, defects) -> MatchingSolution:
        """Load every layer, then run the blossom loop to completion."""
        arr = self.check_defects(defects)
        mask = np.zeros(self.graph.num_vertices, dtype=np.bool_)
        mask[arr] = True
        primal = self.fresh()
        for layer in self.layer_ids:
            verts = self.layer_vertices[layer]
            primal.add_defects(self.accel.load_defects(layer, mask[verts]))
        primal.run()
        return self.finish(primal)

    def finish(self, primal: PrimalSolver, round_cycles: list[int] | None = None) -> MatchingSolution:
        solution = primal.extract()
        solution.stats = DecodeStats(self.accel.cycle_count, primal.interactions, primal.grows, list(round_cycles or []))
        return solution


def decode_batch(graph: DecodingGraph, defects, prematch: bool = True) -> MatchingSolution:
    """Minimum-weight perfect matching of ``defects`` (regular vertex ids)."""
    return Pipeline(graph, prematch).decode(defects)
