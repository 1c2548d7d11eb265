"""Cycle-counted simulation of the dual-phase accelerator.

Every vertex holds the compact state ``(t_v, n_v, r_v, s_v, d_v, b_v)`` and
every edge its weight. Boundary vertices (virtual vertices and vertices of
layers not loaded yet) behave as defects whose cover never grows: their touch
and node are their own vertex id, so a node id below ``|V|`` that the primal
solver does not know is a boundary vertex.

Each instruction is evaluated as pre-match, execute, update: pre-match flags
are recomputed from the current state and mask the directions of isolated
pairs, then the instruction runs, then cover labels are propagated to a
fixpoint. Cycle accounting is +1 per broadcast, +1 per update pass that changed
state, and ``ceil(log2 |E|)`` for the convergecast of ``find_conflict``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .graph import DecodingGraph
from .isa import (
    Conflict,
    FindConflict,
    Grow,
    Instruction,
    LoadDefects,
    NoObstacle,
    Reset,
    Response,
    SetCover,
    SetDirection,
)

NONE = K.NONE
_MAX_SCALE = 1 << 40
PREMATCH_KIND = {K.PM_REGULAR: "regular", K.PM_BOUNDARY: "boundary", K.PM_FUSION: "fusion"}


class AcceleratorError(RuntimeError):
    pass


@dataclass(frozen=True)
class VertexState:
    """Snapshot of one vertex, with the residue in graph weight units (may be a half)."""

    index: int
    touch: int | None
    node: int | None
    residue: float
    direction: int
    is_defect: bool
    is_boundary: bool


class DualAccelerator:
    """Array of vertex and edge processing units driven by :mod:`microblossom.isa` instructions.

    Parameters
    ----------
    graph : DecodingGraph
        Graph to decode on. Zero-weight edges are rejected.
    prematch : bool
        Enable detection and local handling of isolated conflicts.
    """

    def __init__(self, graph: DecodingGraph, prematch: bool = True) -> None:
        if graph.num_edges and int(graph.weights.min()) <= 0:
            raise ValueError("accelerator requires strictly positive edge weights")
        self.graph = graph
        self.prematch_enabled = bool(prematch)
        self._eu = np.ascontiguousarray(graph.endpoints[:, 0])
        self._ev = np.ascontiguousarray(graph.endpoints[:, 1])
        self._indptr, self._nbr, self._eid = graph.csr
        self._virtual = graph.is_virtual.copy()
        self._layers = graph.layers
        self._layer_vertices = {int(k): graph.layer_vertices(int(k)) for k in np.unique(graph.layers)}
        self._depth = math.ceil(math.log2(max(graph.num_edges, 2)))
        n = graph.num_vertices
        self.touch = np.empty(n, dtype=np.int64)
        self.node = np.empty(n, dtype=np.int64)
        self.res = np.empty(n, dtype=np.int64)
        self.dirn = np.empty(n, dtype=np.int64)
        self.defect = np.empty(n, dtype=np.bool_)
        self.boundary = np.empty(n, dtype=np.bool_)
        self._seff = np.empty(n, dtype=np.int64)
        self._chosen = np.empty(n, dtype=np.int64)
        self._kinds = np.empty(graph.num_edges, dtype=np.int64)
        self.cycle_count = 0
        self.update_iterations = 0
        self.reset()

    # -- instructions --------------------------------------------------

    def reset(self) -> None:
        ids = np.arange(self.graph.num_vertices, dtype=np.int64)
        self.touch[:] = ids
        self.node[:] = ids
        self.res[:] = 0
        self.dirn[:] = 0
        self.defect[:] = False
        self.boundary[:] = True
        self.w = self.graph.weights.copy()
        self.scale = 1
        self.loaded_layers: set[int] = set()
        self.cycle_count += 1

    def load_defects(self, layer: int, defect_bits) -> list[int]:
        """Load one layer; ``defect_bits`` is a boolean per vertex of the layer in id order.

        Returns the defect vertex ids of the layer.
        """
        verts = self._layer_vertices.get(layer)
        if verts is None:
            raise AcceleratorError(f"unknown layer {layer}")
        if layer in self.loaded_layers:
            raise AcceleratorError(f"layer {layer} already loaded")
        bits = np.asarray(defect_bits, dtype=np.bool_)
        if bits.shape != verts.shape:
            raise AcceleratorError(f"layer {layer} has {len(verts)} vertices, got {bits.size} bits")
        if np.any(bits & self._virtual[verts]):
            raise AcceleratorError("virtual vertices never carry defects")
        self.loaded_layers.add(layer)
        regular = verts[~self._virtual[verts]]
        defects = verts[bits]
        self.boundary[regular] = False
        self.touch[regular] = NONE
        self.node[regular] = NONE
        self.res[regular] = 0
        self.dirn[regular] = 0
        self.defect[defects] = True
        self.touch[defects] = defects
        self.node[defects] = defects
        self.dirn[defects] = 1
        self.cycle_count += 1
        self._update()
        return defects.tolist()

    def set_direction(self, node: int, direction: int) -> None:
        if direction not in (-1, 0, 1):
            raise ValueError(f"direction must be -1, 0 or +1, got {direction}")
        mask = (self.node == node) & ~self.boundary
        self.dirn[mask] = direction
        self.cycle_count += 1
        self._update()

    def set_cover(self, old: int, new: int) -> None:
        mask = ((self.node == old) | (self.touch == old)) & ~self.boundary
        self.node[mask] = new
        self.cycle_count += 1
        self._update()

    def grow(self, length: int) -> None:
        """Grow every node by ``length`` (in current internal units) times its direction."""
        if length < 0:
            raise ValueError("grow length must be non-negative")
        self._prematch()
        K.grow(length, self.node, self.res, self._seff, self.boundary)
        self.cycle_count += 1
        self._update()

    def find_conflict(self) -> Response:
        """Report a conflict, or the largest safe growth length.

        When the safe length is a half unit, every residue and weight is doubled
        first (``scale`` doubles) so the returned length is integral; callers
        tracking dual values must rescale when ``scale`` changes.
        """
        self._prematch()
        kind, a, b, c, twice = K.find_conflict(
            self._eu, self._ev, self.w, self._indptr, self._nbr, self._eid,
            self.node, self.res, self._seff, self.defect, self.boundary,
        )
        self.cycle_count += 1 + self._depth
        if kind == 1:
            u, v = int(self._eu[a]), int(self._ev[a])
            return Conflict(u, v, int(self.node[u]), int(self.node[v]), int(self.touch[u]), int(self.touch[v]), int(a))
        if kind == 2:
            return Conflict(
                int(b), int(c), int(self.node[b]), int(self.node[c]),
                int(self.touch[b]), int(self.touch[c]), None, int(a),
            )
        if twice < 0:
            return NoObstacle(None)
        if twice % 2:
            self._double()
            return NoObstacle(int(twice))
        return NoObstacle(int(twice // 2))

    def execute(self, instr: Instruction) -> Response | None:
        if isinstance(instr, Reset):
            self.reset()
        elif isinstance(instr, SetDirection):
            self.set_direction(instr.node, instr.direction)
        elif isinstance(instr, Grow):
            self.grow(instr.length)
        elif isinstance(instr, SetCover):
            self.set_cover(instr.old, instr.new)
        elif isinstance(instr, FindConflict):
            return self.find_conflict()
        elif isinstance(instr, LoadDefects):
            self.load_defects(instr.layer, instr.defect_bits)
        else:
            raise TypeError(f"not an instruction: {instr!r}")
        return None

    # -- internals -----------------------------------------------------

    def _update(self) -> int:
        it = K.update_cover(
            self._indptr, self._nbr, self._eid, self.w, self.touch, self.node,
            self.res, self.dirn, self.defect, self.boundary, 4 * self.graph.num_vertices + 16,
        )
        if it < 0:
            raise AcceleratorError("cover update did not converge")
        self.cycle_count += it
        self.update_iterations += it
        return it

    def _prematch(self) -> int:
        return K.prematch(
            self._eu, self._ev, self.w, self._indptr, self._nbr, self._eid,
            self.touch, self.node, self.res, self.dirn, self.defect, self.boundary,
            self.prematch_enabled, self._seff, self._kinds, self._chosen,
        )

    def _double(self) -> None:
        if self.scale >= _MAX_SCALE:
            raise AcceleratorError("internal resolution limit reached")
        self.res *= 2
        self.w *= 2
        self.scale *= 2

    # -- observation ---------------------------------------------------

    def prematch_flags(self) -> dict[int, str]:
        """Pre-match flags of the current state, edge id to kind."""
        self._prematch()
        return {int(e): PREMATCH_KIND[int(k)] for e, k in enumerate(self._kinds) if k}

    def prematched_edges(self) -> dict[int, int]:
        """Defect vertex to the edge it is currently pre-matched through."""
        self._prematch()
        return {int(v): int(e) for v, e in enumerate(self._chosen) if e != NONE}

    def effective_directions(self) -> np.ndarray:
        self._prematch()
        return self._seff.copy()

    def residues(self) -> np.ndarray:
        """Residues in graph weight units (floats)."""
        return self.res / self.scale

    def vertex_states(self) -> list[VertexState]:
        out = []
        for v in range(self.graph.num_vertices):
            t = int(self.touch[v])
            nd = int(self.node[v])
            out.append(
                VertexState(
                    v,
                    None if t < 0 else t,
                    None if nd < 0 else nd,
                    float(self.res[v]) / self.scale,
                    int(self.dirn[v]),
                    bool(self.defect[v]),
                    bool(self.boundary[v]),
                )
            )
        return out
