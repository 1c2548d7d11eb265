"""Round-wise fusion: decode while measurement layers arrive one at a time.

Layers that have not arrived are boundary vertices to the accelerator, so a
node may match into a future layer as if it were the code boundary. When that
layer loads, such matches are broken and the affected nodes grow again; after
the final layer the result is a minimum-weight matching of the whole syndrome.
"""

from __future__ import annotations

import numpy as np

from .graph import DecodingGraph
from .primal import MatchingSolution, Pipeline


class StreamError(RuntimeError):
    pass


class StreamContext:
    """Incremental decoding state for one syndrome stream.

    Parameters
    ----------
    graph : DecodingGraph
    prematch : bool
        Forwarded to the accelerator; ignored when ``pipeline`` is given.
    pipeline : Pipeline, optional
        Reuse an existing accelerator (it is reset).
    """

    def __init__(self, graph: DecodingGraph, prematch: bool = True, pipeline: Pipeline | None = None) -> None:
        self.pipeline = pipeline if pipeline is not None else Pipeline(graph, prematch)
        if self.pipeline.graph is not graph:
            raise ValueError("pipeline was built for a different graph")
        self.graph = graph
        self.accel = self.pipeline.accel
        self.primal = self.pipeline.fresh()
        self.loaded_layers = 0
        self.round_cycles: list[int] = []
        self._pending: np.ndarray | None = None
        self._round_start = 0

    @property
    def num_layers(self) -> int:
        return len(self.pipeline.layer_ids)

    def load_round(self, defects) -> list[int]:
        """Load the next layer with the given defect vertex ids; returns them sorted."""
        if self._pending is not None:
            raise StreamError("previous round has not been fused")
        if self.loaded_layers >= self.num_layers:
            raise StreamError("all layers already loaded")
        layer = self.pipeline.layer_ids[self.loaded_layers]
        verts = self.pipeline.layer_vertices[layer]
        arr = self.pipeline.check_defects(defects)
        if arr.size and not np.isin(arr, verts).all():
            raise StreamError(f"round {layer} lists defects outside its layer")
        self._round_start = self.accel.cycle_count
        loaded = self.accel.load_defects(layer, np.isin(verts, arr))
        self.primal.add_defects(loaded)
        self.loaded_layers += 1
        self._pending = verts[~self.graph.is_virtual[verts]]
        return loaded

    def fuse_round(self) -> int:
        """Break matches into the layer just loaded, then drain; returns the number broken."""
        if self._pending is None:
            raise StreamError("no round loaded since the last fusion")
        broken = self.primal.release_boundary(self._pending)
        self._pending = None
        self.primal.run()
        self.round_cycles.append(self.accel.cycle_count - self._round_start)
        return broken

    def finish(self) -> MatchingSolution:
        if self.loaded_layers != self.num_layers or self._pending is not None:
            raise StreamError("stream incomplete")
        return self.pipeline.finish(self.primal, self.round_cycles)


def decode_stream(graph: DecodingGraph, rounds, prematch: bool = True, pipeline: Pipeline | None = None) -> MatchingSolution:
    """Decode a syndrome given as one list of defect vertex ids per layer, in layer order."""
    rounds = [list(r) for r in rounds]
    ctx = StreamContext(graph, prematch, pipeline)
    if len(rounds) != ctx.num_layers:
        raise ValueError(f"expected {ctx.num_layers} rounds, got {len(rounds)}")
    for defects in rounds:
        ctx.load_round(defects)
        ctx.fuse_round()
    return ctx.finish()


def split_rounds(graph: DecodingGraph, defects) -> list[list[int]]:
    """Group defect vertex ids by layer, one list per layer in order."""
    layers = sorted(set(int(x) for x in graph.layers))
    index = {layer: k for k, layer in enumerate(layers)}
    out: list[list[int]] = [[] for _ in layers]
    for v in sorted(int(x) for x in defects):
        out[index[int(graph.layers[v])]].append(v)
    return out


def parse_syndrome_document(doc, graph: DecodingGraph) -> list[list[int]]:
    """Rounds from ``{"rounds": [[...], ...]}`` or the flattened ``{"defects": [...]}`` form."""
    if not isinstance(doc, dict) or ("rounds" in doc) == ("defects" in doc):
        raise ValueError("syndrome document needs exactly one of 'rounds' or 'defects'")
    if "defects" in doc:
        flat = doc["defects"]
        if not isinstance(flat, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in flat):
            raise ValueError("defects: expected a list of vertex ids")
        if any(not 0 <= v < graph.num_vertices for v in flat):
            raise ValueError("defects: vertex id out of range")
        return split_rounds(graph, flat)
    rounds = doc["rounds"]
    if not isinstance(rounds, list) or not all(
        isinstance(r, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in r) for r in rounds
    ):
        raise ValueError("rounds: expected a list of lists of vertex ids")
    return [list(r) for r in rounds]
