"""Exact minimum-weight perfect matching decoding with a simulated dual accelerator."""

from .accelerator import AcceleratorError, DualAccelerator, VertexState
from .bench import (
    BenchConfig,
    ShotStats,
    cmd_verify,
    cutoff_latency,
    effective_error_rate,
    read_csv,
    run_bench,
    summarize,
    wilson_interval,
    write_csv,
)
from .estimator import MicroBlossomDecoder, make_syndromes
from .fusion import StreamContext, StreamError, decode_stream, split_rounds
from .graph import (
    DecodingGraph,
    EdgeDescriptor,
    GraphFormatError,
    VertexDescriptor,
    build_repetition_graph,
    build_surface_graph_3d,
    load_graph,
    quantize_weights,
    save_graph,
    weight_from_probability,
)
from .isa import CodecError, Conflict, NoObstacle, decode, encode
from .noise import check_logical_error, sample_errors, syndrome_from_errors
from .oracle import OracleError, build_syndrome_graph, exhaustive_mwpm, verify
from .primal import MatchingSolution, Pipeline, PrimalSolver, decode_batch

__version__ = "0.1.0"
