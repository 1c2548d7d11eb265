"""Scikit-learn style decoder wrapper.

Samples are syndromes: rows of a binary matrix with one column per graph
vertex (virtual columns must be zero). ``transform`` returns the correction as
an edge indicator matrix and ``predict`` the logical-flip parity of that
correction, so ``score`` against true flip labels is ``1 - p_L``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .fusion import decode_stream, split_rounds
from .graph import DecodingGraph, load_graph
from .noise import correction_edges, edge_probabilities, sample_errors, syndrome_from_errors
from .primal import MatchingSolution, Pipeline


def check_graph(graph) -> DecodingGraph:
    if isinstance(graph, DecodingGraph):
        return graph
    if isinstance(graph, str) or hasattr(graph, "__fspath__"):
        return load_graph(graph)
    raise TypeError(f"graph must be a DecodingGraph or a path to a graph document, got {type(graph).__name__}")


def check_syndromes(X, graph: DecodingGraph) -> np.ndarray:
    """Validate a syndrome matrix against ``graph``; returns it as a boolean array."""
    X = check_array(X, dtype=None, ensure_min_samples=0)
    if X.shape[1] != graph.num_vertices:
        raise ValueError(f"X has {X.shape[1]} columns, graph has {graph.num_vertices} vertices")
    if not np.isin(X, (0, 1)).all():
        raise ValueError("syndrome entries must be 0 or 1")
    X = X.astype(bool)
    if X[:, graph.is_virtual].any():
        raise ValueError("virtual vertices cannot be defects")
    return X


def make_syndromes(graph: DecodingGraph, n_shots: int, seed: int = 0, probabilities=None) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``(X, y)``: syndrome rows and whether the drawn errors flip the logical cut."""
    probs = edge_probabilities(graph, probabilities)
    X = np.zeros((n_shots, graph.num_vertices), dtype=bool)
    y = np.zeros(n_shots, dtype=bool)
    for shot in range(n_shots):
        sample = sample_errors(graph, probs, seed, shot)
        X[shot, syndrome_from_errors(graph, sample)] = True
        y[shot] = len(sample.flipped_edges & graph.logical_edges) % 2 == 1
    return X, y


class MicroBlossomDecoder(BaseEstimator):
    """Exact minimum-weight matching decoder for one decoding graph.

    Parameters
    ----------
    graph : DecodingGraph or path
        Graph to decode on; a path is loaded as a JSON graph document.
    prematch : bool
        Resolve isolated conflicts inside the accelerator.
    stream : bool
        Decode layer by layer with round-wise fusion instead of all at once.
    """

    def __init__(self, graph=None, prematch: bool = True, stream: bool = False):
        self.graph = graph
        self.prematch = prematch
        self.stream = stream

    def fit(self, X=None, y=None):
        """Bind the decoder to ``graph``; ``X`` is only checked for shape when given."""
        if self.graph is None:
            raise ValueError("graph must be set before fitting")
        self.graph_ = check_graph(self.graph)
        self.pipeline_ = Pipeline(self.graph_, bool(self.prematch))
        self.n_features_in_ = self.graph_.num_vertices
        if X is not None:
            check_syndromes(X, self.graph_)
        return self

    def decode(self, defects) -> MatchingSolution:
        check_is_fitted(self, "pipeline_")
        if self.stream:
            return decode_stream(self.graph_, split_rounds(self.graph_, defects), pipeline=self.pipeline_)
        return self.pipeline_.decode(defects)

    def decode_all(self, X) -> list[MatchingSolution]:
        check_is_fitted(self, "pipeline_")
        X = check_syndromes(X, self.graph_)
        return [self.decode(np.flatnonzero(row)) for row in X]

    def transform(self, X) -> np.ndarray:
        """Correction edge indicator per syndrome, shape ``(n_samples, n_edges)``."""
        solutions = self.decode_all(X)
        out = np.zeros((len(solutions), self.graph_.num_edges), dtype=np.uint8)
        for k, sol in enumerate(solutions):
            out[k, sorted(correction_edges(self.graph_, sol))] = 1
        return out

    def predict(self, X) -> np.ndarray:
        """Whether the correction crosses the logical cut an odd number of times."""
        corrections = self.transform(X)
        if corrections.shape[0] == 0:
            return np.zeros(0, dtype=bool)
        logical = np.zeros(self.graph_.num_edges, dtype=bool)
        logical[sorted(self.graph_.logical_edges)] = True
        return corrections[:, logical].sum(axis=1) % 2 == 1

    def score(self, X, y) -> float:
        """Fraction of shots decoded without a logical error."""
        y = np.asarray(y, dtype=bool).ravel()
        pred = self.predict(X)
        if pred.shape != y.shape:
            raise ValueError(f"y has {y.shape[0]} labels for {pred.shape[0]} syndromes")
        return float((pred == y).mean()) if y.size else 1.0
