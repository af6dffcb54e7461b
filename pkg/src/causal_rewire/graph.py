"""Directed causal graphs thresholded from transfer entropy, plus (de)serialisation.

Orientation: ``adj[i, j] == 1`` means a causal edge j -> i (row = effect,
column = cause), matching ``TEMatrix.values[i, j]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import TEMatrix
from .errors import (
    BadFraction,
    EmptyGraph,
    NegativeThreshold,
    SchemaMismatch,
    SerializationError,
    ValidationError,
)

SCHEMA_VERSION = "causal-graph/1"


@dataclass(eq=False)
class CausalGraph:
    adj: np.ndarray
    te: TEMatrix
    features: np.ndarray
    threshold_c: float
    rewired: bool = False
    rewiring_log: list = field(default_factory=list)

    def __post_init__(self):
        self.adj = np.asarray(self.adj, dtype=np.int8)
        n = self.adj.shape[0]
        if self.adj.shape != (n, n) or self.te.values.shape != (n, n):
            raise ValidationError("adjacency and TE matrix must both be n x n")
        if np.any(np.diag(self.adj)):
            raise ValidationError("causal graph may not contain self-loops")

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.adj.sum())

    def directed_edges(self) -> list[tuple[int, int, float]]:
        """``(src, dst, te)`` triples in (dst, src) order."""
        rows, cols = np.nonzero(self.adj)
        return [(int(j), int(i), float(self.te.values[i, j])) for i, j in zip(rows, cols)]

    def copy(self) -> "CausalGraph":
        return CausalGraph(
            self.adj.copy(),
            self.te,
            self.features.copy(),
            self.threshold_c,
            self.rewired,
            list(self.rewiring_log),
        )

    def __eq__(self, other):
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return (
            np.array_equal(self.adj, other.adj)
            and self.te == other.te
            and np.array_equal(self.features, other.features)
            and self.threshold_c == other.threshold_c
            and self.rewired == other.rewired
            and self.rewiring_log == other.rewiring_log
        )


def node_features(te: TEMatrix) -> np.ndarray:
    """Incoming-influence profile: row i is TE into node i, diagonal zeroed."""
    x = np.array(te.values, dtype=float, copy=True)
    np.fill_diagonal(x, 0.0)
    return x


def build_adjacency(te: TEMatrix, c: float) -> CausalGraph:
    if c < 0:
        raise NegativeThreshold(f"threshold c must be >= 0, got {c}")
    adj = (te.values > c).astype(np.int8)
    np.fill_diagonal(adj, 0)
    return CausalGraph(adj, te, node_features(te), float(c))


def symmetrized_view(g: CausalGraph | np.ndarray) -> np.ndarray:
    adj = g.adj if isinstance(g, CausalGraph) else np.asarray(g)
    s = ((adj != 0) | (adj.T != 0)).astype(np.int8)
    np.fill_diagonal(s, 0)
    return s


def top_fraction_edges(g: CausalGraph, fraction: float) -> list[tuple[int, int, float]]:
    """Strongest ``ceil(fraction * edges)`` directed edges as ``(src, dst, te)``."""
    if not 0 < fraction <= 1:
        raise BadFraction(f"fraction must lie in (0, 1], got {fraction}")
    edges = g.directed_edges()
    if not edges:
        raise EmptyGraph("graph has no edges")
    # ties: row (effect) then column (cause) ascending
    edges.sort(key=lambda e: (-e[2], e[1], e[0]))
    k = math.ceil(fraction * len(edges) - 1e-12)
    return edges[: max(k, 1)]


# ------------------------------------------------------------------ persistence


def graph_to_dict(g: CausalGraph) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "n": g.n,
        "orientation": "src=cause, dst=effect; adj[dst][src]=1",
        "threshold_c": g.threshold_c,
        "rewired": bool(g.rewired),
        "directed_edges": [{"src": s, "dst": d, "te": w} for s, d, w in g.directed_edges()],
        "te": {
            "history": list(g.te.history),
            "bin_count": g.te.bin_count,
            "channels": list(g.te.channels) if g.te.channels else None,
            "values": g.te.values.tolist(),
        },
        "features": g.features.tolist(),
        "rewiring_log": g.rewiring_log,
    }


def graph_from_dict(doc: dict) -> CausalGraph:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(f"graph schema {version!r} is not supported (expected {SCHEMA_VERSION!r})")
    for key in ("n", "threshold_c", "rewired", "directed_edges", "te", "features"):
        if key not in doc:
            raise SchemaMismatch(f"graph document is missing field {key!r} ({SCHEMA_VERSION})")
    n = int(doc["n"])
    te_doc = doc["te"]
    channels = te_doc.get("channels")
    te = TEMatrix(
        np.array(te_doc["values"], dtype=float).reshape(n, n),
        tuple(te_doc["history"]),
        int(te_doc["bin_count"]),
        tuple(channels) if channels else None,
    )
    adj = np.zeros((n, n), dtype=np.int8)
    for e in doc["directed_edges"]:
        adj[int(e["dst"]), int(e["src"])] = 1
    return CausalGraph(
        adj,
        te,
        np.array(doc["features"], dtype=float).reshape(n, n),
        float(doc["threshold_c"]),
        bool(doc["rewired"]),
        list(doc.get("rewiring_log") or []),
    )


def save_graph(g: CausalGraph, path) -> None:
    try:
        text = json.dumps(graph_to_dict(g), indent=1)
    except (TypeError, ValueError) as exc:
        raise SerializationError(str(exc)) from exc
    with open(path, "w") as fh:
        fh.write(text)


def load_graph(path) -> CausalGraph:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SerializationError(f"cannot read graph {path}: {exc}") from exc
    return graph_from_dict(doc)


def save_edge_list(edges, path) -> None:
    with open(path, "w") as fh:
        fh.write("src,dst,te\n")
        for s, d, w in edges:
            fh.write(f"{s},{d},{w:.12g}\n")
