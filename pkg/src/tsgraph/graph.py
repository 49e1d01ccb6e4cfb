"""Per-sample similarity graphs: nodes are segments, edges are high-similarity pairs.

Binary graph container (little-endian):

    magic   4 bytes  b"ATG1"
    u32     version (currently 1)
    u32     node count n
    u32     feature dim F
    u32     edge count E
    u32     label
    u32     segment window w
    u32     channel count
    f32     threshold tau_used
    u32*n   node_order (segment start indices, ascending)
    f32*n*F node features, row-major
    (u32, u32, f32)*E  edges as (i, j, weight), i < j

Total size: 36 + 4n + 4nF + 12E bytes. Node features are z-normalized
segment values flattened channel-major and quantized to binary32 at build
time, so serialization round-trips them bit-exactly. Edge weights are kept
at double precision in memory and rounded to binary32 in the container.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .dtw import SimilarityMatrix, pairwise_similarity
from .entropy import Segment, segment_sample
from .errors import FormatError
from .signal import LabeledSample

GRAPH_MAGIC = b"ATG1"
GRAPH_VERSION = 1
_GRAPH_HEADER = struct.Struct("<4sIIIIIIIf")
_EDGE = struct.Struct("<IIf")


@dataclass
class ThresholdPolicy:
    """Edge threshold selection: a fixed tau or a per-graph quantile of the
    off-diagonal similarities."""

    kind: str  # "fixed" | "quantile"
    value: float

    def __post_init__(self):
        if self.kind not in ("fixed", "quantile"):
            raise ValueError(f"unknown threshold policy {self.kind!r}")
        if self.kind == "quantile" and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"quantile must be in [0, 1], got {self.value}")
        if self.kind == "fixed" and self.value < 0.0:
            raise ValueError(f"fixed threshold must be >= 0, got {self.value}")

    def resolve(self, sim: SimilarityMatrix) -> float:
        if self.kind == "fixed":
            return float(self.value)
        if sim.n < 2:
            return 1.0  # single node: no off-diagonal values, graph has no edges anyway
        return threshold_from_quantile(sim, self.value)


@dataclass
class SimilarityGraph:
    node_features: np.ndarray  # (n, F) float32
    edges: list[tuple[int, int, float]]  # i < j, undirected
    node_order: list[int]  # segment start indices, strictly increasing
    label: int
    tau_used: float
    window: int
    n_channels: int

    @property
    def n_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.node_features.shape[1]

    def adjacency(self, self_loops: bool = True) -> np.ndarray:
        """Dense boolean adjacency; undirected, optionally with self-loops."""
        n = self.n_nodes
        adj = np.zeros((n, n), dtype=bool)
        for i, j, _w in self.edges:
            adj[i, j] = True
            adj[j, i] = True
        if self_loops:
            np.fill_diagonal(adj, True)
        return adj


def _z_normalize(values: np.ndarray) -> np.ndarray:
    mu = values.mean(axis=1, keepdims=True)
    sd = values.std(axis=1, keepdims=True)
    out = np.zeros_like(values)
    np.divide(values - mu, sd, out=out, where=sd > 0)
    return out


def node_features_from_segments(segments: list[Segment]) -> np.ndarray:
    feats = [_z_normalize(g.values).reshape(-1) for g in segments]
    return np.asarray(feats, dtype=np.float32)


def threshold_from_quantile(sim: SimilarityMatrix, q: float) -> float:
    """q-quantile (linear interpolation) of the off-diagonal similarities."""
    if sim.n < 2:
        raise ValueError("quantile threshold needs at least 2 segments")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile must be in [0, 1], got {q}")
    return float(np.quantile(sim.off_diagonal(), q))


def build_graph(segments: list[Segment], sim: SimilarityMatrix, tau: float, label: int = 0) -> SimilarityGraph:
    """Create the graph with an edge wherever similarity strictly exceeds tau."""
    if tau < 0:
        raise ValueError(f"threshold must be >= 0, got {tau}")
    if sim.n != len(segments):
        raise ValueError(f"similarity is {sim.n}x{sim.n} but there are {len(segments)} segments")
    if tau >= 1.0:
        warnings.warn(f"threshold {tau} >= 1 produces an edgeless graph", stacklevel=2)
    starts = [g.start_index for g in segments]
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise ValueError("segments must be ordered by strictly increasing start index")
    iu, ju = np.triu_indices(sim.n, k=1)
    mask = sim.values[iu, ju] > tau
    edges = [
        (int(i), int(j), float(w))
        for i, j, w in zip(iu[mask], ju[mask], sim.values[iu, ju][mask])
    ]
    return SimilarityGraph(
        node_features=node_features_from_segments(segments),
        edges=edges,
        node_order=starts,
        label=label,
        tau_used=float(tau),
        window=segments[0].width,
        n_channels=segments[0].values.shape[0],
    )


def sample_to_graph(
    sample: LabeledSample,
    w: int,
    s: int,
    policy: ThresholdPolicy,
    band_radius: int | None = None,
    threads: int = 1,
) -> SimilarityGraph:
    """Segment one labeled sample, compute pairwise DTW similarity, threshold."""
    segments = segment_sample(sample, w, s)
    sim = pairwise_similarity(segments, band_radius=band_radius, threads=threads)
    tau = policy.resolve(sim)
    return build_graph(segments, sim, tau, label=sample.label)


def serialize_graph(g: SimilarityGraph) -> bytes:
    feats = np.ascontiguousarray(g.node_features, dtype="<f4")
    parts = [
        _GRAPH_HEADER.pack(
            GRAPH_MAGIC,
            GRAPH_VERSION,
            g.n_nodes,
            g.feature_dim,
            len(g.edges),
            g.label,
            g.window,
            g.n_channels,
            g.tau_used,
        ),
        np.asarray(g.node_order, dtype="<u4").tobytes(),
        feats.tobytes(),
    ]
    parts.extend(_EDGE.pack(i, j, w) for i, j, w in g.edges)
    return b"".join(parts)


def deserialize_graph(data: bytes) -> SimilarityGraph:
    if len(data) < _GRAPH_HEADER.size:
        raise FormatError("graph container truncated before header")
    magic, version, n, f, e, label, window, channels, tau = _GRAPH_HEADER.unpack_from(data, 0)
    if magic != GRAPH_MAGIC:
        raise FormatError(f"bad graph magic {magic!r}")
    if version != GRAPH_VERSION:
        raise FormatError(f"unsupported graph version {version}")
    expected = _GRAPH_HEADER.size + 4 * n + 4 * n * f + _EDGE.size * e
    if len(data) != expected:
        raise FormatError(f"graph container is {len(data)} bytes, expected {expected}")
    off = _GRAPH_HEADER.size
    order = np.frombuffer(data, dtype="<u4", count=n, offset=off).tolist()
    off += 4 * n
    feats = np.frombuffer(data, dtype="<f4", count=n * f, offset=off).reshape(n, f).copy()
    off += 4 * n * f
    edges = []
    for _ in range(e):
        i, j, w = _EDGE.unpack_from(data, off)
        edges.append((i, j, float(np.float32(w))))
        off += _EDGE.size
    return SimilarityGraph(
        node_features=feats,
        edges=edges,
        node_order=[int(v) for v in order],
        label=label,
        tau_used=float(np.float32(tau)),
        window=window,
        n_channels=channels,
    )


def graph_to_json(g: SimilarityGraph) -> str:
    doc = {
        "label": g.label,
        "tau": g.tau_used,
        "window": g.window,
        "channels": g.n_channels,
        "node_order": g.node_order,
        "nodes": [[float(v) for v in row] for row in g.node_features],
        "edges": [[i, j, w] for i, j, w in g.edges],
    }
    return json.dumps(doc, sort_keys=True)


def save_graph(g: SimilarityGraph, path):
    with open(path, "wb") as fh:
        fh.write(serialize_graph(g))


def load_graph(path) -> SimilarityGraph:
    with open(path, "rb") as fh:
        return deserialize_graph(fh.read())
