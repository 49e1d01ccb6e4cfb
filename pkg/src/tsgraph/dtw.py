"""Dynamic time warping distances and the pairwise similarity matrix.

Distances are raw cumulative alignment costs (no path-length
normalization); with all segments cut to one window size the costs are
comparable across pairs. The local cost is the Euclidean norm across
channels at the aligned time indices.

The scalar entry points work on one pair; ``pairwise_similarity`` runs a
batched dynamic program vectorized across pairs, which is what makes
whole-graph construction cheap.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleBandError
from .entropy import Segment

_BLOCK_CELLS = 2_000_000  # pair-block sizing: keep B * w * w around this many cells


def _as_time_major(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"sequence must be 1-D or 2-D, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValueError("empty sequence")
    return a


def _local_cost(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # (p, c) x (q, c) -> (p, q) Euclidean over channels
    diff = x[:, None, :] - y[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def dtw_distance(x, y) -> float:
    """Exact DTW distance between two sequences (1-D) or (time, channel) arrays."""
    xa, ya = _as_time_major(x), _as_time_major(y)
    if xa.shape[1] != ya.shape[1]:
        raise ValueError(f"channel mismatch: {xa.shape[1]} vs {ya.shape[1]}")
    cost = _local_cost(xa, ya)
    p, q = cost.shape
    prev = np.cumsum(cost[0], axis=0)
    cur = np.empty(q)
    for i in range(1, p):
        cur[0] = prev[0] + cost[i, 0]
        row = cost[i]
        for j in range(1, q):
            cur[j] = row[j] + min(prev[j], prev[j - 1], cur[j - 1])
        prev, cur = cur, prev
    return float(prev[q - 1])


def dtw_distance_banded(x, y, radius: int) -> float:
    """Sakoe-Chiba banded DTW: cells with |i - j| > radius are excluded.

    Exact whenever the optimal path stays inside the band; never below the
    exact distance otherwise.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    xa, ya = _as_time_major(x), _as_time_major(y)
    if xa.shape[1] != ya.shape[1]:
        raise ValueError(f"channel mismatch: {xa.shape[1]} vs {ya.shape[1]}")
    p, q = xa.shape[0], ya.shape[0]
    if abs(p - q) > radius:
        raise InfeasibleBandError(
            f"band radius {radius} excludes terminal cell for lengths {p}, {q}"
        )
    cost = _local_cost(xa, ya)
    band = np.abs(np.arange(p)[:, None] - np.arange(q)[None, :]) > radius
    cost[band] = np.inf
    prev = np.cumsum(cost[0], axis=0)
    cur = np.empty(q)
    for i in range(1, p):
        cur[0] = prev[0] + cost[i, 0]
        row = cost[i]
        for j in range(1, q):
            cur[j] = row[j] + min(prev[j], prev[j - 1], cur[j - 1])
        prev, cur = cur, prev
    return float(prev[q - 1])


def similarity(d: float) -> float:
    """Similarity transform ``1 / (1 + d)``: 1 at distance 0, decreasing in d."""
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    return 1.0 / (1.0 + d)


@dataclass
class SimilarityMatrix:
    """Symmetric pairwise similarity with unit diagonal."""

    values: np.ndarray  # (n, n) float64
    window_size: int
    band: int | None = None  # None = exact

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def off_diagonal(self) -> np.ndarray:
        iu = np.triu_indices(self.n, k=1)
        return self.values[iu]

    def to_csv(self) -> str:
        lines = [",".join(repr(v) for v in row) for row in self.values]
        return "\n".join(lines) + "\n"


def _batched_dtw(stack: np.ndarray, left: np.ndarray, right: np.ndarray, radius):
    """DTW for index pairs (left[k], right[k]) into stack (n, w, c), all equal length."""
    xs = stack[left]
    ys = stack[right]
    diff = xs[:, :, None, :] - ys[:, None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=3))  # (B, w, w)
    b, p, q = cost.shape
    if radius is not None:
        band = np.abs(np.arange(p)[:, None] - np.arange(q)[None, :]) > radius
        cost[:, band] = np.inf
    prev = np.cumsum(cost[:, 0, :], axis=1)
    cur = np.empty((b, q))
    for i in range(1, p):
        cur[:, 0] = prev[:, 0] + cost[:, i, 0]
        for j in range(1, q):
            m = np.minimum(np.minimum(prev[:, j], prev[:, j - 1]), cur[:, j - 1])
            cur[:, j] = cost[:, i, j] + m
        prev, cur = cur, prev
    return prev[:, q - 1]


def pairwise_similarity(
    segments: list[Segment],
    band_radius: int | None = None,
    threads: int = 1,
) -> SimilarityMatrix:
    """Upper-triangle DTW similarities, mirrored; diagonal fixed at 1.

    Equal-width segments go through the batched kernel; mixed widths fall
    back to per-pair scalar DTW. Block results are placed by index, so the
    outcome does not depend on completion order.
    """
    if not segments:
        raise ValueError("need at least one segment")
    widths = {g.values.shape for g in segments}
    n = len(segments)
    values = np.eye(n)
    if n == 1:
        return SimilarityMatrix(values=values, window_size=segments[0].width, band=band_radius)

    if band_radius is not None and band_radius < 0:
        raise ValueError(f"band radius must be >= 0, got {band_radius}")

    iu, ju = np.triu_indices(n, k=1)
    if len(widths) == 1:
        stack = np.stack([g.values.T for g in segments])  # (n, w, c)
        w = stack.shape[1]
        block = max(64, _BLOCK_CELLS // max(1, w * w))
        starts = range(0, len(iu), block)
        dist = np.empty(len(iu))

        def run(s):
            e = min(s + block, len(iu))
            dist[s:e] = _batched_dtw(stack, iu[s:e], ju[s:e], band_radius)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(run, starts))
        else:
            for s in starts:
                run(s)
    else:
        if band_radius is None:
            dist = np.array(
                [dtw_distance(segments[i].values.T, segments[j].values.T) for i, j in zip(iu, ju)]
            )
        else:
            dist = np.array(
                [
                    dtw_distance_banded(segments[i].values.T, segments[j].values.T, band_radius)
                    for i, j in zip(iu, ju)
                ]
            )

    sims = 1.0 / (1.0 + dist)
    values[iu, ju] = sims
    values[ju, iu] = sims
    return SimilarityMatrix(values=values, window_size=segments[0].width, band=band_radius)
