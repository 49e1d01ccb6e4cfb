"""Segment entropy and the entropy-guided window selection.

Segments are discretized with a per-segment min-max histogram (``bins``
symbols, default 16), which makes every entropy value scale- and
offset-free. All entropies are in nats; the window ranking is invariant
under a change of logarithm base because numerator and denominator of the
normalized score rescale together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .signal import LabeledSample, SignalRecording

DEFAULT_BINS = 16
DEFAULT_CANDIDATES = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)


@dataclass(frozen=True)
class Segment:
    """A length-w window of a sample; one graph node."""

    values: np.ndarray  # (n_channels, w) float64
    start_index: int
    parent: str  # source_id of the owning sample/recording

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass
class WindowScan:
    """Scored window candidates: rows of (w, H_bar, H_norm, segment_count)."""

    candidate_sizes: list[int]
    step: int | None  # None means per-candidate step w // 2
    per_size: list[tuple[int, float, float, int]]

    def best(self) -> int:
        best_w, best_score = None, -np.inf
        for w, _h_bar, h_norm, _n in self.per_size:
            if h_norm > best_score or (h_norm == best_score and best_w is not None and w < best_w):
                best_w, best_score = w, h_norm
        return best_w

    def to_csv(self) -> str:
        lines = ["w,H_bar,H_norm,n"]
        for w, h_bar, h_norm, n in self.per_size:
            lines.append(f"{w},{h_bar!r},{h_norm!r},{n}")
        return "\n".join(lines) + "\n"


def shannon_entropy(symbols) -> float:
    """Entropy (nats) of the empirical distribution of a discrete sequence."""
    symbols = np.asarray(symbols)
    if symbols.size == 0:
        raise ValueError("entropy of an empty sequence is undefined")
    _, counts = np.unique(symbols, return_counts=True)
    p = counts / symbols.size
    return float(-(p * np.log(p)).sum())


def discretize(values: np.ndarray, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Map segment values to ``floor(bins * (x - min) / (max - min))``, clamped to
    [0, bins-1], per channel against the segment-wide per-channel range.
    Multi-channel input concatenates the per-channel symbol streams.
    A zero-range channel maps to symbol 0 everywhere.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    v = np.atleast_2d(np.asarray(values, dtype=np.float64))
    lo = v.min(axis=1, keepdims=True)
    hi = v.max(axis=1, keepdims=True)
    span = hi - lo
    span[span == 0.0] = np.inf  # constant channel -> all symbols 0
    sym = np.floor(bins * (v - lo) / span).astype(np.int64)
    np.clip(sym, 0, bins - 1, out=sym)
    return sym.reshape(-1)


def segment_series(values: np.ndarray, w: int, s: int) -> list[Segment]:
    """Cut a (C, N) series into windows of width ``w`` at step ``s``."""
    v = np.atleast_2d(np.asarray(values, dtype=np.float64))
    n = v.shape[1]
    if w > n:
        raise InsufficientDataError(f"window {w} exceeds series length {n}")
    if w < 2:
        raise ValueError(f"window must be >= 2, got {w}")
    if s < 1:
        raise ValueError(f"step must be >= 1, got {s}")
    return [
        Segment(values=v[:, i : i + w], start_index=i, parent="")
        for i in range(0, n - w + 1, s)
    ]


def segment_sample(sample: LabeledSample, w: int, s: int) -> list[Segment]:
    segs = segment_series(sample.data, w, s)
    return [Segment(values=g.values, start_index=g.start_index, parent=sample.origin[0]) for g in segs]


def average_entropy(rec: SignalRecording, w: int, s: int, bins: int = DEFAULT_BINS):
    """Mean segment entropy over all width-w windows at step s.

    Returns ``(H_bar, n_segments)``.
    """
    segs = segment_series(rec.channels, w, s)
    h = [shannon_entropy(discretize(g.values, bins)) for g in segs]
    return float(np.mean(h)), len(h)


def normalized_entropy(h_bar: float, w: int) -> float:
    """``H_bar / ln(w)``; undefined below w = 2 where ln(w) <= 0."""
    if w < 2:
        raise ValueError(f"window must be >= 2 for normalization, got {w}")
    return float(h_bar / np.log(w))


def _scan_pooled(recordings, candidates, step, bins):
    rows = []
    for w in candidates:
        s = step if step is not None else max(1, w // 2)
        entropies = []
        count = 0
        for rec in recordings:
            segs = segment_series(rec.channels, w, s)
            entropies.extend(shannon_entropy(discretize(g.values, bins)) for g in segs)
            count += len(segs)
        h_bar = float(np.mean(entropies))
        rows.append((w, h_bar, normalized_entropy(h_bar, w), count))
    return rows


def optimal_window(
    rec: SignalRecording,
    candidates=DEFAULT_CANDIDATES,
    step: int | None = None,
    bins: int = DEFAULT_BINS,
):
    """Scan candidate window sizes on one recording and pick the argmax of the
    normalized entropy. Ties break toward the smallest window.

    Returns ``(w_star, WindowScan)``.
    """
    return optimal_window_dataset([rec], candidates, step, bins, max_recordings=1)


def optimal_window_dataset(
    recordings,
    candidates=DEFAULT_CANDIDATES,
    step: int | None = None,
    bins: int = DEFAULT_BINS,
    max_recordings: int = 20,
):
    """Pooled scan across (a deterministic prefix of) a dataset.

    The mean entropy stabilizes quickly, so scanning the first
    ``max_recordings`` recordings bounds cost without changing the pick.
    """
    candidates = sorted(set(int(w) for w in candidates))
    if not candidates:
        raise ValueError("candidate window set is empty")
    recordings = list(recordings)[: max_recordings if max_recordings else None]
    if not recordings:
        raise ValueError("no recordings to scan")
    shortest = min(r.length for r in recordings)
    for w in candidates:
        if w < 2 or w > shortest:
            raise InsufficientDataError(
                f"candidate window {w} outside [2, {shortest}] for this dataset"
            )
    rows = _scan_pooled(recordings, candidates, step, bins)
    scan = WindowScan(candidate_sizes=candidates, step=step, per_size=rows)
    return scan.best(), scan
