"""Recording I/O, stride-based sample slicing, and the synthetic dataset generator.

Binary recording layout (little-endian):

    magic   4 bytes  b"TSG1"
    u32     channel count
    u64     frame count
    u32     sample rate (Hz)
    payload frame-interleaved IEEE-754 binary32 values
            (frame 0: ch0, ch1, ...; frame 1: ch0, ch1, ...)

CSV ingestion is also accepted: one column per channel, one header row.

The synthetic generator gives a self-contained data path: class ``k`` draws a
sine at ``base_freq_hz * (k + 1)`` (its dominant frequency, so consecutive
classes are one ``base_freq_hz`` step apart), an impulse train whose amplitude
grows with ``k`` (``0.5 + 0.75 * k``), and additive Gaussian noise.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError, InsufficientDataError

MAGIC = b"TSG1"
_HEADER = struct.Struct("<4sIQI")

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class SignalRecording:
    """A multi-channel sensor time series with one class label."""

    channels: np.ndarray  # (n_channels, N) float64
    sample_rate_hz: float
    label: int
    source_id: str

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float64)
        if ch.ndim != 2 or ch.shape[1] < 1:
            raise DataError(f"channels must be a 2-D (C, N) array, got shape {ch.shape}")
        if not np.isfinite(ch).all():
            bad = int(np.argwhere(~np.isfinite(ch).all(axis=0))[0][0])
            raise DataError(f"non-finite value at frame {bad} in {self.source_id!r}")
        if self.label < 0:
            raise DataError(f"label must be >= 0, got {self.label}")
        if self.sample_rate_hz <= 0:
            raise DataError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "channels", ch)

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def length(self) -> int:
        return self.channels.shape[1]


@dataclass(frozen=True)
class LabeledSample:
    """A fixed-length slice of a recording, labeled with the recording's class."""

    data: np.ndarray  # (n_channels, L) float64
    label: int
    origin: tuple[str, int]  # (source_id, start_index)

    @property
    def length(self) -> int:
        return self.data.shape[1]

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]


@dataclass
class ManifestEntry:
    path: str
    label: int
    sample_rate_hz: float
    channels: list[int] | None = None  # indices to keep; None = all


@dataclass
class DatasetManifest:
    class_count: int
    entries: list[ManifestEntry] = field(default_factory=list)
    format_version: int = MANIFEST_VERSION

    def validate(self):
        if self.class_count < 1:
            raise FormatError("class_count must be >= 1")
        seen = set()
        for e in self.entries:
            if not 0 <= e.label < self.class_count:
                raise FormatError(
                    f"label {e.label} outside [0, {self.class_count - 1}] for {e.path!r}"
                )
            seen.add(e.label)
        missing = set(range(self.class_count)) - seen
        if self.entries and missing:
            raise FormatError(f"manifest has no entry for labels {sorted(missing)}")


def load_manifest(path) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        entries = [
            ManifestEntry(
                path=e["path"],
                label=int(e["label"]),
                sample_rate_hz=float(e["sample_rate_hz"]),
                channels=e.get("channels"),
            )
            for e in doc["entries"]
        ]
        man = DatasetManifest(
            class_count=int(doc["class_count"]),
            entries=entries,
            format_version=int(doc.get("format_version", MANIFEST_VERSION)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed manifest {path}: {exc}") from exc
    if man.format_version != MANIFEST_VERSION:
        raise FormatError(f"unsupported manifest format_version {man.format_version}")
    man.validate()
    return man


def save_manifest(manifest: DatasetManifest, path):
    doc = {
        "format_version": manifest.format_version,
        "class_count": manifest.class_count,
        "entries": [
            {
                "path": e.path,
                "label": e.label,
                "sample_rate_hz": e.sample_rate_hz,
                **({"channels": e.channels} if e.channels is not None else {}),
            }
            for e in manifest.entries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_recording(path, entry: ManifestEntry) -> SignalRecording:
    """Load one recording file (binary ``TSG1`` or ``.csv``) as described by its
    manifest entry. Channel selection from the entry is applied after reading."""
    path = str(path)
    if path.endswith(".csv"):
        channels, rate = _read_csv(path, entry.sample_rate_hz)
    else:
        channels, rate = _read_binary(path)
    if entry.channels is not None:
        try:
            channels = channels[list(entry.channels)]
        except IndexError as exc:
            raise FormatError(f"channel selection {entry.channels} out of range for {path}") from exc
        if channels.shape[0] == 0:
            raise FormatError(f"channel selection empty for {path}")
    if not np.isfinite(channels).all():
        bad = int(np.argwhere(~np.isfinite(channels).all(axis=0))[0][0])
        raise DataError(f"non-finite value at frame {bad} in {path}")
    return SignalRecording(
        channels=channels,
        sample_rate_hz=rate if rate else entry.sample_rate_hz,
        label=entry.label,
        source_id=path,
    )


def _read_binary(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, n_ch, n_frames, rate = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if n_ch < 1:
            raise FormatError(f"{path}: channel count must be >= 1")
        payload = fh.read()
    expected = n_ch * n_frames * 4
    if len(payload) != expected:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    channels = values.reshape(n_frames, n_ch).T.copy()
    return channels, float(rate)


def write_recording(path, channels: np.ndarray, sample_rate_hz: float):
    """Write the binary layout. Values are stored as binary32; the round trip
    load(write(x)) is bit-exact once x is binary32-representable."""
    ch = np.asarray(channels, dtype=np.float64)
    if ch.ndim != 2:
        raise FormatError("channels must be 2-D (C, N)")
    n_ch, n_frames = ch.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n_ch, n_frames, int(round(sample_rate_hz))))
        fh.write(ch.T.astype("<f4").tobytes())


def _read_csv(path, fallback_rate):
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty CSV")
        rows = []
        for i, row in enumerate(reader):
            if len(row) != len(header):
                raise FormatError(f"{path}: row {i} has {len(row)} fields, expected {len(header)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise FormatError(f"{path}: row {i}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: CSV has no data rows")
    return np.asarray(rows, dtype=np.float64).T, float(fallback_rate)


def load_dataset(manifest: DatasetManifest, base_dir=None) -> list[SignalRecording]:
    import os

    recs = []
    for entry in manifest.entries:
        p = entry.path
        if base_dir is not None and not os.path.isabs(p):
            p = os.path.join(base_dir, p)
        recs.append(load_recording(p, entry))
    return recs


def make_samples(rec: SignalRecording, sample_len: int, stride: int) -> list[LabeledSample]:
    """Slice a recording into overlapping fixed-length samples.

    Sample ``k`` starts at ``k * stride``; there are ``(N - L) // stride + 1``
    of them, each carrying the recording's label.
    """
    if sample_len < 1:
        raise ValueError(f"sample_len must be >= 1, got {sample_len}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    n = rec.length
    if sample_len > n:
        raise InsufficientDataError(f"sample_len {sample_len} exceeds recording length {n}")
    count = (n - sample_len) // stride + 1
    return [
        LabeledSample(
            data=rec.channels[:, k * stride : k * stride + sample_len].copy(),
            label=rec.label,
            origin=(rec.source_id, k * stride),
        )
        for k in range(count)
    ]


def generate_synthetic_dataset(
    class_count: int,
    per_class: int,
    length: int,
    seed: int,
    n_channels: int = 1,
    sample_rate_hz: float = 12000.0,
    base_freq_hz: float = 400.0,
    noise_std: float = 0.3,
) -> list[SignalRecording]:
    """Deterministic parametric dataset; see the module docstring for the
    per-class signal family."""
    if class_count < 2:
        raise ValueError(f"class_count must be >= 2, got {class_count}")
    if per_class < 0:
        raise ValueError(f"per_class must be >= 0, got {per_class}")
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    t = np.arange(length) / sample_rate_hz
    recordings = []
    for label in range(class_count):
        freq = base_freq_hz * (label + 1)
        impulse_amp = 0.5 + 0.75 * label
        impulse_period = max(16, length // (8 + 2 * label))
        for idx in range(per_class):
            channels = np.empty((n_channels, length))
            for c in range(n_channels):
                phase = rng.uniform(0.0, 2.0 * np.pi)
                wave = np.sin(2.0 * np.pi * freq * t + phase)
                wave += 0.3 * np.sin(2.0 * np.pi * 2.0 * freq * t + phase)
                impulses = np.zeros(length)
                offset = int(rng.integers(0, impulse_period))
                impulses[offset::impulse_period] = impulse_amp
                noise = rng.normal(0.0, noise_std, size=length)
                channels[c] = wave + impulses + noise
            recordings.append(
                SignalRecording(
                    channels=channels,
                    sample_rate_hz=sample_rate_hz,
                    label=label,
                    source_id=f"synthetic/{label}/{idx}",
                )
            )
    return recordings


def write_synthetic_dataset(out_dir, recordings: list[SignalRecording], class_count: int):
    """Materialize recordings as TSG1 files plus a manifest; returns the manifest path."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for rec in recordings:
        name = rec.source_id.replace("/", "_") + ".tsg"
        write_recording(os.path.join(out_dir, name), rec.channels, rec.sample_rate_hz)
        entries.append(ManifestEntry(path=name, label=rec.label, sample_rate_hz=rec.sample_rate_hz))
    manifest = DatasetManifest(class_count=class_count, entries=entries)
    manifest.validate()
    path = os.path.join(out_dir, "manifest.json")
    save_manifest(manifest, path)
    return path
