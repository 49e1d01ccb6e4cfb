"""Recording formats, manifests, sampling, and the synthetic generator."""

import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsgraph.errors import DataError, FormatError, InsufficientDataError
from tsgraph.signal import (
    DatasetManifest,
    ManifestEntry,
    SignalRecording,
    generate_synthetic_dataset,
    load_dataset,
    load_manifest,
    load_recording,
    make_samples,
    save_manifest,
    write_recording,
    write_synthetic_dataset,
)


def entry(path, label=0, rate=12000.0, channels=None):
    return ManifestEntry(path=str(path), label=label, sample_rate_hz=rate, channels=channels)


def test_binary_round_trip(tmp_path):
    data = np.random.default_rng(0).normal(size=(2, 500))
    path = tmp_path / "rec.tsg"
    write_recording(path, data, 12000.0)
    rec = load_recording(path, entry(path))
    assert rec.n_channels == 2 and rec.length == 500
    assert rec.sample_rate_hz == 12000.0
    # container stores binary32; loading reproduces exactly that quantization
    assert np.array_equal(rec.channels, data.astype(np.float32).astype(np.float64))


def test_binary_header_layout(tmp_path):
    path = tmp_path / "rec.tsg"
    write_recording(path, np.zeros((3, 7)), 48000.0)
    raw = path.read_bytes()
    magic, n_ch, frames, rate = struct.unpack("<4sIQI", raw[:20])
    assert magic == b"TSG1"
    assert (n_ch, frames, rate) == (3, 7, 48000)
    assert len(raw) == 20 + 4 * 3 * 7


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "rec.tsg"
    path.write_bytes(b"NOPE" + bytes(32))
    with pytest.raises(FormatError):
        load_recording(path, entry(path))


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "rec.tsg"
    write_recording(path, np.zeros((1, 10)), 12000.0)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(FormatError):
        load_recording(path, entry(path))


def test_csv_round_trip(tmp_path):
    path = tmp_path / "rec.csv"
    path.write_text("ch0,ch1\n1.0,2.0\n3.0,4.0\n5.5,6.5\n")
    rec = load_recording(path, entry(path, rate=8000.0))
    assert rec.channels.shape == (2, 3)
    assert rec.sample_rate_hz == 8000.0
    assert np.array_equal(rec.channels[1], [2.0, 4.0, 6.5])


def test_channel_selection(tmp_path):
    data = np.arange(12.0).reshape(3, 4)
    path = tmp_path / "rec.tsg"
    write_recording(path, data, 12000.0)
    rec = load_recording(path, entry(path, channels=[2, 0]))
    assert rec.channels.shape == (2, 4)
    assert np.array_equal(rec.channels[0], data[2].astype(np.float32))


def test_non_finite_sample_rejected():
    bad = np.ones((1, 5))
    bad[0, 3] = np.nan
    with pytest.raises(DataError, match="frame 3"):
        SignalRecording(channels=bad, sample_rate_hz=1.0, label=0, source_id="x")


def test_manifest_round_trip(tmp_path):
    man = DatasetManifest(
        class_count=2,
        entries=[entry("a.tsg", 0), entry("b.tsg", 1, channels=[0])],
    )
    path = tmp_path / "manifest.json"
    save_manifest(man, path)
    loaded = load_manifest(path)
    assert loaded.class_count == 2
    assert [e.label for e in loaded.entries] == [0, 1]
    assert loaded.entries[1].channels == [0]


def test_manifest_requires_label_coverage(tmp_path):
    man = DatasetManifest(class_count=3, entries=[entry("a.tsg", 0)])
    with pytest.raises(FormatError, match="labels"):
        man.validate()


def test_manifest_rejects_out_of_range_label():
    man = DatasetManifest(class_count=2, entries=[entry("a.tsg", 5)])
    with pytest.raises(FormatError):
        man.validate()


def test_manifest_unknown_version(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"format_version": 99, "class_count": 1, "entries": []}))
    with pytest.raises(FormatError, match="format_version"):
        load_manifest(path)


@given(
    n=st.integers(8, 200),
    length=st.integers(1, 60),
    stride=st.integers(1, 40),
)
@settings(max_examples=60, deadline=None)
def test_sample_count_formula(n, length, stride):
    rec = SignalRecording(np.zeros((1, n)), 1.0, 0, "x")
    if length > n:
        with pytest.raises(InsufficientDataError):
            make_samples(rec, length, stride)
        return
    samples = make_samples(rec, length, stride)
    assert len(samples) == (n - length) // stride + 1
    assert all(s.origin[1] == k * stride for k, s in enumerate(samples))
    assert all(s.length == length for s in samples)


def test_samples_carry_label_and_values():
    rec = SignalRecording(np.arange(10.0)[None, :], 1.0, 3, "r")
    samples = make_samples(rec, 4, 3)
    assert [s.label for s in samples] == [3, 3, 3]
    assert np.array_equal(samples[1].data[0], [3.0, 4.0, 5.0, 6.0])


def test_synthetic_generator_deterministic():
    a = generate_synthetic_dataset(3, 2, 128, seed=11)
    b = generate_synthetic_dataset(3, 2, 128, seed=11)
    assert len(a) == 6
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.channels, rb.channels)
        assert ra.label == rb.label
    c = generate_synthetic_dataset(3, 2, 128, seed=12)
    assert not np.array_equal(a[0].channels, c[0].channels)


def test_synthetic_generator_labels_and_shapes():
    recs = generate_synthetic_dataset(4, 3, 64, seed=0, n_channels=2)
    assert sorted({r.label for r in recs}) == [0, 1, 2, 3]
    assert all(r.channels.shape == (2, 64) for r in recs)


def test_synthetic_generator_validates():
    with pytest.raises(ValueError):
        generate_synthetic_dataset(1, 2, 64, seed=0)


def test_write_synthetic_dataset_loads_back(tmp_path):
    recs = generate_synthetic_dataset(2, 2, 100, seed=5)
    manifest_path = write_synthetic_dataset(tmp_path, recs, 2)
    man = load_manifest(manifest_path)
    loaded = load_dataset(man, base_dir=tmp_path)
    assert len(loaded) == 4
    for orig, back in zip(recs, loaded):
        assert back.label == orig.label
        assert np.array_equal(back.channels, orig.channels.astype(np.float32))
