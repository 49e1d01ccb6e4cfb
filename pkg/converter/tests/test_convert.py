"""Converter: labeling rules, channel choice, binary output, manifest."""

import json
import os
import struct

import numpy as np
import pytest

matconvert = pytest.importorskip("matconvert")
sio = pytest.importorskip("scipy.io")

from matconvert.cli import main
from matconvert.convert import convert_directory, find_vibration_variables
from matconvert.mapping import ConversionMap, describe_label

HEADER = struct.Struct("<4sIQI")

TEN_NAMES = [
    "normal_0.mat",
    "B007_0.mat", "B014_0.mat", "B021_0.mat",
    "IR007_0.mat", "IR014_0.mat", "IR021_0.mat",
    "OR007@6_0.mat", "OR014@6_0.mat", "OR021@6_0.mat",
]


def write_mat(path, values, var="X100_DE_time", extra=None):
    doc = {var: np.asarray(values, dtype=np.float64).reshape(-1, 1)}
    if extra:
        doc.update(extra)
    sio.savemat(path, doc)


def read_tsg(path):
    """Independent parse of the output layout."""
    with open(path, "rb") as fh:
        magic, n_ch, n_frames, rate = HEADER.unpack(fh.read(HEADER.size))
        payload = fh.read()
    assert magic == b"TSG1"
    assert len(payload) == 4 * n_ch * n_frames
    values = np.frombuffer(payload, dtype="<f4")
    return values.reshape(n_frames, n_ch).T, rate


# -- labeling rules --------------------------------------------------------


def test_label_rules():
    cmap = ConversionMap()
    assert cmap.label_for("normal_0") == 0
    assert cmap.label_for("Normal_3_1730rpm") == 0
    assert cmap.label_for("B007_1") == 1
    assert cmap.label_for("B014_1") == 2
    assert cmap.label_for("B021_1") == 3
    assert cmap.label_for("IR007_0") == 4
    assert cmap.label_for("IR014_0") == 5
    assert cmap.label_for("IR021_0") == 6
    assert cmap.label_for("OR007@6_0") == 7
    assert cmap.label_for("OR014@3_0") == 8
    assert cmap.label_for("OR021@12_0") == 9
    assert cmap.label_for("chatter") is None
    assert cmap.label_for("B033_1") is None  # unknown diameter


def test_label_descriptions():
    assert describe_label(0) == "healthy"
    assert describe_label(1) == "ball 0.007in"
    assert describe_label(6) == "inner race 0.021in"
    assert describe_label(9) == "outer race 0.021in"


def test_channel_preference_order():
    assert ConversionMap().channel_preference() == ("de", "fe", "ba")
    assert ConversionMap(preferred_channel="ba").channel_preference() == ("ba", "de", "fe")
    with pytest.raises(ValueError):
        ConversionMap(preferred_channel="xx")


def test_find_vibration_variables():
    doc = {
        "X097_DE_time": 1,
        "X097_FE_time": 2,
        "X097RPM": 3,
        "__header__": b"",
    }
    assert find_vibration_variables(doc) == {"de": "X097_DE_time", "fe": "X097_FE_time"}


# -- conversion ------------------------------------------------------------


def test_ramp_round_trip_one_ulp(tmp_path):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    ramp = np.arange(100, dtype=np.float64)
    write_mat(src / "B007_0.mat", ramp)
    assert main(["convert", "--in", str(src), "--out", str(out)]) == 0
    values, rate = read_tsg(out / "B007_0.tsg")
    assert rate == 12000
    f32 = ramp.astype(np.float32)
    ulp = np.spacing(np.abs(f32))
    assert np.all(np.abs(values[0] - f32) <= ulp)
    # a ramp of small integers is exactly representable
    assert np.array_equal(values[0], ramp.astype(np.float32))


def test_all_ten_labels_in_manifest(tmp_path, capsys):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    rng = np.random.default_rng(1)
    for name in TEN_NAMES:
        write_mat(src / name, rng.normal(size=256))
    assert main(["convert", "--in", str(src), "--out", str(out)]) == 0
    assert capsys.readouterr().err == ""  # full coverage, nothing to warn about
    doc = json.loads((out / "manifest.json").read_text())
    assert doc["class_count"] == 10
    assert sorted(e["label"] for e in doc["entries"]) == list(range(10))
    for e in doc["entries"]:
        assert e["sample_rate_hz"] == 12000.0
        assert (out / e["path"]).exists()


def test_position_suffix_sanitized(tmp_path):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    write_mat(src / "OR007@6_0.mat", np.ones(16))
    main(["convert", "--in", str(src), "--out", str(out)])
    assert (out / "OR007_6_0.tsg").exists()


def test_unrecognized_name_skipped_with_warning(tmp_path, capsys):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    write_mat(src / "B007_0.mat", np.ones(16))
    write_mat(src / "mystery.mat", np.ones(16))
    assert main(["convert", "--in", str(src), "--out", str(out)]) == 0
    err = capsys.readouterr().err
    assert "mystery" in err and "skipped" in err
    assert not (out / "mystery.tsg").exists()


def test_unrecognized_variables_skipped(tmp_path, capsys):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    write_mat(src / "B007_0.mat", np.ones(16))
    sio.savemat(src / "B014_0.mat", {"whatever": np.ones((4, 1))})
    assert main(["convert", "--in", str(src), "--out", str(out)]) == 0
    assert "no vibration variable" in capsys.readouterr().err
    doc = json.loads((out / "manifest.json").read_text())
    assert [e["label"] for e in doc["entries"]] == [1]


def test_channel_fallback_with_warning(tmp_path, capsys):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    write_mat(src / "B007_0.mat", np.full(16, 2.0), var="X100_FE_time")
    assert main(["convert", "--in", str(src), "--out", str(out)]) == 0
    assert "using FE" in capsys.readouterr().err
    values, _ = read_tsg(out / "B007_0.tsg")
    assert np.all(values == 2.0)


def test_channel_override_flag(tmp_path):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    write_mat(
        src / "B007_0.mat",
        np.full(16, 1.0),
        var="X100_DE_time",
        extra={"X100_BA_time": np.full((16, 1), 9.0)},
    )
    main(["convert", "--in", str(src), "--out", str(out), "--channel", "ba"])
    values, _ = read_tsg(out / "B007_0.tsg")
    assert np.all(values == 9.0)


def test_rate_flag_recorded(tmp_path):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    write_mat(src / "B007_0.mat", np.ones(16))
    main(["convert", "--in", str(src), "--out", str(out), "--rate", "48000"])
    _, rate = read_tsg(out / "B007_0.tsg")
    assert rate == 48000
    doc = json.loads((out / "manifest.json").read_text())
    assert doc["entries"][0]["sample_rate_hz"] == 48000.0


def test_empty_conversion_fails(tmp_path, capsys):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    write_mat(src / "mystery.mat", np.ones(16))
    assert main(["convert", "--in", str(src), "--out", str(out)]) == 2
    assert "no files converted" in capsys.readouterr().err
    assert not (out / "manifest.json").exists()


def test_missing_input_directory(tmp_path, capsys):
    assert main(["convert", "--in", str(tmp_path / "absent"), "--out", str(tmp_path / "o")]) == 2


def test_partial_coverage_warns(tmp_path, capsys):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    write_mat(src / "normal_0.mat", np.ones(16))
    write_mat(src / "B007_0.mat", np.ones(16))
    assert main(["convert", "--in", str(src), "--out", str(out)]) == 0
    assert "no recordings" in capsys.readouterr().err


def test_rerun_is_byte_identical(tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    rng = np.random.default_rng(2)
    for name in TEN_NAMES:
        write_mat(src / name, rng.normal(size=64))
    a, b = tmp_path / "a", tmp_path / "b"
    main(["convert", "--in", str(src), "--out", str(a)])
    main(["convert", "--in", str(src), "--out", str(b)])
    for name in sorted(os.listdir(a)):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_manifest_entry_order_is_stable(tmp_path):
    src, out = tmp_path / "src", tmp_path / "out"
    src.mkdir()
    # created in reverse name order; manifest must sort by (label, name)
    for name in reversed(TEN_NAMES):
        write_mat(src / name, np.ones(32))
    main(["convert", "--in", str(src), "--out", str(out)])
    doc = json.loads((out / "manifest.json").read_text())
    labels = [e["label"] for e in doc["entries"]]
    assert labels == sorted(labels)
