"""MAT-file conversion into the TSG1 binary layout plus a manifest.

The output format is written directly from its published layout
(little-endian header ``magic, u32 channels, u64 frames, u32 rate`` and a
frame-interleaved binary32 payload) so this package needs nothing from the
consumer side.
"""

import json
import os
import re
import struct
import sys
from dataclasses import dataclass

import numpy as np
import scipy.io

from .mapping import ConversionMap

MAGIC = b"TSG1"
_HEADER = struct.Struct("<4sIQI")
MANIFEST_VERSION = 1

# vibration variables look like X097_DE_time / X100_FE_time / X100_BA_time
_VAR_RE = re.compile(r"_(DE|FE|BA)_time$")


@dataclass
class ConvertedFile:
    source: str
    out_name: str
    label: int
    channel: str
    n_frames: int


def _warn(msg: str):
    print(f"warning: {msg}", file=sys.stderr)


def find_vibration_variables(mat: dict) -> dict:
    """Map channel tag ('de'/'fe'/'ba') to variable name."""
    found = {}
    for key in mat:
        m = _VAR_RE.search(key)
        if m:
            found[m.group(1).lower()] = key
    return found


def pick_channel(variables: dict, cmap: ConversionMap, source: str) -> str | None:
    for tag in cmap.channel_preference():
        if tag in variables:
            if tag != cmap.preferred_channel:
                _warn(
                    f"{source}: no {cmap.preferred_channel.upper()} channel, "
                    f"using {tag.upper()}"
                )
            return tag
    return None


def write_tsg(path: str, values: np.ndarray, rate_hz: int):
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, 1, values.size, rate_hz))
        fh.write(values.astype("<f4").tobytes())


def safe_stem(filename: str) -> str:
    stem = os.path.splitext(os.path.basename(filename))[0]
    return re.sub(r"[^A-Za-z0-9_.-]", "_", stem)


def convert_file(
    src_path: str, out_dir: str, cmap: ConversionMap, rate_hz: int
) -> ConvertedFile | None:
    """One MAT file to one TSG1 file; None when the file is skipped."""
    stem = os.path.splitext(os.path.basename(src_path))[0]
    label = cmap.label_for(stem)
    if label is None:
        _warn(f"{src_path}: file name fits no labeling rule, skipped")
        return None
    try:
        mat = scipy.io.loadmat(src_path)
    except (OSError, ValueError, NotImplementedError) as exc:
        _warn(f"{src_path}: unreadable MAT container ({exc}), skipped")
        return None
    variables = find_vibration_variables(mat)
    if not variables:
        _warn(f"{src_path}: no vibration variable recognized, skipped")
        return None
    tag = pick_channel(variables, cmap, src_path)
    if tag is None:
        return None
    values = np.asarray(mat[variables[tag]], dtype=np.float64).reshape(-1)
    if values.size == 0 or not np.isfinite(values).all():
        _warn(f"{src_path}: vibration channel empty or non-finite, skipped")
        return None
    out_name = safe_stem(src_path) + ".tsg"
    write_tsg(os.path.join(out_dir, out_name), values, rate_hz)
    return ConvertedFile(src_path, out_name, label, tag, values.size)


def write_manifest(out_dir: str, converted: list, class_count: int, rate_hz: int):
    entries = [
        {"label": c.label, "path": c.out_name, "sample_rate_hz": float(rate_hz)}
        for c in sorted(converted, key=lambda c: (c.label, c.out_name))
    ]
    doc = {
        "format_version": MANIFEST_VERSION,
        "class_count": class_count,
        "entries": entries,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def convert_directory(
    in_dir: str, out_dir: str, cmap: ConversionMap, rate_hz: int = 12000
) -> list:
    """Convert every MAT file under ``in_dir``; returns the converted entries.

    Files are visited in sorted order so reruns write identical outputs.
    """
    names = sorted(n for n in os.listdir(in_dir) if n.lower().endswith(".mat"))
    os.makedirs(out_dir, exist_ok=True)
    converted = []
    for name in names:
        result = convert_file(os.path.join(in_dir, name), out_dir, cmap, rate_hz)
        if result is not None:
            converted.append(result)
    if converted:
        present = {c.label for c in converted}
        missing = set(range(cmap.class_count)) - present
        if missing:
            _warn(
                f"labels {sorted(missing)} have no recordings; "
                "the manifest will not validate against the full class scheme"
            )
        write_manifest(out_dir, converted, cmap.class_count, rate_hz)
    return converted
