"""File-name labeling rules and channel preference for bearing-rig archives.

The ten-class scheme: healthy recordings are class 0; ball, inner-race and
outer-race faults occupy 1-3, 4-6 and 7-9, ordered by fault diameter
(0.007, 0.014, 0.021 inches).
"""

import re
from dataclasses import dataclass, field

_FAULT_BASE = {"B": 1, "IR": 4, "OR": 7}
_DIAMETER_OFFSET = {"007": 0, "014": 1, "021": 2}

# e.g. B007, IR014, OR021@6 (the @n position suffix is ignored)
_FAULT_RE = re.compile(r"(IR|OR|B)(007|014|021)")

CHANNEL_ORDER = ("de", "fe", "ba")  # drive end, fan end, base accelerometer


@dataclass(frozen=True)
class ConversionMap:
    class_count: int = 10
    preferred_channel: str = "de"
    fallback_order: tuple = CHANNEL_ORDER

    def __post_init__(self):
        if self.preferred_channel not in self.fallback_order:
            raise ValueError(f"unknown channel {self.preferred_channel!r}")

    def channel_preference(self) -> tuple:
        rest = tuple(c for c in self.fallback_order if c != self.preferred_channel)
        return (self.preferred_channel, *rest)

    def label_for(self, stem: str) -> int | None:
        """Class label for a file stem, or None when the name fits no rule."""
        if "normal" in stem.lower():
            return 0
        m = _FAULT_RE.search(stem)
        if m is None:
            return None
        return _FAULT_BASE[m.group(1)] + _DIAMETER_OFFSET[m.group(2)]


def describe_label(label: int) -> str:
    if label == 0:
        return "healthy"
    location = {0: "ball", 1: "inner race", 2: "outer race"}[(label - 1) // 3]
    diameter = ("0.007", "0.014", "0.021")[(label - 1) % 3]
    return f"{location} {diameter}in"
