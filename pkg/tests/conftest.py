"""Shared fixtures plus the acceptance-summary terminal section."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes `oracles` importable

from tsgraph.graph import ThresholdPolicy, sample_to_graph
from tsgraph.signal import generate_synthetic_dataset, make_samples

_acceptance_results: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def small_graph(seed: int = 0, n_nodes: int = 5, window: int = 32, channels: int = 1):
    """Deterministic little graph for model-level tests."""
    step = window // 2
    length = window + (n_nodes - 1) * step
    rec = generate_synthetic_dataset(2, 1, length, seed=seed, n_channels=channels)[0]
    sample = make_samples(rec, length, length)[0]
    return sample_to_graph(sample, window, step, ThresholdPolicy("quantile", 0.5))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    out = yield
    rep = out.get_result()
    if "test_acceptance.py" not in str(getattr(item, "fspath", "")):
        return
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    if rep.when == "setup" and rep.skipped:
        _acceptance_results[item.nodeid] = (doc, "SKIP")
    elif rep.when == "call":
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        _acceptance_results[item.nodeid] = (doc, status)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for doc, status in _acceptance_results.values():
        terminalreporter.write_line(f"[{status}] {doc}")
