"""Warping distance against exhaustive enumeration, band behavior, and the
batched pairwise kernel against the scalar one."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import delannoy, min_warp_cost_by_enumeration
from tsgraph.dtw import (
    SimilarityMatrix,
    dtw_distance,
    dtw_distance_banded,
    pairwise_similarity,
    similarity,
)
from tsgraph.entropy import Segment
from tsgraph.errors import InfeasibleBandError

short_seq = st.lists(st.integers(-5, 5), min_size=1, max_size=8).map(
    lambda v: np.asarray(v, dtype=float)
)


def test_known_distances():
    assert dtw_distance([1.0, 2.0, 3.0], [2.0, 3.0, 4.0]) == 2.0
    assert dtw_distance([0.0], [3.0, 3.0]) == 6.0
    assert dtw_distance([1.0, 5.0, 2.0], [1.0, 5.0, 2.0]) == 0.0


def test_channel_mismatch_rejected():
    with pytest.raises(ValueError):
        dtw_distance(np.zeros((4, 2)), np.zeros((4, 3)))


def test_multichannel_local_cost_is_euclidean():
    x = np.array([[0.0, 0.0]])
    y = np.array([[3.0, 4.0]])
    assert dtw_distance(x, y) == 5.0


@given(short_seq, short_seq)
@settings(max_examples=60, deadline=None)
def test_symmetry_and_identity(x, y):
    assert dtw_distance(x, y) == pytest.approx(dtw_distance(y, x), abs=1e-12)
    assert dtw_distance(x, x) == 0.0


@given(short_seq, short_seq)
@settings(max_examples=50, deadline=None)
def test_matches_path_enumeration(x, y):
    assert dtw_distance(x, y) == pytest.approx(min_warp_cost_by_enumeration(x, y), abs=1e-9)


@given(short_seq, short_seq)
@settings(max_examples=50, deadline=None)
def test_self_append_never_decreases(x, y):
    # appending each sequence's own final point cannot shorten the alignment
    d0 = dtw_distance(x, y)
    d1 = dtw_distance(np.append(x, x[-1]), np.append(y, y[-1]))
    assert d1 >= d0 - 1e-12


def test_shared_append_can_decrease():
    # appending one shared point to both sides is NOT monotone; this pins the
    # counterexample so nobody "fixes" the property above into the wrong form
    x, y = np.array([0.0, 5.0]), np.array([5.0, 0.0])
    assert dtw_distance(x, y) == 10.0
    assert dtw_distance(np.append(x, 0.0), np.append(y, 0.0)) == 5.0


def test_delannoy_reference_counts():
    assert delannoy(4, 4) == 321
    assert delannoy(6, 6) == 8989
    assert delannoy(7, 7) == 48639
    assert delannoy(11, 3) == 2047
    assert delannoy(11, 11) == 45046719


def test_band_wide_enough_is_exact():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.normal(size=rng.integers(2, 10))
        y = rng.normal(size=rng.integers(2, 10))
        r = max(len(x), len(y))
        if abs(len(x) - len(y)) > r:
            continue
        assert dtw_distance_banded(x, y, r) == pytest.approx(dtw_distance(x, y), abs=1e-12)


@given(short_seq, short_seq, st.integers(0, 6))
@settings(max_examples=60, deadline=None)
def test_band_never_below_exact(x, y, radius):
    if abs(len(x) - len(y)) > radius:
        with pytest.raises(InfeasibleBandError):
            dtw_distance_banded(x, y, radius)
        return
    assert dtw_distance_banded(x, y, radius) >= dtw_distance(x, y) - 1e-12


def test_zero_radius_is_diagonal_cost():
    x = np.array([1.0, 4.0, 2.0])
    y = np.array([2.0, 0.0, 5.0])
    assert dtw_distance_banded(x, y, 0) == pytest.approx(np.abs(x - y).sum(), abs=1e-12)


def test_similarity_transform():
    assert similarity(0.0) == 1.0
    assert similarity(1.0) == 0.5
    assert similarity(3.0) < similarity(2.0)
    with pytest.raises(ValueError):
        similarity(-0.1)


def _segments(rng, n, width, channels=1):
    return [
        Segment(values=rng.normal(size=(channels, width)), start_index=i * width, parent="t")
        for i in range(n)
    ]


def test_pairwise_matches_scalar():
    rng = np.random.default_rng(7)
    segs = _segments(rng, 9, 14, channels=2)
    sim = pairwise_similarity(segs)
    for i in range(9):
        for j in range(9):
            if i == j:
                assert sim.values[i, j] == 1.0
            else:
                d = dtw_distance(segs[i].values.T, segs[j].values.T)
                assert sim.values[i, j] == pytest.approx(1.0 / (1.0 + d), abs=1e-10)
    assert np.array_equal(sim.values, sim.values.T)


def test_pairwise_banded_matches_scalar():
    rng = np.random.default_rng(8)
    segs = _segments(rng, 7, 12)
    sim = pairwise_similarity(segs, band_radius=3)
    for i in range(7):
        for j in range(i + 1, 7):
            d = dtw_distance_banded(segs[i].values.T, segs[j].values.T, 3)
            assert sim.values[i, j] == pytest.approx(1.0 / (1.0 + d), abs=1e-10)


def test_pairwise_threads_equivalent():
    rng = np.random.default_rng(9)
    segs = _segments(rng, 12, 10)
    a = pairwise_similarity(segs, threads=1)
    b = pairwise_similarity(segs, threads=3)
    assert np.array_equal(a.values, b.values)


def test_pairwise_mixed_widths_falls_back():
    rng = np.random.default_rng(10)
    segs = _segments(rng, 3, 8) + [
        Segment(values=rng.normal(size=(1, 5)), start_index=100, parent="t")
    ]
    sim = pairwise_similarity(segs)
    d = dtw_distance(segs[0].values.T, segs[3].values.T)
    assert sim.values[0, 3] == pytest.approx(1.0 / (1.0 + d), abs=1e-12)


def test_pairwise_single_segment():
    rng = np.random.default_rng(11)
    sim = pairwise_similarity(_segments(rng, 1, 6))
    assert sim.values.shape == (1, 1) and sim.values[0, 0] == 1.0


def test_similarity_matrix_helpers():
    vals = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.8], [0.2, 0.8, 1.0]])
    sim = SimilarityMatrix(values=vals, window_size=4)
    assert np.array_equal(np.sort(sim.off_diagonal()), [0.2, 0.5, 0.8])
    assert sim.to_csv().count("\n") == 3
