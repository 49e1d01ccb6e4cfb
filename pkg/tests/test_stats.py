"""Welch t and two-sample KS with in-package special functions.

Cross-checked against an independent evaluation recorded once: the Welch
p-values come from a reference t-distribution implementation, the KS p-values
from the asymptotic Kolmogorov distribution at lambda = sqrt(n*m/(n+m)) * D.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsgraph.errors import DataError
from tsgraph.stats import (
    kolmogorov_sf,
    ks_statistic,
    ks_two_sample,
    regularized_incomplete_beta,
    welch_t_test,
)


def fixture_samples():
    rng = np.random.default_rng(20240817)
    x = rng.normal(0.3, 1.1, 40)
    y = rng.normal(0.0, 0.9, 55)
    x2 = rng.gamma(2.0, 1.5, 60)
    y2 = rng.normal(2.5, 1.0, 45)
    return x, y, x2, y2


# -- regularized incomplete beta ------------------------------------------


def test_betainc_boundaries():
    assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
    assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0


def test_betainc_symmetric_half():
    # I_{1/2}(a, a) = 1/2 for any a
    for a in (0.5, 1.0, 3.0, 17.5):
        assert regularized_incomplete_beta(a, a, 0.5) == pytest.approx(0.5, abs=1e-13)


def test_betainc_arcsine_closed_form():
    # I_x(1/2, 1/2) = 2/pi * arcsin(sqrt(x))
    for x in (0.1, 0.3, 0.77):
        want = 2.0 / math.pi * math.asin(math.sqrt(x))
        assert regularized_incomplete_beta(0.5, 0.5, x) == pytest.approx(want, abs=1e-13)
    assert regularized_incomplete_beta(0.5, 0.5, 0.3) == pytest.approx(
        0.36901011956554536, abs=1e-12
    )


def test_betainc_binomial_identity():
    # integer a, b: I_x(a, b) = P(Bin(a+b-1, x) >= a); here 1 - q^4 - 4 p q^3
    want = 1.0 - 0.3**4 - 4 * 0.7 * 0.3**3
    assert regularized_incomplete_beta(2.0, 3.0, 0.7) == pytest.approx(want, abs=1e-13)


def test_betainc_frozen_spots():
    assert regularized_incomplete_beta(10.0, 0.5, 0.9) == pytest.approx(
        0.15164090963470994, abs=1e-12
    )
    assert regularized_incomplete_beta(25.0, 0.5, 0.999) == pytest.approx(
        0.8238877978063031, abs=1e-12
    )


def test_betainc_complement_identity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.uniform(0.2, 20.0, size=2)
        x = float(rng.uniform(0.01, 0.99))
        left = regularized_incomplete_beta(a, b, x)
        right = regularized_incomplete_beta(b, a, 1.0 - x)
        assert left + right == pytest.approx(1.0, abs=1e-11)


@given(st.floats(0.2, 30.0), st.floats(0.2, 30.0))
@settings(max_examples=40, deadline=None)
def test_betainc_monotone_in_x(a, b):
    xs = np.linspace(0.05, 0.95, 10)
    vals = [regularized_incomplete_beta(a, b, float(x)) for x in xs]
    assert all(v2 >= v1 - 1e-12 for v1, v2 in zip(vals, vals[1:]))
    assert all(0.0 <= v <= 1.0 for v in vals)


# -- Kolmogorov survival function -----------------------------------------


def test_kolmogorov_sf_frozen_spots():
    # both series branches are exercised (switch sits at lambda = 1)
    spots = {
        0.3: 0.9999906941986655,
        0.5: 0.9639452436648751,
        1.0: 0.26999967167735456,
        1.5: 0.022217962616525127,
        2.0: 0.0006709252557796953,
    }
    for lam, want in spots.items():
        assert kolmogorov_sf(lam) == pytest.approx(want, abs=1e-12)


def test_kolmogorov_sf_limits():
    assert kolmogorov_sf(0.0) == 1.0
    assert kolmogorov_sf(1e-12) == pytest.approx(1.0, abs=1e-12)
    assert kolmogorov_sf(10.0) == pytest.approx(0.0, abs=1e-15)


def test_kolmogorov_sf_one_term_tail():
    # for large lambda the alternating series is dominated by its first term
    lam = 3.0
    assert kolmogorov_sf(lam) == pytest.approx(2.0 * math.exp(-2.0 * lam * lam), rel=1e-6)


def test_kolmogorov_sf_monotone_decreasing():
    lams = np.linspace(0.05, 4.0, 80)
    vals = [kolmogorov_sf(float(v)) for v in lams]
    assert all(v2 <= v1 + 1e-15 for v1, v2 in zip(vals, vals[1:]))
    assert all(0.0 <= v <= 1.0 for v in vals)


def test_kolmogorov_sf_branches_agree_at_switch():
    # theta-function form below 1, alternating series above; the slope near
    # lambda = 1 is about -1.07, so a 2e-7 gap may move the value by ~2e-7
    below = kolmogorov_sf(0.9999999)
    above = kolmogorov_sf(1.0000001)
    assert below == pytest.approx(above, abs=1e-6)
    assert below > above  # monotone through the seam


# -- Welch t ---------------------------------------------------------------


def test_welch_frozen_pair_one():
    x, y, _, _ = fixture_samples()
    res = welch_t_test(x, y)
    assert res.statistic == pytest.approx(0.1628507268367957, abs=1e-12)
    assert res.p_value == pytest.approx(0.8710983461007291, abs=1e-12)
    assert res.detail["n"] == 40 and res.detail["m"] == 55


def test_welch_frozen_pair_two():
    _, _, x2, y2 = fixture_samples()
    res = welch_t_test(x2, y2)
    assert res.statistic == pytest.approx(1.9162969413823567, abs=1e-12)
    assert res.p_value == pytest.approx(0.05842685040655089, abs=1e-12)


def test_welch_sign_flips_under_swap():
    x, y, _, _ = fixture_samples()
    a = welch_t_test(x, y)
    b = welch_t_test(y, x)
    assert b.statistic == pytest.approx(-a.statistic, abs=1e-12)
    assert b.p_value == pytest.approx(a.p_value, abs=1e-12)
    assert b.detail["df"] == pytest.approx(a.detail["df"], abs=1e-9)


def test_welch_identical_means_t_zero():
    x = np.array([1.0, 2.0, 3.0])
    y = np.array([0.0, 2.0, 4.0])
    res = welch_t_test(x, y)
    assert res.statistic == pytest.approx(0.0, abs=1e-15)
    assert res.p_value == pytest.approx(1.0, abs=1e-12)


def test_welch_separated_samples():
    rng = np.random.default_rng(3)
    x = rng.normal(0.0, 0.1, 50)
    y = rng.normal(50.0, 0.1, 50)
    assert welch_t_test(x, y).p_value < 1e-10


def test_welch_one_constant_sample_ok():
    res = welch_t_test([5.0, 5.0, 5.0], [1.0, 2.0, 3.0])
    assert math.isfinite(res.statistic)
    assert 0.0 < res.p_value < 1.0


def test_welch_data_errors():
    with pytest.raises(DataError):
        welch_t_test([1.0], [1.0, 2.0])
    with pytest.raises(DataError):
        welch_t_test([1.0, np.nan, 2.0], [1.0, 2.0])
    with pytest.raises(DataError):
        welch_t_test([2.0, 2.0], [3.0, 3.0])


# -- Kolmogorov-Smirnov ----------------------------------------------------


def test_ks_statistic_frozen():
    x, y, x2, y2 = fixture_samples()
    assert ks_statistic(np.sort(x), np.sort(y)) == pytest.approx(
        0.1386363636363636, abs=1e-12
    )
    assert ks_statistic(np.sort(x2), np.sort(y2)) == pytest.approx(
        0.26111111111111107, abs=1e-12
    )


def test_ks_frozen_pair_one():
    x, y, _, _ = fixture_samples()
    res = ks_two_sample(x, y)
    assert res.statistic == pytest.approx(0.1386363636363636, abs=1e-12)
    assert res.detail["lambda"] == pytest.approx(0.6671549248712058, abs=1e-12)
    assert res.p_value == pytest.approx(0.7649820108338242, abs=1e-12)


def test_ks_frozen_pair_two():
    _, _, x2, y2 = fixture_samples()
    res = ks_two_sample(x2, y2)
    assert res.detail["n_eff"] == pytest.approx(60 * 45 / 105, abs=1e-12)
    assert res.detail["lambda"] == pytest.approx(1.3240749990746759, abs=1e-12)
    assert res.p_value == pytest.approx(0.06001090141205244, abs=1e-12)


def test_ks_symmetric_in_samples():
    x, y, _, _ = fixture_samples()
    a, b = ks_two_sample(x, y), ks_two_sample(y, x)
    assert a.statistic == b.statistic
    assert a.p_value == b.p_value


def test_ks_identical_samples_d_zero():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    res = ks_two_sample(x, x.copy())
    assert res.statistic == 0.0
    assert res.p_value == 1.0


def test_ks_disjoint_supports_d_one():
    res = ks_two_sample([1.0, 2.0, 3.0], [10.0, 11.0, 12.0])
    assert res.statistic == 1.0
    assert res.p_value < 0.1


def test_ks_step_example():
    # F_x jumps to 1 at 2; F_y is 0 there: D = |1 - 1/3| at pooled point 2
    d = ks_statistic(np.array([1.0, 2.0]), np.array([1.5, 3.0, 4.0]))
    assert d == pytest.approx(1.0 - 1.0 / 3.0, abs=1e-15)


def test_ks_data_errors():
    with pytest.raises(DataError):
        ks_two_sample([1.0], [1.0, 2.0])
    with pytest.raises(DataError):
        ks_two_sample([1.0, np.inf], [1.0, 2.0])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_ks_statistic_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.normal(size=int(rng.integers(2, 20))))
    y = np.sort(rng.normal(size=int(rng.integers(2, 20))))
    got = ks_statistic(x, y)
    grid = np.concatenate([x, y])
    want = max(
        abs((x <= t).mean() - (y <= t).mean()) for t in grid
    )
    assert got == pytest.approx(want, abs=1e-12)
