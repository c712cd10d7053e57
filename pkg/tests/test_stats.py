from __future__ import annotations

import warnings

import numpy as np
import pytest
import scipy.stats

from beatwarp.stats import AD_P_MAX, AD_P_MIN, ad_two_sample


def test_identical_samples_raise_no_alarm():
    a = np.arange(50, dtype=float)
    t, p = ad_two_sample(a, a.copy())
    assert p > 0.05
    assert t < 0  # deep in the look-alike end of the scale


def test_clearly_shifted_samples_reject():
    rng = np.random.default_rng(1)
    a = rng.normal(size=400)
    b = rng.normal(size=60) + 5.0
    t, p = ad_two_sample(a, b)
    assert p == AD_P_MIN
    assert t > 6.0


def test_small_shift_on_large_samples_detected():
    rng = np.random.default_rng(2)
    a = rng.normal(size=400)
    b = rng.normal(size=400) + 0.5
    _, p = ad_two_sample(a, b)
    assert p < 0.05


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    a = rng.normal(size=40)
    b = rng.normal(size=25)
    base = ad_two_sample(a, b)
    shuffled = ad_two_sample(rng.permutation(a), rng.permutation(b))
    assert base == shuffled


def test_rank_statistic_survives_monotone_transforms():
    rng = np.random.default_rng(4)
    a = rng.uniform(1.0, 2.0, size=30)
    b = rng.uniform(1.2, 2.2, size=30)
    t0, _ = ad_two_sample(a, b)
    t1, _ = ad_two_sample(np.exp(a), np.exp(b))
    t2, _ = ad_two_sample(10.0 * a - 3.0, 10.0 * b - 3.0)
    assert t1 == pytest.approx(t0, abs=1e-12)
    assert t2 == pytest.approx(t0, abs=1e-12)


def test_handles_heavy_ties_via_midranks():
    a = np.array([0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0])
    b = np.array([0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0])
    t, p = ad_two_sample(a, b)
    assert np.isfinite(t)
    assert AD_P_MIN <= p <= AD_P_MAX


def test_matches_reference_implementation():
    rng = np.random.default_rng(5)
    for _ in range(12):
        a = rng.normal(size=int(rng.integers(5, 200)))
        b = rng.normal(loc=rng.uniform(0, 1.5), size=int(rng.integers(5, 200)))
        t, p = ad_two_sample(a, b)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ref = scipy.stats.anderson_ksamp([a, b])
        assert t == pytest.approx(ref.statistic, abs=1e-9)
        assert p == pytest.approx(ref.pvalue, abs=1e-9)


def test_p_value_stays_in_reporting_range():
    rng = np.random.default_rng(6)
    for _ in range(30):
        a = rng.normal(size=20)
        b = rng.normal(loc=rng.uniform(0, 4), size=20)
        _, p = ad_two_sample(a, b)
        assert AD_P_MIN <= p <= AD_P_MAX


def test_undersized_samples_are_rejected():
    with pytest.raises(ValueError):
        ad_two_sample([1.0, 2.0, 3.0, 4.0], np.arange(10.0))
    with pytest.raises(ValueError):
        ad_two_sample(np.arange(10.0), [1.0, 2.0, 3.0, 4.0])


def test_degenerate_constant_pool_is_an_error():
    with pytest.raises(ValueError):
        ad_two_sample(np.ones(10), np.ones(10))


def test_null_calibration_quick():
    # a smaller cousin of the acceptance check: 300 shuffles, same bounds
    rng = np.random.default_rng(7)
    pool = rng.lognormal(size=460)
    rejections = 0
    for _ in range(300):
        perm = rng.permutation(pool)
        _, p = ad_two_sample(perm[:400], perm[400:])
        rejections += p < 0.05
    assert 0.02 <= rejections / 300 <= 0.09
