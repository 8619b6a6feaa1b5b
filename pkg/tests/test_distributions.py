import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from stochepi.distributions import (
    ParameterError,
    RngStream,
    derive_stream,
    make_rng,
    sample_bernoulli,
    sample_binomial,
    sample_erlang_days,
    sample_erlang_days_batch,
    sample_group,
    sample_poisson,
)


def test_same_seed_same_draws():
    a = make_rng(123).generator.random(1000)
    b = make_rng(123).generator.random(1000)
    assert np.array_equal(a, b)


def test_fresh_restarts_sequence():
    rng = make_rng(9)
    first = rng.generator.random(10)
    assert np.array_equal(rng.fresh().generator.random(10), first)


def test_child_streams_pairwise_distinct():
    root = make_rng(42)
    prefixes = {tuple(derive_stream(root, i).generator.integers(0, 2**63, 4)) for i in range(100)}
    assert len(prefixes) == 100


def test_child_independent_of_parent_consumption():
    root = make_rng(5)
    before = derive_stream(root, 3).generator.random(5)
    root.generator.random(10_000)
    assert np.array_equal(derive_stream(root, 3).generator.random(5), before)


def test_distinct_seeds_give_distinct_streams():
    a = make_rng(1).generator.random(16)
    b = make_rng(2).generator.random(16)
    assert not np.array_equal(a, b)


def test_sibling_streams_uncorrelated():
    root = make_rng(7)
    x = derive_stream(root, 0).generator.random(100_000)
    y = derive_stream(root, 1).generator.random(100_000)
    # the standard error of a sample correlation at this size is ~0.003
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.015


def test_seed_range_checked():
    with pytest.raises(ParameterError):
        RngStream(-1)
    with pytest.raises(ParameterError):
        RngStream(1 << 64)
    with pytest.raises(ParameterError):
        derive_stream(make_rng(0), -2)


def test_poisson_moments():
    x = sample_poisson(make_rng(11), 7.0, 1_000_000)
    assert abs(x.mean() - 7.0) < 0.01
    assert abs(x.var() - 7.0) < 0.05


def test_poisson_zero_mass_small_mean():
    mean = 2.5 / 21
    x = sample_poisson(make_rng(12), mean, 1_000_000)
    assert abs((x == 0).mean() - math.exp(-mean)) < 0.002


def test_poisson_scalar_and_zero_mean():
    rng = make_rng(3)
    assert sample_poisson(rng, 0.0) == 0
    assert isinstance(sample_poisson(rng, 3.0), int)


@pytest.mark.parametrize("mean", [-1.0, float("nan"), float("inf")])
def test_poisson_rejects_bad_mean(mean):
    with pytest.raises(ParameterError):
        sample_poisson(make_rng(0), mean)


def test_erlang_days_mean_and_spread():
    x = sample_erlang_days_batch(make_rng(13), 3, 1 / 7, 1_000_000)
    assert abs(x.mean() - 21.0) < 0.1
    # sd of Erlang(3, 1/7) is 7*sqrt(3) ~ 12.1; rounding adds ~1/12 to the variance
    assert abs(x.std() - math.sqrt(3 * 49 + 1 / 12)) < 0.05
    assert abs(x.std() - 12) < 0.25
    assert x.min() >= 1 and x.dtype.kind == "i"


def test_erlang_clamp_mass_is_small():
    # P(X < 0.5) for Erlang(3, 1/7)
    assert stats.gamma(3, scale=7).cdf(0.5) < 1e-3
    x = sample_erlang_days_batch(make_rng(14), 3, 1 / 7, 200_000)
    assert (x == 1).mean() < 2e-3


def test_erlang_other_shape_keeps_mean_when_rate_rescaled():
    x = sample_erlang_days_batch(make_rng(15), 2, 2 / 21, 500_000)
    assert abs(x.mean() - 21.0) < 0.1
    y = sample_erlang_days_batch(make_rng(15), 2, 1 / 7, 500_000)
    assert abs(y.mean() - 14.0) < 0.1


def test_erlang_huge_rate_clamps_to_one_day():
    assert sample_erlang_days(make_rng(1), 3, 1e6) == 1


@pytest.mark.parametrize("k, rate", [(0, 0.1), (2.5, 0.1), (3, 0.0), (3, -1.0)])
def test_erlang_rejects_bad_parameters(k, rate):
    with pytest.raises(ParameterError):
        sample_erlang_days(make_rng(0), k, rate)


def test_binomial_daily_deaths_mean():
    p = 0.009 / 21
    x = sample_binomial(make_rng(16), 100_000, p, 10_000)
    assert abs(x.mean() - 100_000 * p) < 0.5


def test_binomial_array_trials():
    x = sample_binomial(make_rng(2), np.array([0, 10, 100]), 1.0, 3)
    assert list(x) == [0, 10, 100]


@pytest.mark.parametrize("n, p", [(-1, 0.5), (10, 1.2), (10, -0.1)])
def test_binomial_rejects_bad_parameters(n, p):
    with pytest.raises(ParameterError):
        sample_binomial(make_rng(0), n, p)


def test_bernoulli_frequency():
    rng = make_rng(17)
    hits = sum(sample_bernoulli(rng, 0.05) for _ in range(100_000))
    assert abs(hits / 100_000 - 0.05) < 0.002


def test_bernoulli_edges():
    rng = make_rng(0)
    assert not any(sample_bernoulli(rng, 0.0) for _ in range(100))
    assert all(sample_bernoulli(rng, 1.0) for _ in range(100))
    with pytest.raises(ParameterError):
        sample_bernoulli(rng, 1.5)


def test_sample_group_proportions():
    rng = make_rng(18)
    picks = np.array([sample_group(rng, [2, 8]) for _ in range(20_000)])
    assert abs((picks == 0).mean() - 0.2) < 0.01
    with pytest.raises(ParameterError):
        sample_group(rng, [0, 0])
    with pytest.raises(ParameterError):
        sample_group(rng, [1, -1])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), index=st.integers(0, 10**6))
def test_derivation_is_a_pure_function(seed, index):
    a = derive_stream(make_rng(seed), index).generator.random(3)
    b = derive_stream(make_rng(seed), index).generator.random(3)
    assert np.array_equal(a, b)
