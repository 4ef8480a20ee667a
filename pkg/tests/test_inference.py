"""
Tests for Beta-Bernoulli decisions and Hoeffding measurement planning.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from enums import Decision
from inference import (
    DEFAULT_PRIOR,
    alpha_errors,
    decide,
    expected_samples,
    hoeffding_samples,
    plan_measurements,
    sequential_test,
    update,
    update_batch,
)
from schemas import BetaPosterior
from utils.error_handler import InvalidInputError


def test_hoeffding_reference_count():
    assert hoeffding_samples(0.1, 0.5) == 139


def test_hoeffding_rejects_bad_inputs():
    with pytest.raises(InvalidInputError):
        hoeffding_samples(0.0, 0.5)
    with pytest.raises(InvalidInputError):
        hoeffding_samples(0.1, 1.0)


def test_plan_measurements_splits_the_failure_probability():
    m, eps, eta = plan_measurements(0.99, 100, success_probability=0.5)
    assert eps == pytest.approx(0.0005)
    assert (1 - eta) ** 100 == pytest.approx(0.5)
    assert m == hoeffding_samples(eps, eta)


def test_nineteen_successes_accept_and_eighteen_do_not():
    left19, _ = alpha_errors(update_batch(DEFAULT_PRIOR, 19, 0), 0.9, 0.05)
    left18, _ = alpha_errors(update_batch(DEFAULT_PRIOR, 18, 0), 0.9, 0.05)
    assert left19 == pytest.approx(0.048, abs=1e-3)
    assert left18 == pytest.approx(0.055, abs=1e-3)

    result = decide(itertools.repeat(1), 0.9, 0.05, alpha_threshold=0.05)
    assert result.decision == Decision.ACCEPT
    assert result.samples_used == 19
    assert result.posterior == BetaPosterior(a=29, b=2)
    assert len(result.log) == 19
    assert result.log[-1]["decision"] == "accept"
    assert set(result.log[0]) == {"sample_idx", "outcome", "a", "b", "left_err", "right_err", "decision"}


def test_failures_reject_quickly():
    result = decide([0] * 10, 0.9, 0.05)
    assert result.decision == Decision.REJECT
    assert result.samples_used <= 3
    assert result.right_error < 0.05


def test_exhausted_stream_is_undecided():
    result = decide([1, 1, 1], 0.9, 0.05)
    assert result.decision == Decision.UNDECIDED
    assert result.samples_used == 3
    assert result.posterior == BetaPosterior(a=13, b=2)


def test_sampler_callable_and_max_samples():
    result = decide(lambda: 1, 0.9, 0.05, max_samples=5)
    assert result.decision == Decision.UNDECIDED
    assert result.samples_used == 5


def test_invalid_threshold_and_dead_zone():
    with pytest.raises(InvalidInputError):
        decide([1], 0.9, 0.05, alpha_threshold=0.6)
    with pytest.raises(InvalidInputError):
        decide([1], 0.98, 0.05)


def test_high_success_rate_needs_few_samples():
    stats = expected_samples(0.99, 0.9, 0.05, runs=200, rng=np.random.default_rng(5))
    assert stats["median"] <= 25
    assert stats["accept_rate"] > 0.9


def test_sequential_test_relaxes_until_decided():
    pattern = itertools.cycle([1] * 9 + [0])
    result = sequential_test(lambda: next(pattern), 0.9, 0.05, alpha_threshold=0.05, max_samples=20)
    assert result.decision != Decision.UNDECIDED
    assert result.samples_used == len(result.log)
    assert [row["sample_idx"] for row in result.log] == list(range(1, result.samples_used + 1))


@given(st.lists(st.integers(0, 1), max_size=60), st.floats(0.5, 20), st.floats(0.5, 20))
def test_sequential_updates_match_batch_counts(outcomes, a, b):
    prior = BetaPosterior(a=a, b=b)
    post = prior
    for x in outcomes:
        post = update(post, x)
    successes = sum(outcomes)
    batch = update_batch(prior, successes, len(outcomes) - successes)
    assert post.a == pytest.approx(batch.a)
    assert post.b == pytest.approx(batch.b)


@given(st.floats(1, 50), st.floats(1, 50))
def test_alpha_errors_are_probabilities(a, b):
    left, right = alpha_errors(BetaPosterior(a=a, b=b), 0.5, 0.1)
    assert 0.0 <= left <= 1.0 and 0.0 <= right <= 1.0
    assert left + right <= 1.0 + 1e-12


def test_posterior_moments():
    post = BetaPosterior(a=10, b=2)
    assert post.mean == pytest.approx(10 / 12)
    assert post.variance == pytest.approx(20 / (144 * 13))
    assert not math.isnan(alpha_errors(post, 0.9, 0.05)[0])
