"""
Tests for Pauli trajectory noise and deliberate flips.
"""

import numpy as np
import pytest
from scipy.stats import binom, chisquare

from enums import Pauli
from noise import (
    apply_pauli_noise_layer,
    deliberate_flip_run,
    dry_run_event_counts,
    flip_scan,
    noise_layer_count,
    noisy_ensemble_run,
    sample_noise_events,
)
from schemas import NoiseConfig
from utils.error_handler import InvalidInputError


# ============================================================================
# Event sampling
# ============================================================================

def test_zero_probability_never_hits(rng):
    assert all(sample_noise_events(10, 0.0, rng) == [] for _ in range(50))


def test_unit_probability_hits_every_site(rng):
    events = sample_noise_events(7, 1.0, rng)
    assert [site for site, _ in events] == list(range(7))
    assert all(pauli in (Pauli.X, Pauli.Y, Pauli.Z) for _, pauli in events)


def test_probability_outside_unit_interval_is_rejected(rng):
    with pytest.raises(InvalidInputError):
        sample_noise_events(4, 1.5, rng)
    with pytest.raises(InvalidInputError):
        sample_noise_events(4, -0.1, rng)


def test_stream_advances_the_same_with_and_without_hits():
    a, b = np.random.default_rng(3), np.random.default_rng(3)
    sample_noise_events(5, 0.0, a)
    sample_noise_events(5, 1.0, b)
    assert a.random() == b.random()


def test_dry_run_event_rate():
    counts = dry_run_event_counts(100, 96, 1e-4, 2000, np.random.default_rng(11))
    assert counts.mean() == pytest.approx(0.96, abs=0.1)


@pytest.mark.slow
def test_dry_run_event_rate_full_ensemble():
    counts = dry_run_event_counts(100, 96, 1e-4, 10000, np.random.default_rng(11))
    assert counts.mean() == pytest.approx(0.96, abs=0.03)


def test_event_counts_follow_the_binomial_law():
    sites, layers, p, runs = 10, 20, 0.02, 2000
    counts = dry_run_event_counts(sites, layers, p, runs, np.random.default_rng(21))
    law = binom(sites * layers, p)
    tail = 10
    observed = [np.sum(counts == k) for k in range(tail)] + [np.sum(counts >= tail)]
    expected = runs * np.append(law.pmf(np.arange(tail)), law.sf(tail - 1))
    assert chisquare(observed, expected).pvalue > 1e-3
    assert counts.var() == pytest.approx(law.var(), rel=0.15)


def test_five_time_units_give_eighty_one_layers(dense4):
    assert noise_layer_count(dense4.naive(1, 5.0)) == 81


def test_noise_layer_on_a_vector_preserves_the_norm(dense4, rng):
    state, events = apply_pauli_noise_layer(dense4.initial_state(), 1.0, rng)
    assert len(events) == 4
    assert np.linalg.norm(state) == pytest.approx(1.0)


def test_noise_layer_on_an_mps(mps4, rng):
    state, events = apply_pauli_noise_layer(mps4.initial_state(), 1.0, rng, mps4)
    assert len(events) == 4
    assert np.linalg.norm(mps4.to_dense(state)) == pytest.approx(1.0)


# ============================================================================
# Ensembles
# ============================================================================

def test_noiseless_ensemble_has_no_spread(dense4):
    sched = dense4.naive(2, 2.0)
    result = noisy_ensemble_run(dense4, sched, NoiseConfig(p=0.0, n_trajectories=5), "fidelity", workers=1)
    assert result.std_err == 0.0
    assert result.n == 5
    assert all(events == [] for events in result.events)
    assert result.mean == pytest.approx(dense4.fidelity(dense4.evolve(dense4.initial_state(), sched)))


def test_ensemble_is_reproducible_from_the_seed(dense4):
    sched = dense4.naive(1, 1.0)
    noise = NoiseConfig(p=0.05, n_trajectories=6, seed=99)
    first = noisy_ensemble_run(dense4, sched, noise, workers=1)
    second = noisy_ensemble_run(dense4, sched, noise, workers=1)
    assert first.values == second.values
    assert first.events == second.events
    layers = noise_layer_count(sched)
    assert all(0 <= layer < layers for events in first.events for layer, _, _ in events)


def test_std_err_shrinks_as_one_over_root_n(dense4):
    sched = dense4.naive(1, 1.0)
    errors = [
        noisy_ensemble_run(dense4, sched, NoiseConfig(p=0.1, n_trajectories=n, seed=5), workers=1).std_err
        for n in (100, 200, 400)
    ]
    assert errors[1] / errors[0] == pytest.approx(1 / np.sqrt(2), rel=0.3)
    assert errors[2] / errors[0] == pytest.approx(0.5, rel=0.3)


@pytest.mark.slow
def test_ensemble_does_not_depend_on_worker_count(dense4):
    sched = dense4.naive(1, 1.0)
    noise = NoiseConfig(p=0.05, n_trajectories=4, seed=7)
    assert (noisy_ensemble_run(dense4, sched, noise, workers=1).values
            == pytest.approx(noisy_ensemble_run(dense4, sched, noise, workers=2).values))


def test_unknown_observable_is_rejected(dense4):
    with pytest.raises(InvalidInputError):
        noisy_ensemble_run(dense4, dense4.naive(1, 1.0), NoiseConfig(p=0.0), "purity")


# ============================================================================
# Deliberate flips
# ============================================================================

def test_flip_without_site_matches_the_noiseless_run(dense4):
    sched = dense4.naive(2, 2.0)
    baseline = dense4.relative_energy_error(dense4.evolve(dense4.initial_state(), sched))
    assert deliberate_flip_run(dense4, sched) == pytest.approx(baseline)
    assert deliberate_flip_run(dense4, sched, site=1) == pytest.approx(baseline)


def test_x_flip_on_the_initial_product_state_is_a_phase(dense4):
    """The start state is an X eigenstate, so a flip before the first step changes nothing."""
    sched = dense4.naive(2, 2.0)
    baseline = deliberate_flip_run(dense4, sched)
    assert deliberate_flip_run(dense4, sched, site=0, layer=0, pauli=Pauli.X) == pytest.approx(baseline)
    assert deliberate_flip_run(dense4, sched, site=0, layer=0, pauli=Pauli.Z) > baseline + 1e-6


def test_flip_scan_covers_each_layer(dense4):
    sched = dense4.naive(1, 1.0)
    errors = flip_scan(dense4, sched, 2, [0, 5, 10])
    assert len(errors) == 3
    assert all(e >= -1e-12 for e in errors)


def test_flip_outside_the_chain_or_schedule_is_rejected(dense4):
    sched = dense4.naive(1, 1.0)
    with pytest.raises(InvalidInputError):
        deliberate_flip_run(dense4, sched, site=4, layer=0)
    with pytest.raises(InvalidInputError):
        deliberate_flip_run(dense4, sched, site=0, layer=noise_layer_count(sched))
