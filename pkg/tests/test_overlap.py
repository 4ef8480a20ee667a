"""
Tests for alpha(tau), the E^2 bound, ancilla protocols and shot noise.
"""

import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from enums import OverlapKind
from hamiltonian import build_zzxz, exact_spectrum, interpolate
from mps import from_dense
from overlap import (
    OverlapMeter,
    alpha,
    alpha_from_spectrum,
    ancilla_density_matrix,
    bell_alpha_abs2_estimate,
    bell_expectation,
    bell_outcomes,
    bound_std_err,
    e2_average,
    e2_finite_window,
    estimate_ground_overlap,
    excited_population_bound,
    explicit_ancilla_reference,
    ground_population_bound,
    measure_alpha,
    measure_overlap,
    required_e2,
    sample_tau,
)
from schemas import EstimatorConfig
from utils.error_handler import InvalidInputError

from tests.conftest import random_state


# ============================================================================
# alpha(tau)
# ============================================================================

@pytest.mark.parametrize("tau", [0.0, 0.4, 2.7, -1.1])
def test_alpha_agrees_with_the_explicit_ancilla_circuit(params4, rng, tau):
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.6)
    vec = random_state(4, rng)
    direct = alpha(vec, terms, tau)
    circuit = explicit_ancilla_reference(vec, terms, tau)
    rho = ancilla_density_matrix(vec, terms, tau)
    assert abs(direct - circuit) < 1e-8
    assert abs(2.0 * rho[1, 0] - direct) < 1e-8
    assert np.trace(rho).real == pytest.approx(1.0)


def test_alpha_of_an_eigenstate_is_a_pure_phase(params4):
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.4)
    (e0, ground), = exact_spectrum(terms, 1)
    value = alpha(ground, terms, 1.7)
    assert value == pytest.approx(np.exp(-1j * e0 * 1.7), abs=1e-9)


def test_mps_alpha_tracks_dense_alpha(params4, rng):
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.5)
    vec = random_state(4, rng)
    mps_value = alpha(from_dense(vec, chi_max=16), terms, 1.0, dt=0.01, K=2, chi_max=16)
    assert abs(mps_value - alpha(vec, terms, 1.0)) < 1e-4


def test_e2_from_spectrum_matches_direct_average(params4, rng):
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.5)
    vec = random_state(4, rng)
    taus = [0.3, 1.2, 5.0]
    direct = np.mean([abs(alpha(vec, terms, t)) ** 2 for t in taus])
    assert e2_average(vec, terms, taus) == pytest.approx(direct, abs=1e-10)
    with pytest.raises(InvalidInputError):
        e2_average(vec, terms, [])


def test_long_window_e2_tends_to_the_inverse_participation():
    populations = [0.6, 0.3, 0.1]
    energies = [0.0, 1.0, 2.5]
    assert e2_finite_window(populations, energies, 1e4) == pytest.approx(0.46, abs=1e-3)
    assert e2_finite_window(populations, energies, 0.0) == pytest.approx(1.0)


def test_sampled_taus_are_multiples_of_pi_over_gap(rng):
    for _ in range(20):
        tau = sample_tau(0.5, k_max=10, rng=rng)
        l = tau * 0.5 / math.pi
        assert l == pytest.approx(round(l))
        assert 1 <= round(l) <= 10
    with pytest.raises(InvalidInputError):
        sample_tau(0.0)


# ============================================================================
# Bounds
# ============================================================================

def test_ground_population_bound_reference_value():
    assert ground_population_bound(0.54) == pytest.approx(0.6414, abs=5e-4)
    assert ground_population_bound(0.3) == 0.0
    assert ground_population_bound(1.0) == 1.0
    assert excited_population_bound(0.54) == pytest.approx(1 - 0.64142, abs=5e-4)
    with pytest.raises(InvalidInputError):
        ground_population_bound(1.2)


@given(st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=8))
def test_bound_never_exceeds_the_largest_population(weights):
    p = np.asarray(weights) / np.sum(weights)
    e2 = float(np.sum(p ** 2))
    assert ground_population_bound(min(e2, 1.0)) <= p.max() + 1e-12


@given(st.floats(0.71, 0.999))
def test_required_e2_certifies_exactly_theta(theta):
    assume(theta ** 2 > 0.5)
    assert ground_population_bound(required_e2(theta)) == pytest.approx(theta ** 2, abs=1e-9)


def test_required_e2_floor():
    assert required_e2(0.5) == 0.5
    assert required_e2(0.99) == pytest.approx((1 + (2 * 0.99 ** 2 - 1) ** 2) / 2)


def test_random_taus_respect_the_bound(params4, rng):
    """Long-time E^2 over sampled taus still lower-bounds the dominant population."""
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.5)
    pairs = exact_spectrum(terms, 2)
    vec = math.sqrt(0.8) * pairs[0][1] + math.sqrt(0.2) * pairs[1][1]
    gap = pairs[1][0] - pairs[0][0]
    taus = [sample_tau(gap, 100, rng) + 0.5 / gap for _ in range(400)]
    e2 = e2_average(vec, terms, taus)
    assert ground_population_bound(e2) <= 0.8 + 0.05


# ============================================================================
# Measurements
# ============================================================================

def test_measure_overlap_statistics(rng):
    estimate = measure_overlap(0.3, 10000, rng)
    assert estimate.value == pytest.approx(0.3, abs=0.02)
    assert estimate.samples == 10000
    assert estimate.std_err == pytest.approx(math.sqrt(0.21 / 10000), rel=0.1)
    certain = measure_overlap(1.0, 50, rng)
    assert certain.value == 1.0 and certain.std_err == 0.0
    with pytest.raises(InvalidInputError):
        measure_overlap(0.5, 0, rng)


def test_measure_alpha_is_unbiased(rng):
    estimates = [measure_alpha(complex(0.4, -0.2), 200, rng) for _ in range(400)]
    mean = np.mean(estimates)
    assert mean.real == pytest.approx(0.4, abs=0.02)
    assert mean.imag == pytest.approx(-0.2, abs=0.02)


def test_bell_protocol_probabilities(rng):
    assert bell_expectation(1.0) == 0.0
    assert bell_expectation(0.0) == 0.25
    assert bell_alpha_abs2_estimate(0.1) == pytest.approx(0.6)
    assert bell_alpha_abs2_estimate(0.5) == 0.0

    stream = bell_outcomes([1.0], rng)
    assert all(next(stream) == 1 for _ in range(100))
    stream = bell_outcomes([0.0], rng)
    mean = np.mean([next(stream) for _ in range(8000)])
    assert mean == pytest.approx(0.75, abs=0.02)
    with pytest.raises(InvalidInputError):
        next(bell_outcomes([], rng))


# ============================================================================
# Backend routes
# ============================================================================

def test_ground_state_is_certified_by_every_route(dense4, rng):
    _, ground = dense4.ground_state(1.0)
    taus = [0.5, 1.5, 4.0]
    for kind in (OverlapKind.DIRECT_ORACLE, OverlapKind.SINGLE_ANCILLA_E2, OverlapKind.BELL_PAIR):
        estimate = estimate_ground_overlap(dense4, ground, 1.0, kind, taus=taus, rng=rng)
        assert estimate.value == pytest.approx(1.0, abs=1e-8)
        assert estimate.samples == 0


def test_ancilla_routes_need_taus(dense4):
    state = dense4.initial_state()
    with pytest.raises(InvalidInputError):
        estimate_ground_overlap(dense4, state, 1.0, OverlapKind.SINGLE_ANCILLA_E2)
    with pytest.raises(InvalidInputError):
        estimate_ground_overlap(dense4, state, 1.0, OverlapKind.FORWARD_BACKWARD)


@pytest.mark.parametrize("kind", [OverlapKind.SINGLE_ANCILLA_E2, OverlapKind.BELL_PAIR])
def test_ancilla_std_err_is_the_shot_noise(dense4, rng, kind):
    _, ground = dense4.ground_state(1.0)
    state = ground + 0.3 * random_state(4, rng)
    state = state / np.linalg.norm(state)
    taus = [0.5, 1.5, 4.0, 7.0]

    coarse = estimate_ground_overlap(dense4, state, 1.0, kind, m=100, taus=taus, rng=rng)
    fine = estimate_ground_overlap(dense4, state, 1.0, kind, m=10000, taus=taus, rng=rng)
    assert 5.0 <= coarse.std_err / fine.std_err <= 20.0

    repeats = [estimate_ground_overlap(dense4, state, 1.0, kind, m=400, taus=taus, rng=rng) for _ in range(200)]
    spread = float(np.std([r.value for r in repeats]))
    reported = float(np.mean([r.std_err for r in repeats]))
    assert reported == pytest.approx(spread, rel=0.3)


def test_bound_std_err_is_zero_without_error():
    assert bound_std_err(0.8, 0.0) == 0.0
    assert bound_std_err(0.3, 0.05) == 0.0
    assert bound_std_err(0.8, 0.01) > 0.0


def test_alpha_routes_agree_between_backends(dense4, mps4):
    dense_state = dense4.evolve(dense4.initial_state(), dense4.naive(1, 2.0))
    mps_state = mps4.evolve(mps4.initial_state(), mps4.naive(1, 2.0))
    taus = [0.5, 1.0]
    dense_values = dense4.alphas(dense_state, 1.0, taus)
    mps_values = mps4.alphas(mps_state, 1.0, taus)
    assert np.allclose(dense_values, mps_values, atol=5e-3)


def test_meter_counts_evaluations_and_shots(dense4, rng):
    meter = OverlapMeter(dense4, EstimatorConfig(estimator=OverlapKind.BELL_PAIR, m=50, n_tau=4), rng)
    meter.measure(dense4.initial_state(), 1.0)
    meter.measure(dense4.initial_state(), 1.0)
    assert meter.eval_count == 2
    assert meter.measurement_count == 2 * 50 * 4
    meter.measure_return(0.9)
    assert meter.eval_count == 3
    assert meter.measurement_count == 2 * 50 * 4 + 50


def test_alpha_from_spectrum_at_zero_is_total_population():
    values = alpha_from_spectrum(np.array([0.25, 0.75]), np.array([-1.0, 2.0]), [0.0, math.pi])
    assert values[0] == pytest.approx(1.0)
    assert values[1] == pytest.approx(0.25 * np.exp(1j * math.pi) + 0.75 * np.exp(-2j * math.pi))


def test_ancilla_state_purity_and_rank(params4, rng):
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.5)
    vec = random_state(4, rng)
    rho = ancilla_density_matrix(vec, terms, 2.1)
    a = alpha(vec, terms, 2.1)
    assert np.trace(rho @ rho).real == pytest.approx(0.5 * (1 + abs(a) ** 2), abs=1e-10)
    assert np.allclose(rho, rho.conj().T)

    (_, ground), = exact_spectrum(terms, 1)
    eigenvalues = np.linalg.eigvalsh(ancilla_density_matrix(ground, terms, 0.9))
    assert eigenvalues[0] < 1e-10


def test_two_level_superposition_dephases_at_half_period(params4):
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.5)
    (e0, v0), (e1, v1) = exact_spectrum(terms, 2)
    vec = (v0 + v1) / math.sqrt(2.0)
    tau = math.pi / (e1 - e0)
    assert abs(alpha(vec, terms, tau)) < 1e-8
    assert np.allclose(ancilla_density_matrix(vec, terms, tau), np.eye(2) / 2, atol=1e-8)


def test_alpha_ignores_global_phase(params4, rng):
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.3)
    vec = random_state(4, rng)
    assert abs(alpha(vec, terms, 1.3)) == pytest.approx(abs(alpha(np.exp(0.7j) * vec, terms, 1.3)))
    assert explicit_ancilla_reference(vec, terms, 0.0) == pytest.approx(1.0)
