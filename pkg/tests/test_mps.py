"""
Tests for the MPS container, gate application and contractions.
"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import unitary_group

from hamiltonian import SX, SZ, build_zzxz, interpolate, to_sparse
from mps import (
    apply_single_site,
    apply_two_site_gate,
    canonicalize,
    check_norm,
    energy,
    entanglement_entropy,
    expectation,
    from_dense,
    overlap,
    product_state,
    to_dense,
)
from oracle import MINUS, PLUS, minus_state
from utils.error_handler import InvalidInputError, NonUnitaryGateError

from tests.conftest import random_state

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def test_dense_round_trip_without_truncation(rng):
    vec = random_state(6, rng)
    state = from_dense(vec, chi_max=8)
    assert state.bond_dims() == [2, 4, 8, 4, 2]
    assert np.allclose(to_dense(state), vec)


def test_site_zero_is_most_significant():
    state = product_state([np.array([0, 1]), np.array([1, 0]), np.array([1, 0])])
    vec = to_dense(state)
    assert np.argmax(np.abs(vec)) == 4


def test_product_state_matches_minus_vector():
    state = product_state([MINUS] * 5)
    assert np.allclose(to_dense(state), minus_state(5))
    assert all(s == pytest.approx(0.0, abs=1e-12) for s in entanglement_entropy(state))


def test_bell_pair_entropy_is_log_two():
    state = product_state([PLUS, np.array([1, 0])])
    apply_two_site_gate(state, CNOT, 0)
    assert entanglement_entropy(state)[0] == pytest.approx(math.log(2))
    assert np.allclose(to_dense(state), np.array([1, 0, 0, 1]) / math.sqrt(2))


def test_non_unitary_gate_is_rejected():
    state = product_state([PLUS, PLUS])
    with pytest.raises(NonUnitaryGateError):
        apply_two_site_gate(state, 2.0 * np.eye(4), 0)


def test_gate_site_out_of_range():
    state = product_state([PLUS, PLUS])
    with pytest.raises(InvalidInputError):
        apply_two_site_gate(state, CNOT, 1)


def test_truncation_records_discarded_weight(rng):
    state = from_dense(random_state(6, rng), chi_max=8)
    _, discarded = apply_two_site_gate(state, np.eye(4), 2, chi_max=2)
    assert discarded > 0
    assert state.bond_dims()[2] <= 2
    assert state.cum_truncation >= discarded
    assert not check_norm(state, threshold=1e-12)


@given(st.integers(min_value=1, max_value=7), st.integers(min_value=0, max_value=2 ** 16))
def test_single_gate_discards_less_with_a_larger_bond(chi, seed):
    rng = np.random.default_rng(seed)
    base = from_dense(random_state(6, rng), chi_max=8)
    gate = unitary_group.rvs(4, random_state=rng)
    _, small = apply_two_site_gate(base.copy(), gate, 2, chi_max=chi)
    _, large = apply_two_site_gate(base.copy(), gate, 2, chi_max=chi + 1)
    assert large <= small + 1e-15


def test_gate_sequence_discards_less_with_a_larger_bond(rng):
    vec = random_state(6, rng)
    gates = [(unitary_group.rvs(4, random_state=rng), site) for site in [0, 2, 4, 1, 3] * 2]
    discarded = []
    for chi in (2, 3, 4, 8):
        state = from_dense(vec, chi_max=8)
        for gate, site in gates:
            apply_two_site_gate(state, gate, site, chi_max=chi)
        discarded.append(state.cum_truncation)
    assert discarded == sorted(discarded, reverse=True)
    assert discarded[0] > discarded[1]
    assert discarded[-1] == pytest.approx(0.0, abs=1e-12)


def test_energy_and_expectation_match_dense(params6, rng):
    h0, ht = build_zzxz(params6)
    terms = interpolate(h0, ht, 0.6)
    vec = random_state(6, rng)
    state = from_dense(vec, chi_max=16)
    dense_energy = np.real(np.vdot(vec, to_sparse(terms) @ vec))
    assert energy(state, terms) == pytest.approx(dense_energy, abs=1e-10)

    z_site = np.kron(np.kron(np.eye(4), SZ), np.eye(8))
    assert expectation(state, SZ, 2) == pytest.approx(np.vdot(vec, z_site @ vec), abs=1e-10)


def test_overlap_is_conjugate_linear_in_first_argument(rng):
    a, b = random_state(4, rng), random_state(4, rng)
    ma, mb = from_dense(a), from_dense(b)
    assert overlap(ma, mb) == pytest.approx(np.vdot(a, b), abs=1e-12)
    assert overlap(mb, ma) == pytest.approx(np.conj(np.vdot(a, b)), abs=1e-12)


def test_single_site_operator_in_place():
    state = product_state([MINUS] * 3)
    apply_single_site(state, SX, 1)
    expected = np.kron(np.kron(MINUS, -MINUS), MINUS)
    assert np.allclose(to_dense(state), expected)


def test_canonicalize_tracks_removed_norm():
    state = product_state([PLUS, PLUS])
    state.tensors[1] = 2.0 * state.tensors[1]
    canonicalize(state)
    assert state.norm_log == pytest.approx(math.log(2.0))
    assert np.linalg.norm(to_dense(state)) == pytest.approx(1.0)
