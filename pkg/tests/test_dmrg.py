"""
Tests for the MPO construction and two-site DMRG.
"""

import numpy as np
import pytest

from dmrg import build_mpo, first_excited_energy, two_site_dmrg
from hamiltonian import build_zzxz, exact_spectrum, interpolate, to_sparse
from mps import to_dense
from utils.error_handler import ConvergenceError, InvalidInputError


def _mpo_matrix(mpo):
    """Contract MPO tensors with (wL, wR, out, in) legs into a dense matrix."""
    total = mpo[0]
    for w in mpo[1:]:
        total = np.einsum("abij,bckl->acikjl", total, w)
        a, c, i, k, j, l = total.shape
        total = total.reshape(a, c, i * k, j * l)
    return total[0, 0]


def test_dmrg_matches_exact_ground_and_first_excited(params6):
    h0, ht = build_zzxz(params6)
    terms = interpolate(h0, ht, 0.5)
    exact = [e for e, _ in exact_spectrum(terms, 2)]

    e0, e1 = first_excited_energy(terms, max_bond=32, sweeps=20, tol=1e-11)
    assert e0 == pytest.approx(exact[0], abs=1e-7)
    assert e1 == pytest.approx(exact[1], abs=1e-5)


def test_dmrg_state_is_the_ground_state(params6):
    h0, ht = build_zzxz(params6)
    terms = interpolate(h0, ht, 0.8)
    (_, ground), = exact_spectrum(terms, 1)
    result = two_site_dmrg(terms, max_bond=32, sweeps=20, tol=1e-11)
    assert result.converged
    assert abs(np.vdot(ground, to_dense(result.state))) == pytest.approx(1.0, abs=1e-6)
    assert result.energies[-1] == result.energy


def test_sweep_energies_never_increase(params6):
    h0, ht = build_zzxz(params6)
    terms = interpolate(h0, ht, 0.5)
    result = two_site_dmrg(terms, max_bond=32, sweeps=6, tol=1e-15)
    assert len(result.energies) >= 2
    assert np.all(np.diff(result.energies) <= 1e-12)


def test_mpo_contracts_to_the_sparse_matrix(params4):
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.3)
    mpo = build_mpo(terms)
    assert len(mpo) == params4.num_sites
    assert np.allclose(_mpo_matrix(mpo), to_sparse(terms).toarray())


def test_dmrg_four_sites_matches_exact_ground_energy(params4):
    h0, ht = build_zzxz(params4)
    terms = interpolate(h0, ht, 0.3)
    ground = two_site_dmrg(terms, max_bond=8, sweeps=10, tol=1e-12).energy
    assert ground == pytest.approx(np.linalg.eigvalsh(to_sparse(terms).toarray())[0], abs=1e-9)


def test_small_bond_is_rejected(params4):
    h0, _ = build_zzxz(params4)
    with pytest.raises(InvalidInputError):
        two_site_dmrg(h0, max_bond=1, sweeps=4, tol=1e-8)


def test_strict_mode_raises_when_sweeps_run_out(params6):
    h0, ht = build_zzxz(params6)
    with pytest.raises(ConvergenceError) as exc:
        two_site_dmrg(interpolate(h0, ht, 0.5), max_bond=16, sweeps=1, tol=1e-12, strict=True)
    assert exc.value.last_value is not None
