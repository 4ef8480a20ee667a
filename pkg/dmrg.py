"""Two-site DMRG on a generic nearest-neighbour MPO.

Bond terms are split into sums of local products by an operator SVD, which
gives an MPO of bond dimension at most 6 for any two-site Hamiltonian on
qubits. Excited states are reached by adding a penalty ``w |psi0><psi0|``
for previously found states.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from hamiltonian import I2, HamiltonianTerms
from mps import MPS, _truncation_rank, canonicalize, energy
from utils.error_handler import ConvergenceError, InvalidInputError

logger = logging.getLogger("vqaa.dmrg")

# Effective problems up to this dimension are diagonalized densely
DENSE_LOCAL_MAX_DIM = 256
INITIAL_BOND = 8


@dataclass
class DmrgResult:
    energy: float
    state: MPS
    energies: List[float] = field(default_factory=list)
    converged: bool = False
    last_delta: float = float("inf")
    max_truncation: float = 0.0


def _operator_svd(op: np.ndarray, tol: float = 1e-14) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Decompose a 4x4 operator as sum_k A_k (x) B_k."""
    # (i j i' j') -> (i i', j j')
    mat = op.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(mat)
    pairs = []
    for k in range(4):
        if s[k] > tol:
            a = (np.sqrt(s[k]) * u[:, k]).reshape(2, 2)
            b = (np.sqrt(s[k]) * vh[k, :]).reshape(2, 2)
            pairs.append((a, b))
    return pairs


def build_mpo(terms: HamiltonianTerms) -> List[np.ndarray]:
    """MPO tensors with legs (wL, wR, out, in)."""
    n = terms.num_sites
    merged = terms.merged()
    singles = dict(merged.single_site_terms)
    bonds = {site: _operator_svd(op) for site, op in merged.two_site_terms}
    width = max([len(p) for p in bonds.values()] + [0])
    dim = width + 2
    last = dim - 1

    tensors = []
    for site in range(n):
        w = np.zeros((dim, dim, 2, 2), dtype=complex)
        w[0, 0] = I2
        w[last, last] = I2
        if site in singles:
            w[0, last] = singles[site]
        for k, (a, _) in enumerate(bonds.get(site, [])):
            w[0, 1 + k] = a
        for k, (_, b) in enumerate(bonds.get(site - 1, [])):
            w[1 + k, last] = b
        tensors.append(w)
    tensors[0] = tensors[0][:1]
    tensors[-1] = tensors[-1][:, last:]
    return tensors


def _random_mps(num_sites: int, bond: int, rng: np.random.Generator) -> MPS:
    dims = [1] + [min(bond, 2 ** min(k, num_sites - k)) for k in range(1, num_sites)] + [1]
    tensors = [
        rng.standard_normal((dims[k], 2, dims[k + 1]))
        + 1j * rng.standard_normal((dims[k], 2, dims[k + 1]))
        for k in range(num_sites)
    ]
    state = MPS(tensors, max_bond=bond)
    canonicalize(state)
    state.norm_log = 0.0
    return state


# ============================================================================
# Environments
# ============================================================================

def _grow_left(env: np.ndarray, bra: np.ndarray, w: np.ndarray, ket: np.ndarray) -> np.ndarray:
    x = np.tensordot(env, bra.conj(), axes=(0, 0))  # w b, s* c*
    x = np.tensordot(x, w, axes=([0, 2], [0, 2]))  # b c* w' t
    return np.tensordot(x, ket, axes=([0, 3], [0, 1]))  # c* w' d


def _grow_right(env: np.ndarray, bra: np.ndarray, w: np.ndarray, ket: np.ndarray) -> np.ndarray:
    x = np.tensordot(bra.conj(), env, axes=(2, 0))  # a* s* w d
    x = np.tensordot(x, w, axes=([1, 2], [2, 1]))  # a* d w t
    return np.tensordot(x, ket, axes=([1, 3], [2, 1]))  # a* w b


def _grow_overlap_left(env: np.ndarray, ref: np.ndarray, ket: np.ndarray) -> np.ndarray:
    x = np.tensordot(env, ref.conj(), axes=(0, 0))
    return np.tensordot(x, ket, axes=([0, 1], [0, 1]))


def _grow_overlap_right(env: np.ndarray, ref: np.ndarray, ket: np.ndarray) -> np.ndarray:
    x = np.tensordot(ref.conj(), env, axes=(2, 0))
    return np.tensordot(x, ket, axes=([1, 2], [1, 2]))


class _TwoSiteSolver:
    """Sweep bookkeeping for one DMRG run."""

    def __init__(self, state: MPS, mpo: List[np.ndarray], refs: Sequence[MPS], penalty: float):
        self.state = state
        self.mpo = mpo
        self.refs = list(refs)
        self.penalty = penalty
        n = state.num_sites
        self.left = [None] * (n + 1)
        self.right = [None] * (n + 1)
        self.left[0] = np.ones((1, 1, 1), dtype=complex)
        self.right[n] = np.ones((1, 1, 1), dtype=complex)
        self.ov_left = [[None] * (n + 1) for _ in self.refs]
        self.ov_right = [[None] * (n + 1) for _ in self.refs]
        for k in range(len(self.refs)):
            self.ov_left[k][0] = np.ones((1, 1), dtype=complex)
            self.ov_right[k][n] = np.ones((1, 1), dtype=complex)
        for site in range(n - 1, 0, -1):
            self._update_right(site)

    def _update_left(self, site: int):
        t = self.state.tensors[site]
        self.left[site + 1] = _grow_left(self.left[site], t, self.mpo[site], t)
        for k, ref in enumerate(self.refs):
            self.ov_left[k][site + 1] = _grow_overlap_left(self.ov_left[k][site], ref.tensors[site], t)

    def _update_right(self, site: int):
        t = self.state.tensors[site]
        self.right[site] = _grow_right(self.right[site + 1], t, self.mpo[site], t)
        for k, ref in enumerate(self.refs):
            self.ov_right[k][site] = _grow_overlap_right(self.ov_right[k][site + 1], ref.tensors[site], t)

    def _projectors(self, site: int) -> List[np.ndarray]:
        vectors = []
        for k, ref in enumerate(self.refs):
            pair = np.tensordot(ref.tensors[site], ref.tensors[site + 1], axes=(2, 0))  # a0 s t c0
            q = np.tensordot(self.ov_left[k][site], pair.conj(), axes=(0, 0))  # b s t c0
            q = np.tensordot(q, self.ov_right[k][site + 2], axes=(3, 0))  # b s t d
            vectors.append(q.conj().reshape(-1))
        return vectors

    def _local_ground(self, site: int, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        le, re = self.left[site], self.right[site + 2]
        w1, w2 = self.mpo[site], self.mpo[site + 1]
        shape = theta.shape
        dim = theta.size
        projectors = self._projectors(site)

        def matvec(vec: np.ndarray) -> np.ndarray:
            x = np.tensordot(le, vec.reshape(shape), axes=(2, 0))  # a* w t v d
            x = np.tensordot(x, w1, axes=([1, 2], [0, 3]))  # a* v d w1 s
            x = np.tensordot(x, w2, axes=([3, 1], [0, 3]))  # a* d s w2 u
            x = np.tensordot(x, re, axes=([1, 3], [2, 1]))  # a* s u c*
            out = x.reshape(-1)
            for p in projectors:
                out = out + self.penalty * p * np.vdot(p, vec)
            return out

        if dim <= DENSE_LOCAL_MAX_DIM:
            heff = np.column_stack([matvec(col) for col in np.eye(dim, dtype=complex)])
            heff = 0.5 * (heff + heff.conj().T)
            values, vectors = np.linalg.eigh(heff)
            return float(values[0]), vectors[:, 0].reshape(shape)

        op = LinearOperator((dim, dim), matvec=matvec, dtype=complex)
        values, vectors = eigsh(op, k=1, which="SA", v0=theta.reshape(-1))
        return float(values[0]), vectors[:, 0].reshape(shape)

    def _split(self, theta: np.ndarray, site: int, max_bond: int, cutoff: float, to_right: bool) -> float:
        chi_l, _, _, chi_r = theta.shape
        u, s, vh = np.linalg.svd(theta.reshape(chi_l * 2, 2 * chi_r), full_matrices=False)
        keep, discarded = _truncation_rank(s, max_bond, cutoff)
        s = s[:keep] / np.linalg.norm(s[:keep])
        if to_right:
            self.state.tensors[site] = u[:, :keep].reshape(chi_l, 2, keep)
            self.state.tensors[site + 1] = (s[:, None] * vh[:keep]).reshape(keep, 2, chi_r)
            self.state.center = site + 1
        else:
            self.state.tensors[site] = (u[:, :keep] * s[None, :]).reshape(chi_l, 2, keep)
            self.state.tensors[site + 1] = vh[:keep].reshape(keep, 2, chi_r)
            self.state.center = site
        return discarded

    def sweep(self, max_bond: int, cutoff: float) -> Tuple[float, float]:
        n = self.state.num_sites
        value, worst = 0.0, 0.0
        for site in range(n - 1):
            theta = np.tensordot(self.state.tensors[site], self.state.tensors[site + 1], axes=(2, 0))
            value, theta = self._local_ground(site, theta)
            worst = max(worst, self._split(theta, site, max_bond, cutoff, to_right=True))
            self._update_left(site)
        for site in range(n - 2, -1, -1):
            theta = np.tensordot(self.state.tensors[site], self.state.tensors[site + 1], axes=(2, 0))
            value, theta = self._local_ground(site, theta)
            worst = max(worst, self._split(theta, site, max_bond, cutoff, to_right=False))
            self._update_right(site + 1)
        return value, worst


def two_site_dmrg(
    terms: HamiltonianTerms,
    max_bond: int,
    sweeps: int,
    tol: float,
    svd_cutoff: float = 1e-12,
    penalty_states: Optional[Sequence[MPS]] = None,
    penalty: float = 0.0,
    seed: int = 0,
    strict: bool = False,
) -> DmrgResult:
    """Variational ground state of ``terms`` (plus optional state penalties)."""
    if max_bond < 2:
        raise InvalidInputError(f"max_bond must be at least 2, got {max_bond}")
    if sweeps < 1:
        raise InvalidInputError(f"sweeps must be positive, got {sweeps}")
    n = terms.num_sites
    rng = np.random.default_rng(seed)
    state = _random_mps(n, min(max_bond, INITIAL_BOND), rng)
    state.max_bond = max_bond
    # center at site 0 after canonicalize
    solver = _TwoSiteSolver(state, build_mpo(terms), penalty_states or [], penalty)

    energies: List[float] = []
    delta, worst = float("inf"), 0.0
    for k in range(sweeps):
        value, trunc = solver.sweep(max_bond, svd_cutoff)
        worst = max(worst, trunc)
        if energies:
            delta = abs(value - energies[-1])
        energies.append(value)
        logger.debug(f"DMRG sweep {k + 1}: E={value:.12f} delta={delta:.3e} bonds={state.bond_dims()}")
        if delta < tol:
            break

    converged = delta < tol
    if not converged:
        message = f"DMRG not converged after {sweeps} sweeps (last delta {delta:.3e})"
        if strict:
            raise ConvergenceError(message, last_delta=delta, last_value=energies[-1])
        logger.warning(message)
    state.norm_log = 0.0
    return DmrgResult(
        energy=energies[-1],
        state=state,
        energies=energies,
        converged=converged,
        last_delta=delta,
        max_truncation=worst,
    )


def first_excited_energy(
    terms: HamiltonianTerms,
    max_bond: int,
    sweeps: int,
    tol: float,
    penalty: Optional[float] = None,
) -> Tuple[float, float]:
    """(E0, E1) via a penalized second run orthogonal to the ground state."""
    ground = two_site_dmrg(terms, max_bond=max_bond, sweeps=sweeps, tol=tol)
    weight = penalty if penalty is not None else 10.0 * max(1.0, abs(ground.energy) / terms.num_sites)
    excited = two_site_dmrg(
        terms, max_bond=max_bond, sweeps=sweeps, tol=tol,
        penalty_states=[ground.state], penalty=weight, seed=1,
    )
    e1 = energy(excited.state, terms)
    logger.debug(f"DMRG gap: E0={ground.energy:.10f} E1={e1:.10f}")
    return ground.energy, e1
