"""Matrix product states for an N-qubit register.

Tensors have legs (vL, i, vR). The state carries an orthogonality center
that is moved with QR decompositions; two-site gates are applied at the
center and split with a truncated SVD. Every truncation renormalizes the
state and records the removed norm in ``norm_log`` and the discarded weight
in ``cum_truncation``.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from hamiltonian import HamiltonianTerms
from utils.error_handler import InvalidInputError, NonUnitaryGateError

logger = logging.getLogger("vqaa.mps")

UNITARY_TOL = 1e-8


class MPS:
    """Open-boundary matrix product state with tracked truncation error."""

    def __init__(
        self,
        tensors: List[np.ndarray],
        max_bond: int = None,
        cum_truncation: float = 0.0,
        norm_log: float = 0.0,
        center: Optional[int] = None,
    ):
        if not tensors:
            raise InvalidInputError("An MPS needs at least one tensor")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise InvalidInputError("Boundary bonds must have dimension 1")
        for k, (left, right) in enumerate(zip(tensors, tensors[1:])):
            if left.shape[2] != right.shape[0]:
                raise InvalidInputError(f"Bond dimension mismatch between sites {k} and {k + 1}")
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        self.max_bond = settings.CHI_MAX if max_bond is None else max_bond
        self.cum_truncation = cum_truncation
        self.norm_log = norm_log
        self.center = center

    @property
    def num_sites(self) -> int:
        return len(self.tensors)

    def bond_dims(self) -> List[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> "MPS":
        return MPS(
            [t.copy() for t in self.tensors],
            max_bond=self.max_bond,
            cum_truncation=self.cum_truncation,
            norm_log=self.norm_log,
            center=self.center,
        )

    def __repr__(self) -> str:
        return (
            f"MPS(num_sites={self.num_sites}, bonds={self.bond_dims()}, "
            f"cum_truncation={self.cum_truncation:.3e})"
        )


# ============================================================================
# Construction
# ============================================================================

def product_state(local_states: Sequence[np.ndarray], max_bond: int = None) -> MPS:
    """Bond-dimension-1 MPS from normalized copies of the local 2-vectors."""
    tensors = []
    for k, vec in enumerate(local_states):
        vec = np.asarray(vec, dtype=complex).reshape(2)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise InvalidInputError(f"Local state at site {k} is zero")
        tensors.append((vec / norm).reshape(1, 2, 1))
    return MPS(tensors, max_bond=max_bond, center=0)


def from_dense(vector: np.ndarray, chi_max: int = None, svd_cutoff: float = 0.0) -> MPS:
    """Left-to-right SVD decomposition of a dense state (site 0 most significant)."""
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    num_sites = int(round(math.log2(vector.size)))
    if 2 ** num_sites != vector.size:
        raise InvalidInputError(f"Dense state length {vector.size} is not a power of 2")
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise InvalidInputError("Cannot decompose the zero vector")
    chi_max = chi_max or 2 ** (num_sites // 2)

    tensors, discarded = [], 0.0
    rest = (vector / norm).reshape(1, -1)
    for _ in range(num_sites - 1):
        chi_l = rest.shape[0]
        u, s, vh = np.linalg.svd(rest.reshape(chi_l * 2, -1), full_matrices=False)
        keep, weight = _truncation_rank(s, chi_max, svd_cutoff)
        discarded += weight
        tensors.append(u[:, :keep].reshape(chi_l, 2, keep))
        rest = s[:keep, None] * vh[:keep]
        rest = rest / np.linalg.norm(rest)
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return MPS(tensors, max_bond=chi_max, cum_truncation=discarded,
               norm_log=math.log(norm), center=num_sites - 1)


def to_dense(state: MPS) -> np.ndarray:
    """Contract into a 2^N vector (site 0 most significant)."""
    psi = state.tensors[0].reshape(2, -1)
    for tensor in state.tensors[1:]:
        psi = np.tensordot(psi, tensor, axes=(1, 0))  # (...) [vR], [vL] i vR
        psi = psi.reshape(-1, tensor.shape[2])
    return psi.reshape(-1)


# ============================================================================
# Gauge
# ============================================================================

def _shift_right(state: MPS, site: int):
    """QR at ``site``, absorbing R into ``site + 1``."""
    tensor = state.tensors[site]
    chi_l, d, chi_r = tensor.shape
    q, r = np.linalg.qr(tensor.reshape(chi_l * d, chi_r))
    state.tensors[site] = q.reshape(chi_l, d, q.shape[1])
    state.tensors[site + 1] = np.tensordot(r, state.tensors[site + 1], axes=(1, 0))


def _shift_left(state: MPS, site: int):
    """LQ at ``site``, absorbing L into ``site - 1``."""
    tensor = state.tensors[site]
    chi_l, d, chi_r = tensor.shape
    q, r = np.linalg.qr(tensor.reshape(chi_l, d * chi_r).T)
    state.tensors[site] = q.T.reshape(q.shape[1], d, chi_r)
    state.tensors[site - 1] = np.tensordot(state.tensors[site - 1], r.T, axes=(2, 0))


def move_center(state: MPS, target: int):
    """Move the orthogonality center to ``target`` (canonicalizes first if unknown)."""
    if state.center is None:
        canonicalize(state)
    while state.center < target:
        _shift_right(state, state.center)
        state.center += 1
    while state.center > target:
        _shift_left(state, state.center)
        state.center -= 1


def canonicalize(state: MPS) -> MPS:
    """Right-canonical form with unit norm; the center ends at site 0.

    The removed norm is added to ``norm_log`` (a state scaled by 2 gains log 2).
    """
    for site in range(state.num_sites - 1, 0, -1):
        _shift_left(state, site)
    norm = np.linalg.norm(state.tensors[0])
    if norm == 0:
        raise InvalidInputError("Cannot canonicalize a zero-norm state")
    state.tensors[0] = state.tensors[0] / norm
    state.norm_log += math.log(norm)
    state.center = 0
    return state


# ============================================================================
# Gates
# ============================================================================

def check_unitary(gate: np.ndarray, tol: float = UNITARY_TOL):
    deviation = float(np.max(np.abs(gate @ gate.conj().T - np.eye(gate.shape[0]))))
    if deviation > tol:
        raise NonUnitaryGateError(deviation)


def _truncation_rank(s: np.ndarray, chi_max: int, svd_cutoff: float) -> Tuple[int, float]:
    """Number of kept singular values and the discarded relative weight."""
    total = float(np.sum(s ** 2))
    if total == 0:
        return 1, 0.0
    normalized = s / math.sqrt(total)
    keep = int(np.sum(normalized > svd_cutoff))
    keep = max(1, min(keep, chi_max))
    discarded = float(np.sum(normalized[keep:] ** 2))
    return keep, discarded


def apply_two_site_gate(
    state: MPS,
    gate: np.ndarray,
    site: int,
    chi_max: int = None,
    svd_cutoff: float = None,
    check: bool = True,
) -> Tuple[MPS, float]:
    """Apply a 4x4 gate on (site, site + 1) in place; return the state and discarded weight."""
    if not 0 <= site < state.num_sites - 1:
        raise InvalidInputError(f"Gate site {site} out of range for {state.num_sites} sites")
    if check:
        check_unitary(gate)
    chi_max = state.max_bond if chi_max is None else chi_max
    svd_cutoff = settings.SVD_CUTOFF if svd_cutoff is None else svd_cutoff

    if state.center is None or state.center not in (site, site + 1):
        move_center(state, site)
    elif state.center == site + 1:
        _shift_left(state, site + 1)
        state.center = site

    left, right = state.tensors[site], state.tensors[site + 1]
    theta = np.tensordot(left, right, axes=(2, 0))  # vL i j vR
    u_theta = np.tensordot(gate.reshape(2, 2, 2, 2), theta, axes=([2, 3], [1, 2]))  # i j vL vR
    u_theta = np.transpose(u_theta, (2, 0, 1, 3))  # vL i j vR
    chi_l, chi_r = u_theta.shape[0], u_theta.shape[3]

    u, s, vh = np.linalg.svd(u_theta.reshape(chi_l * 2, 2 * chi_r), full_matrices=False)
    keep, discarded = _truncation_rank(s, chi_max, svd_cutoff)
    kept = s[:keep]
    kept_norm = float(np.linalg.norm(kept))
    if kept_norm == 0:
        raise InvalidInputError("Gate application produced a zero state")

    state.tensors[site] = u[:, :keep].reshape(chi_l, 2, keep)
    state.tensors[site + 1] = ((kept / kept_norm)[:, None] * vh[:keep]).reshape(keep, 2, chi_r)
    state.center = site + 1
    state.norm_log += math.log(kept_norm)
    state.cum_truncation += discarded
    return state, discarded


def apply_single_site(state: MPS, op: np.ndarray, site: int) -> MPS:
    """Apply a 2x2 operator in place."""
    if not 0 <= site < state.num_sites:
        raise InvalidInputError(f"Site {site} out of range for {state.num_sites} sites")
    state.tensors[site] = np.tensordot(op, state.tensors[site], axes=(1, 1)).transpose(1, 0, 2)
    if np.max(np.abs(op @ op.conj().T - np.eye(2))) > UNITARY_TOL:
        state.center = None
    return state


# ============================================================================
# Contractions
# ============================================================================

def overlap(a: MPS, b: MPS) -> complex:
    """<a|b> with a conjugated."""
    if a.num_sites != b.num_sites:
        raise InvalidInputError(f"Overlap of MPS with {a.num_sites} and {b.num_sites} sites")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.tensordot(env, ta.conj(), axes=(0, 0))  # [vLa*] vLb, [vLa*] i vRa*
        env = np.tensordot(env, tb, axes=([0, 1], [0, 1]))  # [vLb] [i] vRa*, [vLb] [i] vRb
    return complex(env[0, 0])


def _left_environments(state: MPS) -> List[np.ndarray]:
    envs = [np.ones((1, 1), dtype=complex)]
    for tensor in state.tensors:
        env = np.tensordot(envs[-1], tensor.conj(), axes=(0, 0))
        env = np.tensordot(env, tensor, axes=([0, 1], [0, 1]))
        envs.append(env)
    return envs


def _right_environments(state: MPS) -> List[np.ndarray]:
    envs = [np.ones((1, 1), dtype=complex)]
    for tensor in reversed(state.tensors):
        env = np.tensordot(tensor.conj(), envs[-1], axes=(2, 0))  # vL* i [vR*], [vR*] vR
        env = np.tensordot(env, tensor, axes=([1, 2], [1, 2]))
        envs.append(env)
    return envs[::-1]


def energy(state: MPS, terms: HamiltonianTerms) -> float:
    """<psi|H|psi> / <psi|psi>."""
    if terms.num_sites != state.num_sites:
        raise InvalidInputError("Hamiltonian and state have different sizes")
    left = _left_environments(state)
    right = _right_environments(state)
    norm = left[-1][0, 0].real
    total = 0.0 + 0.0j
    for site, op in terms.single_site_terms:
        t = state.tensors[site]
        x = np.tensordot(left[site], t.conj(), axes=(0, 0))  # vL [vL*], [vL*] i* vR*
        x = np.tensordot(x, op.T, axes=(1, 1))  # vL vR* i
        x = np.tensordot(x, t, axes=([0, 2], [0, 1]))  # vR* vR
        total += np.tensordot(x, right[site + 1], axes=([0, 1], [0, 1]))
    for site, op in terms.two_site_terms:
        t1, t2 = state.tensors[site], state.tensors[site + 1]
        ket = np.tensordot(t1, t2, axes=(2, 0))  # vL i j vR
        ket = np.tensordot(op.reshape(2, 2, 2, 2), ket, axes=([2, 3], [1, 2]))  # i j vL vR
        bra = np.tensordot(t1.conj(), t2.conj(), axes=(2, 0))  # vL* i j vR*
        x = np.tensordot(left[site], bra, axes=(0, 0))  # vL, i j vR*
        x = np.tensordot(x, ket, axes=([0, 1, 2], [2, 0, 1]))  # vR* vR
        total += np.tensordot(x, right[site + 2], axes=([0, 1], [0, 1]))
    value = total / norm
    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        logger.warning(f"Energy has imaginary residue {value.imag:.3e}")
    return float(value.real)


def expectation(state: MPS, op: np.ndarray, site: int) -> complex:
    """Single-site expectation value."""
    left = _left_environments(state)
    right = _right_environments(state)
    t = state.tensors[site]
    x = np.tensordot(left[site], t.conj(), axes=(0, 0))
    x = np.tensordot(x, op.T, axes=(1, 1))
    x = np.tensordot(x, t, axes=([0, 2], [0, 1]))
    value = np.tensordot(x, right[site + 1], axes=([0, 1], [0, 1]))
    return complex(value / left[-1][0, 0])


# ============================================================================
# Diagnostics
# ============================================================================

def entanglement_entropy(state: MPS) -> List[float]:
    """Von Neumann entropy of every cut (bond k sits between sites k and k+1)."""
    work = canonicalize(state.copy())
    entropies = []
    for site in range(work.num_sites - 1):
        tensor = work.tensors[site]
        chi_l, d, chi_r = tensor.shape
        u, s, vh = np.linalg.svd(tensor.reshape(chi_l * d, chi_r), full_matrices=False)
        probs = s ** 2 / np.sum(s ** 2)
        probs = probs[probs > 1e-16]
        entropies.append(float(-np.sum(probs * np.log(probs))))
        work.tensors[site] = u.reshape(chi_l, d, -1)
        work.tensors[site + 1] = np.tensordot(s[:, None] * vh, work.tensors[site + 1], axes=(1, 0))
    return entropies


def norm_error(state: MPS) -> float:
    return abs(math.exp(state.norm_log) - 1.0)


def check_norm(state: MPS, threshold: float = None) -> bool:
    """False (with a warning) when the accumulated norm loss exceeds the threshold."""
    threshold = settings.NORM_WARNING if threshold is None else threshold
    error = norm_error(state)
    if error > threshold:
        logger.warning(
            f"⚠️ Norm error {error:.2%} exceeds {threshold:.0%} "
            f"(discarded weight {state.cum_truncation:.3e}); increase chi_max"
        )
        return False
    return True
