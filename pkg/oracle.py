"""Dense statevector oracle for small chains.

Uses the same chunk plans and step grids as the MPS evolution, but every
step is the exact exponential exp(-i dt H(lambda)) applied with
``scipy.sparse.linalg.expm_multiply``.
"""

import itertools
import logging
from functools import reduce
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from enums import Direction
from evolve import StepHook, chunk_plan, ordered_steps
from hamiltonian import HamiltonianTerms, check_oracle_size, to_sparse
from schemas import Schedule
from utils.error_handler import InvalidInputError

logger = logging.getLogger("vqaa.oracle")

MINUS = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def product_vector(local_states: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of normalized local states."""
    vectors = []
    for k, vec in enumerate(local_states):
        vec = np.asarray(vec, dtype=complex).reshape(2)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise InvalidInputError(f"Local state at site {k} is zero")
        vectors.append(vec / norm)
    return reduce(np.kron, vectors)


def minus_state(num_sites: int) -> np.ndarray:
    return product_vector([MINUS] * num_sites)


def apply_single_site(vector: np.ndarray, op: np.ndarray, site: int) -> np.ndarray:
    num_sites = int(np.log2(vector.size))
    if not 0 <= site < num_sites:
        raise InvalidInputError(f"Site {site} out of range for {num_sites} sites")
    psi = vector.reshape(2 ** site, 2, -1)
    return np.einsum("ts,asb->atb", op, psi).reshape(-1)


def overlap(a: np.ndarray, b: np.ndarray) -> complex:
    if a.shape != b.shape:
        raise InvalidInputError(f"Overlap of states with shapes {a.shape} and {b.shape}")
    return complex(np.vdot(a, b))


def energy(vector: np.ndarray, matrix: sparse.spmatrix) -> float:
    return float(np.real(np.vdot(vector, matrix @ vector)) / np.real(np.vdot(vector, vector)))


class PathOperators:
    """Sparse H0 and H_T for repeated H(lambda) = (1 - lambda) H0 + lambda H_T."""

    def __init__(self, h0: HamiltonianTerms, ht: HamiltonianTerms):
        check_oracle_size(h0.num_sites)
        self.num_sites = h0.num_sites
        self.h0 = to_sparse(h0)
        self.ht = to_sparse(ht)

    def at(self, lam: float) -> sparse.csr_matrix:
        if lam == 0.0:
            return self.h0
        if lam == 1.0:
            return self.ht
        return ((1.0 - lam) * self.h0 + lam * self.ht).tocsr()


def run_chunk_dense(
    vector: np.ndarray,
    ops: PathOperators,
    s_start: float,
    s_end: float,
    time: float,
    sched: Schedule,
    inverse: bool = False,
    on_step: Optional[StepHook] = None,
    layers=None,
) -> np.ndarray:
    for lam, length in ordered_steps(s_start, s_end, time, sched, inverse):
        vector = expm_multiply(-1j * length * ops.at(lam), vector)
        if on_step is not None:
            vector = on_step(vector, next(layers))
    return vector


def evolve_schedule_dense(
    psi0: np.ndarray,
    ops: PathOperators,
    sched: Schedule,
    direction: Direction = Direction.FORWARD,
    stop_chunk: Optional[int] = None,
    inverse: bool = False,
    on_step: Optional[StepHook] = None,
) -> np.ndarray:
    """Dense counterpart of ``evolve.evolve_schedule``."""
    vector = np.array(psi0, dtype=complex)
    layers = itertools.count(1)
    if on_step is not None:
        vector = on_step(vector, 0)
    for s_start, s_end, time, inv in chunk_plan(sched, direction, stop_chunk, inverse):
        vector = run_chunk_dense(vector, ops, s_start, s_end, time, sched, inv, on_step, layers)
    return vector


def evolve_fixed_dense(vector: np.ndarray, matrix: sparse.spmatrix, time: float) -> np.ndarray:
    """exp(-i time H) |vector>."""
    if time == 0:
        return np.array(vector, dtype=complex)
    return expm_multiply(-1j * time * matrix, vector)
