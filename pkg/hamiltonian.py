"""ZZXZ model family, path interpolation, ramps and exact reference solvers.

Local terms are stored as dense coefficient matrices: 2x2 for single-site
terms and 4x4 for nearest-neighbour terms acting on (i, i+1). Dense
operators use site 0 as the most significant qubit.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from config.settings import settings
from enums import RampKind
from schemas import ModelParams
from utils.error_handler import InvalidInputError, OracleSizeError

logger = logging.getLogger("vqaa.hamiltonian")

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-10
# Dense eigh below this dimension, Lanczos above
DENSE_EIGH_MAX_DIM = 512


@dataclass(frozen=True)
class HamiltonianTerms:
    """Local-term description of a nearest-neighbour chain Hamiltonian."""
    num_sites: int
    single_site_terms: Tuple[Tuple[int, np.ndarray], ...] = field(default_factory=tuple)
    two_site_terms: Tuple[Tuple[int, np.ndarray], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.num_sites < 2:
            raise InvalidInputError(f"Need at least 2 sites, got {self.num_sites}")
        for site, op in self.single_site_terms:
            _check_term(op, (2, 2), site, self.num_sites, f"single-site term at {site}")
        for site, op in self.two_site_terms:
            _check_term(op, (4, 4), site, self.num_sites - 1, f"two-site term at ({site}, {site + 1})")

    def merged(self) -> "HamiltonianTerms":
        """One summed term per site and per bond."""
        singles: Dict[int, np.ndarray] = {}
        pairs: Dict[int, np.ndarray] = {}
        for site, op in self.single_site_terms:
            singles[site] = singles.get(site, 0) + op
        for site, op in self.two_site_terms:
            pairs[site] = pairs.get(site, 0) + op
        return HamiltonianTerms(
            num_sites=self.num_sites,
            single_site_terms=tuple(sorted(singles.items())),
            two_site_terms=tuple(sorted(pairs.items())),
        )


def _check_term(op: np.ndarray, shape: Tuple[int, int], site: int, max_site: int, label: str):
    if op.shape != shape:
        raise InvalidInputError(f"{label} has shape {op.shape}, expected {shape}")
    if not 0 <= site < max_site:
        raise InvalidInputError(f"{label} is outside the chain")
    if np.max(np.abs(op - op.conj().T)) > HERMITIAN_TOL:
        raise InvalidInputError(f"{label} is not Hermitian")


def build_zzxz(params: ModelParams) -> Tuple[HamiltonianTerms, HamiltonianTerms]:
    """Return (H0, H_T) for the open ZZXZ chain.

    H0 = sum_i h X_i and H_T = sum_i (J Z_i Z_{i+1} + h X_i + g Z_i).
    """
    n = params.num_sites
    if n < 2:
        raise InvalidInputError(f"ZZXZ chain needs at least 2 sites, got {n}")
    h, J, g = params.field_h, params.coupling_J, params.field_g

    h0 = HamiltonianTerms(
        num_sites=n,
        single_site_terms=tuple((i, h * SX) for i in range(n)),
    )
    ht = HamiltonianTerms(
        num_sites=n,
        single_site_terms=tuple((i, h * SX + g * SZ) for i in range(n)),
        two_site_terms=tuple((i, J * np.kron(SZ, SZ)) for i in range(n - 1)),
    )
    return h0, ht


def interpolate(h0: HamiltonianTerms, ht: HamiltonianTerms, lam: float) -> HamiltonianTerms:
    """(1 - lam) * h0 + lam * ht, merged term by term."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError(f"Interpolation parameter must lie in [0, 1], got {lam}")
    if h0.num_sites != ht.num_sites:
        raise InvalidInputError(
            f"Site count mismatch: {h0.num_sites} vs {ht.num_sites}"
        )
    if lam == 0.0:
        return h0
    if lam == 1.0:
        return ht
    return HamiltonianTerms(
        num_sites=h0.num_sites,
        single_site_terms=tuple((i, (1 - lam) * op) for i, op in h0.single_site_terms)
        + tuple((i, lam * op) for i, op in ht.single_site_terms),
        two_site_terms=tuple((i, (1 - lam) * op) for i, op in h0.two_site_terms)
        + tuple((i, lam * op) for i, op in ht.two_site_terms),
    ).merged()


def ramp_value(kind: RampKind, s: float, lam0: float, lamf: float) -> float:
    """Map path progress s in [0, 1] onto [lam0, lamf]."""
    if not 0.0 <= s <= 1.0:
        raise InvalidInputError(f"Ramp progress must lie in [0, 1], got {s}")
    if kind == RampKind.LINEAR:
        return lam0 + s * (lamf - lam0)
    if kind == RampKind.SMOOTH:
        inner = math.sin(math.pi * s / 2) ** 2
        return lam0 + (lamf - lam0) * math.sin(math.pi / 2 * inner) ** 2
    raise InvalidInputError(f"Unknown ramp kind: {kind}")


def bond_hamiltonians(terms: HamiltonianTerms) -> List[np.ndarray]:
    """N-1 bond operators with single-site terms absorbed.

    Interior sites contribute half their term to each neighbouring bond; the
    two end sites contribute fully to their only bond.
    """
    n = terms.num_sites
    bonds = [np.zeros((4, 4), dtype=complex) for _ in range(n - 1)]
    for site, op in terms.two_site_terms:
        bonds[site] = bonds[site] + op
    for site, op in terms.single_site_terms:
        left_weight = 0.0 if site == 0 else (1.0 if site == n - 1 else 0.5)
        right_weight = 0.0 if site == n - 1 else (1.0 if site == 0 else 0.5)
        if site > 0:
            bonds[site - 1] = bonds[site - 1] + left_weight * np.kron(I2, op)
        if site < n - 1:
            bonds[site] = bonds[site] + right_weight * np.kron(op, I2)
    return bonds


def _embed(op: sparse.spmatrix, site: int, width: int, num_sites: int) -> sparse.csr_matrix:
    left = sparse.identity(2 ** site, format="csr", dtype=complex)
    right = sparse.identity(2 ** (num_sites - site - width), format="csr", dtype=complex)
    return sparse.kron(sparse.kron(left, op, format="csr"), right, format="csr")


def to_sparse(terms: HamiltonianTerms) -> sparse.csr_matrix:
    """Sparse 2^N x 2^N matrix of the Hamiltonian."""
    n = terms.num_sites
    dim = 2 ** n
    total = sparse.csr_matrix((dim, dim), dtype=complex)
    for site, op in terms.single_site_terms:
        total = total + _embed(sparse.csr_matrix(op), site, 1, n)
    for site, op in terms.two_site_terms:
        total = total + _embed(sparse.csr_matrix(op), site, 2, n)
    return total.tocsr()


def _real_if_possible(matrix):
    if sparse.issparse(matrix):
        if matrix.nnz == 0 or np.max(np.abs(matrix.data.imag)) == 0:
            return matrix.real.astype(float)
        return matrix
    if np.max(np.abs(matrix.imag)) == 0:
        return matrix.real
    return matrix


def check_oracle_size(num_sites: int, cap: int = None):
    cap = settings.DENSE_MAX_SITES if cap is None else cap
    if num_sites > cap:
        raise OracleSizeError(num_sites, cap)


def exact_spectrum(terms: HamiltonianTerms, k: int) -> List[Tuple[float, np.ndarray]]:
    """k lowest eigenpairs (ascending) by dense or sparse diagonalization."""
    if k < 1:
        raise InvalidInputError(f"k must be positive, got {k}")
    check_oracle_size(terms.num_sites)
    matrix = _real_if_possible(to_sparse(terms))
    dim = matrix.shape[0]
    if k > dim:
        raise InvalidInputError(f"Requested {k} eigenpairs of a {dim}-dimensional space")

    if dim <= DENSE_EIGH_MAX_DIM or k >= dim - 1:
        values, vectors = np.linalg.eigh(matrix.toarray())
        values, vectors = values[:k], vectors[:, :k]
    else:
        v0 = np.random.default_rng(0).standard_normal(dim)
        values, vectors = eigsh(matrix, k=k, which="SA", v0=v0, tol=1e-12)
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]

    pairs = []
    for value, vector in zip(values, vectors.T):
        vector = np.asarray(vector, dtype=complex)
        pairs.append((float(value), vector / np.linalg.norm(vector)))
    return pairs


def spectral_gap(terms: HamiltonianTerms) -> Tuple[float, bool]:
    """(E1 - E0, degenerate); the gap is reported as 0 when degenerate."""
    (e0, _), (e1, _) = exact_spectrum(terms, 2)
    gap = e1 - e0
    if gap < DEGENERACY_TOL:
        logger.warning(f"Degenerate ground state (gap {gap:.3e}), reporting 0")
        return 0.0, True
    return gap, False


def dmrg_ground_state(terms: HamiltonianTerms, max_bond: int, sweeps: int, tol: float):
    """Two-site DMRG ground state, see ``dmrg.two_site_dmrg``."""
    from dmrg import two_site_dmrg

    result = two_site_dmrg(terms, max_bond=max_bond, sweeps=sweeps, tol=tol)
    return result.energy, result.state


def dmrg_first_gap(terms: HamiltonianTerms, max_bond: int, sweeps: int, tol: float) -> Tuple[float, float]:
    """(E0, E1) from a ground-state run followed by a penalized excited-state run."""
    from dmrg import first_excited_energy

    return first_excited_energy(terms, max_bond=max_bond, sweeps=sweeps, tol=tol)


def gap_profile(
    params: ModelParams,
    grid: Iterable[float],
    use_dmrg: bool = False,
    max_bond: int = None,
    sweeps: int = None,
    tol: float = None,
) -> List[float]:
    """Spectral gap E1 - E0 of H(s) at every grid point."""
    h0, ht = build_zzxz(params)
    dense = params.num_sites <= settings.DENSE_MAX_SITES and not use_dmrg
    gaps = []
    for s in grid:
        terms = interpolate(h0, ht, float(s))
        if dense:
            gap, degenerate = spectral_gap(terms)
        else:
            e0, e1 = dmrg_first_gap(
                terms,
                max_bond=max_bond or settings.DMRG_MAX_BOND,
                sweeps=sweeps or settings.DMRG_SWEEPS,
                tol=tol or settings.DMRG_TOL,
            )
            gap = e1 - e0
            degenerate = gap < DEGENERACY_TOL
            if degenerate:
                logger.warning(f"Degenerate DMRG gap at s={s:.4f}, reporting 0")
                gap = 0.0
        logger.debug(f"gap(s={float(s):.4f}) = {gap:.6f}")
        gaps.append(float(gap))
    return gaps
