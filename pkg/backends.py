"""
Simulation backends - one interface for dense-oracle and MPS runs.

Every algorithm module (spectroscopy, VQAA, noise) is written against
``SimulationBackend``. ``--verify`` runs the same algorithm a second time on
``DenseBackend``.
"""

import itertools
import logging
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from enums import Backend, Direction, Pauli, RampKind
from evolve import StepHook, chunk_plan, evolve_fixed, naive_schedule, run_chunk
from hamiltonian import (
    SX,
    SY,
    SZ,
    build_zzxz,
    dmrg_ground_state,
    exact_spectrum,
    interpolate,
)
from mps import MPS, check_norm, product_state
from mps import apply_single_site as mps_apply_single_site
from mps import energy as mps_energy
from mps import overlap as mps_overlap
from mps import to_dense as mps_to_dense
from oracle import (
    MINUS,
    PLUS,
    PathOperators,
    apply_single_site,
    energy as dense_energy,
    evolve_fixed_dense,
    product_vector,
    run_chunk_dense,
)
from overlap import alpha_from_spectrum
from schemas import DEFAULT_DT, DEFAULT_SUBSTEPS, ModelParams, Schedule
from utils.error_handler import InvalidInputError

logger = logging.getLogger("vqaa.backends")

PAULI_MATRICES = {Pauli.X: SX, Pauli.Y: SY, Pauli.Z: SZ}

# Full eigendecompositions (for vectorized alpha) up to this size
FULL_EIGH_MAX_SITES = 10


class SimulationBackend(ABC):
    """
    Abstract base class for state-evolution backends.

    A backend owns the ZZXZ path H(s) = (1 - s) H0 + s H_T for one set of
    model parameters, together with the Trotter step, repetitions and ramp.
    """

    kind: Backend

    def __init__(
        self,
        params: ModelParams,
        ramp: RampKind = RampKind.LINEAR,
        dt: float = DEFAULT_DT,
        trotter_substeps: int = DEFAULT_SUBSTEPS,
    ):
        """
        Initialize the backend.

        Args:
            params: ZZXZ model parameters
            ramp: Reparametrization used inside every chunk
            dt: Trotter step
            trotter_substeps: Trotter repetitions K
        """
        self.params = params
        self.h0, self.ht = build_zzxz(params)
        self.ramp = ramp
        self.dt = dt
        self.trotter_substeps = trotter_substeps
        self._ground: Dict[float, Tuple[float, object]] = {}
        logger.debug(f"Initialized {self.kind.value} backend for N={params.num_sites}")

    @property
    def num_sites(self) -> int:
        return self.params.num_sites

    def local_initial_state(self) -> np.ndarray:
        """Ground state of a single h*sigma_x term."""
        return MINUS if self.params.field_h >= 0 else PLUS

    def terms(self, s: float):
        return interpolate(self.h0, self.ht, s)

    def naive(self, L: int, total_time: float) -> Schedule:
        return naive_schedule(L, total_time, self.ramp, self.dt, self.trotter_substeps)

    def template(self) -> Schedule:
        return self.naive(1, 1.0)

    # ------------------------------------------------------------------
    # Backend-specific primitives
    # ------------------------------------------------------------------

    @abstractmethod
    def initial_state(self):
        """Product ground state of H0."""
        pass

    @abstractmethod
    def copy(self, state):
        pass

    @abstractmethod
    def _run(self, state, s_start: float, s_end: float, time: float, sched: Schedule,
             inverse: bool, on_step: Optional[StepHook], layers):
        """Evolve ``state`` in place through one chunk and return it."""
        pass

    @abstractmethod
    def overlap(self, a, b) -> complex:
        pass

    @abstractmethod
    def energy(self, state, s: float) -> float:
        pass

    @abstractmethod
    def _solve_ground(self, s: float) -> Tuple[float, object]:
        pass

    @abstractmethod
    def apply_pauli(self, state, site: int, pauli: Pauli):
        pass

    @abstractmethod
    def alpha(self, state, s: float, tau: float) -> complex:
        """<psi| exp(-i tau H(s)) |psi>."""
        pass

    @abstractmethod
    def to_dense(self, state) -> np.ndarray:
        pass

    def _finish(self, state):
        return state

    # ------------------------------------------------------------------
    # Shared operations
    # ------------------------------------------------------------------

    def evolve(
        self,
        state,
        sched: Schedule,
        direction: Direction = Direction.FORWARD,
        stop_chunk: Optional[int] = None,
        inverse: bool = False,
        on_step: Optional[StepHook] = None,
    ):
        """Compose chunk evolutions on a copy of ``state``."""
        state = self.copy(state)
        layers = itertools.count(1)
        if on_step is not None:
            state = on_step(state, 0)
        for s_start, s_end, time, inv in chunk_plan(sched, direction, stop_chunk, inverse):
            state = self._run(state, s_start, s_end, time, sched, inv, on_step, layers)
        return self._finish(state)

    def evolve_chunk(self, state, s_start: float, s_end: float, time: float,
                     sched: Optional[Schedule] = None, inverse: bool = False):
        sched = sched or self.template()
        state = self._run(self.copy(state), s_start, s_end, time, sched, inverse, None, None)
        return self._finish(state)

    def rotate(self, state, s: float, time: float):
        """Zero-length chunk: exp(-i time H(s))."""
        return self.evolve_chunk(state, s, s, time)

    def chunk_states(self, psi0, sched: Schedule) -> List[object]:
        """Forward states after each chunk of one sweep."""
        states, state = [], self.copy(psi0)
        for s_start, s_end, time, _ in chunk_plan(sched):
            state = self._run(state, s_start, s_end, time, sched, False, None, None)
            states.append(self.copy(self._finish(state)))
        return states

    def ground_state(self, s: float) -> Tuple[float, object]:
        """(E0, ground state) of H(s), cached per s."""
        key = round(float(s), 12)
        if key not in self._ground:
            self._ground[key] = self._solve_ground(key)
        return self._ground[key]

    def ground_energy(self, s: float) -> float:
        return self.ground_state(s)[0]

    def ground_overlap(self, state, s: float) -> float:
        """|<GS(s)|psi>|."""
        return float(abs(self.overlap(self.ground_state(s)[1], state)))

    def fidelity(self, state) -> float:
        return self.ground_overlap(state, 1.0)

    def relative_energy_error(self, state, s: float = 1.0) -> float:
        e_gs = self.ground_energy(s)
        return (self.energy(state, s) - e_gs) / abs(e_gs)

    def alphas(self, state, s: float, taus: Sequence[float]) -> np.ndarray:
        return np.array([self.alpha(state, s, tau) for tau in taus], dtype=complex)

    def e2_average(self, state, s: float, taus: Sequence[float]) -> float:
        """Mean of |alpha(tau)|^2 over ``taus``."""
        if len(taus) == 0:
            raise InvalidInputError("Need at least one tau")
        return float(np.mean(np.abs(self.alphas(state, s, taus)) ** 2))


class DenseBackend(SimulationBackend):
    """Exact statevector evolution (N <= dense cap)."""

    kind = Backend.DENSE_ORACLE

    def __init__(self, params: ModelParams, ramp: RampKind = RampKind.LINEAR,
                 dt: float = DEFAULT_DT, trotter_substeps: int = DEFAULT_SUBSTEPS):
        super().__init__(params, ramp, dt, trotter_substeps)
        self.ops = PathOperators(self.h0, self.ht)
        self._spectra: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}

    def initial_state(self) -> np.ndarray:
        return product_vector([self.local_initial_state()] * self.num_sites)

    def copy(self, state: np.ndarray) -> np.ndarray:
        return np.array(state, dtype=complex)

    def _run(self, state, s_start, s_end, time, sched, inverse, on_step, layers):
        return run_chunk_dense(state, self.ops, s_start, s_end, time, sched, inverse, on_step, layers)

    def overlap(self, a: np.ndarray, b: np.ndarray) -> complex:
        return complex(np.vdot(a, b))

    def energy(self, state: np.ndarray, s: float) -> float:
        return dense_energy(state, self.ops.at(s))

    def _solve_ground(self, s: float):
        (e0, vec), = exact_spectrum(self.terms(s), 1)
        return e0, vec

    def apply_pauli(self, state: np.ndarray, site: int, pauli: Pauli) -> np.ndarray:
        return apply_single_site(state, PAULI_MATRICES[Pauli(pauli)], site)

    def spectrum(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        """Full eigendecomposition of H(s), cached."""
        key = round(float(s), 12)
        if key not in self._spectra:
            matrix = self.ops.at(key).toarray()
            self._spectra[key] = np.linalg.eigh(matrix)
        return self._spectra[key]

    def alphas(self, state: np.ndarray, s: float, taus: Sequence[float]) -> np.ndarray:
        if self.num_sites <= FULL_EIGH_MAX_SITES:
            energies, vectors = self.spectrum(s)
            populations = np.abs(vectors.conj().T @ state) ** 2
            return alpha_from_spectrum(populations, energies, taus)
        return super().alphas(state, s, taus)

    def alpha(self, state: np.ndarray, s: float, tau: float) -> complex:
        if self.num_sites <= FULL_EIGH_MAX_SITES:
            return complex(self.alphas(state, s, [tau])[0])
        evolved = evolve_fixed_dense(state, self.ops.at(s), tau)
        return complex(np.vdot(state, evolved))

    def to_dense(self, state: np.ndarray) -> np.ndarray:
        return state


class MpsBackend(SimulationBackend):
    """TEBD evolution of matrix product states with DMRG reference states."""

    kind = Backend.MPS

    def __init__(
        self,
        params: ModelParams,
        ramp: RampKind = RampKind.LINEAR,
        dt: float = DEFAULT_DT,
        trotter_substeps: int = DEFAULT_SUBSTEPS,
        chi_max: Optional[int] = None,
        svd_cutoff: Optional[float] = None,
        dmrg_max_bond: Optional[int] = None,
        dmrg_sweeps: Optional[int] = None,
        dmrg_tol: Optional[float] = None,
    ):
        super().__init__(params, ramp, dt, trotter_substeps)
        self.chi_max = chi_max or settings.CHI_MAX
        self.svd_cutoff = settings.SVD_CUTOFF if svd_cutoff is None else svd_cutoff
        self.dmrg_max_bond = dmrg_max_bond or settings.DMRG_MAX_BOND
        self.dmrg_sweeps = dmrg_sweeps or settings.DMRG_SWEEPS
        self.dmrg_tol = dmrg_tol or settings.DMRG_TOL

    def initial_state(self) -> MPS:
        return product_state([self.local_initial_state()] * self.num_sites, max_bond=self.chi_max)

    def copy(self, state: MPS) -> MPS:
        return state.copy()

    def _run(self, state, s_start, s_end, time, sched, inverse, on_step, layers):
        return run_chunk(state, self.h0, self.ht, s_start, s_end, time, sched, inverse,
                         on_step=on_step, layers=layers,
                         chi_max=self.chi_max, svd_cutoff=self.svd_cutoff)

    def _finish(self, state: MPS) -> MPS:
        check_norm(state)
        return state

    def overlap(self, a: MPS, b: MPS) -> complex:
        return mps_overlap(a, b)

    def energy(self, state: MPS, s: float) -> float:
        return mps_energy(state, self.terms(s))

    def _solve_ground(self, s: float):
        return dmrg_ground_state(self.terms(s), self.dmrg_max_bond, self.dmrg_sweeps, self.dmrg_tol)

    def apply_pauli(self, state: MPS, site: int, pauli: Pauli) -> MPS:
        return mps_apply_single_site(state, PAULI_MATRICES[Pauli(pauli)], site)

    def alpha(self, state: MPS, s: float, tau: float) -> complex:
        evolved = evolve_fixed(state, self.terms(s), tau, self.dt, self.trotter_substeps,
                               chi_max=self.chi_max, svd_cutoff=self.svd_cutoff)
        return mps_overlap(state, evolved)

    def to_dense(self, state: MPS) -> np.ndarray:
        return mps_to_dense(state)


def make_backend(
    kind: Backend,
    params: ModelParams,
    ramp: RampKind = RampKind.LINEAR,
    dt: float = DEFAULT_DT,
    trotter_substeps: int = DEFAULT_SUBSTEPS,
    chi_max: Optional[int] = None,
    svd_cutoff: Optional[float] = None,
) -> SimulationBackend:
    """Factory used by the CLI commands."""
    if Backend(kind) == Backend.DENSE_ORACLE:
        return DenseBackend(params, ramp, dt, trotter_substeps)
    return MpsBackend(params, ramp, dt, trotter_substeps, chi_max=chi_max, svd_cutoff=svd_cutoff)


def dense_twin(backend: SimulationBackend) -> DenseBackend:
    """Dense oracle with the same model and discretization (for --verify)."""
    if isinstance(backend, DenseBackend):
        return backend
    return DenseBackend(backend.params, backend.ramp, backend.dt, backend.trotter_substeps)
