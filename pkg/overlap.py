"""
Ground-state closeness estimation.

Implements the single-ancilla autocorrelation alpha(tau) = <psi|exp(-i tau H)|psi>,
the entangled-ancillas Bell expectation, the E^2 lower bound on the ground
population and the simulated shot-noise measurements that feed the optimizers
and the hypothesis test.

Ancilla protocols are simulated at the expectation-value level: alpha is
computed exactly and then Bernoulli-sampled. ``explicit_ancilla_reference``
builds the (N+1)-qubit controlled-evolution circuit and is only used as a
dense cross-check.
"""

import logging
import math
from typing import TYPE_CHECKING, Iterator, Optional, Sequence, Union

import numpy as np
from scipy.sparse.linalg import expm_multiply

from enums import OverlapKind
from evolve import evolve_fixed
from hamiltonian import SX, SY, HamiltonianTerms, check_oracle_size, to_sparse
from mps import MPS
from mps import overlap as mps_overlap
from schemas import DEFAULT_DT, DEFAULT_SUBSTEPS, EstimatorConfig, OverlapEstimate
from utils.error_handler import InvalidInputError, OracleSizeError

if TYPE_CHECKING:
    from backends import SimulationBackend

logger = logging.getLogger("vqaa.overlap")

DEFAULT_K_MAX = 100
DEFAULT_TAU_COUNT = 32
# Explicit ancilla circuit doubles the register
EXPLICIT_ANCILLA_MAX_SITES = 10
SPECTRUM_MAX_SITES = 10

State = Union[np.ndarray, MPS]


# ============================================================================
# Autocorrelation alpha(tau)
# ============================================================================

def alpha(
    state: State,
    terms: HamiltonianTerms,
    tau: float,
    dt: float = DEFAULT_DT,
    K: int = DEFAULT_SUBSTEPS,
    chi_max: Optional[int] = None,
) -> complex:
    """
    <psi| exp(-i tau H) |psi>.

    Dense vectors use the exact exponential; MPS states are Trotter-evolved
    under the fixed Hamiltonian and overlapped with the original.

    Args:
        state: Normalized dense vector or MPS
        terms: Fixed Hamiltonian H
        tau: Evolution time (any sign)
        dt: Trotter step for the MPS path
        K: Trotter repetitions for the MPS path
        chi_max: Bond cap for the MPS path

    Returns:
        complex: The autocorrelation alpha(tau)
    """
    if isinstance(state, MPS):
        evolved = evolve_fixed(state, terms, tau, dt, K, chi_max=chi_max)
        return mps_overlap(state, evolved)

    vector = np.asarray(state, dtype=complex)
    check_oracle_size(terms.num_sites)
    if tau == 0:
        return complex(np.vdot(vector, vector))
    evolved = expm_multiply(-1j * tau * to_sparse(terms), vector)
    return complex(np.vdot(vector, evolved))


def alpha_from_spectrum(populations: np.ndarray, energies: np.ndarray, taus: Sequence[float]) -> np.ndarray:
    """Sum_j p_j exp(-i E_j tau) for every tau."""
    phases = np.exp(-1j * np.outer(np.asarray(taus, dtype=float), energies))
    return phases @ np.asarray(populations, dtype=float)


def _dense_spectrum(terms: HamiltonianTerms):
    return np.linalg.eigh(to_sparse(terms).toarray())


def sample_tau(delta_estimate: float, k_max: int = DEFAULT_K_MAX, rng: Optional[np.random.Generator] = None) -> float:
    """tau = pi * l / delta_estimate with l uniform on {1..k_max}."""
    if delta_estimate <= 0:
        raise InvalidInputError(f"Gap estimate must be positive, got {delta_estimate}")
    if k_max < 1:
        raise InvalidInputError(f"k_max must be at least 1, got {k_max}")
    rng = rng if rng is not None else np.random.default_rng()
    l = int(rng.integers(1, k_max + 1))
    return math.pi * l / delta_estimate


def sample_taus(delta_estimate: float, count: int = DEFAULT_TAU_COUNT, k_max: int = DEFAULT_K_MAX,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
    rng = rng if rng is not None else np.random.default_rng()
    return np.array([sample_tau(delta_estimate, k_max, rng) for _ in range(count)])


# ============================================================================
# E^2 and the ground-population bound
# ============================================================================

def e2_average(state: State, terms: HamiltonianTerms, taus: Sequence[float], **evolve_kwargs) -> float:
    """Mean of |alpha(tau)|^2 over ``taus``."""
    if len(taus) == 0:
        raise InvalidInputError("E^2 needs at least one tau")
    if not isinstance(state, MPS) and terms.num_sites <= SPECTRUM_MAX_SITES:
        energies, vectors = _dense_spectrum(terms)
        populations = np.abs(vectors.conj().T @ np.asarray(state, dtype=complex)) ** 2
        values = alpha_from_spectrum(populations, energies, taus)
    else:
        values = np.array([alpha(state, terms, tau, **evolve_kwargs) for tau in taus])
    return float(np.mean(np.abs(values) ** 2))


def e2_finite_window(populations: Sequence[float], energies: Sequence[float], window: float) -> float:
    """Exact E_tau |alpha|^2 for tau uniform on [0, window]."""
    p = np.asarray(populations, dtype=float)
    e = np.asarray(energies, dtype=float)
    if window <= 0:
        return float(np.sum(p) ** 2)
    omega = e[:, None] - e[None, :]
    return float(p @ np.sinc(omega * window / np.pi) @ p)


def _check_unit(value: float, name: str) -> float:
    if not -1e-12 <= value <= 1 + 1e-12:
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value}")
    return min(max(value, 0.0), 1.0)


def ground_population_bound(e2: float) -> float:
    """Lower bound 1/2 + 1/2 sqrt(2 E^2 - 1) on |psi_0|^2 (0 below E^2 = 1/2)."""
    e2 = _check_unit(e2, "E^2")
    if e2 < 0.5:
        return 0.0
    return 0.5 + 0.5 * math.sqrt(2.0 * e2 - 1.0)


def excited_population_bound(e2: float) -> float:
    """Upper bound on every excited population when the ground population dominates."""
    e2 = _check_unit(e2, "E^2")
    if e2 < 0.5:
        return 1.0
    return 0.5 - 0.5 * math.sqrt(2.0 * e2 - 1.0)


def required_e2(theta: float) -> float:
    """Smallest E^2 whose bound certifies |psi_0| >= theta."""
    theta = _check_unit(theta, "theta")
    if theta ** 2 <= 0.5:
        return 0.5
    return 0.5 * (1.0 + (2.0 * theta ** 2 - 1.0) ** 2)


# ============================================================================
# Ancilla protocols
# ============================================================================

def bell_expectation(alpha_abs2: float) -> float:
    """Phi^- projector expectation (1 - |alpha|^2) / 4 on the two ancillas."""
    alpha_abs2 = _check_unit(alpha_abs2, "|alpha|^2")
    return (1.0 - alpha_abs2) / 4.0


def ancilla_density_matrix(state: np.ndarray, terms: HamiltonianTerms, tau: float) -> np.ndarray:
    """Reduced ancilla state after the controlled evolution, built from the spectrum."""
    check_oracle_size(terms.num_sites)
    vector = np.asarray(state, dtype=complex)
    if terms.num_sites <= SPECTRUM_MAX_SITES:
        energies, vectors = _dense_spectrum(terms)
        populations = np.abs(vectors.conj().T @ vector) ** 2
        a = complex(alpha_from_spectrum(populations, energies, [tau])[0])
    else:
        a = alpha(vector, terms, tau)
    return np.array([[0.5, np.conj(a) / 2.0], [a / 2.0, 0.5]], dtype=complex)


def explicit_ancilla_reference(state: np.ndarray, terms: HamiltonianTerms, tau: float) -> complex:
    """
    Simulate C-U (|psi> (x) |+>) on N+1 qubits and read the ancilla.

    The ancilla is the last (least significant) qubit and U = exp(-i tau H)
    acts when it is |1>.

    Returns:
        complex: <sigma_x> + i <sigma_y> of the ancilla, which equals alpha(tau)
    """
    num_sites = terms.num_sites
    if num_sites > EXPLICIT_ANCILLA_MAX_SITES:
        raise OracleSizeError(num_sites, EXPLICIT_ANCILLA_MAX_SITES)
    vector = np.asarray(state, dtype=complex)
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    register = np.kron(vector, plus).reshape(-1, 2)
    if tau != 0:
        register[:, 1] = expm_multiply(-1j * tau * to_sparse(terms), register[:, 1])
    rho = register.T @ register.conj()
    sigma_x = float(np.real(np.trace(rho @ SX)))
    sigma_y = float(np.real(np.trace(rho @ SY)))
    return complex(sigma_x, sigma_y)


# ============================================================================
# Shot-noise measurement simulation
# ============================================================================

def _rng(rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng()


def measure_overlap(
    true_expectation: float,
    m: int,
    rng: Optional[np.random.Generator] = None,
    kind: OverlapKind = OverlapKind.DIRECT_ORACLE,
) -> OverlapEstimate:
    """Mean of m Bernoulli(true_expectation) outcomes."""
    if m < 1:
        raise InvalidInputError(f"Need at least one measurement, got m={m}")
    p = _check_unit(true_expectation, "Expectation")
    p_hat = _rng(rng).binomial(m, p) / m
    std_err = math.sqrt(p_hat * (1.0 - p_hat) / m)
    return OverlapEstimate(value=p_hat, kind=kind, samples=m, std_err=std_err)


def measure_alpha(value: complex, m: int, rng: Optional[np.random.Generator] = None) -> complex:
    """Estimate alpha from m sigma_x and m sigma_y ancilla outcomes."""
    if m < 1:
        raise InvalidInputError(f"Need at least one measurement, got m={m}")
    rng = _rng(rng)
    p_x = min(max((1.0 + value.real) / 2.0, 0.0), 1.0)
    p_y = min(max((1.0 + value.imag) / 2.0, 0.0), 1.0)
    x_hat = 2.0 * rng.binomial(m, p_x) / m - 1.0
    y_hat = 2.0 * rng.binomial(m, p_y) / m - 1.0
    return complex(x_hat, y_hat)


def bell_alpha_abs2_estimate(p_hat: float) -> float:
    """Invert the Bell firing probability into |alpha|^2."""
    return float(np.clip(1.0 - 4.0 * p_hat, 0.0, 1.0))


def bell_outcomes(alpha_abs2_values: Sequence[float], rng: Optional[np.random.Generator] = None) -> Iterator[int]:
    """
    Endless stream of Bell outcomes with tau drawn from a pool.

    Yields 1 when the Phi^- projector does not fire (the high-overlap
    outcome) and 0 when it fires.
    """
    rng = _rng(rng)
    pool = np.asarray(alpha_abs2_values, dtype=float)
    if pool.size == 0:
        raise InvalidInputError("Bell outcome stream needs at least one tau")
    while True:
        fire = bell_expectation(float(pool[rng.integers(pool.size)]))
        yield int(rng.random() >= fire)


def estimate_ground_overlap(
    backend: "SimulationBackend",
    state,
    s: float,
    estimator: OverlapKind = OverlapKind.DIRECT_ORACLE,
    m: Optional[int] = None,
    taus: Optional[Sequence[float]] = None,
    rng: Optional[np.random.Generator] = None,
) -> OverlapEstimate:
    """
    Estimate |<GS(s)|psi>| with the selected protocol.

    The ancilla routes return sqrt(ground_population_bound(E^2)), a certified
    lower bound on the overlap. ``m=None`` gives the noiseless value.

    Args:
        backend: Simulation backend owning the path H(s)
        state: State to test
        s: Path position of the reference Hamiltonian
        estimator: Protocol to simulate
        m: Shots per expectation value
        taus: Evolution times for the ancilla routes
        rng: Random generator for shot noise

    Returns:
        OverlapEstimate: Value, sample count and standard error
    """
    estimator = OverlapKind(estimator)
    rng = _rng(rng)

    if estimator == OverlapKind.DIRECT_ORACLE:
        value = backend.ground_overlap(state, s)
        if not m:
            return OverlapEstimate(value=min(value, 1.0), kind=estimator)
        fidelity = measure_overlap(min(value ** 2, 1.0), m, rng, kind=estimator)
        root = math.sqrt(fidelity.value)
        std_err = fidelity.std_err / (2 * root) if root > 0 else math.sqrt(1.0 / m)
        return OverlapEstimate(value=root, kind=estimator, samples=m, std_err=std_err)

    if estimator == OverlapKind.FORWARD_BACKWARD:
        raise InvalidInputError("Forward-backward overlaps are measured against the product state")
    if taus is None or len(taus) == 0:
        raise InvalidInputError(f"{estimator.value} estimator needs at least one tau")

    alphas = backend.alphas(state, s, taus)
    # shot variance of each |alpha(tau)|^2 estimate
    shot_var = np.zeros(len(taus))
    if estimator == OverlapKind.SINGLE_ANCILLA_E2:
        if m:
            alphas = np.array([measure_alpha(a, m, rng) for a in alphas])
            x, y = alphas.real, alphas.imag
            shot_var = 4.0 * (x ** 2 * (1.0 - x ** 2) + y ** 2 * (1.0 - y ** 2)) / m
        abs2 = np.clip(np.abs(alphas) ** 2, 0.0, 1.0)
        samples = 2 * m * len(taus) if m else 0
    else:
        abs2 = np.clip(np.abs(alphas) ** 2, 0.0, 1.0)
        if m:
            fires = np.array([rng.binomial(m, bell_expectation(v)) / m for v in abs2])
            abs2 = np.array([bell_alpha_abs2_estimate(p) for p in fires])
            shot_var = 16.0 * fires * (1.0 - fires) / m
        samples = m * len(taus) if m else 0

    e2 = min(float(np.mean(abs2)), 1.0)
    value = math.sqrt(ground_population_bound(e2))
    std_err = 0.0
    if samples:
        std_err = bound_std_err(e2, float(np.sqrt(np.sum(shot_var))) / len(taus))
    logger.debug(f"{estimator.value} at s={s:.4f}: E2={e2:.5f}, bound={value:.5f}")
    return OverlapEstimate(value=value, kind=estimator, samples=samples,
                           std_err=std_err, tau_count=len(taus))


def bound_std_err(e2: float, e2_err: float) -> float:
    """Shot-noise error of sqrt(ground_population_bound) for an E^2 error, by central difference."""
    hi = math.sqrt(ground_population_bound(min(e2 + e2_err, 1.0)))
    lo = math.sqrt(ground_population_bound(max(e2 - e2_err, 0.0)))
    return 0.5 * (hi - lo)


class OverlapMeter:
    """
    Overlap estimator with evaluation and measurement bookkeeping.

    Every optimizer reads overlaps through one meter so the traces carry
    cumulative evaluation and simulated-measurement counts.
    """

    def __init__(self, backend: "SimulationBackend", config: Optional[EstimatorConfig] = None,
                 rng: Optional[np.random.Generator] = None):
        self.backend = backend
        self.config = config or EstimatorConfig()
        self.rng = _rng(rng)
        self.eval_count = 0
        self.measurement_count = 0

    def taus(self) -> np.ndarray:
        return sample_taus(self.config.delta_estimate, self.config.n_tau, self.config.k_max, self.rng)

    def measure(self, state, s: float) -> OverlapEstimate:
        """Ground-state overlap at s with the configured estimator."""
        kind = OverlapKind(self.config.estimator)
        taus = None if kind == OverlapKind.DIRECT_ORACLE else self.taus()
        estimate = estimate_ground_overlap(self.backend, state, s, kind, self.config.m, taus, self.rng)
        self._count(estimate)
        return estimate

    def measure_return(self, value: float) -> OverlapEstimate:
        """Return amplitude |<psi0|psi>| read out by projecting on the product state."""
        value = min(max(value, 0.0), 1.0)
        if not self.config.m:
            estimate = OverlapEstimate(value=value, kind=OverlapKind.FORWARD_BACKWARD)
        else:
            fidelity = measure_overlap(value ** 2, self.config.m, self.rng, OverlapKind.FORWARD_BACKWARD)
            root = math.sqrt(fidelity.value)
            std_err = fidelity.std_err / (2 * root) if root > 0 else math.sqrt(1.0 / self.config.m)
            estimate = OverlapEstimate(value=root, kind=OverlapKind.FORWARD_BACKWARD,
                                       samples=self.config.m, std_err=std_err)
        self._count(estimate)
        return estimate

    def alpha_abs2_pool(self, state, s: float) -> np.ndarray:
        """|alpha(tau)|^2 over a fresh tau draw (the Bell-test pool)."""
        return np.clip(np.abs(self.backend.alphas(state, s, self.taus())) ** 2, 0.0, 1.0)

    def add_measurements(self, count: int):
        self.measurement_count += count

    def _count(self, estimate: OverlapEstimate):
        self.eval_count += 1
        self.measurement_count += estimate.samples
