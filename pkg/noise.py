"""
Discrete Pauli trajectory noise.

A noise layer hits every qubit independently with probability p and applies
sigma_x, sigma_y or sigma_z with equal weight. Layers are inserted before the
first Trotter step and after every step; an ensemble of pure-state runs with
independent random streams stands in for the mixed state.
"""

import functools
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from backends import PAULI_MATRICES, SimulationBackend
from enums import Pauli
from evolve import count_trotter_steps
from mps import MPS, entanglement_entropy
from mps import apply_single_site as mps_apply_single_site
from oracle import apply_single_site as dense_apply_single_site
from overlap import measure_overlap
from schemas import NoiseConfig, NoiseEnsembleResult, Schedule
from utils.error_handler import InvalidInputError
from utils.pool import map_jobs

logger = logging.getLogger("vqaa.noise")

PAULIS = (Pauli.X, Pauli.Y, Pauli.Z)

NoiseEvent = Tuple[int, Pauli]


# ============================================================================
# Event sampling
# ============================================================================

def sample_noise_events(n_sites: int, p: float, rng: np.random.Generator) -> List[NoiseEvent]:
    """
    Draw the noise events of one layer.

    Both the hit mask and the Pauli labels are drawn on every call so the
    random stream advances by the same amount whether or not a site is hit.

    Args:
        n_sites: Number of qubits
        p: Per-qubit hit probability
        rng: Random generator

    Returns:
        List[NoiseEvent]: (site, pauli) pairs in site order
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"Noise probability must lie in [0, 1], got {p}")
    hits = rng.random(n_sites) < p
    labels = rng.integers(0, 3, size=n_sites)
    return [(int(site), PAULIS[labels[site]]) for site in np.flatnonzero(hits)]


def _num_sites(state) -> int:
    if isinstance(state, MPS):
        return state.num_sites
    return int(np.log2(np.asarray(state).size))


def apply_pauli_noise_layer(
    state,
    p: float,
    rng: np.random.Generator,
    backend: Optional[SimulationBackend] = None,
) -> Tuple[object, List[NoiseEvent]]:
    """One noise layer on an MPS or a dense vector."""
    events = sample_noise_events(_num_sites(state), p, rng)
    for site, pauli in events:
        if backend is not None:
            state = backend.apply_pauli(state, site, pauli)
        elif isinstance(state, MPS):
            state = mps_apply_single_site(state, PAULI_MATRICES[pauli], site)
        else:
            state = dense_apply_single_site(state, PAULI_MATRICES[pauli], site)
    return state, events


def dry_run_event_counts(
    n_sites: int,
    n_layers: int,
    p: float,
    n_trajectories: int,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Total events per trajectory for ``n_layers`` layers, without evolving a state."""
    rng = rng or np.random.default_rng()
    counts = np.zeros(n_trajectories, dtype=int)
    for k in range(n_trajectories):
        counts[k] = sum(len(sample_noise_events(n_sites, p, rng)) for _ in range(n_layers))
    return counts


def noise_layer_count(sched: Schedule) -> int:
    """Layers of a forward sweep: one before the first step plus one per step."""
    return 1 + count_trotter_steps(sched)


# ============================================================================
# Observables
# ============================================================================

def final_fidelity(backend: SimulationBackend, state) -> float:
    return backend.fidelity(state)


def relative_energy_error(backend: SimulationBackend, state) -> float:
    return backend.relative_energy_error(state, 1.0)


OBSERVABLES: Dict[str, Callable[[SimulationBackend, object], float]] = {
    "fidelity": final_fidelity,
    "energy_error": relative_energy_error,
}


# ============================================================================
# Trajectories
# ============================================================================

def _log_entropy(state) -> None:
    if isinstance(state, MPS) and logger.isEnabledFor(logging.DEBUG):
        entropy = entanglement_entropy(state)
        logger.debug(f"Final half-chain entropy {entropy[len(entropy) // 2]:.4f}, max {max(entropy):.4f}")


def _trajectory(
    job: Tuple[int, np.random.SeedSequence],
    backend: SimulationBackend,
    sched: Schedule,
    p: float,
    observable: str,
    shot_m: Optional[int],
) -> Tuple[float, List[Tuple[int, int, str]]]:
    index, seed_seq = job
    rng = np.random.default_rng(seed_seq)
    events: List[Tuple[int, int, str]] = []

    def inject(state, layer: int):
        state, hits = apply_pauli_noise_layer(state, p, rng, backend)
        events.extend((layer, site, pauli.value) for site, pauli in hits)
        return state

    final = backend.evolve(backend.initial_state(), sched, on_step=inject)
    _log_entropy(final)
    value = OBSERVABLES[observable](backend, final)
    if shot_m is not None and observable == "fidelity":
        value = float(np.sqrt(measure_overlap(value ** 2, shot_m, rng).value))
    logger.debug(f"Trajectory {index}: {len(events)} events, {observable}={value:.6g}")
    return value, events


def noisy_ensemble_run(
    backend: SimulationBackend,
    sched: Schedule,
    noise: NoiseConfig,
    observable: str = "energy_error",
    workers: Optional[int] = None,
) -> NoiseEnsembleResult:
    """
    Average an observable over independent noisy trajectories.

    Trajectory k draws from the k-th child of ``SeedSequence(noise.seed)``,
    so results do not depend on the worker count.

    Args:
        backend: Dense or MPS simulator
        sched: Forward schedule
        noise: Noise strength, ensemble size, optional shot count and seed
        observable: "fidelity" or "energy_error"
        workers: Process count for the trajectories

    Returns:
        NoiseEnsembleResult: Mean, standard error, per-trajectory values and events
    """
    if observable not in OBSERVABLES:
        raise InvalidInputError(f"Unknown observable '{observable}'")
    children = np.random.SeedSequence(noise.seed).spawn(noise.n_trajectories)
    job = functools.partial(_trajectory, backend=backend, sched=sched, p=noise.p,
                            observable=observable, shot_m=noise.shot_m)
    results = map_jobs(job, list(enumerate(children)), workers)

    values = np.array([value for value, _ in results])
    n = values.size
    std_err = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    logger.info(
        f"Noise ensemble p={noise.p:g}, n={n}: {observable} = {values.mean():.6g} +- {std_err:.2g}, "
        f"{sum(len(ev) for _, ev in results)} events"
    )
    return NoiseEnsembleResult(
        mean=float(values.mean()),
        std_err=std_err,
        n=n,
        values=values.tolist(),
        events=[ev for _, ev in results],
    )


def deliberate_flip_run(
    backend: SimulationBackend,
    sched: Schedule,
    site: Optional[int] = None,
    layer: Optional[int] = None,
    pauli: Pauli = Pauli.X,
) -> float:
    """Relative energy error after one injected Pauli; no flip when ``site`` or ``layer`` is None."""
    if site is not None and not 0 <= site < backend.num_sites:
        raise InvalidInputError(f"Flip site {site} outside [0, {backend.num_sites})")
    max_layer = count_trotter_steps(sched)
    if layer is not None and not 0 <= layer <= max_layer:
        raise InvalidInputError(f"Flip layer {layer} outside [0, {max_layer}]")

    pauli = Pauli(pauli)
    hook = None
    if site is not None and layer is not None:
        def hook(state, step: int):
            return backend.apply_pauli(state, site, pauli) if step == layer else state

    final = backend.evolve(backend.initial_state(), sched, on_step=hook)
    error = backend.relative_energy_error(final, 1.0)
    logger.info(f"Flip {pauli.value} at site={site} layer={layer}: relative energy error {error:.6g}")
    return error


def flip_scan(
    backend: SimulationBackend,
    sched: Schedule,
    site: int,
    layers: Sequence[int],
    pauli: Pauli = Pauli.X,
) -> List[float]:
    """Relative energy error for a flip at each of ``layers``."""
    return [deliberate_flip_run(backend, sched, site, layer, pauli) for layer in layers]
