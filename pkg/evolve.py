"""Trotterized adiabatic evolution under chunked schedules.

A chunk moves the interpolation parameter from ``s_start`` to ``s_end`` in
time T. It is cut into steps of length dt (plus one remainder step); each
step uses H(lambda) frozen at the ramp value of the step midpoint. Zero-length
chunks therefore reduce to the rotation exp(-i T H(s)).
"""

import itertools
import logging
import math
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from enums import BackwardMode, Direction, RampKind
from hamiltonian import HamiltonianTerms, bond_hamiltonians, interpolate, ramp_value
from mps import MPS, apply_two_site_gate, check_norm
from schemas import DEFAULT_DT, DEFAULT_SUBSTEPS, Schedule
from utils.error_handler import InvalidInputError

logger = logging.getLogger("vqaa.evolve")

# on_step(state, layer) -> state
StepHook = Callable[[object, int], object]

STEP_TOL = 1e-9


# ============================================================================
# Step grids and chunk plans
# ============================================================================

def step_grid(
    s_start: float,
    s_end: float,
    time: float,
    dt: float,
    ramp: RampKind = RampKind.LINEAR,
) -> List[Tuple[float, float]]:
    """(lambda, step length) pairs for one chunk, midpoint rule."""
    if time <= 0:
        raise InvalidInputError(f"Chunk time must be positive, got {time}")
    if dt <= 0:
        raise InvalidInputError(f"Trotter step must be positive, got {dt}")
    n_full = int(math.floor(time / dt + STEP_TOL))
    lengths = [dt] * n_full
    remainder = time - n_full * dt
    if remainder > STEP_TOL * max(1.0, time):
        lengths.append(remainder)

    steps, elapsed = [], 0.0
    for length in lengths:
        progress = min(1.0, (elapsed + 0.5 * length) / time)
        steps.append((ramp_value(ramp, progress, s_start, s_end), length))
        elapsed += length
    return steps


def schedule_endpoints(sched: Schedule) -> List[float]:
    """Chunk end positions s_1..s_L (the last is exactly 1)."""
    ends = list(np.cumsum(sched.chunk_lengths))
    ends[-1] = 1.0
    return [min(1.0, float(e)) for e in ends]


def chunk_plan(
    sched: Schedule,
    direction: Direction = Direction.FORWARD,
    stop_chunk: Optional[int] = None,
    inverse: bool = False,
) -> List[Tuple[float, float, float, bool]]:
    """(s_start, s_end, time, inverse) per chunk, in application order.

    Forward composes chunks 0..stop_chunk. Backward composes stop_chunk..0
    with reversed endpoints using the schedule's own times. ``inverse``
    yields the exact inverse of the forward product.
    """
    last = sched.num_chunks - 1
    if stop_chunk is None:
        stop_chunk = last
    if not 0 <= stop_chunk <= last:
        raise InvalidInputError(f"stop_chunk {stop_chunk} out of range [0, {last}]")
    ends = schedule_endpoints(sched)
    starts = [0.0] + ends[:-1]
    times = sched.chunk_times

    if inverse:
        return [(starts[j], ends[j], times[j], True) for j in range(stop_chunk, -1, -1)]
    if direction == Direction.FORWARD:
        return [(starts[j], ends[j], times[j], False) for j in range(stop_chunk + 1)]
    return [(ends[j], starts[j], times[j], False) for j in range(stop_chunk, -1, -1)]


def ordered_steps(
    s_start: float, s_end: float, time: float, sched: Schedule, inverse: bool = False
) -> List[Tuple[float, float]]:
    """Signed step list; the inverse runs the steps backwards with negated dt."""
    steps = step_grid(s_start, s_end, time, sched.dt, sched.ramp)
    if inverse:
        return [(lam, -length) for lam, length in reversed(steps)]
    return steps


def naive_schedule(
    L: int,
    total_time: float,
    ramp: RampKind = RampKind.LINEAR,
    dt: float = DEFAULT_DT,
    trotter_substeps: int = DEFAULT_SUBSTEPS,
) -> Schedule:
    """Equal chunk lengths and equal chunk times."""
    if L < 1:
        raise InvalidInputError(f"Need at least one chunk, got {L}")
    if total_time <= 0:
        raise InvalidInputError(f"Total time must be positive, got {total_time}")
    return Schedule(
        chunk_lengths=_equal_lengths(L),
        chunk_times=[total_time / L] * L,
        ramp=ramp,
        dt=dt,
        trotter_substeps=trotter_substeps,
    )


def _equal_lengths(L: int) -> List[float]:
    lengths = [1.0 / L] * L
    lengths[-1] = 1.0 - sum(lengths[:-1])
    return lengths


def backward_schedule(
    sched: Schedule,
    mode: BackwardMode = BackwardMode.PROPORTIONAL,
    factor: float = 4.0,
    constant: Optional[float] = None,
    stop_chunk: Optional[int] = None,
) -> Schedule:
    """Schedule with backward-sweep times T^B_j.

    Proportional mode uses factor * T_j. Constant mode spreads one total time
    over chunks 0..stop_chunk in proportion to T_j.
    """
    times = [factor * t for t in sched.chunk_times]
    if mode == BackwardMode.CONSTANT:
        if constant is None or constant <= 0:
            raise InvalidInputError("Constant backward mode needs a positive total time")
        stop = sched.num_chunks - 1 if stop_chunk is None else stop_chunk
        forward_total = sum(sched.chunk_times[: stop + 1])
        for j in range(stop + 1):
            times[j] = constant * sched.chunk_times[j] / forward_total
    return sched.model_copy(update={"chunk_times": times})


def count_trotter_steps(sched: Schedule, stop_chunk: Optional[int] = None) -> int:
    """Number of Trotter steps in the forward sweep."""
    return sum(
        len(step_grid(a, b, t, sched.dt, sched.ramp))
        for a, b, t, _ in chunk_plan(sched, stop_chunk=stop_chunk)
    )


# ============================================================================
# Trotter gates
# ============================================================================

def _bond_unitary(bond: np.ndarray, tau: float) -> np.ndarray:
    values, vectors = np.linalg.eigh(bond)
    return (vectors * np.exp(-1j * tau * values)) @ vectors.conj().T


def trotter_layers(terms: HamiltonianTerms, dt: float, K: int) -> Iterator[Tuple[int, np.ndarray]]:
    """(bond, gate) sequence of the symmetric K-fold even/odd splitting.

    (e^{-i dt H_e/(2K)} e^{-i dt H_o/K} e^{-i dt H_e/(2K)})^K with the
    adjacent even half steps merged.
    """
    bonds = bond_hamiltonians(terms)
    even = [b for b in range(len(bonds)) if b % 2 == 0]
    odd = [b for b in range(len(bonds)) if b % 2 == 1]
    half_even = {b: _bond_unitary(bonds[b], dt / (2 * K)) for b in even}
    full_even = {b: _bond_unitary(bonds[b], dt / K) for b in even}
    full_odd = {b: _bond_unitary(bonds[b], dt / K) for b in odd}

    for b in even:
        yield b, half_even[b]
    for rep in range(K):
        for b in odd:
            yield b, full_odd[b]
        gates = half_even if rep == K - 1 else full_even
        for b in even:
            yield b, gates[b]


def _apply_step(state: MPS, terms: HamiltonianTerms, dt: float, K: int, chi_max: int, svd_cutoff: float) -> float:
    discarded = 0.0
    for bond, gate in trotter_layers(terms, dt, K):
        _, weight = apply_two_site_gate(state, gate, bond, chi_max, svd_cutoff, check=False)
        discarded += weight
    return discarded


def trotter_step(
    state: MPS,
    terms: HamiltonianTerms,
    dt: float,
    K: int = DEFAULT_SUBSTEPS,
    chi_max: Optional[int] = None,
    svd_cutoff: Optional[float] = None,
) -> MPS:
    """One second-order Trotter step exp(-i dt H) on a copy of ``state``."""
    if dt <= 0:
        raise InvalidInputError(f"Trotter step must be positive, got {dt}")
    if terms.num_sites != state.num_sites:
        raise InvalidInputError("Hamiltonian and state have different sizes")
    out = state.copy()
    _apply_step(out, terms, dt, K, chi_max or out.max_bond, svd_cutoff)
    return out


# ============================================================================
# Chunk and schedule evolution
# ============================================================================

def run_chunk(
    state: MPS,
    h0: HamiltonianTerms,
    ht: HamiltonianTerms,
    s_start: float,
    s_end: float,
    time: float,
    sched: Schedule,
    inverse: bool = False,
    on_step: Optional[StepHook] = None,
    layers: Optional[Iterator[int]] = None,
    chi_max: Optional[int] = None,
    svd_cutoff: Optional[float] = None,
) -> MPS:
    """In-place chunk evolution; ``on_step`` runs after every step."""
    chi_max = chi_max or state.max_bond
    for lam, length in ordered_steps(s_start, s_end, time, sched, inverse):
        terms = interpolate(h0, ht, lam)
        _apply_step(state, terms, length, sched.trotter_substeps, chi_max, svd_cutoff)
        if on_step is not None:
            state = on_step(state, next(layers))
    return state


def evolve_chunk(
    state: MPS,
    h0: HamiltonianTerms,
    ht: HamiltonianTerms,
    s_start: float,
    s_end: float,
    time: float,
    sched: Schedule,
    inverse: bool = False,
    chi_max: Optional[int] = None,
    svd_cutoff: Optional[float] = None,
) -> MPS:
    """Evolve a copy of ``state`` through one chunk."""
    for s in (s_start, s_end):
        if not 0.0 <= s <= 1.0:
            raise InvalidInputError(f"Chunk endpoints must lie in [0, 1], got {s}")
    out = run_chunk(state.copy(), h0, ht, s_start, s_end, time, sched, inverse,
                    chi_max=chi_max, svd_cutoff=svd_cutoff)
    check_norm(out)
    return out


def evolve_schedule(
    psi0: MPS,
    h0: HamiltonianTerms,
    ht: HamiltonianTerms,
    sched: Schedule,
    direction: Direction = Direction.FORWARD,
    stop_chunk: Optional[int] = None,
    inverse: bool = False,
    on_step: Optional[StepHook] = None,
    chi_max: Optional[int] = None,
    svd_cutoff: Optional[float] = None,
) -> MPS:
    """Compose chunk evolutions on a copy of ``psi0``.

    ``on_step`` is called with layer 0 before the first step and with
    layer m after the m-th step.
    """
    state = psi0.copy()
    layers = itertools.count(1)
    if on_step is not None:
        state = on_step(state, 0)
    for s_start, s_end, time, inv in chunk_plan(sched, direction, stop_chunk, inverse):
        state = run_chunk(state, h0, ht, s_start, s_end, time, sched, inv,
                          on_step=on_step, layers=layers, chi_max=chi_max, svd_cutoff=svd_cutoff)
    logger.debug(
        f"Evolved {direction.value} to chunk {stop_chunk}: bonds={state.bond_dims()} "
        f"discarded={state.cum_truncation:.3e}"
    )
    check_norm(state)
    return state


def evolve_fixed(
    state: MPS,
    terms: HamiltonianTerms,
    time: float,
    dt: float = DEFAULT_DT,
    K: int = DEFAULT_SUBSTEPS,
    chi_max: Optional[int] = None,
    svd_cutoff: Optional[float] = None,
) -> MPS:
    """exp(-i time H) for a fixed Hamiltonian; negative time runs backwards."""
    out = state.copy()
    if time == 0:
        return out
    sign = 1.0 if time > 0 else -1.0
    for _, length in step_grid(0.0, 0.0, abs(time), dt):
        _apply_step(out, terms, sign * length, K, chi_max or out.max_bond, svd_cutoff)
    return out


def chunk_states(
    psi0: MPS,
    h0: HamiltonianTerms,
    ht: HamiltonianTerms,
    sched: Schedule,
    chi_max: Optional[int] = None,
    svd_cutoff: Optional[float] = None,
) -> List[MPS]:
    """Forward states after each chunk (one sweep)."""
    states, state = [], psi0.copy()
    for s_start, s_end, time, _ in chunk_plan(sched):
        state = run_chunk(state, h0, ht, s_start, s_end, time, sched,
                          chi_max=chi_max, svd_cutoff=svd_cutoff)
        states.append(state.copy())
    return states


def schedule_from_lengths(lengths: Sequence[float], times: Sequence[float], template: Schedule) -> Schedule:
    data = template.model_dump()
    data.update(chunk_lengths=list(lengths), chunk_times=list(times))
    return Schedule(**data)
