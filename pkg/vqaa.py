"""
Variational quantum adiabatic algorithms.

Four ways of shaping the chunked schedule:

* ratio rebalancing with ancilla-free (forward + backward) overlaps,
* ratio rebalancing with forward-only overlaps against instantaneous ground states,
* black-box optimization of the chunk lengths against the final overlap,
* flexible chunk times following a target overlap profile.

All objectives are read through an ``OverlapMeter``; traces record the
cumulative evaluation and measurement counts.
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from backends import SimulationBackend
from enums import BackwardMode, Decision, Direction, InitKind, ObjectiveKind, OptimizerKind, RampKind, RatioMode
from evolve import backward_schedule, chunk_plan, schedule_endpoints, schedule_from_lengths
from hamiltonian import ramp_value
from inference import DEFAULT_PRIOR, sequential_test
from optimizers import minimize_on_simplex, project_to_simplex
from overlap import OverlapMeter, bell_outcomes, required_e2
from schemas import (
    MIN_CHUNK_LENGTH,
    BetaPosterior,
    OptimizationTrace,
    OptimizerConfig,
    Schedule,
    TraceEntry,
)
from utils.error_handler import InvalidInputError

logger = logging.getLogger("vqaa.vqaa")

LENGTH_CHANGE_TOL = 1e-3
MIN_STEP = 1e-3


# ============================================================================
# Shared helpers
# ============================================================================

def _entry(iteration: int, meter: OverlapMeter, objective: float, sched: Schedule, note: str = None) -> TraceEntry:
    return TraceEntry(
        iteration=iteration,
        eval_count=meter.eval_count,
        measurement_count=meter.measurement_count,
        objective=objective,
        lengths=list(sched.chunk_lengths),
        times=list(sched.chunk_times),
        note=note,
    )


def _fixed_time_schedule(backend: SimulationBackend, lengths: Sequence[float], total_time: float) -> Schedule:
    L = len(lengths)
    return schedule_from_lengths(lengths, [total_time / L] * L, backend.template())


def naive_fidelity(backend: SimulationBackend, L: int, total_time: float) -> float:
    """Final ground-state fidelity of the naive schedule."""
    state = backend.evolve(backend.initial_state(), backend.naive(L, total_time))
    return backend.fidelity(state)


def schedule_fidelity(backend: SimulationBackend, sched: Schedule) -> float:
    return backend.fidelity(backend.evolve(backend.initial_state(), sched))


def rotation_substitution_change(backend: SimulationBackend, sched: Schedule, chunk: int) -> float:
    """
    Fidelity change when ``chunk`` is replaced by the rotation exp(-i T_i H(s_i)).

    Used on converged schedules whose chunk has (near) zero length.
    """
    if not 0 <= chunk < sched.num_chunks:
        raise InvalidInputError(f"Chunk {chunk} out of range for {sched.num_chunks} chunks")
    psi0 = backend.initial_state()
    reference = backend.fidelity(backend.evolve(psi0, sched))

    state = psi0
    for j, (s_start, s_end, time, _) in enumerate(chunk_plan(sched)):
        if j == chunk:
            state = backend.rotate(state, s_end, time)
        else:
            state = backend.evolve_chunk(state, s_start, s_end, time, sched)
    return abs(backend.fidelity(state) - reference)


def load_trace(path: str) -> OptimizationTrace:
    """Trace checkpoint for resumed or warm-started runs."""
    return OptimizationTrace.model_validate_json(Path(path).read_text())


# ============================================================================
# Ratio rebalancing (ancilla-free and forward-only)
# ============================================================================

def ratio_rebalance_step(
    overlaps: Sequence[float],
    lengths: Sequence[float],
    step: float,
    min_len: float = MIN_CHUNK_LENGTH,
) -> List[float]:
    """
    Rebalance chunk lengths from consecutive overlap ratios R_i = O_i / O_{i-1}.

    Chunks with the largest overlap drop (R_i below the mean) shrink, which
    puts more time per unit s there; chunks above the mean grow. A zero
    overlap pins its chunk at ``min_len``.
    """
    overlaps = np.asarray(overlaps, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    if overlaps.shape != lengths.shape:
        raise InvalidInputError("Need one overlap per chunk")
    previous = np.concatenate(([1.0], overlaps[:-1]))
    zero = overlaps <= 0
    # O_i > 0 after O_{i-1} = 0 has no ratio; such chunks keep their length
    undefined = (previous <= 0) & ~zero
    ratios = np.where(previous > 0, overlaps / np.where(previous > 0, previous, 1.0), np.nan)
    if zero.any():
        logger.warning(f"Zero overlap at chunks {np.nonzero(zero)[0].tolist()}, pinning to min length")
    if undefined.any():
        logger.warning(f"Undefined overlap ratio at chunks {np.nonzero(undefined)[0].tolist()}, left unchanged")
    valid = ratios[~zero & ~undefined]
    if valid.size == 0:
        return [1.0 / len(lengths)] * len(lengths)
    mean = float(np.mean(valid))

    factors = np.where(undefined | zero, 1.0, 1.0 - step * (mean - np.nan_to_num(ratios)) / mean)
    updated = np.where(zero, min_len, lengths * factors)
    updated = np.maximum(updated, min_len)
    updated = updated / np.sum(updated)
    if updated.min() < min_len:
        updated = project_to_simplex(updated, min_len)
    return [float(x) for x in updated]


def chunk_overlaps(
    backend: SimulationBackend,
    sched: Schedule,
    mode: RatioMode,
    meter: OverlapMeter,
    backward_factor: float = 4.0,
) -> List[float]:
    """
    O_i at every chunk end.

    Ancilla-free: |<psi0| W_back(s_i) W_fwd(s_i) |psi0>| with backward times
    ``backward_factor`` x T_j. Forward-only: |<GS(s_i)| W_fwd(s_i) |psi0>|.
    """
    psi0 = backend.initial_state()
    states = backend.chunk_states(psi0, sched)
    ends = schedule_endpoints(sched)
    values = []
    if RatioMode(mode) == RatioMode.FORWARD_ONLY:
        for state, s in zip(states, ends):
            values.append(meter.measure(state, s).value)
        return values

    back = backward_schedule(sched, BackwardMode.PROPORTIONAL, backward_factor)
    for i, state in enumerate(states):
        returned = backend.evolve(state, back, direction=Direction.BACKWARD, stop_chunk=i)
        values.append(meter.measure_return(abs(backend.overlap(psi0, returned))).value)
    return values


def run_ratio_vqaa(
    backend: SimulationBackend,
    L: int,
    total_time: float,
    mode: RatioMode = RatioMode.ANCILLA_FREE,
    max_iters: int = 30,
    step: float = 0.3,
    meter: Optional[OverlapMeter] = None,
    backward_factor: float = 4.0,
    min_len: float = MIN_CHUNK_LENGTH,
) -> OptimizationTrace:
    """
    Iterate evolve, measure O_i, rebalance until the lengths settle.

    Chunk times stay at T/L. A rebalance that lowers the final overlap O_L
    is rejected and the step halved.

    Args:
        backend: Simulation backend
        L: Number of chunks (at least 2)
        total_time: Total evolution time T
        mode: Ancilla-free or forward-only overlaps
        max_iters: Rebalance iterations
        step: Initial multiplicative step
        meter: Overlap estimator (direct oracle by default)
        backward_factor: Backward-time multiplier for the ancilla-free mode
        min_len: Chunk length floor

    Returns:
        OptimizationTrace: One entry per evaluated schedule
    """
    if L < 2:
        raise InvalidInputError("The ratio algorithm needs at least two chunks")
    meter = meter or OverlapMeter(backend)
    trace = OptimizationTrace(objective_kind=ObjectiveKind.RATIO_SMOOTHNESS)
    logger.info(f"Ratio VQAA ({RatioMode(mode).value}): L={L}, T={total_time}, step={step}")

    sched = backend.naive(L, total_time)
    overlaps = chunk_overlaps(backend, sched, mode, meter, backward_factor)
    trace.record(_entry(0, meter, overlaps[-1], sched, note="naive"), sched)
    if any(o <= 0 for o in overlaps):
        trace.flags.append("zero_overlap")

    for iteration in range(1, max_iters + 1):
        proposal = ratio_rebalance_step(overlaps, sched.chunk_lengths, step, min_len)
        change = float(np.max(np.abs(np.asarray(proposal) - np.asarray(sched.chunk_lengths))))
        if change < LENGTH_CHANGE_TOL:
            logger.info(f"Ratio VQAA converged after {iteration - 1} iterations")
            break
        candidate = _fixed_time_schedule(backend, proposal, total_time)
        candidate_overlaps = chunk_overlaps(backend, candidate, mode, meter, backward_factor)
        improved = candidate_overlaps[-1] >= overlaps[-1]
        trace.record(_entry(iteration, meter, candidate_overlaps[-1], candidate,
                            note="accepted" if improved else "reverted"), candidate)
        if any(o <= 0 for o in candidate_overlaps) and "zero_overlap" not in trace.flags:
            trace.flags.append("zero_overlap")
        if improved:
            sched, overlaps = candidate, candidate_overlaps
        else:
            step /= 2
            logger.debug(f"Objective regressed, halving step to {step}")
            if step < MIN_STEP:
                break

    trace.verified_fidelity = schedule_fidelity(backend, trace.best)
    return trace


# ============================================================================
# Black-box optimization
# ============================================================================

def blackbox_objective(lengths: Sequence[float], backend: SimulationBackend, total_time: float,
                       meter: OverlapMeter, min_len: float = MIN_CHUNK_LENGTH) -> float:
    """Final ground-state overlap of the schedule with the given lengths and T_i = T / L."""
    lengths = project_to_simplex(lengths, min_len)
    sched = _fixed_time_schedule(backend, lengths, total_time)
    state = backend.evolve(backend.initial_state(), sched)
    return meter.measure(state, 1.0).value


class BlackboxObjective:
    """Negated final overlap for the minimizers, recording every evaluation."""

    def __init__(self, backend: SimulationBackend, total_time: float, meter: OverlapMeter,
                 trace: OptimizationTrace, min_len: float = MIN_CHUNK_LENGTH):
        self.backend = backend
        self.total_time = total_time
        self.meter = meter
        self.trace = trace
        self.min_len = min_len
        self.iteration = len(trace.entries)

    def evaluate(self, lengths: Sequence[float], note: str = None) -> float:
        lengths = project_to_simplex(lengths, self.min_len)
        sched = _fixed_time_schedule(self.backend, lengths, self.total_time)
        value = blackbox_objective(lengths, self.backend, self.total_time, self.meter, self.min_len)
        if self.trace.record(_entry(self.iteration, self.meter, value, sched, note), sched):
            logger.info(f"Evaluation {self.meter.eval_count}: new best overlap {value:.5f}")
        self.iteration += 1
        return value

    def __call__(self, lengths: np.ndarray) -> float:
        return -self.evaluate(lengths)


def run_blackbox_vqaa(
    backend: SimulationBackend,
    L: int,
    total_time: float,
    optimizer: OptimizerKind = OptimizerKind.NELDER_MEAD,
    eval_budget: int = 300,
    init: InitKind = InitKind.NAIVE,
    warm_start: Optional[Sequence[float]] = None,
    meter: Optional[OverlapMeter] = None,
    simplex_scale: float = 0.1,
    resume: Optional[OptimizationTrace] = None,
    min_len: float = MIN_CHUNK_LENGTH,
) -> OptimizationTrace:
    """
    Maximize the final overlap over the chunk lengths.

    The naive schedule is always evaluated first and stays the incumbent
    until something beats it. A warm start (explicit lengths or a resumed
    trace's best schedule) is evaluated next and becomes the starting point
    when it is better.
    """
    if eval_budget < L + 1:
        raise InvalidInputError(f"Evaluation budget {eval_budget} must be at least L + 1 = {L + 1}")
    meter = meter or OverlapMeter(backend)
    trace = resume.model_copy(deep=True) if resume is not None else OptimizationTrace(objective_kind=ObjectiveKind.FINAL_OVERLAP)
    meter.eval_count = max(meter.eval_count, trace.eval_count)
    meter.measurement_count = max(meter.measurement_count, trace.measurement_count)
    start_evals = meter.eval_count
    objective = BlackboxObjective(backend, total_time, meter, trace, min_len)
    logger.info(f"Black-box VQAA ({OptimizerKind(optimizer).value}): L={L}, T={total_time}, budget={eval_budget}")

    x0 = np.full(L, 1.0 / L)
    best_start = objective.evaluate(x0, note="naive")
    candidate = None
    if InitKind(init) == InitKind.WARM_START or resume is not None:
        if warm_start is not None:
            candidate = np.asarray(warm_start, dtype=float)
        elif resume is not None and resume.best is not None:
            candidate = np.asarray(resume.best.chunk_lengths, dtype=float)
    if candidate is not None:
        if candidate.size != L:
            raise InvalidInputError(f"Warm start has {candidate.size} lengths, expected {L}")
        value = objective.evaluate(candidate, note="warm_start")
        if value > best_start:
            x0, best_start = project_to_simplex(candidate, min_len), value

    remaining = eval_budget - (meter.eval_count - start_evals)
    if remaining > 0:
        cfg = OptimizerConfig(max_evals=remaining, simplex_scale=simplex_scale, min_len=min_len)
        _, search = minimize_on_simplex(optimizer, objective, x0, cfg)
        for flag in search.flags:
            if flag not in trace.flags:
                trace.flags.append(flag)

    trace.verified_fidelity = schedule_fidelity(backend, trace.best)
    logger.info(f"Black-box VQAA done: best {trace.best_objective:.5f}, verified {trace.verified_fidelity:.5f}")
    return trace


# ============================================================================
# Target-profile following with flexible chunk times
# ============================================================================

def theta_profile(L: int, theta0: float, theta_final: float, kind: RampKind = RampKind.LINEAR) -> List[float]:
    """Intermediate thresholds theta_i at the chunk ends s_i = i / L."""
    if not 0 < theta0 <= theta_final < 1:
        raise InvalidInputError(f"Need 0 < theta0 <= theta < 1, got {theta0}, {theta_final}")
    return [ramp_value(kind, i / L, theta0, theta_final) for i in range(1, L + 1)]


def _certify(meter: OverlapMeter, state, s: float, theta: float, epsilon: float,
             alpha_threshold: float, max_samples: int, prior: BetaPosterior) -> bool:
    """Bell-pair hypothesis test of E^2 against the level certifying ``theta``."""
    h0 = (3.0 + required_e2(theta)) / 4.0
    eps = min(epsilon, 0.5 * (1.0 - h0))
    pool = meter.alpha_abs2_pool(state, s)
    result = sequential_test(bell_outcomes(pool, meter.rng), h0, eps, alpha_threshold, max_samples, prior)
    meter.add_measurements(result.samples_used)
    logger.debug(f"Certification at s={s:.3f}: {result.decision.value} after {result.samples_used} samples")
    return result.decision == Decision.ACCEPT


def run_profile_vqaa(
    backend: SimulationBackend,
    L: int,
    theta0: float,
    theta_final: float,
    tcap: float = 20.0,
    theta_ramp: RampKind = RampKind.LINEAR,
    time_tol: float = 0.1,
    max_evals_per_chunk: int = 20,
    meter: Optional[OverlapMeter] = None,
    certify: bool = False,
    epsilon: float = 0.01,
    alpha_threshold: float = 0.05,
    max_samples: int = 2000,
    prior: BetaPosterior = DEFAULT_PRIOR,
) -> OptimizationTrace:
    """
    Choose each chunk time T_i so the state at s_i clears theta_i.

    Chunks are searched in order by bisection on (0, tcap]. A chunk whose
    threshold is out of reach at ``tcap`` is pinned at the cap and flagged.
    With ``certify`` the decision at each probe is a Beta-Bernoulli test on
    simulated Bell outcomes instead of the estimated overlap.

    Returns:
        OptimizationTrace: Entries per probe (iteration = chunk index); best
        is the assembled schedule
    """
    if tcap <= 0:
        raise InvalidInputError(f"Time cap must be positive, got {tcap}")
    meter = meter or OverlapMeter(backend)
    thetas = theta_profile(L, theta0, theta_final, theta_ramp)
    template = backend.naive(L, L * tcap)
    ends = schedule_endpoints(template)
    starts = [0.0] + ends[:-1]
    trace = OptimizationTrace(objective_kind=ObjectiveKind.PROFILE_FOLLOW)
    times = [tcap] * L
    state = backend.initial_state()
    logger.info(f"Profile VQAA: L={L}, theta {theta0} -> {theta_final}, cap {tcap}")

    for i in range(L):
        evals_before = meter.eval_count

        def probe(t: float):
            candidate = backend.evolve_chunk(state, starts[i], ends[i], t, template)
            value = meter.measure(candidate, ends[i]).value
            cleared = value >= thetas[i]
            if certify:
                cleared = _certify(meter, candidate, ends[i], thetas[i], epsilon,
                                   alpha_threshold, max_samples, prior)
            probe_times = list(times)
            probe_times[i] = t
            sched = template.model_copy(update={"chunk_times": probe_times})
            trace.append(_entry(i, meter, value, sched, note=f"theta={thetas[i]:.4f}"))
            return candidate, value, cleared

        hi_state, hi_value, cleared = probe(tcap)
        hi = tcap
        if not cleared:
            logger.warning(f"Chunk {i}: theta {thetas[i]:.4f} unreachable within T_cap={tcap} (got {hi_value:.4f})")
            trace.flags.append(f"unreachable_theta@chunk={i}")
        else:
            lo = 0.0
            while hi - lo > time_tol and meter.eval_count - evals_before < max_evals_per_chunk:
                mid = 0.5 * (lo + hi)
                mid_state, mid_value, mid_cleared = probe(mid)
                if mid_cleared:
                    hi, hi_state, hi_value = mid, mid_state, mid_value
                else:
                    lo = mid
        times[i] = hi
        state = hi_state
        logger.info(f"Chunk {i}: T={hi:.3f}, overlap {hi_value:.4f} after {meter.eval_count - evals_before} estimates")

    final = template.model_copy(update={"chunk_times": times})
    trace.best = Schedule(**final.model_dump())
    trace.best_objective = hi_value
    trace.verified_fidelity = backend.fidelity(state)
    return trace
