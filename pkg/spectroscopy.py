"""
Adiabatic spectroscopy.

For each path position s, find the evolution time T(s) needed to reach a
target overlap, then differentiate the spline through T(s) to localize
gap minima. Also holds the Landau-Zener toy model that relates the
steepness of T(s) to the gap.
"""

import logging
import math
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from backends import SimulationBackend
from enums import BackwardMode, Direction, SpectroscopyMethod
from evolve import backward_schedule, schedule_endpoints
from schemas import SpectroscopyCurve, Schedule, TimeSearch, TimeSearchResult
from utils.error_handler import ConvergenceError, InvalidInputError
from utils.pool import map_jobs

logger = logging.getLogger("vqaa.spectroscopy")

# Slow-down around a detected gap
SLOW_HALF_WIDTH = 0.05
SLOW_FACTOR = 4.0
# Steep-rise detection: slope above this multiple of the median earlier slope
RISE_FACTOR = 3.0
MIN_SPLINE_POINTS = 4
# Landau-Zener sweeps start this many gap energies before the stopping coupling
LZ_SPAN_FACTOR = 10.0
LZ_MAX_BRACKET_STEPS = 6


# ============================================================================
# Probe schedules
# ============================================================================

def probe_schedule(
    backend: SimulationBackend,
    s_target: float,
    total_time: float,
    slow_window: Optional[Tuple[float, float, float]] = None,
) -> Tuple[Schedule, int]:
    """
    Schedule that reaches ``s_target`` in ``total_time``.

    Returns the schedule and the index of the chunk ending at s_target.
    ``slow_window`` = (s_star, half_width, factor) spends ``factor`` times
    more time per unit s inside [s_star - half_width, s_star + half_width].
    """
    if not 0 < s_target <= 1:
        raise InvalidInputError(f"Target position must lie in (0, 1], got {s_target}")

    cuts = [0.0, s_target]
    if slow_window is not None:
        s_star, half, _ = slow_window
        for edge in (s_star - half, s_star + half):
            if 0 < edge < s_target:
                cuts.append(edge)
    cuts = sorted(set(cuts))
    pieces = list(zip(cuts[:-1], cuts[1:]))

    weights = []
    for a, b in pieces:
        weight = b - a
        if slow_window is not None and abs(0.5 * (a + b) - slow_window[0]) < slow_window[1]:
            weight *= slow_window[2]
        weights.append(weight)
    times = [total_time * w / sum(weights) for w in weights]
    lengths = [b - a for a, b in pieces]
    stop_chunk = len(pieces) - 1

    if s_target < 1:
        lengths.append(1.0 - s_target)
        times.append(total_time)
    lengths[-1] = 1.0 - sum(lengths[:-1])

    template = backend.template()
    sched = template.model_copy(update={"chunk_lengths": lengths, "chunk_times": times})
    return Schedule(**sched.model_dump()), stop_chunk


def probe_overlap(
    backend: SimulationBackend,
    s_target: float,
    total_time: float,
    method: SpectroscopyMethod = SpectroscopyMethod.ANCILLA,
    backward_mode: BackwardMode = BackwardMode.CONSTANT,
    backward_factor: float = 4.0,
    backward_time: float = 20.0,
    slow_window: Optional[Tuple[float, float, float]] = None,
) -> float:
    """
    Overlap reached after evolving to ``s_target`` in ``total_time``.

    Ancilla method: |<GS(s_target)|psi>|. Forward-backward method: evolve
    back to s = 0 and overlap with the product state.
    """
    sched, stop = probe_schedule(backend, s_target, total_time, slow_window)
    psi0 = backend.initial_state()
    state = backend.evolve(psi0, sched, stop_chunk=stop)
    if SpectroscopyMethod(method) == SpectroscopyMethod.ANCILLA:
        return backend.ground_overlap(state, s_target)

    constant = max(backward_factor * total_time, backward_time)
    back = backward_schedule(sched, backward_mode, backward_factor, constant, stop_chunk=stop)
    state = backend.evolve(state, back, direction=Direction.BACKWARD, stop_chunk=stop)
    return float(abs(backend.overlap(psi0, state)))


# ============================================================================
# Required-time search
# ============================================================================

def required_time(
    backend: SimulationBackend,
    s_target: float,
    o_target: float,
    method: SpectroscopyMethod = SpectroscopyMethod.ANCILLA,
    search: Optional[TimeSearch] = None,
    backward_mode: BackwardMode = BackwardMode.CONSTANT,
    backward_factor: float = 4.0,
    backward_time: float = 20.0,
    slow_window: Optional[Tuple[float, float, float]] = None,
) -> TimeSearchResult:
    """
    Bisection on T for the first crossing of ``o_target`` from below.

    The upper bracket doubles until the overlap clears the target; after
    ``max_doublings`` the best achieved overlap is returned unconverged.

    Args:
        backend: Simulation backend
        s_target: Path position in (0, 1]
        o_target: Target overlap in (0, 1)
        method: Ancilla (instantaneous ground state) or forward-backward
        search: Bracket and tolerance settings
        backward_mode: Backward-time rule for forward-backward
        backward_factor: Multiplier for the backward time
        backward_time: Floor of the constant backward time
        slow_window: Optional slow-down around a detected gap

    Returns:
        TimeSearchResult: Time, achieved overlap, evaluations and flags
    """
    if not 0 < o_target < 1:
        raise InvalidInputError(f"Target overlap must lie in (0, 1), got {o_target}")
    search = search or TimeSearch()
    evaluate = partial(probe_overlap, backend, s_target, method=method,
                       backward_mode=backward_mode, backward_factor=backward_factor,
                       backward_time=backward_time, slow_window=slow_window)
    seen: List[Tuple[float, float]] = []

    def f(t: float) -> float:
        value = evaluate(t)
        seen.append((t, value))
        return value

    def result(t: float, value: float, converged: bool) -> TimeSearchResult:
        return TimeSearchResult(time=t, overlap=value, iters=len(seen),
                                converged=converged, multi_crossing=_multi_crossing(seen, o_target))

    t_lo = search.t_lo or backend.dt
    f_lo = f(t_lo)
    if f_lo >= o_target:
        return result(t_lo, f_lo, True)

    t_hi = max(search.t_hi, 2 * t_lo)
    f_hi = f(t_hi)
    doublings = 0
    while f_hi < o_target:
        if doublings >= search.max_doublings:
            best_t, best_value = max(seen, key=lambda tv: tv[1])
            logger.warning(
                f"Target overlap {o_target} unreachable at s={s_target:.4f} "
                f"(best {best_value:.4f} at T={best_t:.3g})"
            )
            return result(best_t, best_value, False)
        t_lo, f_lo = t_hi, f_hi
        t_hi *= 2
        f_hi = f(t_hi)
        doublings += 1
        logger.debug(f"Expanded bracket to T={t_hi:.3g} at s={s_target:.4f}")

    for _ in range(search.max_iter):
        if t_hi - t_lo <= search.time_tol:
            break
        t_mid = 0.5 * (t_lo + t_hi)
        f_mid = f(t_mid)
        if abs(f_mid - o_target) <= search.overlap_tol:
            return result(t_mid, f_mid, True)
        if f_mid >= o_target:
            t_hi, f_hi = t_mid, f_mid
        else:
            t_lo, f_lo = t_mid, f_mid
    return result(t_hi, f_hi, True)


def _multi_crossing(seen: Sequence[Tuple[float, float]], o_target: float) -> bool:
    """True when some shorter time clears the target but a longer one does not."""
    ordered = sorted(seen)
    cleared = False
    for _, value in ordered:
        if value >= o_target:
            cleared = True
        elif cleared:
            return True
    return False


# ============================================================================
# Spectroscopy runs
# ============================================================================

def _grid_job(backend: SimulationBackend, o_target: float, kwargs: dict, s: float) -> TimeSearchResult:
    return required_time(backend, s, o_target, **kwargs)


def detect_gap(grid: Sequence[float], times: Sequence[float], factor: float = RISE_FACTOR) -> Optional[float]:
    """Midpoint of the first interval whose slope exceeds ``factor`` x the median earlier slope."""
    if len(grid) < 3:
        return None
    slopes = np.diff(times) / np.diff(grid)
    for k in range(2, len(slopes)):
        reference = float(np.median(slopes[:k]))
        if reference > 0 and slopes[k] > factor * reference:
            return 0.5 * (grid[k] + grid[k + 1])
    return None


def run_spectroscopy(
    backend: SimulationBackend,
    grid: Sequence[float],
    o_target: float,
    method: SpectroscopyMethod = SpectroscopyMethod.ANCILLA,
    reuse_gap_info: bool = False,
    search: Optional[TimeSearch] = None,
    backward_mode: BackwardMode = BackwardMode.CONSTANT,
    backward_factor: float = 4.0,
    backward_time: float = 20.0,
    workers: Optional[int] = None,
) -> SpectroscopyCurve:
    """
    Required time for every grid point.

    Points are independent jobs. With ``reuse_gap_info`` they run in order
    and, once a steep rise is detected at s*, later points use a schedule
    slowed around s*.
    """
    grid = [float(s) for s in grid]
    kwargs = dict(method=method, search=search, backward_mode=backward_mode,
                  backward_factor=backward_factor, backward_time=backward_time)
    logger.info(f"Spectroscopy on {len(grid)} points, target {o_target}, method {SpectroscopyMethod(method).value}")

    if not reuse_gap_info:
        results = map_jobs(partial(_grid_job, backend, o_target, kwargs), grid, workers)
    else:
        results, s_star = [], None
        for s in grid:
            window = (s_star, SLOW_HALF_WIDTH, SLOW_FACTOR) if s_star is not None else None
            results.append(required_time(backend, s, o_target, slow_window=window, **kwargs))
            if s_star is None:
                s_star = detect_gap(grid[: len(results)], [r.time for r in results])
                if s_star is not None:
                    logger.info(f"Gap detected near s*={s_star:.3f}, slowing later probes")

    flags = []
    for s, r in zip(grid, results):
        if not r.converged:
            flags.append(f"unreachable_target@s={s:.4f}")
        if r.multi_crossing:
            flags.append(f"multi_crossing@s={s:.4f}")

    curve = SpectroscopyCurve(
        grid=grid,
        times=[r.time for r in results],
        target_overlap=o_target,
        method=method,
        overlaps=[r.overlap for r in results],
        iters=[r.iters for r in results],
        flags=flags,
    )
    if len(grid) >= MIN_SPLINE_POINTS:
        spline = CubicSpline(grid, curve.times, bc_type="natural")
        curve.spline_derivative = [float(v) for v in spline(grid, 1)]
        curve.gap_position = gap_position(curve)
    return curve


def gap_profile_estimate(curve: SpectroscopyCurve) -> List[Tuple[float, float]]:
    """(s, -dT/ds) at the grid points, clipped to <= 0."""
    if len(curve.grid) < MIN_SPLINE_POINTS:
        raise InvalidInputError(f"Need at least {MIN_SPLINE_POINTS} grid points, got {len(curve.grid)}")
    spline = CubicSpline(curve.grid, curve.times, bc_type="natural")
    derivative = spline(curve.grid, 1)
    return [(float(s), float(min(-d, 0.0))) for s, d in zip(curve.grid, derivative)]


def gap_position(curve: SpectroscopyCurve, resolution: int = 1000) -> float:
    """Argmin of the clipped -dT/ds on a fine grid."""
    if len(curve.grid) < MIN_SPLINE_POINTS:
        raise InvalidInputError(f"Need at least {MIN_SPLINE_POINTS} grid points, got {len(curve.grid)}")
    spline = CubicSpline(curve.grid, curve.times, bc_type="natural")
    fine = np.linspace(curve.grid[0], curve.grid[-1], resolution)
    values = np.minimum(-spline(fine, 1), 0.0)
    return float(fine[int(np.argmin(values))])


def gap_depth(curve: SpectroscopyCurve) -> float:
    """Most negative clipped -dT/ds (steeper rise means a smaller gap)."""
    return min(v for _, v in gap_profile_estimate(curve))


# ============================================================================
# Landau-Zener model
# ============================================================================

def _lz_energy(delta_rate: float, g: float, t: float) -> float:
    return math.sqrt((delta_rate * t) ** 2 + g ** 2)


def lz_transition_probability(delta_rate: float, g: float, t: float, t_initial: Optional[float] = None) -> float:
    """
    Perturbative excited population of H = delta t sigma_z + g sigma_x.

    Without ``t_initial`` the sweep starts at t = -infinity.
    """
    if g == 0:
        raise InvalidInputError("Landau-Zener coupling g must be nonzero")
    energy = _lz_energy(delta_rate, g, t)
    if t_initial is None:
        return delta_rate ** 2 * g ** 2 / (16.0 * energy ** 6)
    energy_i = _lz_energy(delta_rate, g, t_initial)
    return delta_rate ** 2 / (16.0 * g ** 4) * (g ** 6 / energy_i ** 6 + g ** 6 / energy ** 6)


def _lz_hamiltonian(delta_rate: float, g: float, t: float) -> np.ndarray:
    lam = delta_rate * t
    return np.array([[lam, g], [g, -lam]], dtype=complex)


def simulate_lz_sweep(delta_rate: float, g: float, t_initial: float, t_final: float) -> float:
    """Integrate the two-level sweep from the instantaneous ground state; excited population at t_final."""
    if g == 0:
        raise InvalidInputError("Landau-Zener coupling g must be nonzero")
    _, vectors = np.linalg.eigh(_lz_hamiltonian(delta_rate, g, t_initial))
    psi0 = vectors[:, 0]

    def rhs(t, psi):
        return -1j * (_lz_hamiltonian(delta_rate, g, t) @ psi)

    solution = solve_ivp(rhs, (t_initial, t_final), psi0, method="DOP853", rtol=1e-10, atol=1e-12)
    if not solution.success:
        raise InvalidInputError(f"Landau-Zener integration failed: {solution.message}")
    psi = solution.y[:, -1]
    _, vectors = np.linalg.eigh(_lz_hamiltonian(delta_rate, g, t_final))
    return float(abs(np.vdot(vectors[:, 1], psi)) ** 2)


def lz_required_rate(g: float, amplitude: float, energy: float) -> float:
    """Sweep rate delta giving excited amplitude ``amplitude`` at gap energy E: 4 A E^3 / g."""
    if g == 0 or amplitude <= 0:
        raise InvalidInputError("Need nonzero g and positive amplitude")
    return 4.0 * amplitude * energy ** 3 / g


def lz_time_derivative(delta_rate: float, g: float, t: float, amplitude: float) -> float:
    """dT/dt ~ -(3/4) g delta / (A E^5) for a fixed target amplitude A."""
    if g == 0 or amplitude <= 0:
        raise InvalidInputError("Need nonzero g and positive amplitude")
    energy = _lz_energy(delta_rate, g, t)
    return -0.75 * g * delta_rate / (amplitude * energy ** 5)


def lz_simulated_rate(g: float, amplitude: float, lam: float, span_factor: float = LZ_SPAN_FACTOR) -> float:
    """
    Sweep rate whose integrated sweep, stopped at coupling ``lam``, leaves
    excited amplitude ``amplitude``.

    The sweep starts at ``lam - span_factor * max(E, g)`` in the instantaneous
    ground state. The rate is bracketed around the perturbative guess and
    refined with brentq on ``simulate_lz_sweep``.
    """
    if g == 0 or amplitude <= 0:
        raise InvalidInputError("Need nonzero g and positive amplitude")
    energy = math.sqrt(lam ** 2 + g ** 2)
    lam_initial = lam - span_factor * max(energy, abs(g))
    target = amplitude ** 2

    def excess(rate: float) -> float:
        return simulate_lz_sweep(rate, g, lam_initial / rate, lam / rate) - target

    guess = lz_required_rate(g, amplitude, energy)
    lo, hi = 0.5 * guess, 2.0 * guess
    for _ in range(LZ_MAX_BRACKET_STEPS):
        if excess(lo) < 0.0 < excess(hi):
            break
        lo, hi = 0.5 * lo, 2.0 * hi
    else:
        raise ConvergenceError(f"No sweep rate brackets amplitude {amplitude} at lambda={lam}",
                               last_delta=hi - lo, last_value=guess)
    rate = brentq(excess, lo, hi, rtol=1e-10)
    logger.debug(f"LZ lambda={lam:.4f}: simulated rate {rate:.6g}, perturbative {guess:.6g}")
    return float(rate)


def lz_time_profile(g: float, amplitude: float, lambdas: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gap 2E and the time-rate dT/dt along the sweep, from simulated rates.

    With T = 1/rate and dE/dt taken as rate/E, dT/dt = 2 rate dT/d(E^2).
    The derivative comes from a spline of log T against log E^2.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size < MIN_SPLINE_POINTS:
        raise InvalidInputError(f"Need at least {MIN_SPLINE_POINTS} couplings, got {lambdas.size}")
    if np.any(lambdas < 0) or np.any(np.diff(lambdas) <= 0):
        raise InvalidInputError("Couplings must be non-negative and strictly increasing")
    rates = np.array([lz_simulated_rate(g, amplitude, lam) for lam in lambdas])
    energy_sq = lambdas ** 2 + g ** 2
    log_spline = CubicSpline(np.log(energy_sq), -np.log(rates))
    # rate * T = 1, so 2 rate dT/d(E^2) = 2 (d log T / d log E^2) / E^2
    t_dot = 2.0 * log_spline(np.log(energy_sq), 1) / energy_sq
    return 2.0 * np.sqrt(energy_sq), t_dot


def lz_slope(g: float, amplitude: float, lambdas: Sequence[float]) -> float:
    """Fitted slope of log|dT/dt| against log(2E) on integrated sweeps."""
    gaps, t_dot = lz_time_profile(g, amplitude, lambdas)
    slope, _ = np.polyfit(np.log(gaps), np.log(np.abs(t_dot)), 1)
    logger.info(f"LZ slope {slope:.3f} over {len(gaps)} couplings (g={g}, A={amplitude})")
    return float(slope)
