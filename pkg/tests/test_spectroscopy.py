"""
Tests for required-time search, gap localization and the Landau-Zener model.
"""

import math

import numpy as np
import pytest

from backends import DenseBackend
from enums import SpectroscopyMethod
from hamiltonian import gap_profile
from schemas import ModelParams, SpectroscopyCurve, TimeSearch
from spectroscopy import (
    _multi_crossing,
    detect_gap,
    gap_depth,
    gap_position,
    gap_profile_estimate,
    lz_required_rate,
    lz_simulated_rate,
    lz_slope,
    lz_time_profile,
    lz_transition_probability,
    probe_overlap,
    probe_schedule,
    required_time,
    run_spectroscopy,
    simulate_lz_sweep,
)
from utils.error_handler import InvalidInputError


FINE_GRID = np.linspace(0.0, 1.0, 201)


def _sigmoid_curve(center: float, width: float = 0.05) -> SpectroscopyCurve:
    grid = list(np.linspace(0.04, 1.0, 25))
    times = [1.0 + 10.0 / (1.0 + math.exp(-(s - center) / width)) for s in grid]
    return SpectroscopyCurve(grid=grid, times=times, target_overlap=0.7,
                             method=SpectroscopyMethod.ANCILLA)


# ============================================================================
# Probe schedules
# ============================================================================

def test_probe_schedule_stops_at_the_target(dense4):
    sched, stop = probe_schedule(dense4, 0.5, 2.0)
    assert stop == 0
    assert sched.chunk_lengths == pytest.approx([0.5, 0.5])
    assert sched.chunk_times[0] == pytest.approx(2.0)

    full, stop = probe_schedule(dense4, 1.0, 3.0)
    assert stop == 0 and full.num_chunks == 1


def test_probe_schedule_slows_down_around_a_gap(dense4):
    sched, stop = probe_schedule(dense4, 0.5, 2.0, slow_window=(0.3, 0.05, 4.0))
    assert stop == 2
    assert sched.chunk_lengths[:3] == pytest.approx([0.25, 0.1, 0.15])
    assert sum(sched.chunk_times[:3]) == pytest.approx(2.0)
    rates = [t / l for t, l in zip(sched.chunk_times[:3], sched.chunk_lengths[:3])]
    assert rates[1] == pytest.approx(4.0 * rates[0])


def test_probe_schedule_rejects_bad_target(dense4):
    with pytest.raises(InvalidInputError):
        probe_schedule(dense4, 0.0, 1.0)


def test_probe_overlaps_are_probabilities(dense4):
    for method in SpectroscopyMethod:
        value = probe_overlap(dense4, 0.6, 3.0, method=method, backward_time=10.0)
        assert 0.0 <= value <= 1.0 + 1e-12


# ============================================================================
# Required time
# ============================================================================

def test_required_time_reaches_the_target(dense4):
    search = TimeSearch(t_hi=4.0, overlap_tol=0.005, time_tol=0.05)
    result = required_time(dense4, 0.8, 0.9, search=search)
    assert result.converged
    assert result.overlap >= 0.9 - 0.005


def test_near_start_positions_need_no_time(dense4):
    result = required_time(dense4, 0.02, 0.7)
    assert result.converged
    assert result.iters == 1
    assert result.time == pytest.approx(dense4.dt)


def test_unreachable_target_is_flagged(dense4):
    search = TimeSearch(t_hi=0.2, max_doublings=0)
    result = required_time(dense4, 1.0, 0.999, search=search)
    assert not result.converged
    assert result.overlap < 0.999

    curve = run_spectroscopy(dense4, [0.25, 0.5, 0.75, 1.0], 0.999, search=search)
    assert any(flag.startswith("unreachable_target@s=") for flag in curve.flags)


def test_required_time_rejects_bad_target(dense4):
    with pytest.raises(InvalidInputError):
        required_time(dense4, 0.5, 1.0)


def test_multi_crossing_detection():
    assert _multi_crossing([(1.0, 0.9), (2.0, 0.5)], 0.8)
    assert not _multi_crossing([(1.0, 0.5), (2.0, 0.9), (3.0, 0.95)], 0.8)


# ============================================================================
# Curves and gap localization
# ============================================================================

def test_detect_gap_finds_the_steep_rise():
    grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
    times = [1.0, 1.1, 1.2, 1.3, 3.0, 3.1]
    assert detect_gap(grid, times) == pytest.approx(0.45)
    assert detect_gap(grid, [1.0, 1.1, 1.2, 1.3, 1.4, 1.5]) is None
    assert detect_gap(grid[:2], times[:2]) is None


def test_gap_position_follows_the_steepest_rise():
    assert gap_position(_sigmoid_curve(0.6)) == pytest.approx(0.6, abs=0.02)
    assert gap_position(_sigmoid_curve(0.35)) == pytest.approx(0.35, abs=0.02)


def test_gap_profile_estimate_is_clipped():
    profile = gap_profile_estimate(_sigmoid_curve(0.5))
    assert len(profile) == 25
    assert all(v <= 0.0 for _, v in profile)
    assert gap_depth(_sigmoid_curve(0.5, width=0.03)) < gap_depth(_sigmoid_curve(0.5, width=0.1))


def test_gap_profile_estimate_needs_four_points():
    curve = SpectroscopyCurve(grid=[0.5, 1.0], times=[1.0, 2.0], target_overlap=0.7,
                              method=SpectroscopyMethod.ANCILLA)
    with pytest.raises(InvalidInputError):
        gap_profile_estimate(curve)


def test_run_spectroscopy_on_a_small_chain(dense4):
    search = TimeSearch(t_hi=4.0, time_tol=0.1)
    curve = run_spectroscopy(dense4, [0.25, 0.5, 0.75, 1.0], 0.8, search=search)
    assert len(curve.times) == 4
    assert len(curve.spline_derivative) == 4
    assert curve.gap_position is not None
    assert all(o >= 0.8 - search.overlap_tol for o in curve.overlaps)


def test_reused_gap_information_matches_point_count(dense4):
    search = TimeSearch(t_hi=4.0, time_tol=0.1)
    curve = run_spectroscopy(dense4, [0.2, 0.4, 0.6, 0.8, 1.0], 0.8,
                             reuse_gap_info=True, search=search)
    assert len(curve.iters) == 5


def _ten_site_curve(coupling: float):
    params = ModelParams(num_sites=10, coupling_J=coupling, field_h=1.0, field_g=1.0)
    grid = np.linspace(0.0, 1.0, 26)[1:]
    curve = run_spectroscopy(DenseBackend(params), grid, 0.7, search=TimeSearch(t_hi=8.0))
    gaps = gap_profile(params, FINE_GRID)
    return curve, grid, gaps


@pytest.mark.slow
def test_gap_localization_on_ten_sites():
    curve, grid, gaps = _ten_site_curve(3.0)
    exact = FINE_GRID[int(np.argmin(gaps))]
    assert curve.gap_position == pytest.approx(exact, abs=0.05)
    early = curve.times[int(np.argmin(np.abs(grid - 0.2)))]
    late = curve.times[int(np.argmin(np.abs(grid - 0.5)))]
    assert early < late


@pytest.mark.slow
def test_gap_depth_ranking_follows_the_minimum_gap():
    couplings = [2.0, 3.0, 5.0]
    depths, min_gaps = [], []
    for coupling in couplings:
        curve, _, gaps = _ten_site_curve(coupling)
        depths.append(gap_depth(curve))
        min_gaps.append(min(gaps))
    # smaller gap, steeper rise, more negative depth
    assert list(np.argsort(depths)) == list(np.argsort(min_gaps))


# ============================================================================
# Landau-Zener
# ============================================================================

def test_lz_formula_matches_the_integrated_sweep():
    delta, g = 0.05, 1.0
    predicted = lz_transition_probability(delta, g, 0.0)
    simulated = simulate_lz_sweep(delta, g, -200.0, 0.0)
    assert simulated == pytest.approx(predicted, rel=0.2)
    assert lz_transition_probability(delta, g, 0.0, t_initial=-200.0) == pytest.approx(predicted, rel=1e-3)


def test_simulated_rate_reaches_the_amplitude():
    g, amplitude = 1.0, 0.01
    rate = lz_simulated_rate(g, amplitude, 0.0)
    assert rate == pytest.approx(lz_required_rate(g, amplitude, 1.0), rel=0.1)
    population = simulate_lz_sweep(rate, g, -10.0 / rate, 0.0)
    assert math.sqrt(population) == pytest.approx(amplitude, rel=1e-6)


@pytest.mark.slow
def test_lz_slope_from_integrated_sweeps_is_minus_two():
    lambdas = np.linspace(0.0, 2.0, 6)
    gaps, t_dot = lz_time_profile(1.0, 0.01, lambdas)
    assert np.all(t_dot < 0.0)
    assert t_dot == pytest.approx(-12.0 / gaps ** 2, rel=0.15)
    assert lz_slope(1.0, 0.01, lambdas) == pytest.approx(-2.0, abs=0.3)


def test_lz_time_profile_rejects_bad_grids():
    with pytest.raises(InvalidInputError):
        lz_time_profile(1.0, 0.01, [0.0, 1.0, 2.0])
    with pytest.raises(InvalidInputError):
        lz_time_profile(1.0, 0.01, [1.0, 0.5, 2.0, 3.0])
    with pytest.raises(InvalidInputError):
        lz_simulated_rate(1.0, 0.0, 0.5)


def test_lz_rate_reaches_the_requested_amplitude():
    rate = lz_required_rate(1.0, 0.02, 1.0)
    assert math.sqrt(lz_transition_probability(rate, 1.0, 0.0)) == pytest.approx(0.02)
    with pytest.raises(InvalidInputError):
        lz_transition_probability(0.1, 0.0, 0.0)
