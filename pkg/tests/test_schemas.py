"""
Tests for the pydantic models.
"""

import pytest
from pydantic import ValidationError

from enums import Backend, ObjectiveKind, OptimizerKind, OverlapKind
from schemas import (
    GapRunConfig,
    ModelParams,
    NoiseRunConfig,
    OptimizationTrace,
    OverlapEstimate,
    RunManifest,
    Schedule,
    SpectroscopyCurve,
    TraceEntry,
    VqaaRunConfig,
)


def _entry(eval_count: int, objective: float) -> TraceEntry:
    return TraceEntry(iteration=eval_count, eval_count=eval_count, objective=objective,
                      lengths=[1.0], times=[1.0])


# ============================================================================
# Model and schedule
# ============================================================================

def test_model_params_are_frozen_and_open():
    params = ModelParams(num_sites=4)
    with pytest.raises(ValidationError):
        params.num_sites = 5
    with pytest.raises(ValidationError):
        ModelParams(num_sites=4, boundary="periodic")
    with pytest.raises(ValidationError):
        ModelParams(num_sites=1)


def test_schedule_lengths_must_sum_to_one():
    Schedule(chunk_lengths=[0.25, 0.75], chunk_times=[1.0, 1.0])
    with pytest.raises(ValidationError):
        Schedule(chunk_lengths=[0.25, 0.7], chunk_times=[1.0, 1.0])
    with pytest.raises(ValidationError):
        Schedule(chunk_lengths=[1.2, -0.2], chunk_times=[1.0, 1.0])


def test_schedule_times_and_shape():
    with pytest.raises(ValidationError):
        Schedule(chunk_lengths=[0.5, 0.5], chunk_times=[1.0, 0.0])
    with pytest.raises(ValidationError):
        Schedule(chunk_lengths=[0.5, 0.5], chunk_times=[1.0])


def test_schedule_json_form():
    sched = Schedule(chunk_lengths=[0.4, 0.6], chunk_times=[2.0, 3.0], trotter_substeps=3)
    data = sched.to_json_dict()
    assert data["chunks"] == [{"s_len": 0.4, "t": 2.0}, {"s_len": 0.6, "t": 3.0}]
    assert data["K"] == 3 and data["ramp"] == "linear"
    assert Schedule.from_json_dict(data) == sched
    assert sched.total_time == 5.0


# ============================================================================
# Estimates and curves
# ============================================================================

def test_overlap_estimate_statistics():
    OverlapEstimate(value=1.02, kind=OverlapKind.BELL_PAIR, samples=100, std_err=0.01)
    with pytest.raises(ValidationError):
        OverlapEstimate(value=1.1, kind=OverlapKind.BELL_PAIR, samples=100, std_err=0.01)
    with pytest.raises(ValidationError):
        OverlapEstimate(value=0.5, kind=OverlapKind.DIRECT_ORACLE, std_err=0.01)


def test_spectroscopy_grid_must_increase():
    with pytest.raises(ValidationError):
        SpectroscopyCurve(grid=[0.5, 0.5], times=[1.0, 1.0], target_overlap=0.7, method="ancilla")
    with pytest.raises(ValidationError):
        SpectroscopyCurve(grid=[0.0, 0.5], times=[1.0, 1.0], target_overlap=0.7, method="ancilla")


# ============================================================================
# Traces
# ============================================================================

def test_trace_requires_increasing_eval_counts():
    trace = OptimizationTrace(objective_kind=ObjectiveKind.FINAL_OVERLAP)
    trace.append(_entry(1, 0.5))
    with pytest.raises(ValueError):
        trace.append(_entry(1, 0.6))


def test_trace_keeps_the_incumbent():
    trace = OptimizationTrace(objective_kind=ObjectiveKind.FINAL_OVERLAP)
    sched = Schedule(chunk_lengths=[1.0], chunk_times=[1.0])
    assert trace.record(_entry(1, 0.5), sched)
    assert not trace.record(_entry(2, 0.4), sched)
    assert trace.record(_entry(3, 0.7), sched)
    assert trace.best_so_far() == [0.5, 0.5, 0.7]
    assert trace.best_objective == 0.7
    assert trace.eval_count == 3


# ============================================================================
# Run configs
# ============================================================================

def test_run_configs_forbid_unknown_keys():
    with pytest.raises(ValidationError):
        NoiseRunConfig(n=4, colour="red")


def test_gap_config_parses_coupling_lists():
    assert GapRunConfig(n=4, J="1, 2.5,3").J == [1.0, 2.5, 3.0]
    assert GapRunConfig(n=4, J=2).J == [2.0]


def test_backend_defaults_by_size():
    assert NoiseRunConfig(n=8).resolved_backend() == Backend.DENSE_ORACLE
    assert NoiseRunConfig(n=40).resolved_backend() == Backend.MPS
    assert NoiseRunConfig(n=8, backend="mps").resolved_backend() == Backend.MPS


def test_vqaa_config_validation():
    assert VqaaRunConfig(n=4, optimizer="l-bfgs-b").optimizer == OptimizerKind.QUASI_NEWTON
    assert VqaaRunConfig(n=4, warm_start="0.2,0.8", L=2).warm_start == [0.2, 0.8]
    with pytest.raises(ValidationError):
        VqaaRunConfig(n=4, algo="ratio", L=1)
    with pytest.raises(ValidationError):
        VqaaRunConfig(n=4, algo="blackbox", L=5, budget=5)
    with pytest.raises(ValidationError):
        VqaaRunConfig(n=4, algo="profile", theta0=0.9, theta=0.8)
    with pytest.raises(ValidationError):
        VqaaRunConfig(n=4, algo="annealing")
    with pytest.raises(ValidationError):
        VqaaRunConfig(n=4, optimizer="bfgs")


def test_noise_config_observable():
    assert NoiseRunConfig(n=4, p=0.01, trajectories=7).noise().n_trajectories == 7
    with pytest.raises(ValidationError):
        NoiseRunConfig(n=4, observable="purity")
    with pytest.raises(ValidationError):
        NoiseRunConfig(n=4, flip_pauli="w")


def test_manifest_outputs_are_unique():
    base = dict(command="gap", config={}, seed=1, version="0.1.0", backend=Backend.DENSE_ORACLE)
    RunManifest(outputs={"gap": "gap.csv", "verify": "verify.csv"}, **base)
    with pytest.raises(ValidationError):
        RunManifest(outputs={"gap": "gap.csv", "other": "gap.csv"}, **base)
