"""Pydantic schemas for model parameters, schedules, estimates and run configs.

This module defines every model that is configured from a run file or
serialized into a run directory: the ZZXZ model parameters, chunked
schedules, overlap estimates, Beta posteriors, noise settings, spectroscopy
curves, optimization traces, run manifests and the per-command configs.
"""

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.settings import settings
from enums import (
    Backend,
    BackwardMode,
    Decision,
    InitKind,
    ObjectiveKind,
    OptimizerKind,
    OverlapKind,
    Pauli,
    RampKind,
    RatioMode,
    SpectroscopyMethod,
    parse_optimizer,
)

DEFAULT_DT = 1.0 / 16.0
DEFAULT_SUBSTEPS = 2
MIN_CHUNK_LENGTH = 1e-4
SUM_TOLERANCE = 1e-12


# ============================================================================
# Model Schemas
# ============================================================================

class ModelParams(BaseModel):
    """Parameters of the open ZZXZ chain."""
    model_config = ConfigDict(frozen=True)

    num_sites: int = Field(..., ge=2, description="Number of spins N")
    coupling_J: float = Field(1.0, description="ZZ coupling")
    field_h: float = Field(1.0, description="Transverse field")
    field_g: float = Field(0.0, description="Longitudinal field")
    boundary: str = Field("open", description="Boundary conditions")

    @field_validator("boundary")
    @classmethod
    def validate_boundary(cls, v: str) -> str:
        if v != "open":
            raise ValueError("Only open boundary conditions are supported")
        return v


# ============================================================================
# Schedule Schemas
# ============================================================================

class Schedule(BaseModel):
    """L chunks with lengths and evolution times along the adiabatic path."""
    chunk_lengths: List[float] = Field(..., min_length=1, description="Chunk lengths, summing to 1")
    chunk_times: List[float] = Field(..., min_length=1, description="Evolution time per chunk")
    ramp: RampKind = Field(default=RampKind.LINEAR)
    dt: float = Field(default=DEFAULT_DT, gt=0, description="Trotter step")
    trotter_substeps: int = Field(default=DEFAULT_SUBSTEPS, ge=1, description="Trotter repetitions K")

    @field_validator("chunk_lengths")
    @classmethod
    def validate_lengths(cls, v: List[float]) -> List[float]:
        if any(x < 0 for x in v):
            raise ValueError("Chunk lengths must be nonnegative")
        if abs(sum(v) - 1.0) > SUM_TOLERANCE * max(1, len(v)):
            raise ValueError(f"Chunk lengths must sum to 1 (got {sum(v):.15f})")
        return v

    @field_validator("chunk_times")
    @classmethod
    def validate_times(cls, v: List[float]) -> List[float]:
        if any(t <= 0 for t in v):
            raise ValueError("Chunk times must be positive")
        return v

    @model_validator(mode="after")
    def validate_shape(self) -> "Schedule":
        if len(self.chunk_lengths) != len(self.chunk_times):
            raise ValueError("chunk_lengths and chunk_times must have the same length")
        return self

    @property
    def num_chunks(self) -> int:
        return len(self.chunk_lengths)

    @property
    def total_time(self) -> float:
        return float(sum(self.chunk_times))

    def to_json_dict(self) -> Dict[str, Any]:
        """Serialized form: chunk pairs plus ramp, dt and K."""
        return {
            "chunks": [
                {"s_len": s_len, "t": t}
                for s_len, t in zip(self.chunk_lengths, self.chunk_times)
            ],
            "ramp": self.ramp.value,
            "dt": self.dt,
            "K": self.trotter_substeps,
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "Schedule":
        chunks = data["chunks"]
        return cls(
            chunk_lengths=[c["s_len"] for c in chunks],
            chunk_times=[c["t"] for c in chunks],
            ramp=data.get("ramp", RampKind.LINEAR),
            dt=data.get("dt", DEFAULT_DT),
            trotter_substeps=data.get("K", DEFAULT_SUBSTEPS),
        )


# ============================================================================
# Estimate Schemas
# ============================================================================

class OverlapEstimate(BaseModel):
    """An estimated ground-state overlap with its sampling statistics."""
    value: float = Field(..., ge=0)
    kind: OverlapKind
    samples: int = Field(default=0, ge=0, description="Simulated measurements (0 for analytic)")
    std_err: float = Field(default=0.0, ge=0)
    tau_count: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_statistics(self) -> "OverlapEstimate":
        if self.samples == 0 and self.std_err != 0:
            raise ValueError("Analytic estimates carry no standard error")
        if self.value > 1 + 3 * self.std_err + 1e-9:
            raise ValueError(f"Overlap estimate {self.value} exceeds 1 + 3 std_err")
        return self


class BetaPosterior(BaseModel):
    """Beta(a, b) posterior over a Bernoulli success probability."""
    model_config = ConfigDict(frozen=True)

    a: float = Field(..., gt=0)
    b: float = Field(..., gt=0)

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def variance(self) -> float:
        total = self.a + self.b
        return self.a * self.b / (total ** 2 * (total + 1))


class DecisionResult(BaseModel):
    """Outcome of a sequential hypothesis test."""
    decision: Decision
    samples_used: int = Field(..., ge=0)
    posterior: BetaPosterior
    left_error: float
    right_error: float
    alpha_threshold: float
    log: List[Dict[str, Any]] = Field(default_factory=list)


class NoiseConfig(BaseModel):
    """Discrete Pauli trajectory noise settings."""
    p: float = Field(..., ge=0, le=1, description="Per-qubit per-layer noise probability")
    n_trajectories: int = Field(default=100, ge=1)
    shot_m: Optional[int] = Field(default=None, ge=1, description="Measurements per estimate")
    seed: int = Field(default=settings.DEFAULT_SEED)


class NoiseEnsembleResult(BaseModel):
    """Trajectory-averaged observable with per-trajectory records."""
    mean: float
    std_err: float = Field(..., ge=0)
    n: int = Field(..., ge=1)
    values: List[float]
    events: List[List[Tuple[int, int, str]]] = Field(default_factory=list, description="(layer, site, pauli) per trajectory")


# ============================================================================
# Spectroscopy Schemas
# ============================================================================

class TimeSearch(BaseModel):
    """Bracketing and bisection settings for the required-time search."""
    t_lo: Optional[float] = Field(default=None, gt=0, description="Defaults to the Trotter step")
    t_hi: float = Field(default=8.0, gt=0)
    overlap_tol: float = Field(default=0.005, gt=0)
    time_tol: float = Field(default=0.25, gt=0)
    max_doublings: int = Field(default=12, ge=0)
    max_iter: int = Field(default=40, ge=1)


class TimeSearchResult(BaseModel):
    time: float
    overlap: float
    iters: int
    converged: bool
    multi_crossing: bool = False


class SpectroscopyCurve(BaseModel):
    """Required evolution time T(s) on a grid of path positions."""
    grid: List[float]
    times: List[float]
    target_overlap: float = Field(..., gt=0, lt=1)
    method: SpectroscopyMethod
    spline_derivative: List[float] = Field(default_factory=list)
    overlaps: List[float] = Field(default_factory=list)
    iters: List[int] = Field(default_factory=list)
    flags: List[str] = Field(default_factory=list)
    gap_position: Optional[float] = None

    @field_validator("grid")
    @classmethod
    def validate_grid(cls, v: List[float]) -> List[float]:
        if any(s <= 0 or s > 1 for s in v):
            raise ValueError("Grid points must lie in (0, 1]")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("Grid must be strictly increasing")
        return v

    @field_validator("times")
    @classmethod
    def validate_times(cls, v: List[float]) -> List[float]:
        if any(t <= 0 for t in v):
            raise ValueError("Required times must be positive")
        return v


# ============================================================================
# Optimization Trace Schemas
# ============================================================================

class TraceEntry(BaseModel):
    """One objective evaluation (or iteration) of a VQAA run."""
    iteration: int
    eval_count: int
    measurement_count: int = 0
    objective: float
    lengths: List[float]
    times: List[float]
    note: Optional[str] = None


class OptimizationTrace(BaseModel):
    """Append-only record of a VQAA run and its best schedule."""
    objective_kind: ObjectiveKind
    entries: List[TraceEntry] = Field(default_factory=list)
    best: Optional[Schedule] = None
    best_objective: float = float("-inf")
    verified_fidelity: Optional[float] = None
    flags: List[str] = Field(default_factory=list)

    def append(self, entry: TraceEntry):
        if self.entries and entry.eval_count <= self.entries[-1].eval_count:
            raise ValueError("Evaluation counts must be strictly increasing")
        self.entries.append(entry)

    def record(self, entry: TraceEntry, schedule: Schedule) -> bool:
        """Append an entry and promote its schedule if it beats the incumbent."""
        self.append(entry)
        if entry.objective > self.best_objective:
            self.best_objective = entry.objective
            self.best = schedule
            return True
        return False

    @property
    def eval_count(self) -> int:
        return self.entries[-1].eval_count if self.entries else 0

    @property
    def measurement_count(self) -> int:
        return self.entries[-1].measurement_count if self.entries else 0

    def best_so_far(self) -> List[float]:
        """Running maximum of the objective across entries."""
        running, out = float("-inf"), []
        for entry in self.entries:
            running = max(running, entry.objective)
            out.append(running)
        return out


class OptimizerConfig(BaseModel):
    """Shared knobs of the schedule optimizers."""
    max_evals: int = Field(default=300, ge=1, description="Objective evaluation budget")
    simplex_scale: float = Field(default=0.1, gt=0)
    xtol: float = Field(default=1e-4, gt=0)
    ftol: float = Field(default=1e-6, gt=0)
    min_rel_step: float = Field(default=0.01, gt=0, description="Finite-difference step relative to x")
    min_step: float = Field(default=1e-4, gt=0)
    memory: int = Field(default=10, ge=1)
    max_iters: int = Field(default=100, ge=1)
    min_len: float = Field(default=MIN_CHUNK_LENGTH, ge=0)


class EstimatorConfig(BaseModel):
    """How the optimizers read ground-state overlaps."""
    estimator: OverlapKind = Field(default=OverlapKind.DIRECT_ORACLE)
    m: Optional[int] = Field(default=None, ge=1, description="Shots per expectation value (None = noiseless)")
    n_tau: int = Field(default=32, ge=1)
    delta_estimate: float = Field(default=1.0, gt=0, description="Gap estimate used to draw tau")
    k_max: int = Field(default=100, ge=1)


# ============================================================================
# Run Configuration Schemas
# ============================================================================

def _split_floats(v: Any) -> List[float]:
    if isinstance(v, (int, float)):
        return [float(v)]
    if isinstance(v, str):
        parts = [p.strip() for p in v.split(",") if p.strip()]
        if not parts:
            raise ValueError("Expected a comma-separated list of numbers")
        return [float(p) for p in parts]
    return [float(x) for x in v]


class RunConfigBase(BaseModel):
    """Keys shared by every sub-command."""
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    n: int = Field(..., ge=2, description="Number of sites")
    J: float = Field(default=1.0)
    h: float = Field(default=1.0)
    g: float = Field(default=1.0)
    ramp: RampKind = Field(default=RampKind.LINEAR)
    dt: float = Field(default=DEFAULT_DT, gt=0)
    K: int = Field(default=DEFAULT_SUBSTEPS, ge=1)
    chi_max: int = Field(default=settings.CHI_MAX, ge=1)
    svd_cutoff: float = Field(default=settings.SVD_CUTOFF, ge=0)
    backend: Optional[Backend] = Field(default=None, description="Defaults by system size")
    seed: int = Field(default=settings.DEFAULT_SEED)
    workers: int = Field(default=settings.WORKERS, ge=1)

    def model_params(self, coupling: Optional[float] = None) -> ModelParams:
        return ModelParams(
            num_sites=self.n,
            coupling_J=self.J if coupling is None else coupling,
            field_h=self.h,
            field_g=self.g,
        )

    def resolved_backend(self) -> Backend:
        if self.backend is not None:
            return self.backend
        return Backend.DENSE_ORACLE if self.n <= settings.DENSE_MAX_SITES else Backend.MPS


class GapRunConfig(RunConfigBase):
    J: List[float] = Field(default_factory=lambda: [1.0])
    grid: int = Field(default=50, ge=2, description="Number of s points in [0, 1]")
    dmrg: bool = False
    max_bond: int = Field(default=settings.DMRG_MAX_BOND, ge=2)
    sweeps: int = Field(default=settings.DMRG_SWEEPS, ge=1)
    tol: float = Field(default=settings.DMRG_TOL, gt=0)

    @field_validator("J", mode="before")
    @classmethod
    def parse_couplings(cls, v: Any) -> List[float]:
        return _split_floats(v)

    def model_params(self, coupling: Optional[float] = None) -> ModelParams:
        return ModelParams(
            num_sites=self.n,
            coupling_J=self.J[0] if coupling is None else coupling,
            field_h=self.h,
            field_g=self.g,
        )


class SpectroscopyRunConfig(RunConfigBase):
    target: float = Field(default=0.7, gt=0, lt=1, description="Target overlap O_T")
    grid: int = Field(default=25, ge=4)
    method: SpectroscopyMethod = Field(default=SpectroscopyMethod.ANCILLA)
    reuse_gap_info: bool = False
    backward_mode: BackwardMode = Field(default=BackwardMode.CONSTANT)
    backward_factor: float = Field(default=4.0, gt=0)
    backward_time: float = Field(default=20.0, gt=0)
    t_hi: float = Field(default=8.0, gt=0)
    overlap_tol: float = Field(default=0.005, gt=0)
    time_tol: float = Field(default=0.25, gt=0)

    def search(self) -> TimeSearch:
        return TimeSearch(
            t_lo=self.dt, t_hi=self.t_hi,
            overlap_tol=self.overlap_tol, time_tol=self.time_tol,
        )


class VqaaRunConfig(RunConfigBase):
    algo: str = Field(default="blackbox")
    T: float = Field(default=20.0, gt=0, description="Total evolution time")
    L: int = Field(default=3, ge=1, description="Number of chunks")
    # ratio algorithm
    mode: RatioMode = Field(default=RatioMode.ANCILLA_FREE)
    max_iters: int = Field(default=30, ge=1)
    step: float = Field(default=0.3, gt=0, le=1)
    backward_factor: float = Field(default=4.0, gt=0)
    # black-box algorithm
    optimizer: OptimizerKind = Field(default=OptimizerKind.NELDER_MEAD)
    budget: int = Field(default=300, ge=2)
    init: InitKind = Field(default=InitKind.NAIVE)
    warm_start: Optional[List[float]] = None
    simplex_scale: float = Field(default=0.1, gt=0)
    # objective estimation
    estimator: OverlapKind = Field(default=OverlapKind.DIRECT_ORACLE)
    m: Optional[int] = Field(default=None, ge=1, description="Measurements per estimate")
    n_tau: int = Field(default=32, ge=1)
    delta_estimate: float = Field(default=1.0, gt=0)
    k_max: int = Field(default=100, ge=1)
    # profile algorithm
    theta0: float = Field(default=0.99, gt=0, lt=1)
    theta: float = Field(default=0.99, gt=0, lt=1, description="Final target threshold")
    theta_ramp: RampKind = Field(default=RampKind.LINEAR)
    tcap: float = Field(default=20.0, gt=0, description="Per-chunk time cap")
    time_tol: float = Field(default=0.1, gt=0)
    max_evals_per_chunk: int = Field(default=20, ge=2)
    certify: bool = Field(default=False, description="Certify thresholds by hypothesis test")
    epsilon: float = Field(default=0.01, gt=0, lt=0.5)
    alpha_threshold: float = Field(default=0.05, gt=0, le=0.5)
    max_samples: int = Field(default=2000, ge=1)
    prior_a: float = Field(default=10.0, gt=0)
    prior_b: float = Field(default=2.0, gt=0)
    resume: Optional[str] = None

    @field_validator("algo")
    @classmethod
    def validate_algo(cls, v: str) -> str:
        v = v.strip().lower()
        if v not in {"ratio", "blackbox", "profile"}:
            raise ValueError("algo must be one of ratio, blackbox, profile")
        return v

    @field_validator("optimizer", mode="before")
    @classmethod
    def parse_optimizer_alias(cls, v: Any) -> Any:
        if isinstance(v, str):
            return parse_optimizer(v)
        return v

    @field_validator("warm_start", mode="before")
    @classmethod
    def parse_warm_start(cls, v: Any) -> Any:
        if v is None or v == "":
            return None
        return _split_floats(v)

    @model_validator(mode="after")
    def validate_thresholds(self) -> "VqaaRunConfig":
        if self.theta0 > self.theta:
            raise ValueError("theta0 must not exceed theta")
        if self.algo == "ratio" and self.L < 2:
            raise ValueError("The ratio algorithm needs at least two chunks")
        if self.algo == "blackbox" and self.budget < self.L + 1:
            raise ValueError("budget must be at least L + 1")
        return self

    def prior(self) -> BetaPosterior:
        return BetaPosterior(a=self.prior_a, b=self.prior_b)

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(
            estimator=self.estimator, m=self.m, n_tau=self.n_tau,
            delta_estimate=self.delta_estimate, k_max=self.k_max,
        )


class NoiseRunConfig(RunConfigBase):
    p: float = Field(default=1e-4, ge=0, le=1)
    trajectories: int = Field(default=100, ge=1)
    T: float = Field(default=5.0, gt=0)
    L: int = Field(default=1, ge=1)
    shot_m: Optional[int] = Field(default=None, ge=1)
    observable: str = Field(default="energy_error")
    flip_site: Optional[int] = Field(default=None, ge=0)
    flip_layer: Optional[int] = Field(default=None, ge=0)
    flip_pauli: Pauli = Field(default=Pauli.X)

    @field_validator("observable")
    @classmethod
    def validate_observable(cls, v: str) -> str:
        if v not in {"energy_error", "fidelity"}:
            raise ValueError("observable must be energy_error or fidelity")
        return v

    def noise(self) -> NoiseConfig:
        return NoiseConfig(p=self.p, n_trajectories=self.trajectories, shot_m=self.shot_m, seed=self.seed)


# ============================================================================
# Manifest Schemas
# ============================================================================

class RunManifest(BaseModel):
    """Reproducibility record written once per command run."""
    command: str
    config: Dict[str, Any]
    seed: int
    version: str
    backend: Backend
    outputs: Dict[str, str] = Field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    evaluation_count: int = 0
    measurement_count: int = 0
    flags: List[str] = Field(default_factory=list)
    settings: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("outputs")
    @classmethod
    def validate_unique_outputs(cls, v: Dict[str, str]) -> Dict[str, str]:
        if len(set(v.values())) != len(v):
            raise ValueError("Each output file must be referenced exactly once")
        return v

