"""Enums shared across the simulator.

This module defines all enums used by the model, evolution, estimation,
optimization and CLI layers. Every enum is a ``str`` subclass so values
round-trip unchanged through config files, CSV columns and JSON manifests.
"""

from enum import Enum


class RampKind(str, Enum):
    """Reparametrization of the interpolation parameter inside a chunk.

    Attributes:
        LINEAR: lambda(s) = lambda0 + s * (lambdaf - lambda0).
        SMOOTH: sin^2 of sin^2 ramp with vanishing derivative at both ends.
    """
    LINEAR = "linear"
    SMOOTH = "smooth"


class Direction(str, Enum):
    """Traversal direction of a chunked schedule."""
    FORWARD = "forward"
    BACKWARD = "backward"


class BackwardMode(str, Enum):
    """How backward-sweep chunk times are derived from forward times.

    Attributes:
        PROPORTIONAL: T^B_j = factor * T_j.
        CONSTANT: one large constant backward time for the whole path.
    """
    PROPORTIONAL = "proportional"
    CONSTANT = "constant"


class OverlapKind(str, Enum):
    """Origin of an overlap estimate.

    Attributes:
        DIRECT_ORACLE: exact |<GS|psi>| from the simulator.
        FORWARD_BACKWARD: overlap with the product state after a backward sweep.
        SINGLE_ANCILLA_E2: certified bound from the tau-averaged |alpha|^2.
        BELL_PAIR: E^2 estimated from the entangled-ancillas projector.
    """
    DIRECT_ORACLE = "direct_oracle"
    FORWARD_BACKWARD = "forward_backward"
    SINGLE_ANCILLA_E2 = "single_ancilla_e2"
    BELL_PAIR = "bell_pair"


class SpectroscopyMethod(str, Enum):
    """Overlap measurement used by adiabatic spectroscopy."""
    FORWARD_BACKWARD = "forward_backward"
    ANCILLA = "ancilla"


class ObjectiveKind(str, Enum):
    """Objective optimized by a VQAA run."""
    FINAL_OVERLAP = "final_overlap"
    RATIO_SMOOTHNESS = "ratio_smoothness"
    PROFILE_FOLLOW = "profile_follow"


class RatioMode(str, Enum):
    """Overlap source of the ratio-rebalancing VQAA.

    Attributes:
        ANCILLA_FREE: forward sweep, backward sweep, overlap with the product state.
        FORWARD_ONLY: forward sweep, overlap with the instantaneous ground state.
    """
    ANCILLA_FREE = "ancilla_free"
    FORWARD_ONLY = "forward_only"


class OptimizerKind(str, Enum):
    """Classical optimizer driving the black-box VQAA."""
    NELDER_MEAD = "nelder_mead"
    QUASI_NEWTON = "quasi_newton"
    COBYLA_LIKE = "cobyla_like"


class InitKind(str, Enum):
    """Initial chunk lengths of a black-box run."""
    NAIVE = "naive"
    WARM_START = "warm_start"


class Decision(str, Enum):
    """Outcome of the sequential Beta-Bernoulli test."""
    ACCEPT = "accept"
    REJECT = "reject"
    UNDECIDED = "undecided"


class Backend(str, Enum):
    """State representation used for a run."""
    DENSE_ORACLE = "dense_oracle"
    MPS = "mps"


class Pauli(str, Enum):
    """Single-qubit Pauli operators used by the noise model."""
    X = "x"
    Y = "y"
    Z = "z"


# Optimizer aliases accepted on the command line
OPTIMIZER_ALIASES = {
    "nelder-mead": OptimizerKind.NELDER_MEAD,
    "nelder_mead": OptimizerKind.NELDER_MEAD,
    "quasi-newton": OptimizerKind.QUASI_NEWTON,
    "quasi_newton": OptimizerKind.QUASI_NEWTON,
    "l-bfgs-b": OptimizerKind.QUASI_NEWTON,
    "cobyla": OptimizerKind.COBYLA_LIKE,
    "cobyla_like": OptimizerKind.COBYLA_LIKE,
}


def parse_optimizer(name: str) -> OptimizerKind:
    """Resolve an optimizer name or alias.

    Args:
        name: Name as typed on the command line or in a config file.

    Returns:
        The matching OptimizerKind.

    Raises:
        ValueError: If the name is unknown.
    """
    key = name.strip().lower()
    if key not in OPTIMIZER_ALIASES:
        raise ValueError(f"Unknown optimizer: {name}")
    return OPTIMIZER_ALIASES[key]
