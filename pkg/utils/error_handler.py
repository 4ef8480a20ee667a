"""
Error types and CLI error mapping for simulation runs.

Domain violations raise ``InvalidInputError``; degraded-but-usable results are
returned with flags instead of raising. ``handle_run_errors`` turns the
exception hierarchy into process exit codes.
"""

import logging
from functools import wraps
from typing import Any, Optional

import typer

logger = logging.getLogger("vqaa.errors")

EXIT_OK = 0
EXIT_DEGRADED = 1
EXIT_CONFIG_ERROR = 2


class SimulationError(Exception):
    """Base exception for all simulator errors"""
    def __init__(self, message: str, code: str = "SIMULATION_ERROR"):
        self.message = message
        self.code = code
        super().__init__(self.message)


class InvalidInputError(SimulationError, ValueError):
    """Raised when an operation is called outside its domain"""
    def __init__(self, message: str, code: str = "INVALID_INPUT"):
        super().__init__(message, code)


class ConfigError(SimulationError):
    """Raised when a run configuration cannot be parsed or validated"""
    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(message, "CONFIG_ERROR")


class OracleSizeError(InvalidInputError):
    """Raised when a dense oracle is asked for a system beyond its cap"""
    def __init__(self, num_sites: int, cap: int):
        self.num_sites = num_sites
        self.cap = cap
        super().__init__(
            f"Dense oracle supports at most {cap} sites, got {num_sites}",
            "ORACLE_TOO_LARGE",
        )


class NonUnitaryGateError(InvalidInputError):
    """Raised when a gate deviates from unitarity beyond tolerance"""
    def __init__(self, deviation: float):
        self.deviation = deviation
        super().__init__(f"Gate is not unitary (deviation {deviation:.3e})", "NON_UNITARY")


class ConvergenceError(SimulationError):
    """Raised when an iterative solver stops without meeting its tolerance"""
    def __init__(self, message: str, last_delta: float, last_value: Any = None):
        self.last_delta = last_delta
        self.last_value = last_value
        super().__init__(message, "NOT_CONVERGED")


class BudgetExhaustedError(SimulationError):
    """Raised when an evaluation budget ends before a result exists"""
    def __init__(self, message: str, best: Any = None):
        self.best = best
        super().__init__(message, "BUDGET_EXHAUSTED")


def handle_run_errors(func):
    """
    Decorator mapping simulator exceptions to CLI exit codes.

    The wrapped command returns a list of degradation flags (possibly empty).

    Exit codes:
        0: success
        1: degraded result (flags raised) or simulation failure
        2: configuration error
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            flags = func(*args, **kwargs)
        except ConfigError as e:
            key_info = f" (key: {e.key})" if e.key else ""
            logger.error(f"Configuration error{key_info}: {e.message}")
            typer.echo(f"config error{key_info}: {e.message}", err=True)
            raise typer.Exit(code=EXIT_CONFIG_ERROR)
        except SimulationError as e:
            logger.error(f"{e.code} in {func.__name__}: {e.message}")
            raise typer.Exit(code=EXIT_DEGRADED)

        if flags:
            logger.warning(f"Run finished degraded: {', '.join(sorted(set(flags)))}")
            raise typer.Exit(code=EXIT_DEGRADED)
        return None

    return wrapper
