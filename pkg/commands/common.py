"""
Helpers shared by the sub-commands: global options, config loading,
backend construction and the dense-oracle verification report.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Type, TypeVar

import typer

from backends import SimulationBackend, make_backend
from config.settings import settings
from schemas import RunConfigBase
from ui import display_verify_report
from utils.outputs import RunOutputs
from utils.validators import load_run_config

logger = logging.getLogger("vqaa.cli")

ConfigT = TypeVar("ConfigT", bound=RunConfigBase)


@dataclass
class GlobalOptions:
    """Options given before the sub-command name."""
    config: Optional[str] = None
    seed: Optional[int] = None
    out: Optional[str] = None
    verify: bool = False


def global_options(ctx: typer.Context) -> GlobalOptions:
    obj = ctx.find_root().obj
    return obj if isinstance(obj, GlobalOptions) else GlobalOptions()


def load_config(ctx: typer.Context, model_cls: Type[ConfigT], overrides: Dict[str, Any]) -> ConfigT:
    """Run file, then the global seed, then sub-command options."""
    opts = global_options(ctx)
    merged: Dict[str, Any] = {}
    if opts.seed is not None:
        merged["seed"] = opts.seed
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return load_run_config(opts.config, merged, model_cls)


def build_backend(config: RunConfigBase) -> SimulationBackend:
    return make_backend(
        config.resolved_backend(),
        config.model_params(),
        ramp=config.ramp,
        dt=config.dt,
        trotter_substeps=config.K,
        chi_max=config.chi_max,
        svd_cutoff=config.svd_cutoff,
    )


def can_verify(config: RunConfigBase, flags: List[str]) -> bool:
    """True when a dense twin fits; otherwise records ``verify_skipped``."""
    if config.n <= settings.DENSE_MAX_SITES:
        return True
    logger.warning(f"--verify skipped: N={config.n} exceeds the dense cap {settings.DENSE_MAX_SITES}")
    flags.append("verify_skipped")
    return False


def verify_row(quantity: str, simulator: float, oracle: float, tolerance: float) -> Dict[str, Any]:
    return {
        "quantity": quantity,
        "simulator": float(simulator),
        "oracle": float(oracle),
        "abs_diff": abs(float(simulator) - float(oracle)),
        "tolerance": tolerance,
    }


def write_verify_report(outputs: RunOutputs, rows: List[Dict[str, Any]], flags: List[str]):
    """Write and print the diff report; out-of-tolerance rows raise ``verify_mismatch``."""
    outputs.write_csv("verify", rows)
    display_verify_report(rows)
    if any(row["abs_diff"] > row["tolerance"] for row in rows):
        logger.warning("Simulator and dense oracle disagree beyond tolerance")
        flags.append("verify_mismatch")
