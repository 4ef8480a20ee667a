import logging
from functools import partial
from typing import List, Optional

import numpy as np
import typer

from commands.common import can_verify, global_options, load_config, verify_row, write_verify_report
from config.settings import settings
from enums import Backend
from hamiltonian import gap_profile
from schemas import GapRunConfig
from ui import display_gap_summary, display_manifest
from utils.error_handler import handle_run_errors
from utils.outputs import RunOutputs
from utils.pool import map_jobs

logger = logging.getLogger("vqaa.cli")

DMRG_GAP_TOLERANCE = 1e-6


def _gap_curve(config: GapRunConfig, grid: np.ndarray, use_dmrg: bool, coupling: float) -> List[float]:
    return gap_profile(
        config.model_params(coupling), grid, use_dmrg=use_dmrg,
        max_bond=config.max_bond, sweeps=config.sweeps, tol=config.tol,
    )


@handle_run_errors
def gap(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n", help="Number of sites"),
    J: Optional[str] = typer.Option(None, "--J", help="Comma-separated couplings"),
    h: Optional[float] = typer.Option(None, "--h"),
    g: Optional[float] = typer.Option(None, "--g"),
    grid: Optional[int] = typer.Option(None, "--grid", help="Number of s points"),
    dmrg: Optional[bool] = typer.Option(None, "--dmrg/--no-dmrg", help="Force DMRG"),
    max_bond: Optional[int] = typer.Option(None, "--max-bond"),
    sweeps: Optional[int] = typer.Option(None, "--sweeps"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Spectral gap of H(s) on a grid, for one or more couplings."""
    config = load_config(ctx, GapRunConfig, dict(
        n=n, J=J, h=h, g=g, grid=grid, dmrg=dmrg, max_bond=max_bond, sweeps=sweeps,
        workers=workers, seed=seed,
    ))
    opts = global_options(ctx)
    outputs = RunOutputs(opts.out, "gap")
    flags: List[str] = []

    s_grid = np.linspace(0.0, 1.0, config.grid)
    use_dmrg = config.dmrg or config.n > settings.DENSE_MAX_SITES
    method = "dmrg" if use_dmrg else "dense"
    curves = map_jobs(partial(_gap_curve, config, s_grid, use_dmrg), config.J, config.workers)

    rows, summary = [], []
    for coupling, gaps in zip(config.J, curves):
        rows.extend({"J": coupling, "s": float(s), "gap": gp} for s, gp in zip(s_grid, gaps))
        k = int(np.argmin(gaps))
        summary.append({"J": coupling, "min_gap": gaps[k], "s": float(s_grid[k]), "method": method})
        if min(gaps) == 0.0:
            flags.append(f"degenerate@J={coupling:g}")
    outputs.write_csv("gap", rows)
    display_gap_summary(summary)

    if opts.verify and use_dmrg and can_verify(config, flags):
        checks = []
        for coupling, gaps in zip(config.J, curves):
            dense = _gap_curve(config, s_grid, False, coupling)
            checks.extend(
                verify_row(f"gap J={coupling:g} s={s:.3f}", a, b, DMRG_GAP_TOLERANCE)
                for s, a, b in zip(s_grid, gaps, dense)
            )
        write_verify_report(outputs, checks, flags)

    manifest = outputs.finalize(config, config.seed, Backend.MPS if use_dmrg else Backend.DENSE_ORACLE,
                                evaluation_count=len(rows), flags=flags)
    display_manifest(manifest)
    return flags
