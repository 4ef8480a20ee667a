import logging
from typing import List, Optional

import numpy as np
import typer

from commands.common import (
    build_backend,
    can_verify,
    global_options,
    load_config,
    verify_row,
    write_verify_report,
)
from hamiltonian import gap_profile
from schemas import SpectroscopyRunConfig
from spectroscopy import gap_profile_estimate, run_spectroscopy
from ui import display_curve, display_manifest
from utils.error_handler import handle_run_errors
from utils.outputs import RunOutputs

logger = logging.getLogger("vqaa.cli")

GAP_POSITION_TOLERANCE = 0.05


@handle_run_errors
def spectroscopy(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n", help="Number of sites"),
    J: Optional[float] = typer.Option(None, "--J"),
    h: Optional[float] = typer.Option(None, "--h"),
    g: Optional[float] = typer.Option(None, "--g"),
    target: Optional[float] = typer.Option(None, "--target", help="Target overlap O_T"),
    grid: Optional[int] = typer.Option(None, "--grid", help="Number of s points in (0, 1]"),
    method: Optional[str] = typer.Option(None, "--method", help="ancilla or forward_backward"),
    reuse_gap_info: Optional[bool] = typer.Option(None, "--reuse-gap-info/--no-reuse-gap-info"),
    backward_mode: Optional[str] = typer.Option(None, "--backward-mode"),
    backward_time: Optional[float] = typer.Option(None, "--backward-time"),
    t_hi: Optional[float] = typer.Option(None, "--t-hi"),
    backend: Optional[str] = typer.Option(None, "--backend"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Required evolution time T(s) and its spline derivative."""
    config = load_config(ctx, SpectroscopyRunConfig, dict(
        n=n, J=J, h=h, g=g, target=target, grid=grid, method=method,
        reuse_gap_info=reuse_gap_info, backward_mode=backward_mode, backward_time=backward_time,
        t_hi=t_hi, backend=backend, workers=workers, seed=seed,
    ))
    opts = global_options(ctx)
    outputs = RunOutputs(opts.out, "spectroscopy")
    sim = build_backend(config)

    s_grid = np.linspace(0.0, 1.0, config.grid + 1)[1:]
    curve = run_spectroscopy(
        sim, s_grid, config.target, method=config.method, reuse_gap_info=config.reuse_gap_info,
        search=config.search(), backward_mode=config.backward_mode,
        backward_factor=config.backward_factor, backward_time=config.backward_time,
        workers=config.workers,
    )
    flags: List[str] = list(curve.flags)

    outputs.write_csv("curve", [
        {"s": s, "T": t, "overlap_achieved": o, "method": curve.method.value, "iters": it}
        for s, t, o, it in zip(curve.grid, curve.times, curve.overlaps, curve.iters)
    ])
    outputs.write_csv("derivative", [
        {"s": s, "minus_dT_ds": d} for s, d in gap_profile_estimate(curve)
    ])
    outputs.write_json("curve_json", curve, filename="curve.json")

    oracle_position = None
    if opts.verify and can_verify(config, flags):
        fine = np.linspace(0.0, 1.0, 201)
        gaps = gap_profile(config.model_params(), fine)
        oracle_position = float(fine[int(np.argmin(gaps))])
        write_verify_report(outputs, [
            verify_row("gap position", curve.gap_position, oracle_position, GAP_POSITION_TOLERANCE),
        ], flags)

    display_curve(curve, oracle_position)
    manifest = outputs.finalize(config, config.seed, config.resolved_backend(),
                                evaluation_count=sum(curve.iters), flags=flags)
    display_manifest(manifest)
    return flags
