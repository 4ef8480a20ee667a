import json
import logging
from typing import List, Optional

import typer

from backends import dense_twin
from commands.common import (
    build_backend,
    can_verify,
    global_options,
    load_config,
    verify_row,
    write_verify_report,
)
from noise import OBSERVABLES, deliberate_flip_run, noise_layer_count, noisy_ensemble_run
from schemas import NoiseRunConfig
from ui import console, display_manifest, display_noise_summary
from utils.error_handler import handle_run_errors
from utils.outputs import RunOutputs

logger = logging.getLogger("vqaa.cli")

OBSERVABLE_TOLERANCE = 1e-4


@handle_run_errors
def noise(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n", help="Number of sites"),
    J: Optional[float] = typer.Option(None, "--J"),
    h: Optional[float] = typer.Option(None, "--h"),
    g: Optional[float] = typer.Option(None, "--g"),
    T: Optional[float] = typer.Option(None, "--T", help="Total evolution time"),
    L: Optional[int] = typer.Option(None, "--L", help="Number of chunks"),
    p: Optional[float] = typer.Option(None, "--p", help="Per-qubit per-layer noise probability"),
    trajectories: Optional[int] = typer.Option(None, "--trajectories"),
    shot_m: Optional[int] = typer.Option(None, "--shot-m"),
    observable: Optional[str] = typer.Option(None, "--observable", help="energy_error or fidelity"),
    flip_site: Optional[int] = typer.Option(None, "--flip-site"),
    flip_layer: Optional[int] = typer.Option(None, "--flip-layer"),
    flip_pauli: Optional[str] = typer.Option(None, "--flip-pauli"),
    backend: Optional[str] = typer.Option(None, "--backend"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Pauli trajectory ensembles or a single deliberate flip."""
    config = load_config(ctx, NoiseRunConfig, dict(
        n=n, J=J, h=h, g=g, T=T, L=L, p=p, trajectories=trajectories, shot_m=shot_m,
        observable=observable, flip_site=flip_site, flip_layer=flip_layer, flip_pauli=flip_pauli,
        backend=backend, workers=workers, seed=seed,
    ))
    opts = global_options(ctx)
    outputs = RunOutputs(opts.out, "noise")
    sim = build_backend(config)
    sched = sim.naive(config.L, config.T)
    flags: List[str] = []
    logger.info(f"Noise run: {noise_layer_count(sched)} layers on {config.n} sites")

    if config.flip_site is not None or config.flip_layer is not None:
        site = config.n // 2 if config.flip_site is None else config.flip_site
        layer = 0 if config.flip_layer is None else config.flip_layer
        baseline = deliberate_flip_run(sim, sched)
        flipped = deliberate_flip_run(sim, sched, site, layer, config.flip_pauli)
        outputs.write_csv("flip", [{
            "site": site, "layer": layer, "pauli": config.flip_pauli.value,
            "energy_error": flipped, "baseline": baseline,
        }])
        console.print(f"Flip {config.flip_pauli.value} at site {site}, layer {layer}: "
                      f"energy error {flipped:.6g} (baseline {baseline:.6g})")
        evaluations = 2
    else:
        result = noisy_ensemble_run(sim, sched, config.noise(), config.observable, config.workers)
        outputs.write_csv("trajectories", [
            {"trajectory": k, "events_json": json.dumps(events), "observable": value}
            for k, (value, events) in enumerate(zip(result.values, result.events))
        ])
        outputs.write_csv("aggregate", [
            {"p": config.p, "mean": result.mean, "std_err": result.std_err, "n": result.n},
        ])
        display_noise_summary(config.p, config.observable, result)
        evaluations = result.n

    if opts.verify and can_verify(config, flags):
        observe = OBSERVABLES[config.observable]
        final = sim.evolve(sim.initial_state(), sched)
        oracle = dense_twin(sim)
        reference = oracle.evolve(oracle.initial_state(), sched)
        write_verify_report(outputs, [
            verify_row(f"noiseless {config.observable}", observe(sim, final),
                       observe(oracle, reference), OBSERVABLE_TOLERANCE),
        ], flags)

    manifest = outputs.finalize(config, config.seed, config.resolved_backend(),
                                evaluation_count=evaluations, flags=flags)
    display_manifest(manifest)
    return flags
