import logging
from typing import List, Optional

import numpy as np
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
from overlap import OverlapMeter
from schemas import OptimizationTrace, VqaaRunConfig
from ui import display_manifest, display_trace_summary
from utils.error_handler import handle_run_errors
from utils.outputs import RunOutputs
from vqaa import (
    load_trace,
    naive_fidelity,
    run_blackbox_vqaa,
    run_profile_vqaa,
    run_ratio_vqaa,
    schedule_fidelity,
)

logger = logging.getLogger("vqaa.cli")

FIDELITY_TOLERANCE = 1e-4


def trace_rows(trace: OptimizationTrace) -> List[dict]:
    """Trace CSV rows: iter, eval_count, objective, then per-chunk lengths and times."""
    rows = []
    for entry in trace.entries:
        row = {"iter": entry.iteration, "eval_count": entry.eval_count, "objective": entry.objective,
               "measurement_count": entry.measurement_count}
        row.update({f"len_{i + 1}": v for i, v in enumerate(entry.lengths)})
        row.update({f"time_{i + 1}": v for i, v in enumerate(entry.times)})
        row["note"] = entry.note
        rows.append(row)
    return rows


def execute(config: VqaaRunConfig, sim, meter: OverlapMeter) -> OptimizationTrace:
    """Dispatch to the configured VQAA variant."""
    if config.algo == "ratio":
        return run_ratio_vqaa(
            sim, config.L, config.T, mode=config.mode, max_iters=config.max_iters,
            step=config.step, meter=meter, backward_factor=config.backward_factor,
        )
    if config.algo == "blackbox":
        resume = load_trace(config.resume) if config.resume else None
        return run_blackbox_vqaa(
            sim, config.L, config.T, optimizer=config.optimizer, eval_budget=config.budget,
            init=config.init, warm_start=config.warm_start, meter=meter,
            simplex_scale=config.simplex_scale, resume=resume,
        )
    return run_profile_vqaa(
        sim, config.L, config.theta0, config.theta, tcap=config.tcap,
        theta_ramp=config.theta_ramp, time_tol=config.time_tol,
        max_evals_per_chunk=config.max_evals_per_chunk, meter=meter,
        certify=config.certify, epsilon=config.epsilon, alpha_threshold=config.alpha_threshold,
        max_samples=config.max_samples, prior=config.prior(),
    )


@handle_run_errors
def vqaa(
    ctx: typer.Context,
    algo: Optional[str] = typer.Option(None, "--algo", help="ratio, blackbox or profile"),
    n: Optional[int] = typer.Option(None, "--n", help="Number of sites"),
    J: Optional[float] = typer.Option(None, "--J"),
    h: Optional[float] = typer.Option(None, "--h"),
    g: Optional[float] = typer.Option(None, "--g"),
    T: Optional[float] = typer.Option(None, "--T", help="Total evolution time"),
    L: Optional[int] = typer.Option(None, "--L", help="Number of chunks"),
    mode: Optional[str] = typer.Option(None, "--mode", help="ancilla_free or forward_only"),
    optimizer: Optional[str] = typer.Option(None, "--optimizer", help="nelder-mead, quasi-newton or cobyla"),
    budget: Optional[int] = typer.Option(None, "--budget", help="Objective evaluation budget"),
    warm_start: Optional[str] = typer.Option(None, "--warm-start", help="Comma-separated lengths"),
    estimator: Optional[str] = typer.Option(None, "--estimator"),
    m: Optional[int] = typer.Option(None, "--m", help="Measurements per estimate"),
    theta0: Optional[float] = typer.Option(None, "--theta0"),
    theta: Optional[float] = typer.Option(None, "--theta"),
    tcap: Optional[float] = typer.Option(None, "--tcap", help="Per-chunk time cap"),
    certify: Optional[bool] = typer.Option(None, "--certify/--no-certify"),
    resume: Optional[str] = typer.Option(None, "--resume", help="Trace JSON to continue from"),
    backend: Optional[str] = typer.Option(None, "--backend"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Optimize a chunked adiabatic schedule."""
    config = load_config(ctx, VqaaRunConfig, dict(
        algo=algo, n=n, J=J, h=h, g=g, T=T, L=L, mode=mode, optimizer=optimizer, budget=budget,
        warm_start=warm_start, estimator=estimator, m=m, theta0=theta0, theta=theta, tcap=tcap,
        certify=certify, resume=resume, backend=backend, seed=seed,
    ))
    opts = global_options(ctx)
    outputs = RunOutputs(opts.out, "vqaa")
    sim = build_backend(config)
    meter = OverlapMeter(sim, config.estimator_config(), rng=np.random.default_rng(config.seed))

    trace = execute(config, sim, meter)
    flags: List[str] = list(trace.flags)

    outputs.write_csv("trace", trace_rows(trace))
    outputs.write_json("trace_json", trace, filename="trace.json")
    if trace.best is not None:
        outputs.write_json("best_schedule", trace.best.to_json_dict())

    naive = naive_fidelity(sim, config.L, config.T) if config.algo != "profile" else None
    display_trace_summary(trace, naive)

    if opts.verify and trace.best is not None and can_verify(config, flags):
        oracle = dense_twin(sim)
        write_verify_report(outputs, [
            verify_row("best schedule fidelity", schedule_fidelity(sim, trace.best),
                       schedule_fidelity(oracle, trace.best), FIDELITY_TOLERANCE),
        ], flags)

    manifest = outputs.finalize(config, config.seed, config.resolved_backend(),
                                evaluation_count=trace.eval_count,
                                measurement_count=meter.measurement_count, flags=flags)
    display_manifest(manifest)
    return flags
