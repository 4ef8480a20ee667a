from typing import Dict, List, Optional, Sequence

from rich.console import Console
from rich.table import Table

from schemas import NoiseEnsembleResult, OptimizationTrace, RunManifest, SpectroscopyCurve


console = Console()


def display_gap_summary(rows: Sequence[Dict]):
    """Displays the minimum gap per coupling."""
    if not rows:
        console.print("No gap data.", style="bold yellow")
        return

    table = Table(title="Spectral gap")
    table.add_column("J", justify="right")
    table.add_column("min gap", justify="right")
    table.add_column("at s", justify="right")
    table.add_column("Method", width=12)

    for row in rows:
        table.add_row(f"{row['J']:g}", f"{row['min_gap']:.6f}", f"{row['s']:.3f}", row["method"])

    console.print(table)


def display_curve(curve: SpectroscopyCurve, gap_hint: Optional[float] = None):
    """Displays the required-time curve and the located gap minimum."""
    table = Table(title=f"Adiabatic spectroscopy ({curve.method.value}, O_T={curve.target_overlap:g})")
    table.add_column("s", justify="right")
    table.add_column("T(s)", justify="right")
    table.add_column("overlap", justify="right")
    table.add_column("dT/ds", justify="right")

    derivative = curve.spline_derivative or [float("nan")] * len(curve.grid)
    for s, t, o, d in zip(curve.grid, curve.times, curve.overlaps, derivative):
        table.add_row(f"{s:.3f}", f"{t:.3f}", f"{o:.4f}", f"{d:.3f}")

    console.print(table)
    if curve.gap_position is not None:
        console.print(f"Gap minimum near s = {curve.gap_position:.3f}", style="bold green")
    if gap_hint is not None:
        console.print(f"Dense-oracle gap minimum at s = {gap_hint:.3f}", style="dim")


def display_trace_summary(trace: OptimizationTrace, naive: Optional[float] = None):
    """Displays the best schedule of a VQAA run."""
    table = Table(title=f"VQAA ({trace.objective_kind.value})")
    table.add_column("Chunk", justify="right")
    table.add_column("length", justify="right")
    table.add_column("time", justify="right")

    if trace.best is not None:
        for i, (s_len, t) in enumerate(zip(trace.best.chunk_lengths, trace.best.chunk_times)):
            table.add_row(str(i + 1), f"{s_len:.5f}", f"{t:.3f}")

    console.print(table)
    console.print(f"Evaluations: {trace.eval_count}  Measurements: {trace.measurement_count}")
    console.print(f"Best objective: {trace.best_objective:.6f}")
    if naive is not None:
        console.print(f"Naive fidelity: {naive:.6f}")
    if trace.verified_fidelity is not None:
        console.print(f"Verified fidelity: {trace.verified_fidelity:.6f}", style="bold green")
    if trace.flags:
        console.print(f"Flags: {', '.join(trace.flags)}", style="bold yellow")


def display_noise_summary(p: float, observable: str, result: NoiseEnsembleResult):
    table = Table(title="Noisy ensemble")
    table.add_column("p", justify="right")
    table.add_column("observable")
    table.add_column("mean", justify="right")
    table.add_column("std err", justify="right")
    table.add_column("n", justify="right")
    table.add_column("events", justify="right")
    table.add_row(f"{p:g}", observable, f"{result.mean:.6g}", f"{result.std_err:.2g}",
                  str(result.n), str(sum(len(ev) for ev in result.events)))
    console.print(table)


def display_verify_report(rows: List[Dict]):
    """Displays simulator-vs-dense-oracle differences."""
    table = Table(title="Dense-oracle verification")
    table.add_column("Quantity")
    table.add_column("simulator", justify="right")
    table.add_column("oracle", justify="right")
    table.add_column("|diff|", justify="right")

    for row in rows:
        ok = row["abs_diff"] <= row.get("tolerance", float("inf"))
        table.add_row(row["quantity"], f"{row['simulator']:.8f}", f"{row['oracle']:.8f}",
                      f"{row['abs_diff']:.2e}", style=None if ok else "red")

    console.print(table)


def display_manifest(manifest: RunManifest):
    console.print(f"[bold]{manifest.command}[/bold] finished in {manifest.wall_clock_seconds:.1f}s "
                  f"({manifest.backend.value}, seed {manifest.seed})")
    for key, filename in manifest.outputs.items():
        console.print(f"  {key}: {filename}", style="dim")
    if manifest.flags:
        console.print(f"Degraded: {', '.join(manifest.flags)}", style="bold yellow")
