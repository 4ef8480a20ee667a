import logging
from typing import Optional

import typer

from commands import run_gap, run_noise, run_spectroscopy, run_vqaa
from commands.common import GlobalOptions
from logging_config import configure_logging

logger = logging.getLogger("vqaa.cli")

app = typer.Typer(
    help="Adiabatic ground-state preparation on the ZZXZ chain.",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[str] = typer.Option(None, "--config", "-c", help="KEY=VALUE run file"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Run seed (overrides the file)"),
    out: Optional[str] = typer.Option(None, "--out", help="Output directory"),
    verify: bool = typer.Option(False, "--verify", help="Compare against the dense oracle"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
    log_file: Optional[str] = typer.Option(None, "--log-file", help="Also write a DEBUG log to this file"),
):
    configure_logging(log_level, log_file)
    ctx.obj = GlobalOptions(config=config, seed=seed, out=out, verify=verify)
    logger.debug(f"Global options: {ctx.obj}")


app.command("gap")(run_gap.gap)
app.command("spectroscopy")(run_spectroscopy.spectroscopy)
app.command("vqaa")(run_vqaa.vqaa)
app.command("noise")(run_noise.noise)


if __name__ == "__main__":
    app()
