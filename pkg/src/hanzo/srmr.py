#!/usr/bin/env python
"""srmr - blind RT60/DRR estimation tools under one command"""

import json

import click

from . import rirstats, srmranalyze, srmreval, srmrsynth, srmrtrain
from .srmrtools.cli import CONTEXT_SETTINGS, Group
from .srmrtools.config import default_configs


def _dump_config(ctx: click.Context, param, value) -> None:
    if not value or ctx.resilient_parsing:
        return
    click.echo(json.dumps(default_configs(), indent=2))
    ctx.exit(0)


@click.group(cls=Group, context_settings=CONTEXT_SETTINGS)
@click.option(
    "--dump-config",
    is_flag=True,
    expose_value=False,
    is_eager=True,
    callback=_dump_config,
    help="Print the default pipeline configuration of both modes as JSON and exit",
)
def main() -> None:
    """Estimate reverberation time and direct-to-reverberant ratio from speech."""


main.add_command(srmranalyze.main, "analyze")
main.add_command(srmrsynth.main, "synth")
main.add_command(srmrtrain.main, "train")
main.add_command(srmreval.main, "evaluate")
main.add_command(rirstats.main, "rir-stats")


def run() -> None:
    """Entry point for the command-line interface."""
    main()


if __name__ == "__main__":
    run()
