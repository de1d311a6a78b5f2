#!/usr/bin/env python
"""srmrsynth - synthesize a reverberant speech dataset with ground truth"""

import os

import click

from .srmrtools import log
from .srmrtools.cli import command, emit, fail, jobs_option, log_level_option
from .srmrtools.corpus import NOISE_TYPES, WHITE
from .srmrtools.dataset import (
    DECAY_PER_TAU,
    DEFAULT_RT60S,
    DEFAULT_SNRS,
    IMAGE,
    MANIFEST_NAME,
    RIR_MODELS,
    SynthPlan,
    synthesize_dataset,
)
from .srmrtools.errors import EXIT_INPUT, EXIT_OK, SrmrError


@command()
@click.option(
    "-o", "--outdir", required=True, type=click.Path(file_okay=False),
    help="Directory for audio/, rirs/ and the manifest",
)  # fmt: skip
@click.option(
    "-t",
    "--rt60",
    "rt60s",
    multiple=True,
    type=click.FloatRange(min=0, min_open=True),
    help=f"Target RT60 in s, repeatable [default: {', '.join(map(str, DEFAULT_RT60S))}]",
)
@click.option(
    "--tau",
    "taus",
    multiple=True,
    type=click.FloatRange(min=0, min_open=True),
    help="Energy decay time constant in s instead of an RT60, repeatable",
)
@click.option(
    "-s",
    "--snr",
    "snrs",
    multiple=True,
    type=float,
    help=f"Mixing SNR in dB, repeatable [default: {', '.join(map(str, DEFAULT_SNRS))}]",
)
@click.option(
    "-n",
    "--noise",
    "noise_types",
    multiple=True,
    type=click.Choice(NOISE_TYPES),
    help=f"Noise type, repeatable [default: {WHITE}]",
)
@click.option("--clean", is_flag=True, default=False, help="Also write the noiseless mix")
@click.option("--count", type=click.IntRange(min=1), default=10, show_default=True,
              help="Rooms per RT60 target")  # fmt: skip
@click.option("--duration", type=float, default=4.0, show_default=True,
              help="Utterance length in s")  # fmt: skip
@click.option("--rir-model", type=click.Choice(RIR_MODELS), default=IMAGE, show_default=True)
@click.option("--channels", type=click.IntRange(min=1), default=1, show_default=True)
@click.option(
    "--duplicate-channels",
    is_flag=True,
    default=False,
    help="Copy one microphone's signal to every channel",
)
@click.option("--no-rir-wavs", is_flag=True, default=False, help="Do not write the RIRs")
@click.option("--seed", type=int, default=0, show_default=True)
@jobs_option
@log_level_option
def main(
    outdir: str,
    rt60s: tuple[float, ...],
    taus: tuple[float, ...],
    snrs: tuple[float, ...],
    noise_types: tuple[str, ...],
    clean: bool,
    count: int,
    duration: float,
    rir_model: str,
    channels: int,
    duplicate_channels: bool,
    no_rir_wavs: bool,
    seed: int,
    jobs: int,
    log_level: str,
) -> int:
    """Synthesize reverberant, noisy utterances and a JSON-lines manifest.

    The default grid is five RT60 targets from 0.25 s to 1.05 s, mixed
    with white noise at 0, 10 and 20 dB SNR.
    """
    log.configure(log_level)
    targets = tuple(rt60s) + tuple(tau * DECAY_PER_TAU for tau in taus)
    plan = SynthPlan(
        rt60s=targets or DEFAULT_RT60S,
        snrs=tuple(snrs) or DEFAULT_SNRS,
        noise_types=tuple(noise_types) or (WHITE,),
        count=count,
        duration=duration,
        rir_model=rir_model,
        clean=clean,
        channels=channels,
        duplicate_channels=duplicate_channels,
        seed=seed,
        jobs=jobs,
        rir_wavs=not no_rir_wavs,
    )
    try:
        records = synthesize_dataset(plan.validate(), outdir)
    except SrmrError as e:
        return fail(e)
    except (OSError, RuntimeError) as e:
        click.echo(f"error: cannot write dataset: {e}", err=True)
        return EXIT_INPUT
    emit({"manifest": os.path.join(outdir, MANIFEST_NAME), "records": len(records)})
    return EXIT_OK


def run() -> None:
    """Entry point for the command-line interface."""
    main()


if __name__ == "__main__":
    run()
