#!/usr/bin/env python
"""rirstats - ground-truth RT60 and DRR of room impulse response WAVs"""

import click

from .srmrtools import log
from .srmrtools.audio import read_wav
from .srmrtools.cli import command, jobs_option, keep_going_option, log_level_option, process_files
from .srmrtools.errors import DegenerateDecayError, InputError, NumericError
from .srmrtools.room import DIRECT_ONLY, Rir, drr, format_drr, schroeder_rt60


def rir_record(path, channel: int = 1) -> dict:
    """RT60 and DRR of one channel of a RIR file.

    A response with a measurable DRR but no usable decay keeps its DRR
    and reports the decay problem in ``rt60_error``. With neither, the
    decay error is raised.
    """
    clip = read_wav(path)
    if not 1 <= channel <= clip.num_channels:
        raise InputError(f"{path} has {clip.num_channels} channels, no channel {channel}")
    rir = Rir.from_clip(clip, channel - 1)
    ratio = drr(rir)
    record = {"path": str(path), "channel": channel, "rt60_s": None, "drr_db": format_drr(ratio)}
    try:
        record["rt60_s"] = schroeder_rt60(rir)
    except NumericError as e:
        if ratio == DIRECT_ONLY:
            raise DegenerateDecayError(f"{path}: {e}") from e
        record["rt60_error"] = type(e).__name__
    return record


@command()
@click.option("--channel", type=click.IntRange(min=1), default=1, show_default=True,
              help="Channel of multi-channel files to measure")  # fmt: skip
@keep_going_option
@jobs_option
@log_level_option
@click.argument("rir_files", nargs=-1, required=True, type=click.Path(dir_okay=False))
def main(
    channel: int,
    keep_going: bool,
    jobs: int,
    log_level: str,
    rir_files: tuple[str, ...],
) -> int:
    """Measure Schroeder RT60 and DRR of room impulse responses, one JSON line per file."""
    log.configure(log_level)
    return process_files(lambda path: rir_record(path, channel), rir_files, jobs, keep_going)


def run() -> None:
    """Entry point for the command-line interface."""
    main()


if __name__ == "__main__":
    run()
