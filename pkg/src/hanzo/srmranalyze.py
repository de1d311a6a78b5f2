#!/usr/bin/env python
"""srmranalyze - SRMR features, and room parameter estimates, for WAV files"""

import os

import click
import numpy as np

from .srmrtools import log
from .srmrtools.audio import read_wav
from .srmrtools.cli import (
    command,
    config_option,
    fail,
    jobs_option,
    keep_going_option,
    load_pipeline_configs,
    log_level_option,
    process_files,
)
from .srmrtools.config import MODES
from .srmrtools.errors import ModelFormatError, SrmrError
from .srmrtools.mapping import GLM_LOG, LINEAR, load_model, predict
from .srmrtools.metrics import (
    FEATURE_AVERAGE,
    PER_CHANNEL,
    VARIANT_NAMES,
    analyze_features,
    variant_from_name,
)

ESTIMATE_KEYS = {GLM_LOG: "rt60_s", LINEAR: "drr_db"}


def tensor_writer(path, outdir):
    """A callback writing each (channel, tensor) pair it gets as CSV under outdir."""
    os.makedirs(outdir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(path))[0]

    def write(channel, tensor) -> None:
        name = f"{stem}_ch{channel + 1}_{tensor.mode}.csv"
        with open(os.path.join(outdir, name), "w", newline="") as fh:
            tensor.write_csv(fh)

    return write


def analyze_file(path, variants, models=(), per_channel=False, configs=None, tensor_dir=None):
    """The output record of one file."""
    clip = read_wav(path)
    strategy = PER_CHANNEL if per_channel else FEATURE_AVERAGE
    on_tensor = tensor_writer(path, tensor_dir) if tensor_dir else None
    features = analyze_features(clip, variants, strategy, configs, on_tensor)

    record = {
        "source_file": str(path),
        "channels": clip.num_channels,
        "sample_rate": clip.sample_rate,
        "features": [
            f.to_record(path, c if per_channel else None)
            for v in variants
            for c, f in enumerate(features[v])
        ],
    }
    for model in models:
        values = [float(np.ravel(predict(model, f))[0]) for f in features[model.variant]]
        record[ESTIMATE_KEYS[model.kind]] = values if per_channel else values[0]
    return record


@command()
@click.option(
    "-v",
    "--variant",
    "variant_names",
    multiple=True,
    default=("nsrmr",),
    show_default=True,
    help=f"Metric variant, repeatable: {', '.join(VARIANT_NAMES)}",
)
@click.option(
    "-m",
    "--mode",
    type=click.Choice(MODES),
    default=None,
    help="Pipeline mode; srmr and osrmr run normalized become nsrmr and nosrmr",
)
@click.option(
    "-M",
    "--model",
    "model_files",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Trained mapping (from srmrtrain), repeatable",
)
@click.option("--per-channel", is_flag=True, default=False, help="Features of every channel")
@click.option(
    "--tensor-csv",
    "tensor_dir",
    type=click.Path(file_okay=False),
    default=None,
    help="Directory to dump modulation tensors into as CSV",
)
@keep_going_option
@jobs_option
@config_option
@log_level_option
@click.argument("audio_files", nargs=-1, required=True, type=click.Path(dir_okay=False))
def main(
    variant_names: tuple[str, ...],
    mode: str | None,
    model_files: tuple[str, ...],
    per_channel: bool,
    tensor_dir: str | None,
    keep_going: bool,
    jobs: int,
    config_file: str | None,
    log_level: str,
    audio_files: tuple[str, ...],
) -> int:
    """Compute SRMR features of WAV files, one JSON line per file.

    Multi-channel files are averaged over channels unless --per-channel.
    With --model the line also carries rt60_s or drr_db estimates.
    """
    log.configure(log_level)
    try:
        variants = list(dict.fromkeys(variant_from_name(v, mode) for v in variant_names))
        configs = load_pipeline_configs(config_file)
        models = [load_model(p) for p in model_files]
        for path, model in zip(model_files, models, strict=True):
            if model.variant is None:
                raise ModelFormatError(f"{path}: model does not name its feature variant")
            if model.variant not in variants:
                variants.append(model.variant)
    except SrmrError as e:
        return fail(e)
    return process_files(
        lambda path: analyze_file(path, variants, models, per_channel, configs, tensor_dir),
        audio_files,
        jobs,
        keep_going,
    )


def run() -> None:
    """Entry point for the command-line interface."""
    main()


if __name__ == "__main__":
    run()
