#!/usr/bin/env python
"""srmrtrain - fit a feature to RT60 or DRR mapping on a dataset manifest"""

import os

import click

from .srmrtools import log
from .srmrtools.cli import (
    command,
    config_option,
    emit,
    fail,
    jobs_option,
    load_pipeline_configs,
    log_level_option,
)
from .srmrtools.config import MODES
from .srmrtools.errors import EXIT_INPUT, EXIT_OK, InputError, SrmrError
from .srmrtools.evaluation import extract_features, split_records, training_rows
from .srmrtools.mapping import DRR, RT60, TARGETS, fit_mapping, save_model
from .srmrtools.metrics import (
    CHANNEL_STRATEGIES,
    FEATURE_AVERAGE,
    VARIANT_NAMES,
    variant_from_name,
)
from .srmrtools.records import read_manifest

MIN_RECORDS = 10


@command()
@click.option("-v", "--variant", "variant_name", default="nsrmr", show_default=True,
              help=f"Metric variant: {', '.join(VARIANT_NAMES)}")  # fmt: skip
@click.option("-m", "--mode", type=click.Choice(MODES), default=None, help="Pipeline mode")
@click.option("-t", "--target", type=click.Choice(TARGETS), default=RT60, show_default=True)
@click.option(
    "--channel-strategy",
    type=click.Choice(CHANNEL_STRATEGIES),
    default=FEATURE_AVERAGE,
    show_default=True,
)
@click.option("--train-fraction", type=click.FloatRange(0, 1, min_open=True), default=1.0,
              show_default=True, help="Train on this share of the rooms, split as srmreval does")  # fmt: skip
@click.option("--seed", "split_seed", type=int, default=0, show_default=True,
              help="Split seed with --train-fraction under 1")  # fmt: skip
@click.option("-o", "--out", "out_file", required=True, type=click.Path(dir_okay=False),
              help="Model file to write")  # fmt: skip
@jobs_option
@config_option
@log_level_option
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
def main(
    variant_name: str,
    mode: str | None,
    target: str,
    channel_strategy: str,
    train_fraction: float,
    split_seed: int,
    out_file: str,
    jobs: int,
    config_file: str | None,
    log_level: str,
    manifest: str,
) -> int:
    """Train a mapping from one metric variant to RT60 (log-link GLM) or DRR (linear).

    Prints the training deviance and record count as a JSON line.
    """
    log.configure(log_level)
    try:
        variant = variant_from_name(variant_name, mode)
        configs = load_pipeline_configs(config_file)
        records, _ = split_records(read_manifest(manifest), train_fraction, split_seed)
        utterances, skipped = extract_features(
            records, os.path.dirname(manifest), [variant], channel_strategy, configs, jobs
        )
        x, y = training_rows(utterances, variant, target)
        usable = sum(1 for u in utterances if not (target == DRR and u.record.direct_only))
        if usable < MIN_RECORDS:
            raise InputError(
                f"{usable} usable records in {manifest}, training needs at least {MIN_RECORDS}"
            )
        model = fit_mapping(x, y, target, variant)
        save_model(model, out_file)
    except SrmrError as e:
        return fail(e)
    except OSError as e:
        click.echo(f"error: cannot write {out_file}: {e}", err=True)
        return EXIT_INPUT

    emit({
        "model": out_file,
        "kind": model.kind,
        "variant": variant,
        "target": target,
        "n": usable,
        "rows": model.n_train,
        "skipped": len(skipped),
        "deviance": model.deviance,
    })  # fmt: skip
    return EXIT_OK


def run() -> None:
    """Entry point for the command-line interface."""
    main()


if __name__ == "__main__":
    run()
