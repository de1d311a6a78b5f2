#!/usr/bin/env python
"""srmreval - train/test evaluation of SRMR estimators on a dataset manifest"""

from dataclasses import replace

import click
from click.core import ParameterSource

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
from .srmrtools.errors import EXIT_INPUT, EXIT_OK, SrmrError
from .srmrtools.evaluation import ExperimentPlan, run_experiment
from .srmrtools.mapping import TARGETS
from .srmrtools.metrics import CHANNEL_STRATEGIES, FEATURE_AVERAGE, variant_from_name


def _explicit(ctx: click.Context, name: str) -> bool:
    return ctx.get_parameter_source(name) not in (ParameterSource.DEFAULT, None)


def build_plan(ctx, plan_file, variant_names, mode, targets, channel_strategy, split_seed,
               train_fraction, reference) -> ExperimentPlan:  # fmt: skip
    """The plan file, if any, with explicitly given flags on top."""
    plan = ExperimentPlan.from_file(plan_file) if plan_file else None
    variants = tuple(dict.fromkeys(variant_from_name(v, mode) for v in variant_names))
    flags = {
        "variants": variants,
        "targets": tuple(targets),
        "channel_strategy": channel_strategy,
        "split_seed": split_seed,
        "train_fraction": train_fraction,
        "reference_variant": None if reference is None else variant_from_name(reference, mode),
    }
    params = {
        "variants": "variant_names",
        "targets": "targets",
        "channel_strategy": "channel_strategy",
        "split_seed": "split_seed",
        "train_fraction": "train_fraction",
        "reference_variant": "reference",
    }
    if plan is None:
        return ExperimentPlan(**flags).validate()
    given = {k: v for k, v in flags.items() if _explicit(ctx, params[k])}
    if "variants" in given and plan.reference_variant not in given["variants"]:
        given.setdefault("reference_variant", None)
    return replace(plan, **given).validate()


@command()
@click.option("-p", "--plan", "plan_file", type=click.Path(exists=True, dir_okay=False),
              help="Experiment plan JSON; flags given explicitly override it")  # fmt: skip
@click.option("-o", "--outdir", required=True, type=click.Path(file_okay=False),
              help="Directory for the report files")  # fmt: skip
@click.option("--prefix", default="report", show_default=True, help="Report file name stem")
@click.option("-v", "--variant", "variant_names", multiple=True, default=("nsrmr",),
              show_default=True, help="Metric variant, repeatable")  # fmt: skip
@click.option("-m", "--mode", type=click.Choice(MODES), default=None, help="Pipeline mode")
@click.option("-t", "--target", "targets", multiple=True, type=click.Choice(TARGETS),
              default=TARGETS, show_default=True, help="Target, repeatable")  # fmt: skip
@click.option("--channel-strategy", type=click.Choice(CHANNEL_STRATEGIES),
              default=FEATURE_AVERAGE, show_default=True)  # fmt: skip
@click.option("--split-seed", "--seed", "split_seed", type=int, default=0, show_default=True)
@click.option("--train-fraction", type=click.FloatRange(0, 1, min_open=True), default=0.8,
              show_default=True)  # fmt: skip
@click.option("--reference-variant", "reference", default=None,
              help="Variant the relative gains are measured against")  # fmt: skip
@jobs_option
@config_option
@log_level_option
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def main(
    ctx: click.Context,
    plan_file: str | None,
    outdir: str,
    prefix: str,
    variant_names: tuple[str, ...],
    mode: str | None,
    targets: tuple[str, ...],
    channel_strategy: str,
    split_seed: int,
    train_fraction: float,
    reference: str | None,
    jobs: int,
    config_file: str | None,
    log_level: str,
    manifest: str,
) -> int:
    """Train on a seeded split of MANIFEST, test on the rest, write CSV and JSON reports.

    Rows are reported per noise type, SNR and channel count, pooled per
    noise type, and overall.
    """
    log.configure(log_level)
    try:
        plan = build_plan(ctx, plan_file, variant_names, mode, targets, channel_strategy,
                          split_seed, train_fraction, reference)  # fmt: skip
        configs = load_pipeline_configs(config_file)
        report = run_experiment(manifest, plan, configs=configs, jobs=jobs)
        paths = report.write(outdir, prefix)
    except SrmrError as e:
        return fail(e)
    except OSError as e:
        click.echo(f"error: cannot write report: {e}", err=True)
        return EXIT_INPUT

    emit({**paths, "n_test": report.n_test, "skipped": len(report.skipped)})
    return EXIT_OK


def run() -> None:
    """Entry point for the command-line interface."""
    main()


if __name__ == "__main__":
    run()
