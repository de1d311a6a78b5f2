"""Train/test experiments over a dataset manifest, and their figures of merit."""

import csv
import json
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from hanzo.srmrtools.audio import read_wav
from hanzo.srmrtools.config import PipelineConfig
from hanzo.srmrtools.errors import (
    ConfigError,
    InputError,
    NumericError,
    UndefinedCorrelationError,
)
from hanzo.srmrtools.mapping import RT60, TARGETS, MappingModel, fit_mapping, predict
from hanzo.srmrtools.metrics import (
    CHANNEL_STRATEGIES,
    FEATURE_AVERAGE,
    PARAMETER_AVERAGE,
    VARIANTS,
    SrmrFeatures,
    analyze_features,
    variant_from_name,
)
from hanzo.srmrtools.records import ManifestRecord, dumps, read_manifest

log = logging.getLogger(__name__)

ALL = "all"
CSV_COLUMNS = ("condition", "variant", "target", "n", "rmse", "pearson", "err_var")


def _pair(estimates, truths) -> tuple[np.ndarray, np.ndarray]:
    est = np.asarray(estimates, dtype=np.float64).ravel()
    tru = np.asarray(truths, dtype=np.float64).ravel()
    if est.size != tru.size:
        raise InputError(f"{est.size} estimates for {tru.size} truths")
    if est.size == 0:
        raise InputError("no values")
    return est, tru


def rmse(estimates, truths) -> float:
    est, tru = _pair(estimates, truths)
    return float(np.sqrt(np.mean((est - tru) ** 2)))


def error_variance(estimates, truths) -> float:
    """Population variance of the errors, rmse**2 minus squared bias."""
    est, tru = _pair(estimates, truths)
    return float(np.var(est - tru))


def pearson(a, b) -> float:
    """Sample correlation coefficient.

    Raises:
        UndefinedCorrelationError: fewer than two values, or a constant input
    """
    a, b = _pair(a, b)
    if a.size < 2:
        raise UndefinedCorrelationError("correlation needs at least two values")
    da = a - a.mean()
    db = b - b.mean()
    sa = np.sqrt(da @ da)
    sb = np.sqrt(db @ db)
    if sa == 0 or sb == 0:
        raise UndefinedCorrelationError("correlation of a constant sequence")
    return float(np.clip((da @ db) / (sa * sb), -1.0, 1.0))


@dataclass(frozen=True)
class ExperimentPlan:
    """What to train and test: feature variants, targets, channel handling and the split."""

    variants: tuple[str, ...]
    targets: tuple[str, ...] = TARGETS
    channel_strategy: str = FEATURE_AVERAGE
    split_seed: int = 0
    train_fraction: float = 0.8
    reference_variant: str | None = None

    def validate(self) -> "ExperimentPlan":
        if not self.variants:
            raise ConfigError("plan names no variants")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}")
        for t in self.targets:
            if t not in TARGETS:
                raise ConfigError(f"unknown target {t!r}, expected some of {TARGETS}")
        if not self.targets:
            raise ConfigError("plan names no targets")
        if self.channel_strategy not in CHANNEL_STRATEGIES:
            raise ConfigError(
                f"unknown channel strategy {self.channel_strategy!r}, "
                f"expected one of {CHANNEL_STRATEGIES}"
            )
        if not 0 < self.train_fraction <= 1:
            raise ConfigError("train_fraction must be in (0, 1]")
        if self.reference_variant is not None and self.reference_variant not in self.variants:
            raise ConfigError(f"reference variant {self.reference_variant} is not in the plan")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        known = {"variants", "targets", "channel_strategy", "split_seed", "train_fraction",
                 "reference_variant"}  # fmt: skip
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown plan keys: {', '.join(unknown)}")
        try:
            reference = d.get("reference_variant")
            return cls(
                variants=tuple(variant_from_name(v) for v in d.get("variants", ())),
                targets=tuple(str(t).lower() for t in d.get("targets", TARGETS)),
                channel_strategy=d.get("channel_strategy", FEATURE_AVERAGE),
                split_seed=int(d.get("split_seed", 0)),
                train_fraction=float(d.get("train_fraction", 0.8)),
                reference_variant=None if reference is None else variant_from_name(reference),
            ).validate()
        except (TypeError, ValueError, InputError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad plan: {e}") from e

    @classmethod
    def from_file(cls, path) -> "ExperimentPlan":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read plan {path}: {e}") from e
        if not isinstance(d, dict):
            raise ConfigError(f"plan {path} must hold a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variants"] = list(self.variants)
        d["targets"] = list(self.targets)
        return d


def split_records(
    records: list[ManifestRecord], train_fraction: float, seed: int
) -> tuple[list[ManifestRecord], list[ManifestRecord]]:
    """Split by room impulse response, stratified over RT60.

    Responses are ordered by true RT60 and cut into as many consecutive
    blocks as there are test responses; one response per block is drawn
    for test. Test utterances also heard in training are dropped. With
    ``train_fraction`` 1 every record is used for both.
    """
    if train_fraction >= 1:
        return list(records), list(records)
    rt60_of: dict[str, float] = {}
    for r in records:
        rt60_of.setdefault(r.rir_id, r.true_rt60_s)
    rirs = sorted(rt60_of, key=lambda rid: (rt60_of[rid], rid))
    n_test = int(round(len(rirs) * (1 - train_fraction)))
    if len(rirs) >= 2:
        n_test = min(max(n_test, 1), len(rirs) - 1)
    rng = np.random.default_rng(seed)
    test_rirs = set()
    for block in np.array_split(np.arange(len(rirs)), n_test) if n_test else []:
        test_rirs.add(rirs[int(block[rng.integers(block.size)])])

    train = [r for r in records if r.rir_id not in test_rirs]
    heard = {r.utterance_id for r in train}
    test = [r for r in records if r.rir_id in test_rirs and r.utterance_id not in heard]
    dropped = sum(1 for r in records if r.rir_id in test_rirs) - len(test)
    if dropped:
        log.info("dropped %d test records whose utterance is in the training split", dropped)
    return train, test


@dataclass
class UtteranceFeatures:
    record: ManifestRecord
    features: dict[str, list[SrmrFeatures]]


def _truth(record: ManifestRecord, target: str) -> float | None:
    if target == RT60:
        return record.true_rt60_s
    if record.direct_only:
        return None
    return record.true_drr_db


def extract_features(
    records: list[ManifestRecord],
    base_dir,
    variants,
    channel_strategy: str = FEATURE_AVERAGE,
    configs: dict[str, PipelineConfig] | None = None,
    jobs: int = 1,
) -> tuple[list[UtteranceFeatures], list[dict]]:
    """Features of every record, in record order, plus the records skipped as degenerate.

    Unreadable audio raises; numeric failures on a record are skipped.
    """

    def one(record: ManifestRecord):
        clip = read_wav(record.resolve(base_dir))
        try:
            return analyze_features(clip, variants, channel_strategy, configs), None
        except NumericError as e:
            return None, e

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(one, records))

    done, skipped = [], []
    for record, (features, error) in zip(records, results, strict=True):
        if error is not None:
            log.warning("skipping %s: %s", record.audio_path, error)
            skipped.append({"audio_path": record.audio_path, "error": type(error).__name__,
                            "message": str(error)})  # fmt: skip
        else:
            done.append(UtteranceFeatures(record, features))
    return done, skipped


def training_rows(utterances: list[UtteranceFeatures], variant: str, target: str):
    """Feature matrix and truths, a row per feature set; records without a truth are left out."""
    x, y = [], []
    for u in utterances:
        truth = _truth(u.record, target)
        if truth is None:
            continue
        for f in u.features[variant]:
            x.append(f.values)
            y.append(truth)
    return np.array(x), np.array(y)


def train_models(
    utterances: list[UtteranceFeatures], variants, targets
) -> dict[tuple[str, str], MappingModel]:
    """One mapping per (variant, target); per-channel features train a shared mapping."""
    models = {}
    for variant in variants:
        for target in targets:
            x, y = training_rows(utterances, variant, target)
            models[variant, target] = fit_mapping(x, y, target, variant)
    return models


def estimate(model: MappingModel, features: list[SrmrFeatures]) -> float:
    """Estimate from one feature set, or the mean estimate over per-channel sets."""
    values = [float(np.ravel(predict(model, f))[0]) for f in features]
    return float(sum(values) / len(values))


@dataclass(frozen=True)
class ReportRow:
    condition: str
    variant: str
    target: str
    n: int
    rmse: float
    pearson: float | None
    err_var: float
    aggregate: bool = False
    noise_type: str | None = None
    snr_db: float | None = None
    channels: int | None = None

    def csv_row(self) -> list[str]:
        return [
            self.condition,
            self.variant,
            self.target,
            str(self.n),
            repr(self.rmse),
            "" if self.pearson is None else repr(self.pearson),
            repr(self.err_var),
        ]


def _condition_label(noise_type: str, snr_db, channels) -> str:
    level = ALL if snr_db == ALL else ("-" if snr_db is None else f"{snr_db:g}dB")
    return f"{noise_type}/{level}/{channels}ch"


def _row(condition, variant, target, preds, aggregate=False, **where) -> ReportRow:
    est = [p["estimate"] for p in preds]
    tru = [p["truth"] for p in preds]
    try:
        r = pearson(est, tru)
    except UndefinedCorrelationError as e:
        log.warning("%s %s %s: correlation undefined: %s", condition, variant, target, e)
        r = None
    return ReportRow(condition, variant, target, len(preds), rmse(est, tru),
                     r, error_variance(est, tru), aggregate, **where)  # fmt: skip


def build_rows(predictions: list[dict]) -> list[ReportRow]:
    """Per-level rows, pooled rows per noise type and an overall row per variant and target.

    Only per-level rows partition the predictions; pooled rows are
    flagged ``aggregate``.
    """
    groups = defaultdict(list)
    for p in predictions:
        groups[p["variant"], p["target"]].append(p)

    rows = []
    for (variant, target), preds in sorted(groups.items()):
        levels = defaultdict(list)
        by_noise = defaultdict(list)
        for p in preds:
            levels[p["noise_type"], p["snr_db"], p["channels"]].append(p)
            by_noise[p["noise_type"], p["channels"]].append(p)

        def level_key(key):
            noise, snr, channels = key
            return (noise, -math.inf if snr is None else snr, channels)

        for key in sorted(levels, key=level_key):
            noise, snr, channels = key
            rows.append(_row(_condition_label(noise, snr, channels), variant, target, levels[key],
                             noise_type=noise, snr_db=snr, channels=channels))  # fmt: skip
        for noise, channels in sorted(by_noise):
            rows.append(_row(_condition_label(noise, ALL, channels), variant, target,
                             by_noise[noise, channels], aggregate=True,
                             noise_type=noise, channels=channels))  # fmt: skip
        rows.append(_row(ALL, variant, target, preds, aggregate=True))
    return rows


def relative_gains(rows: list[ReportRow], reference_variant: str) -> list[dict]:
    """RMSE reduction and Pearson improvement of each variant's overall row over the reference's."""
    overall = {(r.variant, r.target): r for r in rows if r.condition == ALL}
    gains = []
    for (variant, target), row in sorted(overall.items()):
        ref = overall.get((reference_variant, target))
        if ref is None or variant == reference_variant:
            continue
        rmse_gain = (ref.rmse - row.rmse) / ref.rmse if ref.rmse > 0 else None
        if row.pearson is None or ref.pearson is None or ref.pearson == 0:
            pearson_gain = None
        else:
            pearson_gain = (row.pearson - ref.pearson) / abs(ref.pearson)
        gains.append({"variant": variant, "target": target, "reference": reference_variant,
                      "rmse_reduction": rmse_gain, "pearson_improvement": pearson_gain})  # fmt: skip
    return gains


@dataclass
class EvalReport:
    plan: ExperimentPlan
    rows: list[ReportRow]
    predictions: list[dict]
    n_train: dict[str, int]
    n_test: int
    skipped: list[dict] = field(default_factory=list)
    gains: list[dict] = field(default_factory=list)

    def row(self, variant: str, target: str, condition: str = ALL) -> ReportRow:
        for r in self.rows:
            if (r.variant, r.target, r.condition) == (variant, target, condition):
                return r
        raise KeyError((variant, target, condition))

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "n_train": self.n_train,
            "n_test": self.n_test,
            "skipped": len(self.skipped),
            "skipped_records": self.skipped,
            "rows": [asdict(r) for r in self.rows],
            "relative_gains": self.gains,
        }

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(r.csv_row())

    def write(self, outdir, prefix: str = "report") -> dict[str, str]:
        """Write ``<prefix>.csv``, ``<prefix>.json`` and ``predictions.jsonl`` into ``outdir``."""
        os.makedirs(outdir, exist_ok=True)
        paths = {
            "csv": os.path.join(outdir, f"{prefix}.csv"),
            "json": os.path.join(outdir, f"{prefix}.json"),
            "predictions": os.path.join(outdir, "predictions.jsonl"),
        }
        with open(paths["csv"], "w", newline="") as fh:
            self.write_csv(fh)
        with open(paths["json"], "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, allow_nan=False)
            fh.write("\n")
        with open(paths["predictions"], "w") as fh:
            for p in self.predictions:
                fh.write(dumps(p))
                fh.write("\n")
        return paths


def run_experiment(
    manifest,
    plan: ExperimentPlan,
    base_dir=None,
    configs: dict[str, PipelineConfig] | None = None,
    jobs: int = 1,
) -> EvalReport:
    """Extract features, train on the training split, predict the test split and score it.

    ``manifest`` is a manifest path, whose directory audio paths are
    relative to, or a list of records with ``base_dir``.
    """
    plan.validate()
    if isinstance(manifest, (str, os.PathLike)):
        base_dir = os.path.dirname(os.fspath(manifest)) if base_dir is None else base_dir
        manifest = read_manifest(manifest)
    records = list(manifest)
    if not records:
        raise InputError("manifest is empty")

    train, test = split_records(records, plan.train_fraction, plan.split_seed)
    if not test:
        raise InputError("test split is empty")
    needed = {id(r) for r in train} | {id(r) for r in test}
    unique = [r for r in records if id(r) in needed]
    utterances, skipped = extract_features(
        unique, base_dir, plan.variants, plan.channel_strategy, configs, jobs
    )
    by_id = {id(u.record): u for u in utterances}
    train_u = [by_id[id(r)] for r in train if id(r) in by_id]
    test_u = [by_id[id(r)] for r in test if id(r) in by_id]

    models = train_models(train_u, plan.variants, plan.targets)

    predictions = []
    for u in test_u:
        rec = u.record
        for variant in plan.variants:
            for target in plan.targets:
                truth = _truth(rec, target)
                if truth is None:
                    continue
                predictions.append({
                    "utterance_id": rec.utterance_id,
                    "rir_id": rec.rir_id,
                    "audio_path": rec.audio_path,
                    "noise_type": rec.noise_type,
                    "snr_db": rec.snr_db,
                    "channels": rec.channels,
                    "variant": variant,
                    "target": target,
                    "estimate": estimate(models[variant, target], u.features[variant]),
                    "truth": truth,
                })  # fmt: skip

    rows = build_rows(predictions)
    gains = relative_gains(rows, plan.reference_variant) if plan.reference_variant else []
    n_train = {f"{v}/{t}": m.n_train for (v, t), m in sorted(models.items())}
    if plan.channel_strategy == PARAMETER_AVERAGE:
        log.info("parameter averaging: mappings trained on per-channel feature rows")
    return EvalReport(plan, rows, predictions, n_train, len(test_u), skipped, gains)
