"""Speech-to-reverberation modulation energy ratios.

Every metric is a ratio of sums over acoustic bands and active frames of
a ModulationTensor. Modulation band indices are 1-based, as in the
metric names: band 1 is the lowest modulation band.
"""

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from hanzo.srmrtools.audio import AudioClip
from hanzo.srmrtools.config import MOD_BANDS, NORMALIZED, ORIGINAL, PipelineConfig
from hanzo.srmrtools.errors import (
    ConfigError,
    DegenerateTensorError,
    HeterogeneousFeaturesError,
    InputError,
    SilentInputError,
)
from hanzo.srmrtools.level import TARGET_LEVEL, normalize_to
from hanzo.srmrtools.log import debug
from hanzo.srmrtools.modspec import ModulationTensor, analyze

SRMR_K_VECTOR = "SRMR_K_VECTOR"
OSRMR = "OSRMR"
SRMR = "SRMR"
NSRMR = "NSRMR"
NOSRMR = "NOSRMR"
NSRMR_STAR_K = "NSRMR_STAR_K"

HIGH_BANDS = (5, 6, 7, 8)
LOW_BANDS = (1, 2, 3, 4)
DEFAULT_STAR_K = 5
RELATIVE_FLOOR = 1e-12

FEATURE_AVERAGE = "feature-average"
PARAMETER_AVERAGE = "parameter-average"
SINGLE = "single"
PER_CHANNEL = "per-channel"
CHANNEL_STRATEGIES = (FEATURE_AVERAGE, PARAMETER_AVERAGE, SINGLE)

TensorCallback = Callable[[int, ModulationTensor], None]


@dataclass(frozen=True)
class SrmrFeatures:
    """Values of one metric variant; ``k`` is set for NSRMR_STAR_K."""

    variant: str
    values: tuple[float, ...]
    mode: str
    k: int | None = None

    def __post_init__(self):
        values = tuple(float(v) for v in np.atleast_1d(self.values))
        object.__setattr__(self, "values", values)
        registered = VARIANTS.get(self.variant)
        if registered is None:
            raise InputError(f"unknown variant {self.variant!r}")
        if self.mode != registered.mode:
            raise InputError(f"{self.variant} is a {registered.mode}-mode variant, got {self.mode}")
        if len(values) != registered.dimension:
            raise InputError(
                f"{self.variant} carries {registered.dimension} values, got {len(values)}"
            )
        if not all(np.isfinite(v) and v > 0 for v in values):
            raise DegenerateTensorError(f"{self.variant} values must be finite and positive")

    @property
    def dimension(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def to_record(self, source_file=None, channel=None) -> dict:
        return {
            "variant": self.variant,
            "mode": self.mode,
            "k": self.k,
            "values": list(self.values),
            "source_file": None if source_file is None else str(source_file),
            "channel": channel,
        }


def _require_active(tensor: ModulationTensor) -> np.ndarray:
    if tensor.shape[1] != MOD_BANDS:
        raise ConfigError(f"SRMR ratios need {MOD_BANDS} modulation bands, got {tensor.shape[1]}")
    if tensor.num_active < 1:
        raise DegenerateTensorError("tensor has no active frames")
    return tensor.active_energies()


def _band_totals(tensor: ModulationTensor) -> np.ndarray:
    """Energy per modulation band, summed over acoustic bands and active frames."""
    return _require_active(tensor).sum(axis=(0, 2))


def _ratio(numerator: float, denominator: float, name: str) -> float:
    if not denominator > 0:
        raise DegenerateTensorError(f"{name}: zero energy in the denominator bands")
    value = numerator / denominator
    if not (np.isfinite(value) and value > 0):
        raise DegenerateTensorError(f"{name}: zero energy in the numerator band")
    return float(value)


def _check_band(tensor: ModulationTensor, k: int) -> None:
    if k not in HIGH_BANDS or k > tensor.shape[1]:
        raise InputError(f"modulation band k must be one of {HIGH_BANDS}, got {k}")


def srmr_k(tensor: ModulationTensor, k: int) -> float:
    """Band-1 energy over band-k energy."""
    _check_band(tensor, k)
    totals = _band_totals(tensor)
    return _ratio(totals[0], totals[k - 1], f"SRMR_{k}")


def srmr_k_vector(tensor: ModulationTensor) -> tuple[float, ...]:
    return tuple(srmr_k(tensor, k) for k in HIGH_BANDS)


def osrmr(tensor: ModulationTensor) -> float:
    """Band-1 energy over the energy of bands 5 to 8."""
    totals = _band_totals(tensor)
    return _ratio(totals[0], totals[4:8].sum(), "OSRMR")


def srmr(tensor: ModulationTensor) -> float:
    """Energy of bands 1 to 4 over the energy of bands 5 to 8."""
    totals = _band_totals(tensor)
    return _ratio(totals[0:4].sum(), totals[4:8].sum(), "SRMR")


def nsrmr_star(tensor: ModulationTensor, k: int = DEFAULT_STAR_K) -> float:
    """Per-cell band-1 / band-k ratios summed over bands and active frames, over the active count.

    Denominators are floored at 1e-12 of the tensor's largest energy.
    """
    if tensor.mode != NORMALIZED:
        raise InputError("NSRMR* is defined on normalized-mode tensors")
    _check_band(tensor, k)
    active = _require_active(tensor)
    peak = tensor.energies.max()
    if not peak > 0:
        raise DegenerateTensorError("NSRMR*: tensor is all zeros")
    denominator = np.maximum(active[:, k - 1, :], RELATIVE_FLOOR * peak)
    total = (active[:, 0, :] / denominator).sum()
    return _ratio(total, float(tensor.num_active), f"NSRMR*_{k}")


@dataclass(frozen=True)
class Variant:
    name: str
    mode: str
    dimension: int
    compute: Callable[[ModulationTensor, int | None], Sequence[float]]


VARIANTS: dict[str, Variant] = {}


def register_variant(name: str, mode: str, dimension: int = 1):
    """Decorator adding a tensor -> values function to the variant table."""

    def _register(fn):
        VARIANTS[name] = Variant(name, mode, dimension, fn)
        return fn

    return _register


@register_variant(SRMR_K_VECTOR, ORIGINAL, dimension=len(HIGH_BANDS))
def _srmr_k_vector(tensor, k):
    return srmr_k_vector(tensor)


@register_variant(OSRMR, ORIGINAL)
def _osrmr(tensor, k):
    return (osrmr(tensor),)


@register_variant(SRMR, ORIGINAL)
def _srmr(tensor, k):
    return (srmr(tensor),)


@register_variant(NSRMR, NORMALIZED)
def _nsrmr(tensor, k):
    return (srmr(tensor),)


@register_variant(NOSRMR, NORMALIZED)
def _nosrmr(tensor, k):
    return (osrmr(tensor),)


@register_variant(NSRMR_STAR_K, NORMALIZED)
def _nsrmr_star(tensor, k):
    return (nsrmr_star(tensor, DEFAULT_STAR_K if k is None else k),)


# command line spellings
VARIANT_NAMES = {
    "srmr-k-vector": SRMR_K_VECTOR,
    "osrmr": OSRMR,
    "srmr": SRMR,
    "nsrmr": NSRMR,
    "nosrmr": NOSRMR,
    "nsrmr-star": NSRMR_STAR_K,
}

# what srmr/osrmr become when run through the normalized pipeline
NORMALIZED_COUNTERPARTS = {SRMR: NSRMR, OSRMR: NOSRMR}


def variant_from_name(name: str, mode: str | None = None) -> str:
    """Resolve a command line or canonical variant name."""
    variant = VARIANT_NAMES.get(name.lower(), name.upper())
    if variant not in VARIANTS:
        raise InputError(f"unknown variant {name!r}, expected one of {', '.join(VARIANT_NAMES)}")
    if mode == NORMALIZED:
        variant = NORMALIZED_COUNTERPARTS.get(variant, variant)
    elif mode is not None and VARIANTS[variant].mode != mode:
        raise InputError(f"variant {variant} cannot run in {mode} mode")
    return variant


def variant_mode(variant: str) -> str:
    return VARIANTS[variant].mode


def extract_features(tensor: ModulationTensor, variant: str, k: int | None = None) -> SrmrFeatures:
    registered = VARIANTS.get(variant)
    if registered is None:
        raise InputError(f"unknown variant {variant!r}")
    if tensor.mode != registered.mode:
        raise InputError(f"{variant} needs a {registered.mode}-mode tensor, got {tensor.mode}")
    if variant == NSRMR_STAR_K and k is None:
        k = DEFAULT_STAR_K
    return SrmrFeatures(variant, tuple(registered.compute(tensor, k)), registered.mode, k)


def average_channel_features(features: Sequence[SrmrFeatures]) -> SrmrFeatures:
    """Elementwise mean over channels of one variant's features.

    Raises:
        HeterogeneousFeaturesError: variants, modes or k differ
    """
    if not features:
        raise InputError("no features to average")
    first = features[0]
    for f in features[1:]:
        if (f.variant, f.mode, f.k) != (first.variant, first.mode, first.k):
            raise HeterogeneousFeaturesError(
                f"cannot average {f.variant}/{f.mode}/{f.k} with "
                f"{first.variant}/{first.mode}/{first.k}"
            )
    total = first.as_array()
    for f in features[1:]:
        total = total + f.as_array()
    return SrmrFeatures(first.variant, tuple(total / len(features)), first.mode, first.k)


def channel_features(
    clip: AudioClip,
    variants: Iterable[str],
    configs: dict[str, PipelineConfig] | None = None,
    target_level: float = TARGET_LEVEL,
    on_tensor: TensorCallback | None = None,
) -> dict[str, list[SrmrFeatures]]:
    """Per-channel features of each variant after joint level normalisation.

    One tensor is computed per (channel, mode), whatever the number of
    variants sharing it, and handed to ``on_tensor(channel, tensor)``
    when given.
    """
    variants = list(dict.fromkeys(variants))
    configs = configs or {}
    modes = sorted({variant_mode(v) for v in variants})
    if not np.any(clip.channels):
        raise SilentInputError("audio is all zeros")
    clip = normalize_to(clip, target_level)

    out: dict[str, list[SrmrFeatures]] = {v: [] for v in variants}
    for index in range(clip.num_channels):
        channel = clip.channel(index)
        tensors = {
            mode: analyze(channel, configs.get(mode) or PipelineConfig.for_mode(mode))
            for mode in modes
        }
        debug("channel", index, "active frames", {m: t.num_active for m, t in tensors.items()})
        if on_tensor is not None:
            for tensor in tensors.values():
                on_tensor(index, tensor)
        for v in variants:
            out[v].append(extract_features(tensors[variant_mode(v)], v))
    return out


def analyze_features(
    clip: AudioClip,
    variants: Iterable[str],
    channel_strategy: str = FEATURE_AVERAGE,
    configs: dict[str, PipelineConfig] | None = None,
    on_tensor: TensorCallback | None = None,
) -> dict[str, list[SrmrFeatures]]:
    """Features for each variant under a channel strategy.

    ``feature-average`` returns one averaged feature set per variant,
    ``single`` only the first channel's, and ``per-channel`` or
    ``parameter-average`` every channel's, in channel order.
    """
    if channel_strategy == SINGLE:
        clip = clip.channel(0)
    elif channel_strategy not in (FEATURE_AVERAGE, PARAMETER_AVERAGE, PER_CHANNEL):
        raise InputError(f"unknown channel strategy {channel_strategy!r}")
    per_channel = channel_features(clip, variants, configs, on_tensor=on_tensor)
    if channel_strategy == FEATURE_AVERAGE:
        return {v: [average_channel_features(fs)] for v, fs in per_channel.items()}
    return per_channel
