"""Modulation-spectral pipeline configuration."""

import json
from dataclasses import asdict, dataclass, fields, replace

from hanzo.srmrtools.errors import ConfigError

ORIGINAL = "original"
NORMALIZED = "normalized"
MODES = (ORIGINAL, NORMALIZED)
MOD_BANDS = 8  # the SRMR ratios compare bands 1-4 against bands 5-8


@dataclass(frozen=True)
class PipelineConfig:
    """Parameters of the gammatone / envelope / modulation-band pipeline.

    Times are in seconds, frequencies in Hz. ``energy_floor_db`` is None
    when frames are never discarded (original mode).
    """

    mode: str = ORIGINAL
    num_acoustic_bands: int = 23
    cf_min: float = 125.0
    cf_max: float = 6400.0
    frame_len: float = 0.256
    frame_hop: float = 0.032
    num_mod_bands: int = 8
    mod_range: tuple[float, float] = (4.0, 128.0)
    energy_floor_db: float | None = None
    envelope_rate: int = 500
    dft_size: int = 1024

    @classmethod
    def original(cls) -> "PipelineConfig":
        return cls()

    @classmethod
    def normalized(cls) -> "PipelineConfig":
        return cls(mode=NORMALIZED, mod_range=(4.0, 40.0), energy_floor_db=30.0)

    @classmethod
    def for_mode(cls, mode: str) -> "PipelineConfig":
        if mode == ORIGINAL:
            return cls.original()
        if mode == NORMALIZED:
            return cls.normalized()
        raise ConfigError(f"unknown mode {mode!r}, expected one of {MODES}")

    @property
    def frame_samples(self) -> int:
        return int(round(self.frame_len * self.envelope_rate))

    @property
    def hop_samples(self) -> int:
        return int(round(self.frame_hop * self.envelope_rate))

    def validate(self, sample_rate: int | None = None) -> "PipelineConfig":
        """Check the invariants between fields, returning self.

        Raises:
            ConfigError: on the first violated constraint
        """
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.num_acoustic_bands < 1:
            raise ConfigError("num_acoustic_bands must be positive")
        if self.num_mod_bands != MOD_BANDS:
            raise ConfigError(f"num_mod_bands must be {MOD_BANDS}, got {self.num_mod_bands}")
        if not 0 < self.cf_min < self.cf_max:
            raise ConfigError(f"need 0 < cf_min < cf_max, got {self.cf_min}, {self.cf_max}")
        if sample_rate is not None and self.cf_max >= sample_rate / 2:
            raise ConfigError(f"cf_max {self.cf_max} Hz is not below Nyquist of {sample_rate} Hz")
        if not 0 < self.frame_hop <= self.frame_len:
            raise ConfigError("need 0 < frame_hop <= frame_len")
        if self.hop_samples < 1:
            raise ConfigError("frame_hop is shorter than one envelope sample")
        lo, hi = self.mod_range
        if not 0 < lo < hi:
            raise ConfigError(f"bad modulation range {self.mod_range}")
        if hi >= self.envelope_rate / 2:
            raise ConfigError(
                f"modulation range upper bound {hi} Hz is not below half the "
                f"envelope rate {self.envelope_rate} Hz"
            )
        if self.dft_size < self.frame_samples:
            raise ConfigError("dft_size is shorter than a frame")
        if self.energy_floor_db is not None:
            if self.mode != NORMALIZED:
                raise ConfigError("energy floor applies only in normalized mode")
            if self.energy_floor_db <= 0:
                raise ConfigError("energy floor must be positive")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mod_range"] = list(self.mod_range)
        return d

    def override(self, values: dict) -> "PipelineConfig":
        """Return a copy with ``values`` applied; unknown keys are rejected."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values = dict(values)
        if "mod_range" in values:
            try:
                lo, hi = values["mod_range"]
            except (TypeError, ValueError) as e:
                raise ConfigError("mod_range must be a pair") from e
            values["mod_range"] = (float(lo), float(hi))
        try:
            return replace(self, **values).validate()
        except TypeError as e:
            raise ConfigError(str(e)) from e


def default_configs() -> dict:
    """Canonical defaults of both modes, as printed by ``--dump-config``."""
    return {mode: PipelineConfig.for_mode(mode).to_dict() for mode in MODES}


def load_configs(path) -> dict[str, PipelineConfig]:
    """Per-mode configs from a JSON file.

    The file is either shaped like ``default_configs()`` (an object per
    mode, each holding overrides for that mode) or a flat object of
    overrides for the mode its ``mode`` key names, original by default.
    Modes the file does not mention keep their canonical defaults.
    """
    try:
        with open(path) as fh:
            values = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(values, dict):
        raise ConfigError(f"config {path} must hold a JSON object")

    configs = {mode: PipelineConfig.for_mode(mode) for mode in MODES}
    if values and set(values) <= set(MODES):
        for mode, overrides in values.items():
            if not isinstance(overrides, dict):
                raise ConfigError(f"config {path}: {mode} must hold a JSON object")
            overrides = {k: v for k, v in overrides.items() if k != "mode"}
            configs[mode] = configs[mode].override(overrides)
    else:
        values = dict(values)
        mode = values.pop("mode", ORIGINAL)
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}, expected one of {MODES}")
        configs[mode] = configs[mode].override(values)
    return configs
