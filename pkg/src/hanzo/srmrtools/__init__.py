"""Blind RT60 and DRR estimation from modulation-spectral energy ratios.

Pipeline: audio in, P.56 level normalisation, gammatone filterbank,
temporal envelopes, modulation spectra grouped into bands, then the
SRMR family of low/high modulation energy ratios, mapped to room
parameters by a trained linear or log-link GLM mapping.
"""

from .audio import PIPELINE_RATE, AudioClip, read_wav, resample, write_wav
from .config import NORMALIZED, ORIGINAL, PipelineConfig, default_configs, load_configs
from .errors import InputError, NumericError, SrmrError
from .level import active_speech_level, normalize_to
from .mapping import MappingModel, fit_mapping, load_model, predict, save_model
from .metrics import SrmrFeatures, analyze_features, extract_features, variant_from_name
from .modspec import ModulationTensor, analyze
from .records import ManifestRecord, open_record_stream, read_manifest
from .room import Rir, RirStats, rir_stats

__all__ = [
    "PIPELINE_RATE",
    "AudioClip",
    "read_wav",
    "write_wav",
    "resample",
    "ORIGINAL",
    "NORMALIZED",
    "PipelineConfig",
    "default_configs",
    "load_configs",
    "SrmrError",
    "InputError",
    "NumericError",
    "active_speech_level",
    "normalize_to",
    "ModulationTensor",
    "analyze",
    "SrmrFeatures",
    "analyze_features",
    "extract_features",
    "variant_from_name",
    "MappingModel",
    "fit_mapping",
    "predict",
    "save_model",
    "load_model",
    "Rir",
    "RirStats",
    "rir_stats",
    "ManifestRecord",
    "open_record_stream",
    "read_manifest",
]
