"""Active speech level (ITU-T P.56 method B) and level normalisation.

Levels are in dBov: 0 dBov is an RMS of 1.0, a full-scale square wave.
"""

import logging
from dataclasses import dataclass
from math import ceil

import numpy as np
from scipy.signal import lfilter

from hanzo.srmrtools.audio import AudioClip
from hanzo.srmrtools.errors import InputError, InsufficientDurationError, NoActivityError

log = logging.getLogger(__name__)

TIME_CONSTANT = 0.03  # s, envelope smoothing
HANGOVER = 0.2  # s
MARGIN = 15.9  # dB between active level and threshold
NUM_THRESHOLDS = 16  # 2**0 down to 2**-15
MIN_DURATION = 0.25  # s

TARGET_LEVEL = -26.0  # dBov


@dataclass(frozen=True)
class ActiveLevelResult:
    active_level: float
    activity_factor: float
    rms_level: float


@dataclass(frozen=True)
class LevelNormalization:
    reference_level: float
    gain: float
    clipped_samples: int

    @property
    def gain_db(self) -> float:
        return 20.0 * np.log10(self.gain)


def _envelope(x: np.ndarray, sample_rate: int) -> np.ndarray:
    g = np.exp(-1.0 / (sample_rate * TIME_CONSTANT))
    p = lfilter([1.0 - g], [1.0, -g], np.abs(x))
    return lfilter([1.0 - g], [1.0, -g], p)


def _activity_counts(q: np.ndarray, thresholds: np.ndarray, hangover: int) -> np.ndarray:
    """Active sample count per threshold.

    A sample is active when the envelope reached the threshold at that
    sample or within the preceding ``hangover`` samples.
    """
    n = np.arange(q.size)
    start = np.maximum(n - hangover, 0)
    counts = np.empty(thresholds.size, dtype=np.int64)
    for j, c in enumerate(thresholds):
        hits = np.concatenate(([0], np.cumsum(q >= c)))
        counts[j] = np.count_nonzero(hits[n + 1] - hits[start] > 0)
    return counts


def active_speech_level(clip: AudioClip) -> ActiveLevelResult:
    """Measure the active speech level of a single-channel clip.

    Envelope thresholds run from full scale down to full scale * 2**-15.
    The active level is where the long-term level over active samples
    sits ``MARGIN`` dB above the threshold, interpolated between the two
    ladder steps that straddle it.

    Raises:
        InsufficientDurationError: clip shorter than 0.25 s
        NoActivityError: nothing crosses even the lowest threshold
    """
    if clip.num_channels != 1:
        raise InputError(f"active speech level needs one channel, got {clip.num_channels}")
    x = clip.channels[0]
    fs = clip.sample_rate
    if x.size < MIN_DURATION * fs:
        raise InsufficientDurationError(
            f"{x.size / fs:.3f} s is shorter than the {MIN_DURATION} s a level measurement needs"
        )
    sq = float(np.dot(x, x))
    if sq == 0.0:
        raise NoActivityError("signal is all zeros")

    # ascending: lowest threshold first
    thresholds = 2.0 ** -np.arange(NUM_THRESHOLDS - 1, -1, -1, dtype=np.float64)
    counts = _activity_counts(_envelope(x, fs), thresholds, ceil(HANGOVER * fs))

    if counts[0] == 0:
        raise NoActivityError("signal never reaches the lowest activity threshold")

    with np.errstate(divide="ignore"):
        a_db = 10.0 * np.log10(sq / counts)
    c_db = 20.0 * np.log10(thresholds)
    delta = a_db - c_db

    if delta[0] < MARGIN:
        raise NoActivityError("signal level is below the lowest activity threshold")

    active = a_db[counts > 0][-1]
    for j in range(1, NUM_THRESHOLDS):
        if counts[j] == 0:
            break
        if delta[j] <= MARGIN:
            t = (delta[j - 1] - MARGIN) / (delta[j - 1] - delta[j])
            active = a_db[j - 1] + t * (a_db[j] - a_db[j - 1])
            break

    rms_level = 10.0 * np.log10(sq / x.size)
    active = max(float(active), rms_level)
    factor = float(np.clip((sq / x.size) / 10.0 ** (active / 10.0), 0.0, 1.0))
    return ActiveLevelResult(active_level=active, activity_factor=factor, rms_level=rms_level)


def normalization_gain(clip: AudioClip, target: float = TARGET_LEVEL) -> LevelNormalization:
    """Common gain bringing the first channel's active level to ``target``."""
    reference = active_speech_level(clip.channel(0))
    gain = 10.0 ** ((target - reference.active_level) / 20.0)
    clipped = int(np.count_nonzero(np.abs(clip.channels * gain) > 1.0))
    return LevelNormalization(reference.active_level, gain, clipped)


def normalize_to(clip: AudioClip, target: float = TARGET_LEVEL) -> AudioClip:
    """Scale every channel by one gain so channel 0 sits at ``target`` dBov.

    Samples pushed beyond full scale are kept, and counted in the log.
    """
    norm = normalization_gain(clip, target)
    if norm.clipped_samples:
        log.warning(
            "%d samples exceed full scale after %.2f dB gain",
            norm.clipped_samples,
            norm.gain_db,
        )
    return clip.scaled(norm.gain)
