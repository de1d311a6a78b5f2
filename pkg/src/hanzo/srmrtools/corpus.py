"""Synthetic source material: speech-like signals and noise generators.

All generators are deterministic in their seed.
"""

import numpy as np
from scipy.signal import butter, lfilter, sosfilt

from hanzo.srmrtools.audio import PIPELINE_RATE, AudioClip
from hanzo.srmrtools.errors import InputError

WHITE = "white"
SPEECH_SHAPED = "speech-shaped"
BABBLE = "babble"
NOISE_TYPES = (WHITE, SPEECH_SHAPED, BABBLE)

# (F1, F2, F3) in Hz
VOWELS = (
    (730, 1090, 2440),
    (530, 1840, 2480),
    (270, 2290, 3010),
    (570, 840, 2410),
    (300, 870, 2240),
    (660, 1720, 2410),
    (490, 1350, 1690),
)
FORMANT_BANDWIDTHS = (80.0, 100.0, 140.0)

SYLLABLE_RANGE = (0.12, 0.30)  # s, about 3 to 6 syllables a second
PAUSE_RANGE = (0.10, 0.35)
PAUSE_PROBABILITY = 0.15
FRICATIVE_PROBABILITY = 0.4
F0_RANGE = (90.0, 220.0)
DECLINATION = 0.15
BABBLE_TALKERS = 6
PEAK = 0.5


def _resonator(x, freq, bandwidth, sample_rate):
    r = np.exp(-np.pi * bandwidth / sample_rate)
    theta = 2 * np.pi * freq / sample_rate
    a = [1.0, -2 * r * np.cos(theta), r * r]
    return lfilter([sum(a)], a, x)


def _harmonic_source(f0: np.ndarray, sample_rate: int) -> np.ndarray:
    """Band-limited harmonic series with a -6 dB/octave tilt."""
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    out = np.zeros_like(f0)
    limit = 0.45 * sample_rate
    for h in range(1, int(limit // F0_RANGE[0]) + 1):
        out += np.where(h * f0 < limit, np.sin(h * phase) / h, 0.0)
    return out


def _raised_cosine(n: int) -> np.ndarray:
    return 0.5 * (1 - np.cos(2 * np.pi * (np.arange(n) + 0.5) / n))


def speech_like(duration: float, sample_rate: int = PIPELINE_RATE, seed: int = 0) -> AudioClip:
    """A mono signal with the temporal structure of running speech.

    Syllable-rate raised-cosine bursts of a harmonic source, shaped by
    vowel formants, with occasional fricative noise onsets and pauses.
    The pitch falls slowly over the utterance.
    """
    n = int(round(duration * sample_rate))
    if n < 1:
        raise InputError(f"bad duration {duration}")
    rng = np.random.default_rng(seed)
    base_f0 = rng.uniform(*F0_RANGE)
    t = np.arange(n) / sample_rate
    f0 = base_f0 * (1 - DECLINATION * t / max(duration, 1e-9))
    f0 = np.clip(f0 * (1 + 0.03 * np.sin(2 * np.pi * 0.7 * t + rng.uniform(0, 2 * np.pi))), 60, None)
    source = _harmonic_source(f0, sample_rate)
    hiss_sos = butter(4, 2500, "highpass", fs=sample_rate, output="sos")

    out = np.zeros(n)
    cursor = int(rng.uniform(0.0, 0.1) * sample_rate)
    while cursor < n:
        if rng.random() < PAUSE_PROBABILITY:
            cursor += int(rng.uniform(*PAUSE_RANGE) * sample_rate)
            continue
        length = min(int(rng.uniform(*SYLLABLE_RANGE) * sample_rate), n - cursor)
        if length < 8:
            break
        segment = source[cursor : cursor + length]
        for freq, bw in zip(VOWELS[rng.integers(len(VOWELS))], FORMANT_BANDWIDTHS, strict=True):
            segment = _resonator(segment, freq, bw, sample_rate)
        syllable = segment * _raised_cosine(length) * rng.uniform(0.5, 1.0)

        if rng.random() < FRICATIVE_PROBABILITY:
            hiss_len = min(int(rng.uniform(0.04, 0.10) * sample_rate), length)
            hiss = sosfilt(hiss_sos, rng.standard_normal(hiss_len)) * _raised_cosine(hiss_len)
            syllable[:hiss_len] += 0.3 * np.max(np.abs(syllable)) * hiss
        out[cursor : cursor + length] += syllable
        cursor += length

    peak = np.max(np.abs(out))
    if peak > 0:
        out *= PEAK / peak
    return AudioClip.from_mono(out, sample_rate)


def white_noise(duration: float, sample_rate: int = PIPELINE_RATE, channels: int = 1, seed: int = 0):
    n = int(round(duration * sample_rate))
    rng = np.random.default_rng(seed)
    return AudioClip(0.1 * rng.standard_normal((channels, n)), sample_rate)


def speech_shaped_noise(
    duration: float, sample_rate: int = PIPELINE_RATE, channels: int = 1, seed: int = 0
):
    """White noise through a fixed low-pass approximating the long-term speech spectrum."""
    white = white_noise(duration, sample_rate, channels, seed)
    sos = butter(2, 800, "lowpass", fs=sample_rate, output="sos")
    return AudioClip(sosfilt(sos, white.channels, axis=-1), sample_rate)


def babble_noise(
    duration: float,
    sample_rate: int = PIPELINE_RATE,
    channels: int = 1,
    seed: int = 0,
    talkers: int = BABBLE_TALKERS,
):
    """Independent speech-like talkers summed, per channel."""
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**31, size=(channels, talkers))
    data = np.stack(
        [
            sum(speech_like(duration, sample_rate, int(s)).channels[0] for s in row)
            for row in seeds
        ]
    )
    return AudioClip(data / talkers, sample_rate)


NOISE_GENERATORS = {
    WHITE: white_noise,
    SPEECH_SHAPED: speech_shaped_noise,
    BABBLE: babble_noise,
}


def make_noise(
    kind: str, duration: float, sample_rate: int = PIPELINE_RATE, channels: int = 1, seed: int = 0
) -> AudioClip:
    try:
        generator = NOISE_GENERATORS[kind]
    except KeyError:
        raise InputError(f"unknown noise type {kind!r}, expected one of {NOISE_TYPES}") from None
    return generator(duration, sample_rate, channels, seed)
