"""Modulation energy tensors: gammatone bank, Hilbert envelopes, framed
modulation spectra and their grouping into modulation bands.

The tensor for a channel is indexed [acoustic band, modulation band, frame].
"""

import csv
import logging
from dataclasses import dataclass
from math import gcd

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import firwin, hilbert, resample_poly, sosfilt, sosfreqz

from hanzo.srmrtools.audio import PIPELINE_RATE, AudioClip, resample
from hanzo.srmrtools.config import NORMALIZED, PipelineConfig
from hanzo.srmrtools.errors import (
    ConfigError,
    DegenerateTensorError,
    InputError,
    SilentInputError,
    UtteranceTooShortError,
)

log = logging.getLogger(__name__)

MIN_DURATION = 0.3  # s, after resampling
ENVELOPE_CUTOFF = 0.4  # of the envelope rate

# Glasberg & Moore
EAR_Q = 1000.0 / 4.37
MIN_BW = 24.7
BW_FACTOR = 1.019


def erb(f):
    """Equivalent rectangular bandwidth in Hz."""
    return MIN_BW * (np.asarray(f, dtype=np.float64) / EAR_Q + 1.0)


def erb_rate(f):
    return 21.4 * np.log10(np.asarray(f, dtype=np.float64) / EAR_Q + 1.0)


def erb_rate_to_hz(e):
    return (10.0 ** (np.asarray(e, dtype=np.float64) / 21.4) - 1.0) * EAR_Q


def erb_space(low: float, high: float, n: int) -> np.ndarray:
    """n frequencies equally spaced on the ERB-rate scale, ends included."""
    cf = erb_rate_to_hz(np.linspace(erb_rate(low), erb_rate(high), n))
    cf[0], cf[-1] = low, high
    return cf


@dataclass(frozen=True, eq=False)
class GammatoneBank:
    """Fourth-order gammatone filters as four cascaded biquads each.

    ``sos`` has shape (bands, 4, 6); each filter is scaled to unit gain
    at its centre frequency.
    """

    centre_frequencies: np.ndarray
    sos: np.ndarray
    sample_rate: int

    @property
    def num_bands(self) -> int:
        return self.centre_frequencies.size

    def filter(self, x: np.ndarray) -> np.ndarray:
        """Band signals, shape (bands, len(x))."""
        return np.stack([sosfilt(sos, x) for sos in self.sos])

    def response(self, band: int, freqs) -> np.ndarray:
        """Complex frequency response of one band at ``freqs`` Hz."""
        _, h = sosfreqz(self.sos[band], worN=np.atleast_1d(freqs), fs=self.sample_rate)
        return h


def _gammatone_sos(cf: float, sample_rate: int) -> np.ndarray:
    t = 1.0 / sample_rate
    b = 2.0 * np.pi * BW_FACTOR * float(erb(cf))
    wt = 2.0 * np.pi * cf * t
    decay = np.exp(b * t)
    a = [1.0, -2.0 * np.cos(wt) / decay, np.exp(-2.0 * b * t)]
    sections = []
    for root in (np.sqrt(3.0 + 2.0**1.5), np.sqrt(3.0 - 2.0**1.5)):
        for sign in (1.0, -1.0):
            b1 = -(t * np.cos(wt) + sign * root * t * np.sin(wt)) / decay
            sections.append([t, b1, 0.0, *a])
    sos = np.array(sections)
    _, h = sosfreqz(sos, worN=[cf], fs=sample_rate)
    sos[0, :3] /= np.abs(h[0])
    return sos


def design_gammatone_bank(config: PipelineConfig, sample_rate: int) -> GammatoneBank:
    """Gammatone filterbank with centre frequencies on the ERB-rate scale.

    Raises:
        ConfigError: ``cf_max`` at or above the Nyquist frequency
    """
    config.validate(sample_rate)
    cf = erb_space(config.cf_min, config.cf_max, config.num_acoustic_bands)
    sos = np.stack([_gammatone_sos(f, sample_rate) for f in cf])
    return GammatoneBank(cf, sos, sample_rate)


def temporal_envelope(signal: np.ndarray, sample_rate: int, envelope_rate: int = 500) -> np.ndarray:
    """Hilbert envelope along the last axis, decimated to ``envelope_rate``.

    The analytic signal is taken over the whole utterance; the magnitude
    is then low-passed at 0.4 * envelope_rate and resampled.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.shape[-1] < 1:
        raise InputError("empty signal")
    env = np.abs(hilbert(signal, axis=-1))
    if envelope_rate == sample_rate:
        return env
    g = gcd(envelope_rate, sample_rate)
    up, down = envelope_rate // g, sample_rate // g
    h = firwin(
        64 * max(up, down) + 1,
        ENVELOPE_CUTOFF * envelope_rate,
        window=("kaiser", 8.6),
        fs=sample_rate * up,
    )
    return resample_poly(env, up, down, axis=-1, window=h)


def frame_and_dft(envelope: np.ndarray, config: PipelineConfig) -> np.ndarray:
    """Squared-magnitude modulation spectra of Hamming-windowed frames.

    The last axis of ``envelope`` is time; the result replaces it with
    (frames, dft_size // 2 + 1).

    Raises:
        UtteranceTooShortError: fewer samples than one frame
    """
    envelope = np.asarray(envelope, dtype=np.float64)
    length, hop = config.frame_samples, config.hop_samples
    if envelope.shape[-1] < length:
        raise UtteranceTooShortError(
            f"envelope of {envelope.shape[-1]} samples is shorter than one {length}-sample frame"
        )
    frames = sliding_window_view(envelope, length, axis=-1)[..., ::hop, :]
    spectra = np.fft.rfft(frames * np.hamming(length), n=config.dft_size, axis=-1)
    return spectra.real**2 + spectra.imag**2


def modulation_band_edges(config: PipelineConfig) -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced band centres over ``mod_range`` and their geometric-midpoint edges."""
    lo, hi = config.mod_range
    centres = np.geomspace(lo, hi, config.num_mod_bands)
    centres[0], centres[-1] = lo, hi
    edges = np.concatenate(([lo], np.sqrt(centres[:-1] * centres[1:]), [hi]))
    return centres, edges


def _band_membership(config: PipelineConfig) -> np.ndarray:
    """(bins, bands) 0/1 matrix assigning DFT bins to modulation bands."""
    _, edges = modulation_band_edges(config)
    freqs = np.arange(config.dft_size // 2 + 1) * config.envelope_rate / config.dft_size
    member = (freqs[:, None] >= edges[None, :-1]) & (freqs[:, None] < edges[None, 1:])
    member[:, -1] |= freqs == edges[-1]
    empty = np.flatnonzero(~member.any(axis=0))
    if empty.size:
        raise ConfigError(f"modulation bands {list(empty + 1)} contain no DFT bins")
    return member.astype(np.float64)


@dataclass(frozen=True, eq=False)
class ModulationTensor:
    """Energies [acoustic band, modulation band, frame] and an active-frame mask."""

    energies: np.ndarray
    active_frames: np.ndarray
    config: PipelineConfig

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=np.float64)
        mask = np.asarray(self.active_frames, dtype=bool)
        if e.ndim != 3 or e.shape[2] < 1:
            raise InputError(f"tensor must be (bands, mod bands, frames), got {e.shape}")
        if mask.shape != (e.shape[2],):
            raise InputError("active-frame mask does not match the frame count")
        if not np.all(np.isfinite(e)) or np.any(e < 0):
            raise InputError("tensor energies must be finite and non-negative")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "active_frames", mask)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.energies.shape

    @property
    def num_frames(self) -> int:
        return self.energies.shape[2]

    @property
    def num_active(self) -> int:
        return int(np.count_nonzero(self.active_frames))

    @property
    def mode(self) -> str:
        return self.config.mode

    def active_energies(self) -> np.ndarray:
        return self.energies[:, :, self.active_frames]

    def write_csv(self, fh) -> None:
        """Dump one row per (frame, acoustic band, modulation band)."""
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame", "acoustic_band", "mod_band", "energy", "active"])
        bands, mod_bands, frames = self.shape
        for m in range(frames):
            active = int(self.active_frames[m])
            for j in range(bands):
                for k in range(mod_bands):
                    writer.writerow([m, j + 1, k + 1, repr(float(self.energies[j, k, m])), active])


def group_modulation_bands(spectra: np.ndarray, config: PipelineConfig) -> ModulationTensor:
    """Sum spectral bins into modulation bands; every frame starts active.

    ``spectra`` is (acoustic bands, frames, bins) as produced by
    ``frame_and_dft``.
    """
    member = _band_membership(config)
    energies = np.moveaxis(spectra @ member, -1, 1)
    return ModulationTensor(energies, np.ones(energies.shape[2], dtype=bool), config)


def apply_energy_floor(tensor: ModulationTensor, floor: float | None = None) -> ModulationTensor:
    """Mark frames whose total energy lies more than ``floor`` dB below the peak frame.

    Raises:
        ConfigError: the tensor is not from the normalized pipeline
        DegenerateTensorError: every frame has zero energy
    """
    if tensor.mode != NORMALIZED:
        raise ConfigError("the energy floor applies to normalized-mode tensors only")
    if floor is None:
        floor = tensor.config.energy_floor_db
    totals = tensor.energies.sum(axis=(0, 1))
    peak = totals.max()
    if peak <= 0:
        raise DegenerateTensorError("all frames have zero modulation energy")
    active = totals >= peak * 10.0 ** (-floor / 10.0)
    log.debug("energy floor %.1f dB keeps %d of %d frames", floor, active.sum(), active.size)
    return ModulationTensor(tensor.energies, active, tensor.config)


def analyze(clip: AudioClip, config: PipelineConfig | None = None) -> ModulationTensor:
    """Modulation energy tensor of a single-channel clip.

    Resamples to the pipeline rate, then runs the gammatone bank,
    Hilbert envelopes, framing and band grouping, and in normalized
    mode the energy floor.

    Raises:
        UtteranceTooShortError: under 0.3 s of audio
        SilentInputError: the clip is all zeros
    """
    if config is None:
        config = PipelineConfig.original()
    if clip.num_channels != 1:
        raise InputError(f"analyze takes one channel, got {clip.num_channels}")
    clip = resample(clip, PIPELINE_RATE)
    if clip.duration < MIN_DURATION:
        raise UtteranceTooShortError(
            f"{clip.duration:.3f} s is shorter than the {MIN_DURATION} s minimum"
        )
    x = clip.channels[0]
    if not np.any(x):
        raise SilentInputError("clip is all zeros")

    bank = design_gammatone_bank(config, clip.sample_rate)
    envelopes = temporal_envelope(bank.filter(x), clip.sample_rate, config.envelope_rate)
    tensor = group_modulation_bands(frame_and_dft(envelopes, config), config)
    if config.energy_floor_db is not None:
        tensor = apply_energy_floor(tensor)
    return tensor
