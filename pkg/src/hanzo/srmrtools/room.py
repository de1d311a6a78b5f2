"""Room impulse responses: image-method and exponential synthesis,
ground-truth decay time and direct-to-reverberant ratio, convolution and
noise mixing.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, fftconvolve, sosfilt

from hanzo.srmrtools.audio import AudioClip, resample
from hanzo.srmrtools.errors import (
    DegenerateDecayError,
    DegenerateRirError,
    DimensionMismatchError,
    GeometryError,
    InputError,
    InsufficientDecayError,
    SilentInputError,
)
from hanzo.srmrtools.level import active_speech_level

log = logging.getLogger(__name__)

SPEED_OF_SOUND = 343.0  # m/s
SINC_HALF_WIDTH = 4  # samples either side of an arrival
MIN_IMAGE_DURATION = 0.1  # s
MAX_BETA = 0.999
HIGH_PASS_CUTOFF = 100.0  # Hz, on the reflected part of image responses
HIGH_PASS_ORDER = 4

# Schroeder fit span, dB below the total energy
FIT_START_DB = -5.0
FIT_END_DB = -35.0
MIN_FIT_SPAN = 1e-3  # s
MIN_FIT_DROP = 1.0  # dB the fitted line must fall across the fit range

# direct-path window around the main peak
DIRECT_BEFORE = 0.0005  # s
DIRECT_AFTER = 0.0025  # s

DIRECT_ONLY = math.inf
DIRECT_ONLY_TAG = "direct-only"


@dataclass(frozen=True, eq=False)
class Rir:
    """A room impulse response and the parameters that generated it."""

    samples: np.ndarray
    sample_rate: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        h = np.asarray(self.samples, dtype=np.float64).ravel()
        if h.size < 1:
            raise DegenerateRirError("impulse response is empty")
        if not np.all(np.isfinite(h)):
            raise DegenerateRirError("impulse response has non-finite samples")
        if not np.any(h):
            raise DegenerateRirError("impulse response is all zeros")
        object.__setattr__(self, "samples", h)

    @classmethod
    def from_clip(cls, clip: AudioClip, channel: int = 0, **meta) -> "Rir":
        return cls(clip.channels[channel], clip.sample_rate, meta)

    def to_clip(self) -> AudioClip:
        return AudioClip.from_mono(self.samples, self.sample_rate)

    def scaled(self, gain: float) -> "Rir":
        return Rir(self.samples * gain, self.sample_rate, dict(self.meta))


@dataclass(frozen=True)
class RirStats:
    rt60: float
    drr: float

    def to_record(self) -> dict:
        return {"rt60_s": self.rt60, "drr_db": format_drr(self.drr)}


def format_drr(value: float):
    """JSON form of a DRR: a number, or "direct-only"."""
    return DIRECT_ONLY_TAG if value == DIRECT_ONLY else float(value)


def parse_drr(value) -> float:
    if value == DIRECT_ONLY_TAG:
        return DIRECT_ONLY
    return float(value)


def _check_position(name, pos, dims):
    pos = np.asarray(pos, dtype=np.float64)
    if pos.shape != (3,) or not np.all((pos > 0) & (pos < dims)):
        raise GeometryError(f"{name} {pos.tolist()} is not strictly inside the room {dims.tolist()}")
    return pos


def _axis_images(source, mic, length, beta_low, beta_high, count):
    """Image offsets along one axis and their reflection factors."""
    m = np.repeat(np.arange(-count, count + 1), 2)
    q = np.tile([0, 1], 2 * count + 1)
    offset = (1 - 2 * q) * source - mic + 2 * m * length
    gain = np.power(beta_low, np.abs(m - q)) * np.power(beta_high, np.abs(m))
    return offset, gain


def _add_arrivals(h: np.ndarray, delay: np.ndarray, amp: np.ndarray) -> None:
    """Spread each arrival over +-4 samples of ``h`` with a Hann-windowed sinc of unit sum."""
    if delay.size == 0:
        return
    taps = np.arange(-SINC_HALF_WIDTH, SINC_HALF_WIDTH + 1)
    centre = np.round(delay).astype(np.int64)
    t = (centre[:, None] + taps[None, :]) - delay[:, None]
    kernel = np.sinc(t) * 0.5 * (1 + np.cos(np.pi * t / SINC_HALF_WIDTH))
    kernel[np.abs(t) >= SINC_HALF_WIDTH] = 0.0
    kernel /= kernel.sum(axis=1, keepdims=True)
    index = centre[:, None] + taps[None, :] + SINC_HALF_WIDTH
    h += np.bincount(index.ravel(), (kernel * amp[:, None]).ravel(), minlength=h.size)[: h.size]


def image_rir(
    room_dims,
    source,
    mic,
    beta,
    sample_rate: int,
    duration: float,
    high_pass: float | None = HIGH_PASS_CUTOFF,
) -> Rir:
    """Shoebox room response by the image-source method.

    ``beta`` holds the six wall reflection coefficients in the order
    x=0, x=Lx, y=0, y=Ly, z=0, z=Lz. Each image contributes
    beta-product / (4 pi d) at delay d / c, spread over +-4 samples by a
    Hann-windowed sinc with unit sum.

    The reflected part is high-passed at ``high_pass`` Hz (None to skip)
    to remove the DC build-up of the all-positive image sum. The direct
    path is left as is.

    Raises:
        GeometryError: positions outside the room, coincident, or a bad
            room or duration
    """
    dims = np.asarray(room_dims, dtype=np.float64)
    if dims.shape != (3,) or np.any(dims <= 0):
        raise GeometryError(f"bad room dimensions {room_dims}")
    src = _check_position("source", source, dims)
    rcv = _check_position("microphone", mic, dims)
    if np.allclose(src, rcv):
        raise GeometryError("source and microphone coincide")
    beta = np.asarray(beta, dtype=np.float64)
    if beta.size == 1:
        beta = np.full(6, float(beta))
    if beta.shape != (6,) or np.any(beta < 0) or np.any(beta >= 1):
        raise GeometryError(f"reflection coefficients must be six values in [0, 1), got {beta}")
    if duration < MIN_IMAGE_DURATION:
        raise GeometryError(f"duration {duration} s is under {MIN_IMAGE_DURATION} s")

    fs = sample_rate
    nsamples = int(round(duration * fs))
    max_dist = (nsamples + SINC_HALF_WIDTH) * SPEED_OF_SOUND / fs
    counts = [int(np.ceil(max_dist / (2 * length))) + 1 for length in dims]
    axes = [
        _axis_images(src[i], rcv[i], dims[i], beta[2 * i], beta[2 * i + 1], counts[i])
        for i in range(3)
    ]
    (dx, gx), (dy, gy), (dz, gz) = axes
    yz_sq = dy[:, None] ** 2 + dz[None, :] ** 2
    yz_gain = gy[:, None] * gz[None, :]
    # (m, q) = (0, 0) on every axis is the source itself
    direct_x, direct_y, direct_z = (2 * count for count in counts)

    direct = np.zeros(nsamples + 2 * SINC_HALF_WIDTH + 1)
    reflected = np.zeros_like(direct)
    for ix, (x, bx) in enumerate(zip(dx, gx, strict=True)):
        if bx == 0 or abs(x) > max_dist:
            continue
        dist = np.sqrt(x * x + yz_sq)
        amp = bx * yz_gain / (4 * np.pi * dist)
        keep = (dist <= max_dist) & (amp != 0)
        if ix == direct_x and keep[direct_y, direct_z]:
            _add_arrivals(
                direct,
                dist[direct_y, direct_z, None] * fs / SPEED_OF_SOUND,
                amp[direct_y, direct_z, None],
            )
            keep[direct_y, direct_z] = False
        _add_arrivals(reflected, dist[keep] * fs / SPEED_OF_SOUND, amp[keep])

    if high_pass is not None and np.any(reflected):
        sos = butter(HIGH_PASS_ORDER, high_pass, "highpass", fs=fs, output="sos")
        reflected = sosfilt(sos, reflected)
    h = direct + reflected

    meta = {
        "model": "image",
        "room_dims": dims.tolist(),
        "source": src.tolist(),
        "mic": rcv.tolist(),
        "beta": beta.tolist(),
        "high_pass": high_pass,
    }
    return Rir(h[SINC_HALF_WIDTH : SINC_HALF_WIDTH + nsamples], fs, meta)


def synth_exponential_rir(tau: float, sample_rate: int, duration: float, seed: int) -> Rir:
    """Gaussian noise under an exp(-t / tau) amplitude envelope."""
    if not tau > 0:
        raise InputError(f"decay constant must be positive, got {tau}")
    n = np.arange(int(round(duration * sample_rate)))
    g = np.random.default_rng(seed).standard_normal(n.size)
    h = np.exp(-n / (tau * sample_rate)) * g
    return Rir(h, sample_rate, {"model": "exponential", "tau": tau, "seed": seed})


def energy_decay_curve(rir: Rir) -> np.ndarray:
    """Schroeder backward integral in dB relative to the total energy."""
    energy = np.cumsum(rir.samples[::-1] ** 2)[::-1]
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(energy / energy[0])


def schroeder_rt60(rir: Rir) -> float:
    """Reverberation time from a line fit to the -5 to -35 dB decay.

    Raises:
        InsufficientDecayError: the decay never reaches -35 dB
        DegenerateDecayError: the fit span is under 1 ms, or the curve does not
            fall across it
    """
    edc = energy_decay_curve(rir)
    below_end = np.flatnonzero(edc <= FIT_END_DB)
    if below_end.size == 0:
        raise InsufficientDecayError(
            f"decay only reaches {edc[-1]:.1f} dB, {FIT_END_DB} dB is needed"
        )
    start = int(np.flatnonzero(edc <= FIT_START_DB)[0])
    end = int(below_end[0])
    if (end - start) / rir.sample_rate < MIN_FIT_SPAN:
        raise DegenerateDecayError(
            f"{FIT_START_DB} to {FIT_END_DB} dB decay spans {end - start} samples"
        )
    t = np.arange(start, end + 1) / rir.sample_rate
    segment = edc[start : end + 1]
    finite = np.isfinite(segment)
    if np.count_nonzero(finite) < 2:
        raise DegenerateDecayError("energy decay curve drops straight to silence")
    slope, _ = np.polyfit(t[finite], segment[finite], 1)
    if not slope * (t[-1] - t[0]) < -MIN_FIT_DROP:
        raise DegenerateDecayError("energy decay curve does not decrease across the fit range")
    return float(-60.0 / slope)


def drr(rir: Rir) -> float:
    """Direct-to-reverberant ratio in dB; DIRECT_ONLY without reverberant energy.

    The direct part is -0.5 ms to +2.5 ms around the largest sample.
    """
    h = rir.samples
    fs = rir.sample_rate
    n0 = int(np.argmax(np.abs(h)))
    lo = max(0, n0 - int(round(DIRECT_BEFORE * fs)))
    hi = n0 + int(round(DIRECT_AFTER * fs)) + 1
    direct = float(np.sum(h[lo:hi] ** 2))
    reverberant = float(np.sum(h[:lo] ** 2) + np.sum(h[hi:] ** 2))
    if reverberant == 0.0:
        return DIRECT_ONLY
    return float(10.0 * np.log10(direct / reverberant))


def rir_stats(rir: Rir) -> RirStats:
    return RirStats(schroeder_rt60(rir), drr(rir))


def eyring_beta(target_rt60: float, room_dims) -> float:
    """Uniform wall reflection coefficient Eyring's formula predicts for ``target_rt60``."""
    lx, ly, lz = room_dims
    volume = lx * ly * lz
    surface = 2 * (lx * ly + lx * lz + ly * lz)
    return float(np.exp(-0.161 * volume / (2 * surface * target_rt60)))


def tune_image_room(
    target_rt60: float,
    room_dims,
    source,
    mic,
    sample_rate: int,
    duration: float | None = None,
    tolerance: float = 0.05,
    max_rounds: int = 4,
) -> tuple[Rir, float]:
    """Search a uniform beta whose image-method response has the target decay time.

    Starts from the Eyring estimate and rescales log(beta) by
    measured / target after each round. Returns the closest response
    found and its measured RT60.
    """
    if not target_rt60 > 0:
        raise GeometryError(f"target RT60 must be positive, got {target_rt60}")
    if duration is None:
        duration = max(MIN_IMAGE_DURATION, 0.9 * target_rt60 + 0.1)
    beta = min(eyring_beta(target_rt60, room_dims), MAX_BETA)
    best = None
    for _ in range(max_rounds):
        rir = image_rir(room_dims, source, mic, beta, sample_rate, duration)
        measured = schroeder_rt60(rir)
        error = abs(measured - target_rt60) / target_rt60
        log.debug("beta %.4f gives RT60 %.3f s (target %.3f s)", beta, measured, target_rt60)
        if best is None or error < best[2]:
            best = (rir, measured, error)
        if error <= tolerance:
            break
        beta = float(np.clip(np.exp(np.log(beta) * measured / target_rt60), 0.0, MAX_BETA))
    rir, measured, error = best
    if error > tolerance:
        log.info(
            "image room reached RT60 %.3f s for target %.3f s after %d rounds",
            measured,
            target_rt60,
            max_rounds,
        )
    return rir, measured


def convolve(clip: AudioClip, rir: Rir) -> AudioClip:
    """Full linear convolution of every channel with ``rir``."""
    h = rir.samples
    if rir.sample_rate != clip.sample_rate:
        h = resample(rir.to_clip(), clip.sample_rate).channels[0]
    out = fftconvolve(clip.channels, h[np.newaxis, :], axes=-1)
    return AudioClip(out, clip.sample_rate)


def _noise_segment(noise: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    """A ``length``-sample stretch of noise at a random offset, looping short noise."""
    available = noise.shape[1]
    if available < length:
        noise = np.tile(noise, (1, length // available + 2))
        start = int(rng.integers(0, available))
    else:
        start = int(rng.integers(0, available - length + 1))
    return noise[:, start : start + length]


def mix_noise_at_snr(speech: AudioClip, noise: AudioClip, snr: float, seed: int) -> AudioClip:
    """Add noise scaled to ``snr`` dB below the speech's active level.

    The speech level is the P.56 active level of channel 0; the noise
    level is the RMS of the chosen segment's channel 0. Mono noise is
    added to every channel; otherwise channels pair up.

    Raises:
        NoActivityError: silent speech
        SilentInputError: silent noise
    """
    if noise.sample_rate != speech.sample_rate:
        noise = resample(noise, speech.sample_rate)
    if noise.num_channels not in (1, speech.num_channels):
        raise DimensionMismatchError(
            f"{noise.num_channels}-channel noise for {speech.num_channels}-channel speech"
        )
    segment = _noise_segment(noise.channels, speech.num_samples, np.random.default_rng(seed))
    noise_power = float(np.mean(segment[0] ** 2))
    if noise_power == 0.0:
        raise SilentInputError("noise segment is all zeros")
    speech_level = active_speech_level(speech.channel(0)).active_level
    noise_level = 10.0 * np.log10(noise_power)
    gain = 10.0 ** ((speech_level - snr - noise_level) / 20.0)
    return AudioClip(speech.channels + gain * segment, speech.sample_rate)
