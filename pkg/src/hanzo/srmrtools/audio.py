"""Multi-channel audio clips: WAV decoding, validation and resampling.

This is the only place sample data enters the library. Channels are kept
separate; nothing here ever downmixes.
"""

import logging
import struct
from dataclasses import dataclass
from math import gcd

import numpy as np
import soundfile as sf
from scipy.signal import firwin, resample_poly

from hanzo.srmrtools.errors import (
    EmptyAudioError,
    InputError,
    TruncatedFileError,
    UnsupportedFormatError,
)

log = logging.getLogger(__name__)

PIPELINE_RATE = 16000

SUPPORTED_SUBTYPES = {"PCM_16", "PCM_24", "PCM_32", "FLOAT"}
MAX_CHANNELS = 32

# windowed-sinc resampler
TAPS_PER_PHASE = 64
KAISER_BETA = 8.6
CUTOFF = 0.45  # of the lower sample rate, in Hz


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Sampled audio: ``channels`` has shape (num_channels, num_samples)."""

    channels: np.ndarray
    sample_rate: int

    def __post_init__(self):
        data = np.asarray(self.channels, dtype=np.float64)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2 or data.shape[0] < 1:
            raise InputError(f"audio must be (channels, samples), got shape {data.shape}")
        if data.shape[1] < 1:
            raise EmptyAudioError("audio clip has no samples")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise InputError(f"invalid sample rate {self.sample_rate}")
        if not np.all(np.isfinite(data)):
            raise InputError("audio contains non-finite samples")
        object.__setattr__(self, "channels", data)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @classmethod
    def from_mono(cls, samples, sample_rate):
        return cls(np.asarray(samples, dtype=np.float64)[np.newaxis, :], sample_rate)

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def num_samples(self) -> int:
        return self.channels.shape[1]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def channel(self, index: int) -> "AudioClip":
        return AudioClip(self.channels[index : index + 1], self.sample_rate)

    def scaled(self, gain: float) -> "AudioClip":
        return AudioClip(self.channels * gain, self.sample_rate)


def _check_riff(path) -> None:
    """Walk the RIFF chunks and make sure the data chunk is all there.

    libsndfile quietly shortens a file whose data chunk runs past the end
    of file, so truncation is checked against the declared chunk sizes.
    """
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] not in (b"RIFF", b"RF64") or head[8:12] != b"WAVE":
            raise UnsupportedFormatError(f"{path}: not a RIFF/WAVE file")
        if head[:4] == b"RF64":
            return
        fh.seek(0, 2)
        size = fh.tell()
        offset = 12
        while offset + 8 <= size:
            fh.seek(offset)
            chunk_id, chunk_size = struct.unpack("<4sI", fh.read(8))
            if chunk_id == b"data":
                if chunk_size == 0:
                    raise EmptyAudioError(f"{path}: zero-length data chunk")
                if offset + 8 + chunk_size > size:
                    raise TruncatedFileError(
                        f"{path}: data chunk declares {chunk_size} bytes, "
                        f"only {size - offset - 8} present"
                    )
                return
            offset += 8 + chunk_size + (chunk_size & 1)
        raise TruncatedFileError(f"{path}: no data chunk")


def read_wav(path) -> AudioClip:
    """Read a PCM 16/24/32-bit or 32-bit float WAV file.

    Integer formats are scaled by their full-scale value so amplitudes lie
    in [-1, 1]; float data is returned as stored. Channel order is kept.

    Raises:
        UnsupportedFormatError: not a WAV file, or an unsupported codec
        TruncatedFileError: the data chunk is cut short
        EmptyAudioError: the data chunk holds no frames
    """
    path = str(path)
    try:
        _check_riff(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from e
    try:
        info = sf.info(path)
    except RuntimeError as e:
        raise UnsupportedFormatError(f"{path}: {e}") from e

    if info.format not in ("WAV", "WAVEX", "RF64"):
        raise UnsupportedFormatError(f"{path}: container {info.format} is not RIFF/WAVE")
    if info.subtype not in SUPPORTED_SUBTYPES:
        raise UnsupportedFormatError(f"{path}: unsupported codec {info.subtype}")
    if not 1 <= info.channels <= MAX_CHANNELS:
        raise UnsupportedFormatError(f"{path}: {info.channels} channels")
    if info.frames < 1:
        raise EmptyAudioError(f"{path}: no frames")

    try:
        data, sample_rate = sf.read(path, dtype="float64", always_2d=True)
    except RuntimeError as e:
        raise TruncatedFileError(f"{path}: {e}") from e

    if data.shape[0] < info.frames:
        raise TruncatedFileError(f"{path}: read {data.shape[0]} of {info.frames} frames")

    return AudioClip(data.T, sample_rate)


def write_wav(path, clip: AudioClip, subtype: str = "PCM_16") -> None:
    """Write ``clip`` as PCM 16-bit (default) or 32-bit float WAV.

    16-bit output is quantised here, with the same 32768 full scale
    ``read_wav`` divides by, so 16-bit data round-trips bit-exactly.
    Samples beyond full scale are clipped.
    """
    if subtype == "PCM_16":
        data = np.clip(np.round(clip.channels * 32768.0), -32768, 32767).astype(np.int16)
    elif subtype == "FLOAT":
        data = clip.channels.astype(np.float32)
    else:
        raise UnsupportedFormatError(f"cannot write subtype {subtype}")
    sf.write(str(path), data.T, clip.sample_rate, subtype=subtype, format="WAV")


def _sinc_filter(up: int, down: int, source_rate: int, target_rate: int) -> np.ndarray:
    """Kaiser-windowed sinc low-pass for the polyphase resampler."""
    numtaps = TAPS_PER_PHASE * max(up, down) + 1
    interpolated_rate = source_rate * up
    cutoff_hz = CUTOFF * min(source_rate, target_rate)
    return firwin(numtaps, cutoff_hz, window=("kaiser", KAISER_BETA), fs=interpolated_rate)


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited resampling of every channel to ``target_rate``.

    The output has round(N * target / source) samples. Content below
    0.45 * min(source, target) Hz is preserved.
    """
    if target_rate <= 0 or int(target_rate) != target_rate:
        raise InputError(f"invalid target rate {target_rate}")
    target_rate = int(target_rate)
    if target_rate == clip.sample_rate:
        return clip

    g = gcd(target_rate, clip.sample_rate)
    up, down = target_rate // g, clip.sample_rate // g
    h = _sinc_filter(up, down, clip.sample_rate, target_rate)
    out = resample_poly(clip.channels, up, down, axis=-1, window=h)

    length = int(np.floor(clip.num_samples * up / down + 0.5))
    if out.shape[1] < length:
        out = np.pad(out, ((0, 0), (0, length - out.shape[1])))
    log.debug("resampled %d -> %d Hz (%d/%d)", clip.sample_rate, target_rate, up, down)
    return AudioClip(out[:, :length], target_rate)


def to_pipeline_rate(clip: AudioClip) -> AudioClip:
    return resample(clip, PIPELINE_RATE)
