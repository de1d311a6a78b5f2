"""Synthetic reverberant datasets with ground truth.

Each room of the grid gets one speech-like utterance and one impulse
response per channel. The reverberant utterance is written clean and
mixed with each noise type at each SNR, and every file gets a manifest
record carrying the room's true RT60 and DRR (taken from channel 1).
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from hanzo.srmrtools.audio import PIPELINE_RATE, AudioClip, write_wav
from hanzo.srmrtools.corpus import NOISE_TYPES, WHITE, make_noise, speech_like
from hanzo.srmrtools.errors import ConfigError, GeometryError
from hanzo.srmrtools.records import CLEAN, ManifestRecord, write_manifest
from hanzo.srmrtools.room import (
    Rir,
    convolve,
    image_rir,
    mix_noise_at_snr,
    rir_stats,
    synth_exponential_rir,
    tune_image_room,
)

log = logging.getLogger(__name__)

IMAGE = "image"
EXPONENTIAL = "exponential"
RIR_MODELS = (IMAGE, EXPONENTIAL)

DEFAULT_RT60S = (0.25, 0.45, 0.65, 0.85, 1.05)
DEFAULT_SNRS = (0.0, 10.0, 20.0)

ROOM_RANGES = ((4.0, 8.0), (3.0, 6.0), (2.5, 3.5))  # m
DISTANCE_RANGE = (1.0, 3.0)  # source to microphone, m
WALL_MARGIN = 0.5  # m
MIC_SPACING = 0.08  # m, along x
DIRECT_DELAY_RANGE = (0.002, 0.010)  # s, exponential model
DIRECT_RATIO_RANGE = (-6.0, 12.0)  # dB of direct over tail energy, exponential model
DECAY_PER_TAU = 60.0 / (20.0 * np.log10(np.e))  # RT60 / tau, about 6.908

MANIFEST_NAME = "manifest.jsonl"


@dataclass(frozen=True)
class SynthPlan:
    rt60s: tuple[float, ...] = DEFAULT_RT60S
    snrs: tuple[float, ...] = DEFAULT_SNRS
    noise_types: tuple[str, ...] = (WHITE,)
    count: int = 10  # rooms per RT60 level
    duration: float = 4.0  # s of speech
    rir_model: str = IMAGE
    clean: bool = False
    channels: int = 1
    duplicate_channels: bool = False
    seed: int = 0
    sample_rate: int = PIPELINE_RATE
    jobs: int = 1
    rir_wavs: bool = True

    def validate(self) -> "SynthPlan":
        if not self.rt60s or any(t <= 0 for t in self.rt60s):
            raise ConfigError(f"RT60 targets must be positive, got {self.rt60s}")
        if self.count < 1:
            raise ConfigError("count must be at least 1")
        if self.duration < 0.5:
            raise ConfigError("utterances must be at least 0.5 s")
        if self.rir_model not in RIR_MODELS:
            raise ConfigError(f"unknown RIR model {self.rir_model!r}, expected one of {RIR_MODELS}")
        unknown = [n for n in self.noise_types if n not in NOISE_TYPES]
        if unknown:
            raise ConfigError(f"unknown noise types {unknown}, expected some of {NOISE_TYPES}")
        if not self.snrs and not self.clean:
            raise ConfigError("nothing to synthesize: no SNRs and no clean copy")
        if self.channels < 1:
            raise ConfigError("channels must be at least 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        return self


@dataclass(frozen=True)
class _RoomJob:
    index: int
    rt60: float
    seed_sequence: np.random.SeedSequence


def _draw_geometry(rng: np.random.Generator, channels: int):
    """Room, source and microphone positions respecting the wall margin."""
    array_span = MIC_SPACING * (channels - 1)
    for _ in range(1000):
        dims = np.array([rng.uniform(lo, hi) for lo, hi in ROOM_RANGES])
        low = np.full(3, WALL_MARGIN)
        high = dims - WALL_MARGIN
        source = rng.uniform(low, high)
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        mic = source + rng.uniform(*DISTANCE_RANGE) * direction
        mics = mic + np.outer(np.arange(channels), [MIC_SPACING, 0.0, 0.0])
        if np.all(mics >= low) and np.all(mics <= high) and high[0] - low[0] > array_span:
            return dims, source, mics
    raise GeometryError("could not place source and microphones in a random room")


def _image_rirs(job: _RoomJob, plan: SynthPlan, rng: np.random.Generator) -> list[Rir]:
    channels = 1 if plan.duplicate_channels else plan.channels
    dims, source, mics = _draw_geometry(rng, channels)
    first, _ = tune_image_room(job.rt60, dims, source, mics[0], plan.sample_rate)
    beta = first.meta["beta"]
    duration = first.samples.size / plan.sample_rate
    rest = [image_rir(dims, source, m, beta, plan.sample_rate, duration) for m in mics[1:]]
    return [first, *rest]


def _exponential_rirs(job: _RoomJob, plan: SynthPlan, rng: np.random.Generator) -> list[Rir]:
    """Direct impulse followed by an exponentially decaying noise tail, per channel."""
    fs = plan.sample_rate
    tau = job.rt60 / DECAY_PER_TAU
    duration = 0.9 * job.rt60 + 0.1
    delay = int(round(rng.uniform(*DIRECT_DELAY_RANGE) * fs))
    ratio_db = rng.uniform(*DIRECT_RATIO_RANGE)
    base_seed = int(rng.integers(0, 2**31))
    channels = 1 if plan.duplicate_channels else plan.channels
    rirs = []
    for seed in range(base_seed, base_seed + channels):
        tail = synth_exponential_rir(tau, fs, duration, seed).samples
        h = np.zeros(delay + 1 + tail.size)
        h[delay] = np.sqrt(np.sum(tail**2) * 10.0 ** (ratio_db / 10.0))
        h[delay + 1 :] = tail
        meta = {"model": EXPONENTIAL, "tau": tau, "seed": seed, "direct_db": ratio_db}
        rirs.append(Rir(h, fs, meta))
    return rirs


def _reverberate(speech: AudioClip, rirs: list[Rir], duplicate: int = 0) -> AudioClip:
    """Convolve with one response per channel, or copy one response's output ``duplicate`` times."""
    if duplicate:
        mono = convolve(speech, rirs[0]).channels
        return AudioClip(np.repeat(mono, duplicate, axis=0), speech.sample_rate)
    length = speech.num_samples + max(r.samples.size for r in rirs) - 1
    out = np.zeros((len(rirs), length))
    for c, rir in enumerate(rirs):
        wet = convolve(speech, rir).channels[0]
        out[c, : wet.size] = wet
    return AudioClip(out, speech.sample_rate)


def _condition_name(noise_type: str, snr: float | None) -> str:
    if snr is None:
        return CLEAN
    return f"{noise_type}_snr{snr:g}dB"


def _synthesize_room(job: _RoomJob, plan: SynthPlan, outdir: str) -> list[ManifestRecord]:
    rir_seq, speech_seq, noise_seq = job.seed_sequence.spawn(3)
    rng = np.random.default_rng(rir_seq)
    if plan.rir_model == IMAGE:
        rirs = _image_rirs(job, plan, rng)
    else:
        rirs = _exponential_rirs(job, plan, rng)
    stats = rir_stats(rirs[0])

    rir_id = f"rir{job.index:04d}"
    utterance_id = f"utt{job.index:04d}"
    if plan.rir_wavs:
        for c, rir in enumerate(rirs):
            write_wav(os.path.join(outdir, "rirs", f"{rir_id}_ch{c + 1}.wav"), rir.to_clip(), "FLOAT")

    speech_seed = int(speech_seq.generate_state(1)[0])
    speech = speech_like(plan.duration, plan.sample_rate, speech_seed)
    wet = _reverberate(speech, rirs, plan.channels if plan.duplicate_channels else 0)

    conditions: list[tuple[str, float | None]] = []
    if plan.clean:
        conditions.append((CLEAN, None))
    conditions.extend((n, s) for n in plan.noise_types for s in plan.snrs)

    noise_seeds = noise_seq.generate_state(len(conditions))
    records = []
    for (noise_type, snr), seed in zip(conditions, noise_seeds, strict=True):
        if snr is None:
            mix = wet
        else:
            noise_channels = 1 if plan.duplicate_channels else plan.channels
            noise = make_noise(noise_type, wet.duration, plan.sample_rate, noise_channels, int(seed))
            if plan.duplicate_channels:
                mono = mix_noise_at_snr(wet.channel(0), noise, snr, int(seed))
                mix = AudioClip(np.repeat(mono.channels, plan.channels, axis=0), wet.sample_rate)
            else:
                mix = mix_noise_at_snr(wet, noise, snr, int(seed))

        name = f"{utterance_id}_{rir_id}_{_condition_name(noise_type, snr)}.wav"
        write_wav(os.path.join(outdir, "audio", name), mix, "FLOAT")
        records.append(
            ManifestRecord(
                audio_path=f"audio/{name}",
                utterance_id=utterance_id,
                rir_id=rir_id,
                true_rt60_s=stats.rt60,
                true_drr_db=stats.drr,
                noise_type=noise_type,
                snr_db=snr,
                channels=plan.channels,
            )
        )
    log.info(
        "%s: target RT60 %.2f s, measured %.3f s, DRR %.2f dB",
        rir_id,
        job.rt60,
        stats.rt60,
        stats.drr,
    )
    return records


def synthesize_dataset(plan: SynthPlan, outdir) -> list[ManifestRecord]:
    """Write the dataset's WAVs and manifest under ``outdir`` and return the records.

    Rooms are built on ``plan.jobs`` threads. Every room draws from its own
    seed sequence, so the output does not depend on the thread count.
    """
    plan.validate()
    outdir = str(outdir)
    os.makedirs(os.path.join(outdir, "audio"), exist_ok=True)
    if plan.rir_wavs:
        os.makedirs(os.path.join(outdir, "rirs"), exist_ok=True)

    root = np.random.SeedSequence(plan.seed)
    children = root.spawn(len(plan.rt60s) * plan.count)
    jobs = [
        _RoomJob(level * plan.count + i, rt60, children[level * plan.count + i])
        for level, rt60 in enumerate(plan.rt60s)
        for i in range(plan.count)
    ]

    with ThreadPoolExecutor(max_workers=plan.jobs) as pool:
        per_room = list(pool.map(lambda job: _synthesize_room(job, plan, outdir), jobs))

    records = [r for room in per_room for r in room]
    write_manifest(os.path.join(outdir, MANIFEST_NAME), records)
    return records
