"""Tests for srmrtools."""

import numpy as np

from hanzo.srmrtools.audio import AudioClip
from hanzo.srmrtools.config import PipelineConfig
from hanzo.srmrtools.modspec import ModulationTensor


def sine(freq=1000.0, duration=1.0, sample_rate=16000, amplitude=1.0, phase=0.0):
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return AudioClip.from_mono(amplitude * np.sin(2 * np.pi * freq * t + phase), sample_rate)


def random_tensor(rng, frames=None, config=None, active=None):
    config = config or PipelineConfig.original()
    frames = frames or int(rng.integers(1, 51))
    energies = rng.uniform(0.1, 10.0, size=(23, 8, frames))
    if active is None:
        active = np.ones(frames, dtype=bool)
    return ModulationTensor(energies, active, config)
