import io
import unittest

import numpy as np

from hanzo.srmrtools.audio import AudioClip, resample
from hanzo.srmrtools.config import PipelineConfig
from hanzo.srmrtools.corpus import speech_like
from hanzo.srmrtools.errors import (
    ConfigError,
    DegenerateTensorError,
    SilentInputError,
    UtteranceTooShortError,
)
from hanzo.srmrtools.modspec import (
    ModulationTensor,
    analyze,
    apply_energy_floor,
    design_gammatone_bank,
    erb,
    erb_space,
    frame_and_dft,
    group_modulation_bands,
    modulation_band_edges,
    temporal_envelope,
)
from hanzo.srmrtools.tests import sine


class GammatoneTest(unittest.TestCase):
    def test_erb(self):
        self.assertAlmostEqual(float(erb(1000.0)), 24.7 * (4.37 + 1), places=9)

    def test_centre_frequencies(self):
        cf = erb_space(125.0, 6400.0, 23)
        self.assertEqual(cf.size, 23)
        self.assertEqual(cf[0], 125.0)
        self.assertEqual(cf[-1], 6400.0)
        self.assertTrue(np.all(np.diff(cf) > 0))

    def test_unit_gain_at_centre(self):
        bank = design_gammatone_bank(PipelineConfig.original(), 16000)
        for band in (0, 11, 22):
            cf = bank.centre_frequencies[band]
            self.assertAlmostEqual(float(np.abs(bank.response(band, cf)[0])), 1.0, places=9)
            if 2 * cf < 8000:
                self.assertLess(np.abs(bank.response(band, [2 * cf])[0]), 0.1)

    def test_peaks_at_centre(self):
        bank = design_gammatone_bank(PipelineConfig.original(), 16000)
        for band, cf in enumerate(bank.centre_frequencies):
            freqs = np.linspace(0.8 * cf, 1.2 * cf, 4001)
            peak = freqs[np.argmax(np.abs(bank.response(band, freqs)))]
            self.assertAlmostEqual(peak / cf, 1.0, delta=0.02)

    def test_cf_max_beyond_nyquist(self):
        with self.assertRaises(ConfigError):
            design_gammatone_bank(PipelineConfig.original(), 8000)

    def test_tone_lands_in_its_band(self):
        bank = design_gammatone_bank(PipelineConfig.original(), 16000)
        band = 12
        tone = sine(bank.centre_frequencies[band], 0.5).channels[0]
        energy = (bank.filter(tone)[:, 2000:] ** 2).sum(axis=1)
        self.assertEqual(int(np.argmax(energy)), band)


class EnvelopeTest(unittest.TestCase):
    def test_am_tone_envelope(self):
        t = np.arange(32000) / 16000
        x = (1 + 0.5 * np.cos(2 * np.pi * 8 * t)) * np.sin(2 * np.pi * 1000 * t)
        env = temporal_envelope(x, 16000, 500)
        self.assertEqual(env.size, 1000)
        expected = 1 + 0.5 * np.cos(2 * np.pi * 8 * np.arange(1000) / 500)
        np.testing.assert_allclose(env[100:-100], expected[100:-100], atol=0.02)

    def test_centre_tone_has_flat_envelope(self):
        cf = design_gammatone_bank(PipelineConfig.original(), 16000).centre_frequencies[10]
        env = temporal_envelope(sine(cf, 1.0).channels[0], 16000, 500)[25:-25]
        self.assertLess(env.std() / env.mean(), 0.05)

    def test_constant_envelope_spectrum(self):
        config = PipelineConfig.original()
        spectra = frame_and_dft(np.full(500, 2.0), config)
        self.assertEqual(spectra.shape, (1 + (500 - 128) // 16, 513))
        freqs = np.arange(513) * 500 / 1024
        for frame in spectra:
            self.assertEqual(int(np.argmax(frame)), 0)
            self.assertLess(frame[freqs >= 16].sum(), 1e-3 * frame.sum())

    def test_too_short(self):
        with self.assertRaises(UtteranceTooShortError):
            frame_and_dft(np.ones(127), PipelineConfig.original())


class ModulationBandTest(unittest.TestCase):
    def test_band_edges(self):
        centres, edges = modulation_band_edges(PipelineConfig.original())
        self.assertEqual(centres[0], 4.0)
        self.assertEqual(centres[-1], 128.0)
        np.testing.assert_allclose(centres, 4.0 * 2.0 ** (5 * np.arange(8) / 7))
        np.testing.assert_allclose(edges[1:-1], np.sqrt(centres[:-1] * centres[1:]))
        centres, _ = modulation_band_edges(PipelineConfig.normalized())
        self.assertEqual((centres[0], centres[-1]), (4.0, 40.0))

    def _band_shares(self, freq):
        config = PipelineConfig.original()
        t = np.arange(2000) / 500
        env = 1 + 0.9 * np.cos(2 * np.pi * freq * t)
        tensor = group_modulation_bands(frame_and_dft(env[np.newaxis, :], config), config)
        totals = tensor.energies.sum(axis=(0, 2))
        return totals / totals.sum()

    def test_cosine_envelope_fills_its_band(self):
        centres, _ = modulation_band_edges(PipelineConfig.original())
        shares = self._band_shares(centres[3])
        self.assertGreater(shares[3], 0.7)

    def test_slow_cosine_stays_out_of_high_bands(self):
        shares = self._band_shares(4.0)
        self.assertLess(shares[4:].sum(), 0.01)

    def test_empty_band_is_a_config_error(self):
        config = PipelineConfig.original().override({"dft_size": 128, "mod_range": [4.0, 5.0]})
        with self.assertRaises(ConfigError):
            group_modulation_bands(np.ones((1, 1, 65)), config)


class EnergyFloorTest(unittest.TestCase):
    def test_floor_is_linear_in_energy(self):
        config = PipelineConfig.normalized()
        energies = np.ones((23, 8, 4))
        energies[:, :, 1] = 1e-2  # 20 dB down
        energies[:, :, 2] = 1e-4  # 40 dB down
        energies[:, :, 3] = 10 ** -2.9  # 29 dB down
        tensor = apply_energy_floor(ModulationTensor(energies, np.ones(4, bool), config))
        self.assertEqual(tensor.active_frames.tolist(), [True, True, False, True])

    def test_original_mode_refused(self):
        tensor = ModulationTensor(np.ones((23, 8, 2)), np.ones(2, bool), PipelineConfig.original())
        with self.assertRaises(ConfigError):
            apply_energy_floor(tensor, 30.0)

    def test_all_zero(self):
        config = PipelineConfig.normalized()
        tensor = ModulationTensor(np.zeros((23, 8, 2)), np.ones(2, bool), config)
        with self.assertRaises(DegenerateTensorError):
            apply_energy_floor(tensor)


class AnalyzeTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.speech = speech_like(2.0, seed=11)
        cls.tensor = analyze(cls.speech)

    def test_shape(self):
        frames = 1 + (1000 - 128) // 16
        self.assertEqual(self.tensor.shape, (23, 8, frames))
        self.assertEqual(self.tensor.num_active, frames)
        self.assertTrue(np.all(self.tensor.energies >= 0))

    def test_scale_law(self):
        scaled = analyze(self.speech.scaled(0.5))
        np.testing.assert_allclose(scaled.energies, 0.25 * self.tensor.energies, rtol=1e-9)

    def test_am_tone_energy_sits_in_the_lowest_band(self):
        t = np.arange(64000) / 16000
        x = (1 + np.cos(2 * np.pi * 4 * t)) * np.sin(2 * np.pi * 1000 * t)
        tensor = analyze(AudioClip.from_mono(x, 16000))
        band = int(np.argmin(np.abs(erb_space(125.0, 6400.0, 23) - 1000.0)))
        per_band = tensor.energies[band].sum(axis=1)
        for k in range(4, 8):
            self.assertGreater(per_band[0], per_band[k])

    def test_deterministic(self):
        again = analyze(self.speech)
        self.assertTrue(np.array_equal(again.energies, self.tensor.energies))

    def test_other_rates_are_resampled(self):
        tensor = analyze(resample(self.speech, 22050))
        self.assertEqual(tensor.shape, self.tensor.shape)

    def test_normalized_mode_floor(self):
        x = self.speech.channels[0].copy()
        x[8000:24000] *= 1e-3
        tensor = analyze(AudioClip.from_mono(x, 16000), PipelineConfig.normalized())
        self.assertEqual(tensor.mode, "normalized")
        self.assertLess(tensor.num_active, tensor.num_frames)
        self.assertGreater(tensor.num_active, 0)

    def test_errors(self):
        with self.assertRaises(UtteranceTooShortError):
            analyze(sine(duration=0.25))
        with self.assertRaises(SilentInputError):
            analyze(AudioClip.from_mono(np.zeros(16000), 16000))

    def test_csv_dump(self):
        tensor = ModulationTensor(np.arange(2 * 8 * 3, dtype=float).reshape(2, 8, 3),
                                  [True, False, True], PipelineConfig.original())  # fmt: skip
        fh = io.StringIO()
        tensor.write_csv(fh)
        lines = fh.getvalue().splitlines()
        self.assertEqual(lines[0], "frame,acoustic_band,mod_band,energy,active")
        self.assertEqual(len(lines), 1 + 2 * 8 * 3)
        self.assertEqual(lines[1], "0,1,1,0.0,1")
        self.assertTrue(lines[-1].endswith(",1"))
        self.assertIn("1,1,1,1.0,0", lines)


if __name__ == "__main__":
    unittest.main()
