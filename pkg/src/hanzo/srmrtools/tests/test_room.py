import math
import unittest

import numpy as np

from hanzo.srmrtools.audio import AudioClip, resample
from hanzo.srmrtools.corpus import speech_like, white_noise
from hanzo.srmrtools.errors import (
    DegenerateDecayError,
    DegenerateRirError,
    DimensionMismatchError,
    GeometryError,
    InsufficientDecayError,
    SilentInputError,
)
from hanzo.srmrtools.level import active_speech_level
from hanzo.srmrtools.room import (
    DIRECT_ONLY,
    SPEED_OF_SOUND,
    Rir,
    convolve,
    drr,
    energy_decay_curve,
    eyring_beta,
    format_drr,
    image_rir,
    mix_noise_at_snr,
    parse_drr,
    rir_stats,
    schroeder_rt60,
    synth_exponential_rir,
    tune_image_room,
)
from hanzo.srmrtools.tests import sine

FS = 16000


class DecayTest(unittest.TestCase):
    def test_exponential_decay_oracle(self):
        for tau in (0.05, 0.1, 0.15):
            estimates = [
                schroeder_rt60(synth_exponential_rir(tau, FS, 10 * tau, seed)) for seed in range(10)
            ]
            self.assertAlmostEqual(np.mean(estimates) / (6.908 * tau), 1.0, delta=0.1)

    def test_edc_starts_at_zero_and_falls(self):
        edc = energy_decay_curve(synth_exponential_rir(0.1, FS, 0.5, 1))
        self.assertEqual(edc[0], 0.0)
        self.assertTrue(np.all(np.diff(edc) <= 0))

    def test_time_dilation_doubles_rt60(self):
        rir = synth_exponential_rir(0.1, FS, 1.0, seed=2)
        stretched = Rir(resample(rir.to_clip(), 2 * FS).channels[0], FS)
        self.assertAlmostEqual(schroeder_rt60(stretched) / schroeder_rt60(rir), 2.0, delta=0.1)

    def test_delta_has_no_decay(self):
        h = np.zeros(1600)
        h[10] = 1.0
        rir = Rir(h, FS)
        with self.assertRaises(DegenerateDecayError):
            schroeder_rt60(rir)
        self.assertEqual(drr(rir), DIRECT_ONLY)

    def test_insufficient_decay(self):
        with self.assertRaises(InsufficientDecayError):
            schroeder_rt60(Rir(np.ones(100), FS))

    def test_degenerate_responses(self):
        with self.assertRaises(DegenerateRirError):
            Rir(np.zeros(10), FS)
        with self.assertRaises(DegenerateRirError):
            Rir(np.array([]), FS)


class DrrTest(unittest.TestCase):
    def test_two_impulses(self):
        h = np.zeros(FS)
        h[0] = 1.0
        h[int(0.05 * FS)] = 0.5
        self.assertAlmostEqual(drr(Rir(h, FS)), 20 * math.log10(2), delta=0.01)

    def test_window_around_peak(self):
        h = np.zeros(FS)
        h[100] = 0.2  # early, outside the window
        h[200] = 1.0
        h[200 + int(0.002 * FS)] = 0.5  # inside the 2.5 ms after the peak
        expected = 10 * math.log10(1.25 / 0.04)
        self.assertAlmostEqual(drr(Rir(h, FS)), expected, places=9)

    def test_drr_format(self):
        self.assertEqual(format_drr(DIRECT_ONLY), "direct-only")
        self.assertEqual(parse_drr("direct-only"), DIRECT_ONLY)
        self.assertEqual(parse_drr(format_drr(3.5)), 3.5)


class ImageMethodTest(unittest.TestCase):
    ROOM = (6.0, 4.0, 3.0)
    SOURCE = (2.0, 1.5, 1.2)
    MIC = (4.0, 2.5, 1.5)

    def test_anechoic_is_the_direct_path(self):
        rir = image_rir(self.ROOM, self.SOURCE, self.MIC, 0.0, FS, 0.1)
        d = math.dist(self.SOURCE, self.MIC)
        self.assertEqual(int(np.argmax(rir.samples)), round(d * FS / SPEED_OF_SOUND))
        self.assertAlmostEqual(rir.samples.sum(), 1 / (4 * math.pi * d), places=12)
        self.assertEqual(drr(rir), DIRECT_ONLY)

    def test_reflections_add_energy_and_decay(self):
        rir = image_rir(self.ROOM, self.SOURCE, self.MIC, 0.8, FS, 0.5)
        self.assertEqual(rir.samples.size, 8000)
        self.assertEqual(rir.meta["beta"], [0.8] * 6)
        stats = rir_stats(rir)
        self.assertGreater(stats.rt60, 0.05)
        self.assertTrue(math.isfinite(stats.drr))

    def test_longer_decay_with_more_reflective_walls(self):
        low = schroeder_rt60(image_rir(self.ROOM, self.SOURCE, self.MIC, 0.6, FS, 0.5))
        high = schroeder_rt60(image_rir(self.ROOM, self.SOURCE, self.MIC, 0.9, FS, 0.8))
        self.assertGreater(high, low)

    def test_cube_follows_eyring(self):
        beta = 0.9
        eyring = 0.161 * 125.0 / (-150.0 * math.log(beta**2))
        self.assertAlmostEqual(eyring, 0.637, places=3)
        rir = image_rir((5.0, 5.0, 5.0), (1.3, 2.1, 1.7), (3.6, 3.2, 2.9), beta, FS, 1.5)
        self.assertAlmostEqual(schroeder_rt60(rir) / eyring, 1.0, delta=0.25)

    def test_high_pass_leaves_the_direct_path(self):
        filtered = image_rir(self.ROOM, self.SOURCE, self.MIC, 0.8, FS, 0.5)
        raw = image_rir(self.ROOM, self.SOURCE, self.MIC, 0.8, FS, 0.5, high_pass=None)
        self.assertIsNone(raw.meta["high_pass"])
        self.assertLess(abs(filtered.samples.sum()), abs(raw.samples.sum()))
        anechoic = image_rir(self.ROOM, self.SOURCE, self.MIC, 0.0, FS, 0.1)
        bare = image_rir(self.ROOM, self.SOURCE, self.MIC, 0.0, FS, 0.1, high_pass=None)
        self.assertTrue(np.array_equal(anechoic.samples, bare.samples))

    def test_reciprocity(self):
        forward = image_rir(self.ROOM, self.SOURCE, self.MIC, 0.8, FS, 0.5)
        backward = image_rir(self.ROOM, self.MIC, self.SOURCE, 0.8, FS, 0.5)
        ratio = np.sum(backward.samples**2) / np.sum(forward.samples**2)
        self.assertAlmostEqual(ratio, 1.0, delta=0.01)

    def test_stats_ignore_scale(self):
        rir = image_rir(self.ROOM, self.SOURCE, self.MIC, 0.8, FS, 0.5)
        base = rir_stats(rir)
        for gain in (2.0, 0.3):
            scaled = rir_stats(rir.scaled(gain))
            self.assertAlmostEqual(scaled.rt60, base.rt60, places=9)
            self.assertAlmostEqual(scaled.drr, base.drr, places=9)

    def test_geometry_errors(self):
        with self.assertRaises(GeometryError):
            image_rir(self.ROOM, (7.0, 1.0, 1.0), self.MIC, 0.5, FS, 0.2)
        with self.assertRaises(GeometryError):
            image_rir(self.ROOM, self.MIC, self.MIC, 0.5, FS, 0.2)
        with self.assertRaises(GeometryError):
            image_rir(self.ROOM, self.SOURCE, self.MIC, 1.0, FS, 0.2)
        with self.assertRaises(GeometryError):
            image_rir((6.0, -1.0, 3.0), self.SOURCE, self.MIC, 0.5, FS, 0.2)

    def test_eyring(self):
        beta = eyring_beta(0.5, self.ROOM)
        self.assertGreater(beta, 0.0)
        self.assertLess(beta, 1.0)
        self.assertGreater(eyring_beta(1.0, self.ROOM), beta)

    def test_tuning_reaches_target(self):
        rir, measured = tune_image_room(0.5, self.ROOM, self.SOURCE, self.MIC, FS)
        self.assertAlmostEqual(measured / 0.5, 1.0, delta=0.15)
        self.assertEqual(schroeder_rt60(rir), measured)


class MixTest(unittest.TestCase):
    def test_convolve_with_delta(self):
        clip = AudioClip(np.random.default_rng(1).standard_normal((2, 100)), FS)
        h = np.zeros(5)
        h[0] = 1.0
        out = convolve(clip, Rir(h, FS))
        self.assertEqual(out.num_samples, 104)
        np.testing.assert_allclose(out.channels[:, :100], clip.channels, atol=1e-12)

    def test_equal_level_sines(self):
        speech = sine(1000.0, 2.0)
        noise = sine(700.0, 3.0)
        mix = mix_noise_at_snr(speech, noise, 0.0, seed=3)
        added = mix.channels[0] - speech.channels[0]
        gain = math.sqrt(np.mean(added**2) / 0.5)
        self.assertAlmostEqual(gain, 1.0, delta=0.01)

    def test_snr_is_met(self):
        speech = speech_like(2.0, seed=7)
        noise = white_noise(3.0, FS, seed=8)
        for snr in (0.0, 10.0, 20.0):
            mix = mix_noise_at_snr(speech, noise, snr, seed=9)
            added = mix.channels[0] - speech.channels[0]
            level = active_speech_level(speech).active_level
            self.assertAlmostEqual(level - 10 * math.log10(np.mean(added**2)), snr, places=6)

    def test_deterministic_and_loops_short_noise(self):
        speech = speech_like(1.0, seed=7)
        noise = white_noise(0.3, FS, seed=8)
        a = mix_noise_at_snr(speech, noise, 5.0, seed=1)
        b = mix_noise_at_snr(speech, noise, 5.0, seed=1)
        self.assertTrue(np.array_equal(a.channels, b.channels))
        self.assertEqual(a.num_samples, speech.num_samples)

    def test_noise_errors(self):
        speech = speech_like(1.0, seed=7)
        with self.assertRaises(SilentInputError):
            mix_noise_at_snr(speech, AudioClip(np.zeros(16000), FS), 10.0, 0)
        stereo = AudioClip(np.tile(speech.channels, (2, 1)), FS)
        with self.assertRaises(DimensionMismatchError):
            mix_noise_at_snr(stereo, white_noise(1.0, FS, channels=3), 10.0, 0)


if __name__ == "__main__":
    unittest.main()
