import math

import numpy as np
from django.test import SimpleTestCase
from scipy import integrate, stats

from ..channel import (AWGN_ONLY, SR_FADING, ChannelRealization, SrParams, apply_channel, empirical_snr_db,
                       equalize, hyp1f1, ideal_channel, ks_critical, ks_statistic, log_hyp1f1, realize_channel,
                       sr_cdf, sr_mean, sr_pdf, sr_sample)
from ..exceptions import ConfigError, NumericError, UsageError
from ..streams import CHANNEL, NOISE


class Hyp1f1Test(SimpleTestCase):
    def test_zero_argument(self):
        for m in (0.5, 1.0, 19.4):
            self.assertEqual(hyp1f1(m, 1.0, 0.0), 1.0)

    def test_exponential_identities(self):
        self.assertAlmostEqual(hyp1f1(1.0, 1.0, 1.0), math.e, delta=1e-12)
        self.assertAlmostEqual(hyp1f1(2.0, 1.0, 1.0), 2.0 * math.e, delta=1e-10)
        self.assertAlmostEqual(hyp1f1(1.0, 2.0, 3.0), (math.exp(3.0) - 1.0) / 3.0, delta=1e-12)

    def test_invalid_arguments(self):
        with self.assertRaises(UsageError):
            hyp1f1(1.0, 0.0, 1.0)
        with self.assertRaises(UsageError):
            hyp1f1(1.0, -2.0, 1.0)
        with self.assertRaises(UsageError):
            hyp1f1(1.0, 1.0, -0.5)

    def test_overflowing_series_raises(self):
        with self.assertRaisesMessage(NumericError, 'did not converge'):
            hyp1f1(1.0, 1.0, 1e5)

    def test_log_series_matches_the_direct_series(self):
        for a, x in ((19.4, 0.0), (19.4, 2.5), (1.0, 40.0), (3.0, 0.01)):
            self.assertAlmostEqual(log_hyp1f1(a, 1.0, x), math.log(hyp1f1(a, 1.0, x)), places=10)

    def test_log_series_stays_finite_where_the_direct_one_overflows(self):
        # 1F1(2; 1; x) = (1 + x) e^x
        self.assertAlmostEqual(log_hyp1f1(2.0, 1.0, 800.0), 800.0 + math.log(801.0), places=8)
        self.assertAlmostEqual(log_hyp1f1(2.0, 1.0, 5000.0), 5000.0 + math.log(5001.0), places=3)


class DensityTest(SimpleTestCase):
    p = SrParams()

    def test_zero_los_power_reduces_to_exponential(self):
        p = SrParams(omega=0.0)
        scatter = 2.0 * p.b0
        self.assertAlmostEqual(sr_pdf(0.0, p), 1.0 / scatter, places=12)
        self.assertAlmostEqual(sr_pdf(0.7, p), math.exp(-0.7 / scatter) / scatter, places=12)

    def test_density_is_zero_for_negative_gain(self):
        self.assertEqual(sr_pdf(-1.0, self.p), 0.0)

    def test_density_accepts_arrays(self):
        values = sr_pdf(np.array([[0.5, 1.0], [1.5, 2.0]]), self.p)
        self.assertEqual(values.shape, (2, 2))
        self.assertTrue(np.all(values > 0.0))

    def test_density_integrates_to_one(self):
        total = sum(integrate.quad(sr_pdf, lo, hi, args=(self.p,), limit=200)[0]
                    for lo, hi in ((0.0, 10.0), (10.0, 50.0), (50.0, np.inf)))
        self.assertAlmostEqual(total, 1.0, delta=1e-6)

    def test_first_moment(self):
        mean = sum(integrate.quad(lambda r: r * sr_pdf(r, self.p), lo, hi, limit=200)[0]
                   for lo, hi in ((0.0, 10.0), (10.0, 50.0), (50.0, np.inf)))
        self.assertAlmostEqual(mean, 1.606, delta=1e-4)
        self.assertAlmostEqual(sr_mean(self.p), 1.606, places=12)

    def test_cdf_is_monotone_and_bounded(self):
        values = sr_cdf(np.linspace(-1.0, 40.0, 200), self.p)
        self.assertTrue(np.all(np.diff(values) >= 0.0))
        self.assertEqual(values[0], 0.0)
        self.assertAlmostEqual(values[-1], 1.0, places=6)


class SamplingTest(SimpleTestCase):
    p = SrParams()

    def test_sample_mean(self):
        self.assertAlmostEqual(float(np.mean(sr_sample(100_000, self.p, seed=0))), 1.606, delta=0.02)

    def test_samples_follow_the_density(self):
        n = 100_000
        self.assertLess(ks_statistic(sr_sample(n, self.p, seed=1), self.p), ks_critical(n))

    def test_same_seed_same_stream(self):
        np.testing.assert_array_equal(sr_sample(50, self.p, seed=7), sr_sample(50, self.p, seed=7))
        self.assertFalse(np.array_equal(sr_sample(50, self.p, seed=7), sr_sample(50, self.p, seed=8)))

    def test_large_nakagami_parameter_approaches_rician(self):
        p = SrParams(m=1e6)
        n = 20_000
        envelope = np.sqrt(sr_sample(n, p, seed=2))
        sigma = math.sqrt(p.b0)
        statistic = stats.kstest(envelope, stats.rice(b=math.sqrt(p.omega) / sigma, scale=sigma).cdf).statistic
        self.assertLess(statistic, ks_critical(n))

    def test_degenerate_limit_concentrates_at_omega(self):
        samples = sr_sample(1000, SrParams(b0=1e-10, m=1e8, omega=1.29), seed=3)
        self.assertAlmostEqual(float(np.mean(samples)), 1.29, delta=1e-3)
        self.assertLess(float(np.std(samples)), 1e-3)

    def test_invalid_count(self):
        with self.assertRaises(UsageError):
            sr_sample(0, self.p)


class ParamsTest(SimpleTestCase):
    def test_parse(self):
        self.assertEqual(SrParams.parse('0.2,4,1.5'), SrParams(0.2, 4.0, 1.5))

    def test_malformed_triple(self):
        with self.assertRaises(UsageError):
            SrParams.parse('0.2,4')

    def test_invalid_values(self):
        with self.assertRaises(ConfigError):
            SrParams(b0=0.0)
        with self.assertRaises(ConfigError):
            SrParams(omega=-1.0)


class LinkTest(SimpleTestCase):
    def test_ideal_channel_is_exact(self):
        y = np.linspace(-1.0, 1.0, 16)
        np.testing.assert_array_equal(apply_channel(y, ideal_channel()), y)
        np.testing.assert_array_equal(apply_channel(y, realize_channel(SR_FADING, math.inf)), y)

    def test_zero_db_has_unit_noise_variance(self):
        realization = realize_channel(AWGN_ONLY, 0.0, seed=1)
        self.assertEqual(realization.noise_variance, 1.0)
        self.assertEqual(realization.gain, 1.0)

    def test_output_matches_an_independent_rng_path(self):
        p, seed, snr_db = SrParams(), 1234, 3.0
        y = np.random.default_rng(0).normal(size=32)
        realization = realize_channel(SR_FADING, snr_db, p, seed)

        def philox(tag):
            return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(tag,))))

        fading = philox(CHANNEL)
        los = fading.gamma(p.m, p.omega / p.m, size=1)
        scatter = fading.normal(0.0, math.sqrt(p.b0), size=(2, 1))
        gain = float(((np.sqrt(los) + scatter[0]) ** 2 + scatter[1] ** 2)[0])
        noise = philox(NOISE).normal(0.0, math.sqrt(10.0 ** (-snr_db / 10.0)), size=32)
        self.assertEqual(realization.gain, gain)
        np.testing.assert_array_equal(apply_channel(y, realization), math.sqrt(gain) * y + noise)

    def test_empirical_snr_matches_the_configured_snr(self):
        rng = np.random.default_rng(5)
        clean, received = [], []
        for seed in range(1000):
            frame = rng.normal(size=64)
            frame /= math.sqrt(np.mean(frame ** 2))
            clean.append(frame)
            received.append(apply_channel(frame, realize_channel(AWGN_ONLY, 5.0, seed=seed)))
        self.assertAlmostEqual(empirical_snr_db(np.concatenate(clean), np.concatenate(received)), 5.0, delta=0.2)

    def test_equalize_undoes_the_fading_amplitude(self):
        realization = ChannelRealization(SR_FADING, math.inf, 4.0, 0.0, 0)
        y = np.array([0.5, -1.0])
        np.testing.assert_array_equal(apply_channel(y, realization), [1.0, -2.0])
        np.testing.assert_array_equal(equalize(apply_channel(y, realization), realization), y)

    def test_post_fading_snr(self):
        realization = ChannelRealization(SR_FADING, 10.0, 2.0, 0.1, 0)
        self.assertAlmostEqual(realization.post_fading_snr_db, 10.0 * math.log10(20.0), places=12)
        self.assertEqual(ideal_channel().post_fading_snr_db, math.inf)

    def test_users_draw_independent_gains(self):
        first = realize_channel(SR_FADING, 0.0, seed=1)
        second = realize_channel(SR_FADING, 0.0, seed=2)
        self.assertNotEqual(first.gain, second.gain)

    def test_errors(self):
        with self.assertRaises(ConfigError):
            realize_channel('rayleigh', 0.0)
        with self.assertRaises(UsageError):
            realize_channel(AWGN_ONLY, math.nan)
        with self.assertRaises(UsageError):
            apply_channel([], ideal_channel())
