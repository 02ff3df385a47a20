"""Trend checks on a trained toy system.

These train real codecs for several minutes, so they only run with
SMDMA_ACCEPTANCE=1 in the environment.
"""
import dataclasses
import math
import os
import unittest

import numpy as np
from django.test import SimpleTestCase

from ..codec import (ChannelCodecConfig, SemanticCodecConfig, build_semantic_codec, identity_channel_codec,
                     train_semantic)
from ..media import PairSpec, gen_pair
from ..pipeline import (ARITHMETIC, GEOMETRIC, RANDOM_SORTING, SENSITIVITY, PipelineConfig, SmdmaModels,
                        calibrate_stream_rankings, channel_dataset, channel_objective, combined_loss,
                        draw_realizations, evaluate_sweep, train_channel)
from ..streams import INIT, make_generator

ENABLED = os.environ.get('SMDMA_ACCEPTANCE') == '1'
SEMANTIC = SemanticCodecConfig(height=16, width=16, channels=1, hidden=128, feature_dim=32)
CHANNEL = ChannelCodecConfig(encoder_widths=(16, 32), decoder_widths=(16, 1))


def medians(records, key, value):
    grouped = {}
    for record in records:
        grouped.setdefault(key(record), []).append(value(record))
    return {name: float(np.median(values)) for name, values in grouped.items()}


def non_decreasing(values, slack):
    return all(later >= earlier - slack for earlier, later in zip(values, values[1:]))


@unittest.skipUnless(ENABLED, 'set SMDMA_ACCEPTANCE=1 to run the trend checks')
class TrainedSystemTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.pairs = [gen_pair(PairSpec(size=16, texture_seed=index), seed=1) for index in range(16)]
        images = [image for pair in cls.pairs for image in pair]
        semantic = build_semantic_codec(SEMANTIC, make_generator(1, INIT))
        cls.semantic_result = train_semantic(images, semantic, epochs=150, seed=1, learning_rate=1e-3)
        cls.cfg = PipelineConfig(epochs=20, learning_rate=1e-3)
        shared, delta = calibrate_stream_rankings(cls.pairs, cls.cfg, semantic)
        cls.models = SmdmaModels(semantic, identity_channel_codec(), shared, delta)
        dataset = channel_dataset(cls.pairs, cls.cfg, cls.models)
        channel, _ = train_channel(cls.cfg, dataset, seed=1, codec_cfg=CHANNEL)
        cls.trained = dataclasses.replace(cls.models, channel=channel)
        cls.dataset = dataset

    def test_semantic_loss_halves(self):
        losses = self.semantic_result.losses
        self.assertLessEqual(losses[-1], 0.5 * losses[0])

    def test_sensitivity_sorting_beats_random_sorting(self):
        ratios = [0.1, 0.3, 0.5]
        records = evaluate_sweep(self.cfg, self.trained, self.pairs, [math.inf], ratios, 10, base_seed=5,
                                 sortings=(SENSITIVITY, RANDOM_SORTING))
        ssim = medians(records, lambda r: (r.ratio, r.sorting), lambda r: r.ssim)
        wins = 0
        for ratio in ratios:
            self.assertGreaterEqual(ssim[ratio, SENSITIVITY], ssim[ratio, RANDOM_SORTING])
            wins += ssim[ratio, SENSITIVITY] > ssim[ratio, RANDOM_SORTING]
        self.assertGreaterEqual(wins, 2)

    def test_user_two_psnr_grows_with_snr(self):
        snrs = [-10.0, -5.0, 0.0, 5.0, 10.0]
        records = evaluate_sweep(self.cfg, self.trained, self.pairs, snrs, [0.5], 5, base_seed=6)
        psnr = medians([r for r in records if r.user == 2], lambda r: r.snr_db, lambda r: r.psnr_db)
        self.assertTrue(non_decreasing([psnr[snr] for snr in snrs], 0.3), psnr)

    def test_quality_grows_with_ratio(self):
        ratios = [round(0.1 * step, 1) for step in range(1, 11)]
        records = evaluate_sweep(self.cfg, self.trained, self.pairs, [math.inf], ratios, 5, base_seed=7)
        psnr = medians(records, lambda r: r.ratio, lambda r: r.psnr_db)
        ssim = medians(records, lambda r: r.ratio, lambda r: r.ssim)
        self.assertTrue(non_decreasing([psnr[r] for r in ratios], 0.3), psnr)
        self.assertTrue(non_decreasing([ssim[r] for r in ratios], 0.005), ssim)

    def test_geometric_training_protects_the_worst_user(self):
        self.assertAlmostEqual(combined_loss([4.0, 9.0]).combined, 6.0, places=12)
        self.assertAlmostEqual(combined_loss([2.0, 4.0, 8.0]).combined, 4.0, places=12)
        self.assertEqual(combined_loss([0.0, 3.0]).combined, 0.0)
        worst = {GEOMETRIC: [], ARITHMETIC: []}
        for seed in range(5):
            rng = make_generator(seed, 9)
            evaluation = [(z, draw_realizations(self.cfg, (-5.0, 5.0), rng)) for z in self.dataset]
            for combiner in (GEOMETRIC, ARITHMETIC):
                cfg = dataclasses.replace(self.cfg, combiner=combiner)
                codec, _ = train_channel(cfg, self.dataset, seed=seed, codec_cfg=CHANNEL)
                report, _ = channel_objective(codec, evaluation)
                worst[combiner].append(max(report.user_losses))
        self.assertLessEqual(np.median(worst[GEOMETRIC]), np.median(worst[ARITHMETIC]) * 1.05)

    def test_single_image_overfits(self):
        image = self.pairs[0][0]
        codec = build_semantic_codec(SEMANTIC, make_generator(2, INIT))
        train_semantic([image], codec, epochs=200, seed=2, batch_size=1, learning_rate=1e-3)
        self.assertLess(float(np.mean((codec.reconstruct(image) - image) ** 2)), 0.01)
