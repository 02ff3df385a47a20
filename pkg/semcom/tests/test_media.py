import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from ..exceptions import PnmParseError, ShapeError, UsageError
from ..media import (MetricConfig, PairSpec, format_pnm, format_psnr, gen_pair, load_pairs, parse_pnm, psnr, ssim,
                     to_bytes, write_pairs)


class PnmTest(SimpleTestCase):
    def test_written_image_parses_back_to_its_8bit_levels(self):
        image = np.random.default_rng(0).uniform(size=(5, 7, 3))
        parsed = parse_pnm(format_pnm(image))
        self.assertEqual(parsed.shape, (5, 7, 3))
        np.testing.assert_array_equal(to_bytes(parsed), to_bytes(image))

    def test_header_comments_are_skipped(self):
        image = parse_pnm(b'P5\n# made by hand\n2 1 # width height\n255\n\x00\xff')
        np.testing.assert_array_equal(image[..., 0], [[0.0, 1.0]])

    def test_bad_magic_reports_offset_zero(self):
        with self.assertRaises(PnmParseError) as ctx:
            parse_pnm(b'P3\n1 1\n255\n0')
        self.assertEqual(ctx.exception.offset, 0)

    def test_truncated_payload(self):
        with self.assertRaisesMessage(PnmParseError, 'truncated payload'):
            parse_pnm(b'P5\n2 2\n255\n\x00\x00\x00')

    def test_trailing_bytes(self):
        with self.assertRaisesMessage(PnmParseError, 'trailing'):
            parse_pnm(b'P5\n1 1\n255\n\x00\x00')

    def test_unsupported_maxval(self):
        with self.assertRaisesMessage(PnmParseError, 'maxval'):
            parse_pnm(b'P5\n1 1\n65535\n\x00\x00')

    def test_zero_dimensions(self):
        with self.assertRaisesMessage(PnmParseError, 'zero dimensions'):
            parse_pnm(b'P5\n0 1\n255\n')

    def test_non_numeric_header(self):
        with self.assertRaises(PnmParseError):
            parse_pnm(b'P5\nxx 1\n255\n\x00')

    def test_samples_are_scaled_to_unit_range(self):
        image = parse_pnm(b'P5\n2 2\n255\n\x00\x80\xff\x40')
        np.testing.assert_array_equal(image[..., 0], [[0.0, 128 / 255], [1.0, 64 / 255]])

    def test_generated_images_resave_byte_identically(self):
        for seed in range(5):
            for image in gen_pair(PairSpec(size=8), seed=seed):
                blob = format_pnm(image)
                self.assertEqual(format_pnm(parse_pnm(blob)), blob)

    def test_commented_header_resaves_in_canonical_form(self):
        blob = b'P5\n# made by hand\n2  1\n255\n\x10\xf0'
        self.assertEqual(format_pnm(parse_pnm(blob)), b'P5\n2 1\n255\n\x10\xf0')

    def test_every_truncation_is_a_parse_error(self):
        blob = format_pnm(np.random.default_rng(2).uniform(size=(3, 4, 1)))
        for end in range(len(blob)):
            with self.assertRaises(PnmParseError):
                parse_pnm(blob[:end])

    def test_header_mutations_never_escape_as_other_errors(self):
        blob = format_pnm(np.random.default_rng(3).uniform(size=(4, 4, 3)))
        header_end = len(blob) - 4 * 4 * 3
        rng = np.random.default_rng(4)
        rejected = 0
        for _ in range(2000):
            mutated = bytearray(blob)
            for position in rng.integers(0, header_end, size=int(rng.integers(1, 4))):
                mutated[position] = int(rng.integers(0, 256))
            try:
                image = parse_pnm(bytes(mutated))
            except PnmParseError as exc:
                self.assertGreaterEqual(exc.offset, 0)
                rejected += 1
            else:
                self.assertEqual(image.size, 4 * 4 * 3)
        self.assertGreater(rejected, 1000)


class MetricTest(SimpleTestCase):
    def test_psnr_of_identical_images_is_infinite(self):
        image = np.full((4, 4, 1), 0.3)
        self.assertTrue(math.isinf(psnr(image, image)))
        self.assertEqual(format_psnr(psnr(image, image)), 'inf')

    def test_psnr_of_a_constant_offset(self):
        a = np.zeros((4, 4, 1))
        b = np.full((4, 4, 1), 16 / 255)
        self.assertAlmostEqual(psnr(a, b), 10 * math.log10(255 ** 2 / 256), places=9)

    def test_ssim_of_identical_images_is_exactly_one(self):
        image = np.random.default_rng(1).uniform(size=(8, 8, 3))
        self.assertEqual(ssim(image, image), 1.0)

    def test_ssim_of_two_constant_images(self):
        cfg = MetricConfig()
        a = np.full((4, 4, 1), 0.2)
        b = np.full((4, 4, 1), 0.4)
        mean_a, mean_b = 0.2 * 255, 0.4 * 255
        expected = (2 * mean_a * mean_b + cfg.c1) / (mean_a ** 2 + mean_b ** 2 + cfg.c1)
        self.assertAlmostEqual(ssim(a, b), expected, places=12)

    def test_psnr_of_unit_mse_on_the_8bit_scale(self):
        a = np.zeros((4, 4, 1))
        b = np.full((4, 4, 1), 1 / 255)
        self.assertAlmostEqual(psnr(a, b), 48.1308, delta=1e-3)

    def test_psnr_of_black_against_white_is_zero(self):
        self.assertAlmostEqual(psnr(np.zeros((4, 4, 1)), np.ones((4, 4, 1))), 0.0, places=12)

    def test_psnr_falls_as_the_error_grows(self):
        base = np.full((6, 6, 1), 0.5)
        signs = np.where(np.random.default_rng(5).uniform(size=base.shape) < 0.5, -1.0, 1.0)
        values = [psnr(base, base + signs * level / 255) for level in range(1, 30)]
        self.assertTrue(all(later < earlier for earlier, later in zip(values, values[1:])))

    def test_ssim_of_black_against_white(self):
        cfg = MetricConfig()
        value = ssim(np.zeros((4, 4, 1)), np.ones((4, 4, 1)))
        self.assertAlmostEqual(value, cfg.c1 / (255 ** 2 + cfg.c1), places=12)
        self.assertAlmostEqual(value, 1e-4, delta=1e-6)

    def test_ssim_is_symmetric(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            a, b = rng.uniform(size=(8, 8, 3)), rng.uniform(size=(8, 8, 3))
            self.assertAlmostEqual(ssim(a, b), ssim(b, a), places=12)

    def test_ssim_is_one_only_for_identical_images(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = rng.uniform(size=(8, 8, 1))
            b = a.copy()
            b[tuple(rng.integers(0, 8, size=2))] = rng.uniform()
            self.assertEqual(ssim(a, a), 1.0)
            self.assertLess(ssim(a, b), 1.0)
            self.assertLess(ssim(a, rng.uniform(size=(8, 8, 1))), 1.0)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            psnr(np.zeros((2, 2, 1)), np.zeros((2, 3, 1)))


class PairTest(SimpleTestCase):
    def test_pairs_are_deterministic(self):
        first = gen_pair(PairSpec(size=16), seed=5)
        second = gen_pair(PairSpec(size=16), seed=5)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])

    def test_zero_edit_fraction_gives_identical_images(self):
        a, b = gen_pair(PairSpec(size=16, edit_fraction=0.0), seed=1)
        np.testing.assert_array_equal(a, b)

    def test_edit_region_size_and_magnitude(self):
        spec = PairSpec(size=16, edit_fraction=0.25)
        a, b = gen_pair(spec, seed=3)
        changed = np.any(a != b, axis=2)
        self.assertEqual(int(changed.sum()), round(0.25 * 16 * 16))
        self.assertGreaterEqual(np.abs(a - b)[changed].min(), 0.25)

    def test_full_edit_changes_nearly_every_pixel(self):
        for seed in range(10):
            a, b = gen_pair(PairSpec(size=16, edit_fraction=1.0), seed=seed)
            self.assertGreaterEqual(float(np.mean(np.any(a != b, axis=2))), 0.9)

    def test_too_small(self):
        with self.assertRaisesMessage(UsageError, 'too small'):
            gen_pair(PairSpec(size=4), seed=0)

    def test_write_and_load_pairs(self):
        with tempfile.TemporaryDirectory() as tmp:
            written = write_pairs(tmp, PairSpec(size=8), count=2, seed=9)
            self.assertIn(Path(tmp) / 'index.csv', written)
            self.assertTrue((Path(tmp) / 'pair_0001_b.pgm').exists())
            pairs = load_pairs(tmp)
        self.assertEqual(len(pairs), 2)
        expected = gen_pair(PairSpec(size=8, texture_seed=1), seed=9)
        np.testing.assert_array_equal(pairs[1][1], expected[1])
