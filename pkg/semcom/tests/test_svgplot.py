import math

from django.test import SimpleTestCase

from ..exceptions import DataError, UsageError
from ..svgplot import curves, plot_context, render_plot


def row(snr_db, psnr_db, sorting='sensitivity', ratio=0.5, ssim=0.5):
    return {'snr_db': snr_db, 'ratio': ratio, 'psnr_db': psnr_db, 'ssim': ssim, 'sorting': sorting}


class CurvesTest(SimpleTestCase):
    def test_seeds_collapse_to_the_median(self):
        rows = [row(0.0, 10.0), row(0.0, 30.0), row(0.0, 12.0), row(-5.0, 8.0)]
        self.assertEqual(curves(rows, 'snr_db', 'psnr_db', 'sorting'),
                         {'sensitivity': [(-5.0, 8.0), (0.0, 12.0)]})

    def test_one_curve_per_group(self):
        rows = [row(0.0, 10.0, 'random'), row(0.0, 20.0, 'sensitivity')]
        self.assertEqual(list(curves(rows, 'snr_db', 'psnr_db', 'sorting')), ['random', 'sensitivity'])

    def test_infinite_x_is_skipped(self):
        rows = [row(math.inf, 40.0), row(0.0, 20.0)]
        self.assertEqual(curves(rows, 'snr_db', 'psnr_db', 'sorting'), {'sensitivity': [(0.0, 20.0)]})


class RenderTest(SimpleTestCase):
    rows = [row(-5.0, 15.0), row(5.0, 25.0), row(-5.0, 12.0, 'random'), row(5.0, math.inf, 'random')]

    def test_svg_has_one_polyline_per_group_and_axis_labels(self):
        svg = render_plot(self.rows, 'snr_db', 'psnr_db', 'sorting')
        self.assertTrue(svg.startswith('<?xml'))
        self.assertEqual(svg.count('<polyline'), 2)
        self.assertIn('SNR (dB)', svg)
        self.assertIn('PSNR (dB)', svg)
        self.assertIn('sorting=random', svg)

    def test_infinite_psnr_is_clipped_and_marked(self):
        context = plot_context(self.rows, 'snr_db', 'psnr_db', 'sorting')
        random_line = next(line for line in context['series'] if line['name'] == 'random')
        self.assertEqual(len(random_line['clipped']), 1)
        self.assertEqual(random_line['clipped'][0][1], f'{context["top"]:.2f}')
        self.assertEqual(render_plot(self.rows, 'snr_db', 'psnr_db', 'sorting').count('class="clipped"'), 1)

    def test_single_x_value_still_renders(self):
        svg = render_plot([row(0.0, 10.0)], 'ratio', 'ssim', 'sorting')
        self.assertIn('bandwidth ratio r', svg)

    def test_errors(self):
        with self.assertRaises(UsageError):
            plot_context(self.rows, 'mse', 'psnr_db', 'sorting')
        with self.assertRaises(UsageError):
            plot_context(self.rows, 'snr_db', 'mse', 'sorting')
        with self.assertRaises(UsageError):
            plot_context(self.rows, 'snr_db', 'psnr_db', 'colour')
        with self.assertRaises(DataError):
            plot_context([], 'snr_db', 'psnr_db', 'sorting')
        with self.assertRaisesMessage(DataError, 'no finite values'):
            plot_context([row(0.0, math.inf)], 'snr_db', 'psnr_db', 'sorting')
