"""Static SVG line plots of sweep CSVs, rendered through the Django template engine."""
import dataclasses
import math
from collections import defaultdict

import numpy as np
from django.template.loader import render_to_string

from .exceptions import DataError, UsageError

X_COLUMNS = ('snr_db', 'ratio')
Y_COLUMNS = ('psnr_db', 'ssim')
LABELS = {'snr_db': 'SNR (dB)', 'ratio': 'bandwidth ratio r', 'psnr_db': 'PSNR (dB)', 'ssim': 'SSIM'}
PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b', '#e377c2', '#7f7f7f')
TEMPLATE = 'semcom/plot.svg'


@dataclasses.dataclass(frozen=True)
class PlotLayout:
    width: int = 640
    height: int = 400
    left: int = 70
    right_margin: int = 170
    top: int = 20
    bottom_margin: int = 50
    ticks: int = 5

    @property
    def right(self):
        return self.width - self.right_margin

    @property
    def bottom(self):
        return self.height - self.bottom_margin


def _fmt(value):
    return f'{value:.2f}'


def _span(values):
    low, high = min(values), max(values)
    if low == high:
        low, high = low - 0.5, high + 0.5
    return low, high


def curves(rows, x, y, group):
    """{group value: [(x, median y), ...]} sorted by x; duplicates (seeds) collapse to the median.

    Rows at an infinite x (the ideal-channel SNR) have no place on the axis and are skipped.
    """
    buckets = defaultdict(lambda: defaultdict(list))
    for row in rows:
        if not math.isfinite(float(row[x])):
            continue
        buckets[str(row[group])][float(row[x])].append(float(row[y]))
    return {name: [(xv, float(np.median(ys))) for xv, ys in sorted(points.items())]
            for name, points in sorted(buckets.items())}


def plot_context(rows, x, y, group, layout=PlotLayout()):
    if x not in X_COLUMNS:
        raise UsageError(f'--x must be one of {", ".join(X_COLUMNS)}, got {x!r}')
    if y not in Y_COLUMNS:
        raise UsageError(f'--y must be one of {", ".join(Y_COLUMNS)}, got {y!r}')
    if not rows:
        raise DataError('no rows to plot')
    if group not in rows[0]:
        raise UsageError(f'unknown group column {group!r}')
    lines = curves(rows, x, y, group)
    xs = [xv for points in lines.values() for xv, _ in points]
    finite = [yv for points in lines.values() for _, yv in points if math.isfinite(yv)]
    if not finite:
        raise DataError(f'column {y} has no finite values')
    x_low, x_high = _span(xs)
    y_low, y_high = _span(finite)

    def sx(value):
        return layout.left + (value - x_low) / (x_high - x_low) * (layout.right - layout.left)

    def sy(value):
        return layout.bottom - (value - y_low) / (y_high - y_low) * (layout.bottom - layout.top)

    series = []
    for index, (name, points) in enumerate(lines.items()):
        coords, clipped = [], []
        for xv, yv in points:
            # inf (identical images) is pinned to the top of the axis and marked
            position = (sx(xv), sy(min(yv, y_high)))
            coords.append(position)
            if math.isinf(yv):
                clipped.append(tuple(_fmt(v) for v in position))
        series.append({
            'name': name,
            'colour': PALETTE[index % len(PALETTE)],
            'points': ' '.join(f'{_fmt(px)},{_fmt(py)}' for px, py in coords),
            'clipped': clipped,
            'legend_y': layout.top + 10 + 18 * index,
        })
    x_ticks = [{'position': _fmt(sx(v)), 'end': layout.bottom + 5, 'label_at': layout.bottom + 18, 'label': f'{v:g}'}
               for v in np.linspace(x_low, x_high, layout.ticks)]
    y_ticks = [{'position': _fmt(sy(v)), 'end': layout.left - 5, 'label_at': layout.left - 8, 'label': f'{v:.3g}'}
               for v in np.linspace(y_low, y_high, layout.ticks)]
    return {
        'width': layout.width, 'height': layout.height,
        'left': layout.left, 'right': layout.right, 'top': layout.top, 'bottom': layout.bottom,
        'x_ticks': x_ticks, 'y_ticks': y_ticks,
        'x_label': LABELS[x], 'y_label': LABELS[y],
        'x_label_at': ((layout.left + layout.right) // 2, layout.height - 12),
        'y_label_at': (18, (layout.top + layout.bottom) // 2),
        'series': series, 'group': group,
        'legend_x': layout.right + 15, 'legend_line_end': layout.right + 40, 'legend_text_x': layout.right + 46,
    }


def render_plot(rows, x, y, group, layout=PlotLayout()):
    return render_to_string(TEMPLATE, plot_context(rows, x, y, group, layout))
