"""Images: binary PGM/PPM I/O, synthetic correlated pairs and quality metrics.

Images are float64 arrays of shape (H, W, C) with samples in [0, 1]; C is 1
(PGM) or 3 (PPM). Metrics rescale to the 8-bit range so the usual max = 255
convention holds.
"""
import csv
import dataclasses
import logging
import math
from pathlib import Path

import numpy as np

from .exceptions import DataError, PnmParseError, ShapeError, UsageError
from .streams import make_generator

logger = logging.getLogger(__name__)

MIN_PAIR_SIZE = 8
_WHITESPACE = b' \t\n\r\v\f'
_MAGIC_CHANNELS = {b'P5': 1, b'P6': 3}


@dataclasses.dataclass(frozen=True)
class MetricConfig:
    dynamic_range: float = 255.0
    k1: float = 0.01
    k2: float = 0.03
    psnr_max: float = 255.0

    @property
    def c1(self):
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self):
        return (self.k2 * self.dynamic_range) ** 2


@dataclasses.dataclass(frozen=True)
class PairSpec:
    size: int = 32
    edit_fraction: float = 0.25
    texture_seed: int = 0
    shape_count: int = 4
    channels: int = 1


def as_image(samples, height, width, channels):
    image = np.asarray(samples, dtype=np.float64)
    if image.size != height * width * channels:
        raise ShapeError(f'{image.size} samples cannot form a {height}x{width}x{channels} image')
    return image.reshape(height, width, channels)


def clamp(image):
    return np.clip(image, 0.0, 1.0)


def to_bytes(image):
    """Quantize an image to 8-bit samples."""
    return np.rint(clamp(image) * 255.0).astype(np.uint8)


def _header_tokens(blob):
    """Yield (token, end offset) for the three numeric header fields after the magic."""
    offset = 2
    for _ in range(3):
        while offset < len(blob):
            if blob[offset] in _WHITESPACE:
                offset += 1
            elif blob[offset:offset + 1] == b'#':
                while offset < len(blob) and blob[offset] not in b'\r\n':
                    offset += 1
            else:
                break
        start = offset
        while offset < len(blob) and blob[offset] not in _WHITESPACE:
            offset += 1
        token = blob[start:offset]
        if not token:
            raise PnmParseError('truncated header', start)
        if not token.isdigit():
            raise PnmParseError(f'non-numeric header field {token[:16]!r}', start)
        yield int(token), offset


def parse_pnm(blob: bytes):
    """Decode binary P5/P6 bytes into an image."""
    magic = blob[:2]
    if magic not in _MAGIC_CHANNELS:
        raise PnmParseError(f'unsupported magic {magic!r} (expected P5 or P6)', 0)
    channels = _MAGIC_CHANNELS[magic]
    if len(blob) < 3 or blob[2] not in _WHITESPACE:
        raise PnmParseError('missing whitespace after magic', 2)
    (width, _), (height, _), (maxval, end) = list(_header_tokens(blob))
    if width == 0 or height == 0:
        raise PnmParseError('zero dimensions', end)
    if maxval != 255:
        raise PnmParseError(f'unsupported maxval {maxval}', end)
    if end >= len(blob) or blob[end] not in _WHITESPACE:
        raise PnmParseError('missing whitespace after maxval', end)
    start = end + 1
    expected = width * height * channels
    payload = blob[start:]
    if len(payload) < expected:
        raise PnmParseError(f'truncated payload: {len(payload)} of {expected} bytes', len(blob))
    if len(payload) > expected:
        raise PnmParseError(f'{len(payload) - expected} trailing bytes', start + expected)
    samples = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    return samples.reshape(height, width, channels)


def format_pnm(image) -> bytes:
    r"""Encode with the canonical header "P5\n<w> <h>\n255\n" (P6 for colour).

    Comments and extra header whitespace are not preserved, so only files in
    this form re-save byte-identically; other valid files keep their samples.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] not in (1, 3):
        raise ShapeError(f'cannot write an image of shape {image.shape} as PGM/PPM')
    height, width, channels = image.shape
    magic = b'P5' if channels == 1 else b'P6'
    header = magic + f'\n{width} {height}\n255\n'.encode('ascii')
    return header + to_bytes(image).tobytes()


def load_pnm(path):
    return parse_pnm(Path(path).read_bytes())


def save_pnm(image, path):
    Path(path).write_bytes(format_pnm(image))


def _texture(rng, size, channels):
    """Smooth background: a few random plane waves plus mild grain."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    texture = np.full((size, size, channels), 0.5)
    for _ in range(3):
        fy, fx = rng.uniform(0.5, 3.0, size=2)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=channels)
        amplitude = rng.uniform(0.05, 0.15)
        angle = 2.0 * np.pi * (fy * yy + fx * xx)
        texture += amplitude * np.sin(angle[..., np.newaxis] + phase)
    texture += rng.normal(0.0, 0.02, size=texture.shape)
    return texture


def _draw_shapes(rng, image, count):
    size = image.shape[0]
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(count):
        colour = rng.uniform(0.0, 1.0, size=image.shape[2])
        cy, cx = rng.integers(0, size, size=2)
        radius = rng.integers(max(2, size // 10), max(3, size // 4) + 1)
        if rng.random() < 0.5:
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2
        else:
            mask = (np.abs(yy - cy) <= radius) & (np.abs(xx - cx) <= radius)
        image[mask] = colour


def edit_region(spec: PairSpec, rng):
    """Boolean (size, size) mask of round(edit_fraction * size^2) pixels in a compact block."""
    size = spec.size
    area = int(round(spec.edit_fraction * size * size))
    mask = np.zeros((size, size), dtype=bool)
    if area == 0:
        return mask
    width = min(size, math.ceil(math.sqrt(area)))
    rows = math.ceil(area / width)
    top = int(rng.integers(0, size - rows + 1))
    left = int(rng.integers(0, size - width + 1))
    block = np.zeros(rows * width, dtype=bool)
    block[:area] = True
    mask[top:top + rows, left:left + width] = block.reshape(rows, width)
    return mask


def gen_pair(spec: PairSpec, seed):
    """Two images sharing everything outside one edited block.

    Inside the block the second image is the first shifted cyclically by an
    offset in [0.25, 0.75], so every edited pixel changes by at least 0.25.
    """
    if spec.size < MIN_PAIR_SIZE:
        raise UsageError(f'pair size {spec.size} is too small (minimum {MIN_PAIR_SIZE})')
    if not 0.0 <= spec.edit_fraction <= 1.0:
        raise UsageError(f'edit_fraction must lie in [0, 1], got {spec.edit_fraction}')
    if spec.channels not in (1, 3):
        raise UsageError(f'channels must be 1 or 3, got {spec.channels}')
    rng = make_generator(seed, spec.texture_seed)
    first = _texture(rng, spec.size, spec.channels)
    _draw_shapes(rng, first, spec.shape_count)
    levels = to_bytes(first).astype(np.int64)
    mask = edit_region(spec, rng)
    offset = np.rint(64.0 + 127.0 * clamp(_texture(rng, spec.size, spec.channels))).astype(np.int64)
    edited = levels.copy()
    edited[mask] = np.mod(levels + offset, 256)[mask]
    return levels / 255.0, edited / 255.0


def write_pairs(out_dir, spec: PairSpec, count, seed):
    """Write ``count`` pairs as PNM files plus ``index.csv``; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = 'pgm' if spec.channels == 1 else 'ppm'
    rows, written = [], []
    for index in range(count):
        first, second = gen_pair(dataclasses.replace(spec, texture_seed=index), seed)
        names = (f'pair_{index:04d}_a.{suffix}', f'pair_{index:04d}_b.{suffix}')
        for name, image in zip(names, (first, second)):
            save_pnm(image, out_dir / name)
            written.append(out_dir / name)
        rows.append((index, *names))
    index_path = out_dir / 'index.csv'
    with open(index_path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['pair', 'first', 'second'])
        writer.writerows(rows)
    written.append(index_path)
    logger.info('wrote %d image pairs to %s', count, out_dir)
    return written


def load_pairs(data_dir):
    """Read the pairs listed in ``index.csv`` of ``data_dir``."""
    data_dir = Path(data_dir)
    index_path = data_dir / 'index.csv'
    if not index_path.exists():
        raise DataError(f'no index.csv in {data_dir}')
    pairs = []
    with open(index_path, newline='') as handle:
        for row in csv.DictReader(handle):
            pairs.append((load_pnm(data_dir / row['first']), load_pnm(data_dir / row['second'])))
    if not pairs:
        raise DataError(f'{index_path} lists no pairs')
    return pairs


def _check_shapes(a, b):
    if np.shape(a) != np.shape(b):
        raise ShapeError(f'image shapes differ: {np.shape(a)} vs {np.shape(b)}')


def psnr(a, b, cfg: MetricConfig = MetricConfig()):
    """PSNR in dB on the 0-255 scale; ``math.inf`` for identical images."""
    _check_shapes(a, b)
    scale = cfg.dynamic_range
    error = float(np.mean((clamp(a) * scale - clamp(b) * scale) ** 2))
    if error == 0.0:
        return math.inf
    return 10.0 * math.log10(cfg.psnr_max ** 2 / error)


def ssim(a, b, cfg: MetricConfig = MetricConfig()):
    """Global-statistics SSIM per channel, averaged over channels."""
    _check_shapes(a, b)
    a = clamp(np.asarray(a, dtype=np.float64)) * cfg.dynamic_range
    b = clamp(np.asarray(b, dtype=np.float64)) * cfg.dynamic_range
    if a.ndim == 2:
        a, b = a[..., np.newaxis], b[..., np.newaxis]
    c1, c2 = cfg.c1, cfg.c2
    values = []
    for channel in range(a.shape[-1]):
        x = a[..., channel].ravel()
        y = b[..., channel].ravel()
        mean_x, mean_y = x.mean(), y.mean()
        dx, dy = x - mean_x, y - mean_y
        var_x, var_y = np.mean(dx * dx), np.mean(dy * dy)
        cov = np.mean(dx * dy)
        numerator = (2.0 * mean_x * mean_y + c1) * (2.0 * cov + c2)
        denominator = (mean_x * mean_x + mean_y * mean_y + c1) * (var_x + var_y + c2)
        values.append(numerator / denominator)
    return float(np.mean(values))


def format_psnr(value):
    return 'inf' if math.isinf(value) else f'{value:.6f}'


def format_ssim(value):
    return f'{value:.6f}'
