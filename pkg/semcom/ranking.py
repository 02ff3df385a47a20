"""Reconstruction-sensitivity sorting and bandwidth cropping.

Each feature dimension is nudged by +epsilon and scored by how much the
semantic decoder's reconstruction error grows; dimensions are sent in
descending score order and only the first K = floor(r * d) survive.
"""
import dataclasses
import logging
import math
import zlib
from pathlib import Path

import numpy as np

from .exceptions import DataError, NumericError, ShapeError, UsageError
from .nnkit import mse

logger = logging.getLogger(__name__)

PER_FRAME = 'per_frame'
CALIBRATED = 'calibrated'
RANDOM = 'random'
RANKING_MODES = (CALIBRATED, PER_FRAME)

DEFAULT_EPSILON = 0.01
# slack for ratios such as 2/3 whose product with d lands just below an integer
_RATIO_SLACK = 1e-9


@dataclasses.dataclass(frozen=True)
class SensitivityRanking:
    perm: np.ndarray
    scores: np.ndarray = None
    epsilon: float = DEFAULT_EPSILON
    source: str = CALIBRATED

    @property
    def dim(self):
        return self.perm.shape[0]


@dataclasses.dataclass(frozen=True)
class CropSpec:
    ratio: float
    dim: int
    keep: int

    @property
    def mask(self):
        mask = np.zeros(self.dim, dtype=np.int8)
        mask[:self.keep] = 1
        return mask


class CountingDecoder:
    """Wraps a decoder callable and counts evaluations."""

    def __init__(self, decoder):
        self.decoder = decoder
        self.calls = 0

    def __call__(self, features):
        self.calls += 1
        return self.decoder(features)


def sensitivity_scores(features, decoder, target, epsilon=DEFAULT_EPSILON):
    """Per-dimension increase of MSE(target, decode(f + eps * e_i)) over the unperturbed loss.

    Uses exactly d + 1 decoder evaluations.
    """
    if not epsilon > 0.0:
        raise UsageError(f'perturbation amplitude must be positive, got {epsilon}')
    features = np.asarray(features, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64).ravel()

    def loss(vector, dimension):
        output = np.asarray(decoder(vector), dtype=np.float64).ravel()
        if not np.all(np.isfinite(output)):
            where = 'the unperturbed features' if dimension is None else f'dimension {dimension}'
            raise NumericError(f'decoder output is non-finite for {where}')
        return mse(output, target)

    baseline = loss(features, None)
    scores = np.empty(features.shape[0])
    for i in range(features.shape[0]):
        perturbed = features.copy()
        perturbed[i] += epsilon
        scores[i] = loss(perturbed, i) - baseline
    return scores


def rank(scores):
    """Descending stable sort; ties keep ascending original index."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NumericError('cannot rank non-finite sensitivity scores')
    return np.argsort(-scores, kind='stable')


def validate_permutation(perm, dim):
    perm = np.asarray(perm)
    if perm.shape != (dim,) or not np.array_equal(np.sort(perm), np.arange(dim)):
        raise DataError(f'not a permutation of 0..{dim - 1}')
    return perm.astype(np.int64)


def preserved_count(ratio, dim):
    if not 0.0 < ratio <= 1.0:
        raise UsageError(f'bandwidth ratio must lie in (0, 1], got {ratio}')
    keep = min(dim, math.floor(ratio * dim + _RATIO_SLACK))
    if keep == 0:
        raise UsageError(f'ratio {ratio} preserves zero dimensions of {dim}')
    return keep


def crop(features, perm, ratio):
    """Sort by ``perm`` and keep the first K entries; returns (payload, CropSpec)."""
    features = np.asarray(features, dtype=np.float64)
    dim = features.shape[0]
    perm = validate_permutation(perm, dim)
    spec = CropSpec(ratio, dim, preserved_count(ratio, dim))
    return features[perm][:spec.keep].copy(), spec


def restore(payload, perm, dim):
    """Zero-pad a cropped payload back to ``dim`` and undo the sort."""
    payload = np.asarray(payload, dtype=np.float64)
    perm = validate_permutation(perm, dim)
    if not 1 <= payload.shape[0] <= dim:
        raise ShapeError(f'payload of {payload.shape[0]} entries cannot restore {dim} dimensions')
    ordered = np.zeros(dim)
    ordered[:payload.shape[0]] = payload
    restored = np.zeros(dim)
    restored[perm] = ordered
    return restored


def ranking_from_scores(scores, epsilon, source):
    scores = np.asarray(scores, dtype=np.float64)
    return SensitivityRanking(rank(scores), scores, epsilon, source)


def calibrate_ranking(images, encoder, decoder, epsilon=DEFAULT_EPSILON):
    """Static ranking from sensitivity scores averaged over a calibration set.

    ``encoder`` maps an image to features; ``decoder`` maps features to a flat
    reconstruction.
    """
    images = list(images)
    if not images:
        raise UsageError('calibration needs a non-empty dataset')
    scores = np.stack([sensitivity_scores(encoder(image), decoder, image, epsilon)
                       for image in images])
    ranking = ranking_from_scores(scores.mean(axis=0), epsilon, CALIBRATED)
    logger.info('calibrated ranking over %d items, d=%d', len(images), ranking.dim)
    return ranking


def random_ranking(dim, rng):
    """Uniformly random permutation for the random-sorting ablation."""
    return SensitivityRanking(rng.permutation(dim).astype(np.int64), None, 0.0, RANDOM)


def _ranking_lines(ranking):
    return [f'd={ranking.dim}',
            ' '.join(str(int(i)) for i in ranking.perm),
            f'epsilon={ranking.epsilon!r}']


def format_ranking(ranking) -> str:
    lines = _ranking_lines(ranking)
    body = ''.join(line + '\n' for line in lines)
    return body + f'crc32={zlib.crc32(body.encode("ascii")):08x}\n'


def parse_ranking(text) -> SensitivityRanking:
    lines = text.splitlines()
    if len(lines) != 4:
        raise DataError(f'ranking file must have 4 lines, found {len(lines)}')
    body = ''.join(line + '\n' for line in lines[:3])
    expected = f'crc32={zlib.crc32(body.encode("ascii")):08x}'
    if lines[3].strip() != expected:
        raise DataError('ranking file checksum mismatch')
    try:
        dim = int(lines[0].removeprefix('d='))
        perm = np.array([int(v) for v in lines[1].split()], dtype=np.int64)
        epsilon = float(lines[2].removeprefix('epsilon='))
    except ValueError as exc:
        raise DataError(f'malformed ranking file: {exc}') from exc
    return SensitivityRanking(validate_permutation(perm, dim), None, epsilon, CALIBRATED)


def save_ranking(ranking, path):
    Path(path).write_text(format_ranking(ranking))


def load_ranking(path) -> SensitivityRanking:
    return parse_ranking(Path(path).read_text())


def stream_ranking_paths(path):
    """(shared, difference) ranking files; ``models/ranking.txt`` pairs with ``models/ranking_delta.txt``."""
    path = Path(path)
    return path, path.with_name(f'{path.stem}_delta{path.suffix}')


def save_stream_rankings(shared, delta, path):
    paths = stream_ranking_paths(path)
    for ranking, target in zip((shared, delta), paths):
        save_ranking(ranking, target)
    return list(paths)


def load_stream_rankings(path):
    """Both calibrated rankings; they must cover the same dimension."""
    shared, delta = (load_ranking(target) for target in stream_ranking_paths(path))
    if shared.dim != delta.dim:
        raise DataError(f'shared ranking has d={shared.dim}, difference ranking has d={delta.dim}')
    return shared, delta
