"""Two-user S-MDMA transmitter and receiver, multi-user loss, training and sweeps.

Transmit order: semantic-encode both images, fuse into shared and difference
streams, sort and crop each stream, embed on u1/u2, mix with power
normalization, channel-encode, then scale the channel symbols to unit mean
power so the configured SNR holds at the channel input (both scalings are
skipped with normalization off). The receiver runs the same chain
backwards; user 2 needs both projections to rebuild F_s + delta.
"""
import concurrent.futures
import csv
import dataclasses
import itertools
import logging
import math
from pathlib import Path

import numpy as np
from django.conf import settings

from . import channel as ch
from . import nnkit
from .codec import ChannelCodec, ChannelCodecConfig, SemanticCodec, TrainingResult, build_channel_codec
from .exceptions import ConfigError, DataError, FrameError, NumericError, UsageError
from .fusion import FusionConfig, FusionPair, defuse, fuse
from .media import MetricConfig, format_psnr, format_ssim, psnr, save_pnm, ssim
from .ortho import (FrameHeader, OrthoBasis, default_basis, embed, mix, pack_frame, separate, unit_power,
                    unit_power_backward, unpack_frame)
from .ranking import (CALIBRATED, DEFAULT_EPSILON, PER_FRAME, RANKING_MODES, SensitivityRanking,
                      calibrate_ranking, crop, preserved_count, rank, random_ranking, ranking_from_scores, restore,
                      sensitivity_scores)
from .streams import CHANNEL, INIT, SORTING, SWEEP, TRAIN, draw_seed, make_generator

logger = logging.getLogger(__name__)

USERS = (1, 2)
GEOMETRIC = 'geometric'
ARITHMETIC = 'arithmetic'
COMBINERS = (GEOMETRIC, ARITHMETIC)
SENSITIVITY = 'sensitivity'
RANDOM_SORTING = 'random'
SORTINGS = (SENSITIVITY, RANDOM_SORTING)
LOSS_GUARD = 1e-12

CSV_FIELDS = ['snr_db', 'ratio', 'seed', 'user', 'sorting', 'normalization', 'mse', 'psnr_db', 'ssim']


@dataclasses.dataclass(frozen=True)
class PipelineConfig:
    tau: float = 0.05
    ranking_mode: str = CALIBRATED
    epsilon: float = DEFAULT_EPSILON
    ratio: float = 0.5
    basis: OrthoBasis = dataclasses.field(default_factory=default_basis)
    channel_mode: str = ch.SR_FADING
    sr_params: ch.SrParams = ch.SrParams()
    equalize: bool = False
    user_snr: tuple = ((-10.0, 0.0), (0.0, 10.0))
    batch_size: int = 8
    epochs: int = 100
    learning_rate: float = 1e-4
    combiner: str = GEOMETRIC
    normalize: bool = True
    sorting: str = SENSITIVITY
    per_user_decoders: bool = False

    def __post_init__(self):
        FusionConfig(self.tau)
        if self.ranking_mode not in RANKING_MODES:
            raise ConfigError(f'unknown ranking mode {self.ranking_mode!r}')
        if not self.epsilon > 0.0:
            raise ConfigError(f'ranking epsilon must be positive, got {self.epsilon}')
        if not 0.0 < self.ratio <= 1.0:
            raise ConfigError(f'crop ratio must lie in (0, 1], got {self.ratio}')
        if self.channel_mode not in ch.CHANNEL_MODES:
            raise ConfigError(f'unknown channel mode {self.channel_mode!r}')
        if len(self.user_snr) != len(USERS) or any(not lo <= hi for lo, hi in self.user_snr):
            raise ConfigError(f'user SNR ranges must be {len(USERS)} intervals lo <= hi, got {self.user_snr}')
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError(f'batch size must be >= 1 and epochs >= 0, got {self.batch_size}, {self.epochs}')
        if self.combiner not in COMBINERS:
            raise ConfigError(f'unknown loss combiner {self.combiner!r}')
        if self.sorting not in SORTINGS:
            raise ConfigError(f'unknown sorting {self.sorting!r}')

    @property
    def fusion(self):
        return FusionConfig(self.tau)


@dataclasses.dataclass
class SmdmaModels:
    """Trained codecs plus the calibrated rankings of the shared and the difference stream."""
    semantic: SemanticCodec
    channel: ChannelCodec
    ranking: SensitivityRanking = None
    delta_ranking: SensitivityRanking = None


@dataclasses.dataclass(frozen=True)
class Frame:
    """A transmitted frame: noiseless header plus the channel payload."""
    header: FrameHeader
    payload: np.ndarray

    def to_bytes(self):
        return pack_frame(self.header, self.payload)

    @classmethod
    def from_bytes(cls, blob):
        return cls(*unpack_frame(blob))


def _stream_perms(mode, models: SmdmaModels, perms=()):
    if mode == PER_FRAME:
        return perms
    if models.ranking is None or models.delta_ranking is None:
        raise UsageError('calibrated mode needs shared and difference rankings (run calibrate first)')
    return models.ranking.perm, models.delta_ranking.perm


def delta_scores(pair: FusionPair, s2, epsilon, semantic: SemanticCodec):
    """Sensitivity of the difference stream, scored through user 2's reconstruction F_s + delta against s2."""
    decode = semantic.decode_raw
    return sensitivity_scores(pair.delta, lambda v: decode(pair.shared + v), s2, epsilon)


def frame_rankings(pair: FusionPair, s1, s2, cfg: PipelineConfig, models: SmdmaModels):
    """Per-frame permutations for the shared and the difference stream."""
    semantic = models.semantic
    shared_perm = rank(sensitivity_scores(pair.shared, semantic.decode_raw, s1, cfg.epsilon))
    return shared_perm, rank(delta_scores(pair, s2, cfg.epsilon, semantic))


def calibrate_stream_rankings(pairs, cfg: PipelineConfig, semantic: SemanticCodec):
    """Static (shared, difference) rankings from scores averaged over ``pairs``.

    F_s is f1, so the shared ranking is calibrated on the first image of each pair.
    """
    pairs = list(pairs)
    if not pairs:
        raise UsageError('calibration needs a non-empty dataset')
    shared = calibrate_ranking([s1 for s1, _ in pairs], semantic.encode, semantic.decode_raw, cfg.epsilon)
    scores = [delta_scores(fuse(semantic.encode(s1), semantic.encode(s2), cfg.fusion), s2, cfg.epsilon, semantic)
              for s1, s2 in pairs]
    delta = ranking_from_scores(np.mean(scores, axis=0), cfg.epsilon, CALIBRATED)
    logger.info('calibrated difference ranking over %d pairs, d=%d', len(pairs), delta.dim)
    return shared, delta


def prepare_frame(s1, s2, cfg: PipelineConfig, models: SmdmaModels):
    """All transmit stages up to the channel encoder; returns (header, mixed payload z)."""
    semantic = models.semantic
    pair = fuse(semantic.encode(s1), semantic.encode(s2), cfg.fusion)
    perms = frame_rankings(pair, s1, s2, cfg, models) if cfg.ranking_mode == PER_FRAME else ()
    shared_perm, delta_perm = _stream_perms(cfg.ranking_mode, models, perms)
    shared_payload, crop_spec = crop(pair.shared, shared_perm, cfg.ratio)
    delta_payload, _ = crop(pair.delta, delta_perm, cfg.ratio)
    basis = cfg.basis
    mixed = mix(embed(shared_payload, basis.u1), embed(delta_payload, basis.u2), basis.q, cfg.normalize,
                check=settings.DEBUG)
    header = FrameHeader(pair.dim, crop_spec.keep, basis.q, cfg.ranking_mode, mixed.norm_scale,
                         tuple(perms))
    return header, mixed.payload


def channel_symbols(encoded, normalize):
    """Channel-encoder output as sent: unit mean power with normalization on."""
    return unit_power(encoded)[0] if normalize else np.asarray(encoded, dtype=np.float64)


def transmit(s1, s2, cfg: PipelineConfig, models: SmdmaModels) -> Frame:
    header, mixed = prepare_frame(s1, s2, cfg, models)
    return Frame(header, channel_symbols(models.channel.encoder.predict(mixed), cfg.normalize))


def over_channel(frame: Frame, realization: ch.ChannelRealization) -> Frame:
    """The header travels noiselessly; only the payload sees fading and noise."""
    return Frame(frame.header, ch.apply_channel(frame.payload, realization))


def _check_header(header: FrameHeader, cfg: PipelineConfig, models: SmdmaModels):
    feature_dim = models.semantic.cfg.feature_dim
    if header.dim != feature_dim:
        raise FrameError(f'frame carries d={header.dim}, the semantic codec expects {feature_dim}')
    if header.q != cfg.basis.q:
        raise FrameError(f'frame uses q={header.q}, the receiver basis has q={cfg.basis.q}')


def receive_features(frame, user_index, cfg: PipelineConfig, models: SmdmaModels, realization=None):
    """Recover user ``user_index``'s feature vector from a received frame (or its bytes)."""
    if user_index not in USERS:
        raise UsageError(f'user index must be one of {USERS}, got {user_index}')
    if isinstance(frame, (bytes, bytearray)):
        frame = Frame.from_bytes(bytes(frame))
    header = frame.header
    _check_header(header, cfg, models)
    received = frame.payload
    if cfg.equalize and realization is not None:
        received = ch.equalize(received, realization)
    decoded = models.channel.decoder_for(user_index).predict(received)
    if decoded.shape[0] != header.q * header.keep:
        raise FrameError(f'decoded payload has {decoded.shape[0]} values, header promises '
                         f'{header.q * header.keep}')
    shared_perm, delta_perm = _stream_perms(header.mode, models, header.perms)
    shared = restore(separate(decoded, header.norm_scale, cfg.basis.u1), shared_perm, header.dim)
    if user_index == 1:
        return shared
    delta = restore(separate(decoded, header.norm_scale, cfg.basis.u2), delta_perm, header.dim)
    return defuse(FusionPair(shared, delta, cfg.tau))[1]


def receive(frame, user_index, cfg: PipelineConfig, models: SmdmaModels, realization=None):
    """Reconstructed image for one user, clamped to [0, 1]."""
    return models.semantic.decode(receive_features(frame, user_index, cfg, models, realization))


def bypass(image, models: SmdmaModels):
    """Semantic codec alone, without the multiple-access chain."""
    return models.semantic.reconstruct(image)


@dataclasses.dataclass(frozen=True)
class LossReport:
    user_losses: tuple
    combined: float
    gradients: tuple
    combiner: str

    @property
    def users(self):
        return len(self.user_losses)


def combined_loss(losses, combiner=GEOMETRIC) -> LossReport:
    """Combine per-user losses; geometric mean by default, with dL/dL_i."""
    losses = tuple(float(value) for value in losses)
    if not losses:
        raise UsageError('at least one user loss is required')
    if any(not value >= 0.0 for value in losses):
        raise UsageError(f'user losses must be non-negative, got {losses}')
    users = len(losses)
    if combiner == ARITHMETIC:
        return LossReport(losses, sum(losses) / users, (1.0 / users,) * users, combiner)
    if combiner != GEOMETRIC:
        raise ConfigError(f'unknown loss combiner {combiner!r}')
    if min(losses) == 0.0:
        combined = 0.0
    else:
        combined = math.exp(sum(math.log(value) for value in losses) / users)
    gradients = tuple(combined / (users * max(value, LOSS_GUARD)) for value in losses)
    return LossReport(losses, combined, gradients, combiner)


def channel_parameters(codec: ChannelCodec):
    params = codec.encoder.parameters()
    for decoder in codec.decoders:
        params = params + decoder.parameters()
    return params


def channel_objective(codec: ChannelCodec, samples, combiner=GEOMETRIC, equalize=False, normalize=True):
    """Combined loss over a batch and its gradients in ``channel_parameters`` order.

    ``samples`` holds (z, realizations) with one realization per user. L_i is
    the batch-mean feature MSE between z and user i's decoded estimate. With
    ``normalize`` the encoder output is scaled to unit power before the channel,
    as in ``transmit``.
    """
    if not samples:
        raise UsageError('channel objective needs at least one sample')
    passes = []
    totals = [0.0] * len(USERS)
    for z, realizations in samples:
        encoded, encoder_tape = codec.encoder.forward(z)
        sent, scale = unit_power(encoded) if normalize else (encoded, None)
        user_passes = []
        for slot, (user, realization) in enumerate(zip(USERS, realizations)):
            received = ch.apply_channel(sent, realization)
            factor = math.sqrt(realization.gain)
            if equalize:
                received = ch.equalize(received, realization)
                factor = 1.0
            decoder = codec.decoder_for(user)
            estimate, decoder_tape = decoder.forward(received)
            totals[slot] += nnkit.mse(estimate, z)
            user_passes.append((decoder, decoder_tape, estimate, factor))
        passes.append((z, encoder_tape, sent, scale, user_passes))
    report = combined_loss([total / len(samples) for total in totals], combiner)
    if not math.isfinite(report.combined):
        raise NumericError(f'combined channel loss is non-finite ({report.user_losses})')

    encoder_size = len(codec.encoder.parameters())
    grads = [np.zeros_like(p) for p in channel_parameters(codec)]
    offsets = {}
    position = encoder_size
    for decoder in codec.decoders:
        offsets[id(decoder)] = position
        position += len(decoder.parameters())
    for z, encoder_tape, sent, scale, user_passes in passes:
        sent_grad = 0.0
        for slot, (decoder, decoder_tape, estimate, factor) in enumerate(user_passes):
            weight = report.gradients[slot] / len(samples)
            decoder_grads, received_grad = decoder.backward(decoder_tape, weight * nnkit.mse_grad(estimate, z))
            start = offsets[id(decoder)]
            for acc, g in zip(grads[start:start + len(decoder_grads)], decoder_grads):
                acc += g
            sent_grad = sent_grad + factor * received_grad
        encoded_grad = sent_grad if scale is None else unit_power_backward(sent_grad, sent, scale)
        encoder_grads, _ = codec.encoder.backward(encoder_tape, encoded_grad)
        for acc, g in zip(grads[:encoder_size], encoder_grads):
            acc += g
    return report, grads


def draw_realizations(cfg: PipelineConfig, snrs, rng):
    """One independent block-fading realization per user at the given SNRs."""
    return tuple(ch.realize_channel(cfg.channel_mode, snr, cfg.sr_params, draw_seed(rng)) for snr in snrs)


def channel_dataset(pairs, cfg: PipelineConfig, models: SmdmaModels):
    """Mixed payloads z produced by the frozen transmit-side stages."""
    return [prepare_frame(s1, s2, cfg, models)[1] for s1, s2 in pairs]


def train_channel(cfg: PipelineConfig, dataset, seed, codec: ChannelCodec = None,
                  codec_cfg: ChannelCodecConfig = ChannelCodecConfig()):
    """Train the channel encoder and decoder(s) on frozen payloads ``dataset``.

    SNRs are drawn per batch from each user's range; every frame gets its own
    fading gain and noise. Returns (codec, TrainingResult); ``codec`` is updated
    in place when given.
    """
    dataset = [np.asarray(z, dtype=np.float64) for z in dataset]
    if not dataset:
        raise UsageError('channel training needs a non-empty dataset')
    if codec is None:
        codec = build_channel_codec(codec_cfg, make_generator(seed, INIT),
                                    decoders=len(USERS) if cfg.per_user_decoders else 1)
    rng = make_generator(seed, TRAIN)
    params = channel_parameters(codec)
    state = nnkit.AdamState(learning_rate=cfg.learning_rate)
    result = TrainingResult([], [])
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(dataset))
        combined, user_totals, batches = 0.0, np.zeros(len(USERS)), 0
        for batch_index, start in enumerate(range(0, len(order), cfg.batch_size)):
            snrs = [rng.uniform(lo, hi) for lo, hi in cfg.user_snr]
            samples = [(dataset[item], draw_realizations(cfg, snrs, rng))
                       for item in order[start:start + cfg.batch_size]]
            try:
                report, grads = channel_objective(codec, samples, cfg.combiner, cfg.equalize, cfg.normalize)
            except NumericError as exc:
                raise NumericError(f'channel training diverged at epoch {epoch}, batch {batch_index}: {exc}') from exc
            logger.debug('epoch %d batch %d snr=%s loss=%.6f', epoch, batch_index, snrs, report.combined)
            nnkit.adam_step(state, params, grads)
            combined += report.combined
            user_totals += report.user_losses
            batches += 1
        result.losses.append(combined / batches)
        result.user_losses.append(tuple(user_totals / batches))
        logger.info('channel epoch %d/%d %s loss=%.6f', epoch, cfg.epochs, cfg.combiner, result.losses[-1])
    return codec, result


@dataclasses.dataclass(frozen=True)
class SweepRecord:
    snr_db: float
    ratio: float
    seed: int
    user: int
    sorting: str
    normalization: str
    mse: float
    psnr_db: float
    ssim: float
    post_fading_snr_db: float = math.inf

    def as_row(self):
        return {'snr_db': f'{self.snr_db:g}', 'ratio': f'{self.ratio:g}', 'seed': self.seed,
                'user': self.user, 'sorting': self.sorting, 'normalization': self.normalization,
                'mse': f'{self.mse:.9e}', 'psnr_db': format_psnr(self.psnr_db), 'ssim': format_ssim(self.ssim)}


@dataclasses.dataclass(frozen=True)
class GridPoint:
    snr_db: float
    ratio: float
    sorting: str
    normalize: bool
    seed: int
    coords: tuple


def sweep_grid(snrs, ratios, seeds, sortings=(SENSITIVITY,), normalizations=(True,)):
    """Grid points in deterministic order: snr, ratio, sorting, normalization, seed."""
    points = []
    for (i, snr), (j, ratio), (k, sorting), (n, normalize), seed in itertools.product(
            enumerate(snrs), enumerate(ratios), enumerate(sortings), enumerate(normalizations), range(seeds)):
        points.append(GridPoint(float(snr), float(ratio), sorting, normalize, seed, (i, j, k, n, seed)))
    return points


def _image_name(point: GridPoint, pair_index, user, suffix):
    normalization = 'on' if point.normalize else 'off'
    return (f'snr{point.snr_db:g}_r{point.ratio:g}_{point.sorting}_{normalization}'
            f'_pair{pair_index:04d}_user{user}.{suffix}')


def evaluate_point(point: GridPoint, cfg: PipelineConfig, models: SmdmaModels, pairs, base_seed,
                   metric_cfg=MetricConfig(), image_dir=None):
    """One transmit/receive pass per pair per user; records average over pairs."""
    point_seed = draw_seed(make_generator(base_seed, SWEEP, *point.coords))
    point_cfg = dataclasses.replace(cfg, ratio=point.ratio, normalize=point.normalize, sorting=point.sorting)
    point_models = models
    if point.sorting == RANDOM_SORTING:
        dim = models.semantic.cfg.feature_dim
        rng = make_generator(point_seed, SORTING)
        point_models = dataclasses.replace(models, ranking=random_ranking(dim, rng),
                                           delta_ranking=random_ranking(dim, rng))
        point_cfg = dataclasses.replace(point_cfg, ranking_mode=CALIBRATED)
    metrics = {user: [] for user in USERS}
    for pair_index, (s1, s2) in enumerate(pairs):
        frame = transmit(s1, s2, point_cfg, point_models)
        for user, target in zip(USERS, (s1, s2)):
            realization = ch.realize_channel(point_cfg.channel_mode, point.snr_db, point_cfg.sr_params,
                                             draw_seed(make_generator(point_seed, CHANNEL, pair_index, user)))
            image = receive(over_channel(frame, realization), user, point_cfg, point_models, realization)
            metrics[user].append((nnkit.mse(image.ravel(), np.ravel(target)), psnr(image, target, metric_cfg),
                                  ssim(image, target, metric_cfg), realization.post_fading_snr_db))
            if image_dir is not None and point.seed == 0:
                suffix = 'pgm' if image.shape[2] == 1 else 'ppm'
                save_pnm(image, Path(image_dir) / _image_name(point, pair_index, user, suffix))
    normalization = 'on' if point.normalize else 'off'
    records = []
    for user in USERS:
        values = np.array(metrics[user])
        records.append(SweepRecord(point.snr_db, point.ratio, point.seed, user, point.sorting, normalization,
                                   *(float(v) for v in values.mean(axis=0))))
    return records


def evaluate_sweep(cfg: PipelineConfig, models: SmdmaModels, pairs, snrs, ratios, seeds, base_seed,
                   sortings=(SENSITIVITY,), normalizations=(True,), workers=1, image_dir=None):
    """Full-factorial sweep; records come back in grid order whatever ``workers`` is."""
    if not pairs:
        raise UsageError('sweep needs at least one image pair')
    if seeds < 1:
        raise UsageError(f'seed count must be >= 1, got {seeds}')
    if image_dir is not None:
        Path(image_dir).mkdir(parents=True, exist_ok=True)
    points = sweep_grid(snrs, ratios, seeds, sortings, normalizations)
    logger.info('sweeping %d grid points over %d pairs with %d worker(s)', len(points), len(pairs), workers)

    def run(point):
        return evaluate_point(point, cfg, models, pairs, base_seed, image_dir=image_dir)

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            grouped = list(pool.map(run, points))
    else:
        grouped = [run(point) for point in points]
    return [record for records in grouped for record in records]


def write_sweep_csv(records, path):
    with open(path, 'w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS, lineterminator='\n')
        writer.writeheader()
        for record in records:
            writer.writerow(record.as_row())
    return Path(path)


def read_sweep_csv(path):
    """Rows of a sweep CSV with numeric columns converted; 'inf' PSNR becomes math.inf."""
    with open(path, newline='') as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DataError(f'{path} is empty')
        missing = set(CSV_FIELDS) - set(reader.fieldnames)
        if missing:
            raise DataError(f'{path} lacks columns {", ".join(sorted(missing))}')
        rows = []
        for line, row in enumerate(reader, start=2):
            try:
                for key in ('snr_db', 'ratio', 'mse', 'psnr_db', 'ssim'):
                    row[key] = float(row[key])
                row['seed'] = int(row['seed'])
                row['user'] = int(row['user'])
            except ValueError as exc:
                raise DataError(f'{path}:{line}: {exc}') from exc
            rows.append(row)
    return rows


@dataclasses.dataclass(frozen=True)
class BandwidthReport:
    dim: int
    keep: int
    q: int
    channel_uses: int
    naive_uses: int

    @property
    def expansion(self):
        return self.channel_uses / self.naive_uses


def bandwidth_report(cfg: PipelineConfig, dim) -> BandwidthReport:
    """Channel uses of one mixed frame against sending both cropped streams side by side."""
    keep = preserved_count(cfg.ratio, dim)
    return BandwidthReport(dim, keep, cfg.basis.q, cfg.basis.q * keep, 2 * keep)
