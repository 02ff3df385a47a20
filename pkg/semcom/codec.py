"""Toy semantic codec and the lightweight 1-D convolutional channel codec.

The semantic codec is a dense autoencoder standing in for the Swin
Transformer codec; the channel codec follows the Conv1d+ReLU structure with
64/128 encoder widths and a 64/1 decoder.
"""
import dataclasses
import logging
import math
from pathlib import Path

import numpy as np

from . import nnkit
from .exceptions import ConfigError, DataError, NumericError, UsageError
from .media import as_image, clamp
from .streams import TRAIN, make_generator

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'models.manifest'
SEMANTIC_ENCODER_FILE = 'semantic_encoder.nn'
SEMANTIC_DECODER_FILE = 'semantic_decoder.nn'
CHANNEL_ENCODER_FILE = 'channel_encoder.nn'


@dataclasses.dataclass(frozen=True)
class SemanticCodecConfig:
    height: int = 32
    width: int = 32
    channels: int = 1
    hidden: int = 256
    feature_dim: int = 64

    def __post_init__(self):
        if min(self.height, self.width, self.hidden) < 1 or self.channels not in (1, 3):
            raise ConfigError(f'invalid semantic codec geometry {self}')
        if self.feature_dim < 8 or self.feature_dim % 2:
            raise ConfigError(f'feature dimension must be even and >= 8, got {self.feature_dim}')

    @property
    def input_dim(self):
        return self.height * self.width * self.channels


@dataclasses.dataclass(frozen=True)
class ChannelCodecConfig:
    encoder_widths: tuple = (64, 128)
    decoder_widths: tuple = (64, 1)
    kernel_size: int = 3

    def __post_init__(self):
        if len(self.encoder_widths) != 2 or not 0 < self.encoder_widths[0] < self.encoder_widths[1]:
            raise ConfigError(f'encoder widths must be two increasing counts, got {self.encoder_widths}')
        if len(self.decoder_widths) != 2 or self.decoder_widths[1] != 1 or self.decoder_widths[0] < 1:
            raise ConfigError(f'decoder widths must be (width, 1), got {self.decoder_widths}')
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f'kernel size must be odd, got {self.kernel_size}')


class SemanticCodec:
    """Encoder f_se and decoder f_sd for one image geometry."""

    def __init__(self, cfg: SemanticCodecConfig, encoder, decoder):
        self.cfg = cfg
        self.encoder = encoder
        self.decoder = decoder

    def encode(self, image):
        return self.encoder.predict(np.asarray(image).ravel())

    def decode_raw(self, features):
        """Decoder output before the evaluation-time clamp (flat)."""
        return self.decoder.predict(features)

    def decode(self, features):
        cfg = self.cfg
        return clamp(as_image(self.decode_raw(features), cfg.height, cfg.width, cfg.channels))

    def reconstruct(self, image):
        return self.decode(self.encode(image))


@dataclasses.dataclass
class ChannelCodec:
    """Channel encoder f_ce and one decoder f_cd per user (or one shared)."""
    encoder: nnkit.Sequential
    decoders: list

    def decoder_for(self, user_index):
        """Decoder for a 1-based user index."""
        return self.decoders[min(user_index, len(self.decoders)) - 1]


def semantic_specs(cfg: SemanticCodecConfig):
    encoder = [nnkit.dense(cfg.input_dim, cfg.hidden), nnkit.relu(),
               nnkit.dense(cfg.hidden, cfg.feature_dim)]
    decoder = [nnkit.dense(cfg.feature_dim, cfg.hidden), nnkit.relu(),
               nnkit.dense(cfg.hidden, cfg.input_dim)]
    return encoder, decoder


def build_semantic_codec(cfg: SemanticCodecConfig, rng) -> SemanticCodec:
    encoder_specs, decoder_specs = semantic_specs(cfg)
    return SemanticCodec(cfg, nnkit.Sequential(encoder_specs, rng=rng),
                         nnkit.Sequential(decoder_specs, rng=rng))


def channel_encoder_specs(cfg: ChannelCodecConfig):
    first, second = cfg.encoder_widths
    return [nnkit.conv1d(1, first, cfg.kernel_size), nnkit.relu(),
            nnkit.conv1d(first, second, cfg.kernel_size), nnkit.relu(),
            nnkit.conv1d(second, 1, 1)]


def channel_decoder_specs(cfg: ChannelCodecConfig):
    hidden, out = cfg.decoder_widths
    return [nnkit.conv1d(1, hidden, cfg.kernel_size), nnkit.relu(),
            nnkit.conv1d(hidden, out, cfg.kernel_size)]


def build_channel_codec(cfg: ChannelCodecConfig, rng, decoders=1) -> ChannelCodec:
    """Length-preserving channel encoder plus ``decoders`` channel decoders."""
    encoder = nnkit.Sequential(channel_encoder_specs(cfg), rng=rng)
    return ChannelCodec(encoder, [nnkit.Sequential(channel_decoder_specs(cfg), rng=rng)
                                  for _ in range(decoders)])


def identity_channel_codec(decoders=1) -> ChannelCodec:
    """Pass-through codec used to isolate the S-MDMA chain."""
    return ChannelCodec(nnkit.Sequential([]), [nnkit.Sequential([]) for _ in range(decoders)])


@dataclasses.dataclass
class TrainingResult:
    losses: list
    user_losses: list = dataclasses.field(default_factory=list)


def _batches(order, batch_size):
    for start in range(0, len(order), batch_size):
        yield order[start:start + batch_size]


def train_semantic(images, codec: SemanticCodec, epochs, seed, batch_size=8, learning_rate=1e-3):
    """Stage-1 noiseless autoencoder training; updates ``codec`` in place."""
    if not images:
        raise UsageError('semantic training needs a non-empty dataset')
    if batch_size < 1:
        raise UsageError(f'batch size must be positive, got {batch_size}')
    targets = [np.asarray(image, dtype=np.float64).ravel() for image in images]
    rng = make_generator(seed, TRAIN)
    params = codec.encoder.parameters() + codec.decoder.parameters()
    state = nnkit.AdamState(learning_rate=learning_rate)
    losses = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(targets))
        total = 0.0
        for batch_index, batch in enumerate(_batches(order, batch_size)):
            grads = [np.zeros_like(p) for p in params]
            for item in batch:
                target = targets[item]
                features, encoder_tape = codec.encoder.forward(target)
                output, decoder_tape = codec.decoder.forward(features)
                loss = nnkit.mse(output, target)
                if not math.isfinite(loss):
                    raise NumericError(f'semantic loss diverged at epoch {epoch}, batch {batch_index}')
                total += loss
                decoder_grads, feature_grad = codec.decoder.backward(
                    decoder_tape, nnkit.mse_grad(output, target) / len(batch))
                encoder_grads, _ = codec.encoder.backward(encoder_tape, feature_grad)
                for acc, g in zip(grads, encoder_grads + decoder_grads):
                    acc += g
            nnkit.adam_step(state, params, grads)
        losses.append(total / len(targets))
        logger.info('semantic epoch %d/%d mse=%.6f', epoch, epochs, losses[-1])
    return TrainingResult(losses)


def read_manifest(model_dir):
    path = Path(model_dir) / MANIFEST_NAME
    fields = {}
    if path.exists():
        for line in path.read_text().splitlines():
            if line.strip():
                key, _, value = line.partition('=')
                fields[key.strip()] = value.strip()
    return fields


def write_manifest(model_dir, fields):
    """Merge ``fields`` into the model manifest (sorted key=value lines)."""
    merged = read_manifest(model_dir)
    merged.update({key: str(value) for key, value in fields.items()})
    path = Path(model_dir) / MANIFEST_NAME
    path.write_text(''.join(f'{key}={merged[key]}\n' for key in sorted(merged)))
    return path


def _join(values):
    return ','.join(str(v) for v in values)


def _ints(text):
    return tuple(int(v) for v in text.split(','))


def save_semantic_codec(codec: SemanticCodec, model_dir):
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    nnkit.save_model(codec.encoder, model_dir / SEMANTIC_ENCODER_FILE)
    nnkit.save_model(codec.decoder, model_dir / SEMANTIC_DECODER_FILE)
    cfg = codec.cfg
    write_manifest(model_dir, {f'semantic.{field.name}': getattr(cfg, field.name)
                               for field in dataclasses.fields(cfg)})
    return [model_dir / SEMANTIC_ENCODER_FILE, model_dir / SEMANTIC_DECODER_FILE]


def load_semantic_codec(model_dir) -> SemanticCodec:
    model_dir = Path(model_dir)
    fields = read_manifest(model_dir)
    try:
        cfg = SemanticCodecConfig(**{field.name: int(fields[f'semantic.{field.name}'])
                                     for field in dataclasses.fields(SemanticCodecConfig)})
    except KeyError as exc:
        raise DataError(f'{model_dir / MANIFEST_NAME} lacks {exc.args[0]}') from exc
    codec = SemanticCodec(cfg, nnkit.load_model(model_dir / SEMANTIC_ENCODER_FILE),
                          nnkit.load_model(model_dir / SEMANTIC_DECODER_FILE))
    if codec.encoder.specs != semantic_specs(cfg)[0] or codec.decoder.specs != semantic_specs(cfg)[1]:
        raise DataError(f'semantic model files in {model_dir} do not match the manifest')
    return codec


def channel_decoder_files(count):
    if count == 1:
        return ['channel_decoder.nn']
    return [f'channel_decoder_{user}.nn' for user in range(1, count + 1)]


def save_channel_codec(codec: ChannelCodec, cfg: ChannelCodecConfig, model_dir):
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    paths = [model_dir / CHANNEL_ENCODER_FILE]
    nnkit.save_model(codec.encoder, paths[0])
    for decoder, name in zip(codec.decoders, channel_decoder_files(len(codec.decoders))):
        nnkit.save_model(decoder, model_dir / name)
        paths.append(model_dir / name)
    write_manifest(model_dir, {
        'channel_codec.encoder_widths': _join(cfg.encoder_widths),
        'channel_codec.decoder_widths': _join(cfg.decoder_widths),
        'channel_codec.kernel_size': cfg.kernel_size,
        'channel_codec.decoders': len(codec.decoders),
    })
    return paths


def load_channel_codec(model_dir):
    """Return (ChannelCodec, ChannelCodecConfig) saved in ``model_dir``."""
    model_dir = Path(model_dir)
    fields = read_manifest(model_dir)
    try:
        cfg = ChannelCodecConfig(_ints(fields['channel_codec.encoder_widths']),
                                 _ints(fields['channel_codec.decoder_widths']),
                                 int(fields['channel_codec.kernel_size']))
        count = int(fields['channel_codec.decoders'])
    except KeyError as exc:
        raise DataError(f'{model_dir / MANIFEST_NAME} lacks {exc.args[0]}') from exc
    encoder = nnkit.load_model(model_dir / CHANNEL_ENCODER_FILE)
    decoders = [nnkit.load_model(model_dir / name) for name in channel_decoder_files(count)]
    return ChannelCodec(encoder, decoders), cfg
