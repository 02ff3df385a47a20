"""Experiment configuration: flat ``section.key = value`` files over built-in defaults.

Precedence is command-line flags, then the config file, then
``settings.SMDMA_DEFAULTS``. Values are validated by ``ExperimentConfigForm``.
"""
from pathlib import Path

from django.conf import settings

from .codec import ChannelCodecConfig, SemanticCodecConfig
from .exceptions import ConfigError
from .forms import ExperimentConfigForm, config_key, field_name
from .media import PairSpec
from .pipeline import PipelineConfig

EFFECTIVE_NAME = 'config.effective'


def parse_config(text, source='<config>'):
    """Parse config text into a dict of raw string values."""
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f'{source}:{number}: expected "section.key = value"')
        if key not in settings.SMDMA_DEFAULTS:
            raise ConfigError(f'{source}:{number}: unknown key {key!r}')
        values[key] = value
    return values


def load_config_file(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f'config file {path} does not exist')
    return parse_config(path.read_text(), str(path))


def format_config(raw):
    return ''.join(f'{key} = {raw[key]}\n' for key in sorted(raw))


class ExperimentConfig:
    """Validated effective configuration."""

    def __init__(self, raw):
        unknown = sorted(set(raw) - set(settings.SMDMA_DEFAULTS))
        if unknown:
            raise ConfigError(f'unknown config key {unknown[0]!r}')
        self.raw = {key: str(value) for key, value in raw.items()}
        form = ExperimentConfigForm(data={field_name(key): value for key, value in self.raw.items()})
        if not form.is_valid():
            name, errors = next(iter(form.errors.items()))
            raise ConfigError(f'{config_key(name)}: {errors[0]}')
        self.values = form.cleaned_data

    @classmethod
    def load(cls, path=None, overrides=None):
        """Defaults, updated by the file at ``path``, updated by non-None ``overrides``."""
        raw = dict(settings.SMDMA_DEFAULTS)
        if path:
            raw.update(load_config_file(path))
        for key, value in (overrides or {}).items():
            if value is not None:
                raw[key] = value
        return cls(raw)

    def __getitem__(self, key):
        return self.values[field_name(key)]

    def flag(self, key):
        return self[key] == 'on'

    def pair_spec(self):
        return PairSpec(size=self['data.size'], edit_fraction=self['data.edit_fraction'],
                        shape_count=self['data.shapes'], channels=self['data.channels'])

    def semantic_codec(self):
        return SemanticCodecConfig(self['data.size'], self['data.size'], self['data.channels'],
                                   self['semantic.hidden'], self['semantic.feature_dim'])

    def channel_codec(self):
        return ChannelCodecConfig(self['channel_codec.encoder_widths'], self['channel_codec.decoder_widths'],
                                  self['channel_codec.kernel_size'])

    def pipeline(self):
        return PipelineConfig(
            tau=self['fusion.tau'],
            ranking_mode=self['ranking.mode'],
            epsilon=self['ranking.epsilon'],
            ratio=self['crop.ratio'],
            basis=self['ortho.basis'],
            channel_mode=self['channel.mode'],
            sr_params=self['channel.params'],
            equalize=self.flag('channel.equalize'),
            user_snr=(self['train.user1_snr'], self['train.user2_snr']),
            batch_size=self['train.batch_size'],
            epochs=self['train.epochs'],
            learning_rate=self['train.learning_rate'],
            combiner=self['train.combiner'],
            per_user_decoders=self.flag('train.per_user_decoders'),
        )

    def write_effective(self, out_dir):
        path = Path(out_dir) / EFFECTIVE_NAME
        path.write_text(format_config(self.raw))
        return path
