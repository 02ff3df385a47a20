import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from ..channel import SrParams
from ..config import ExperimentConfig, format_config, load_config_file, parse_config
from ..exceptions import ConfigError
from ..pipeline import ARITHMETIC


class ParseConfigTest(SimpleTestCase):
    def test_comments_and_blank_lines(self):
        values = parse_config('# stage 1\n\nsemantic.hidden = 32  # small\ncrop.ratio=0.25\n')
        self.assertEqual(values, {'semantic.hidden': '32', 'crop.ratio': '0.25'})

    def test_unknown_key_names_the_line(self):
        with self.assertRaisesMessage(ConfigError, 'exp.conf:2: unknown key'):
            parse_config('crop.ratio = 0.5\ncrop.size = 3\n', 'exp.conf')

    def test_line_without_equals(self):
        with self.assertRaises(ConfigError):
            parse_config('crop.ratio 0.5')

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config_file('/nonexistent/exp.conf')

    def test_format_is_sorted(self):
        self.assertEqual(format_config({'b.x': '1', 'a.y': '2'}), 'a.y = 2\nb.x = 1\n')


class ExperimentConfigTest(SimpleTestCase):
    def test_defaults(self):
        config = ExperimentConfig.load()
        pipeline = config.pipeline()
        self.assertEqual(pipeline.ratio, 0.5)
        self.assertEqual(pipeline.user_snr, ((-10.0, 0.0), (0.0, 10.0)))
        self.assertEqual(pipeline.sr_params, SrParams())
        self.assertFalse(pipeline.equalize)
        self.assertEqual(config.semantic_codec().feature_dim, 64)
        self.assertEqual(config.channel_codec().decoder_widths, (64, 1))
        self.assertEqual(config.pair_spec().size, 32)

    def test_flags_override_the_file_which_overrides_defaults(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'exp.conf'
            path.write_text('crop.ratio = 0.25\ntrain.combiner = arithmetic\nseed.base = 7\n')
            config = ExperimentConfig.load(path, {'seed.base': 9, 'crop.ratio': None})
        self.assertEqual(config['seed.base'], 9)
        self.assertEqual(config['crop.ratio'], 0.25)
        self.assertEqual(config.pipeline().combiner, ARITHMETIC)
        self.assertEqual(config['semantic.hidden'], 256)

    def test_invalid_value_names_the_key(self):
        with self.assertRaisesMessage(ConfigError, 'semantic.feature_dim'):
            ExperimentConfig.load(overrides={'semantic.feature_dim': 9})

    def test_unknown_override(self):
        with self.assertRaises(ConfigError):
            ExperimentConfig.load(overrides={'crop.size': 3})

    def test_effective_config_reloads_to_the_same_values(self):
        config = ExperimentConfig.load(overrides={'data.size': 16})
        with tempfile.TemporaryDirectory() as tmp:
            path = config.write_effective(tmp)
            reloaded = ExperimentConfig.load(path)
        self.assertEqual(reloaded.raw, config.raw)
        self.assertEqual(reloaded['data.size'], 16)
