from pathlib import Path

from ...exceptions import UsageError
from ...media import write_pairs
from ...runs import RunRecorder
from ..base import SmdmaCommand


class Command(SmdmaCommand):
    help = 'Generate synthetic correlated image pairs (PGM/PPM) plus index.csv.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--out', help='Output directory (default: data.dir)')
        parser.add_argument('--count', type=int, help='Number of pairs')
        parser.add_argument('--size', type=int, help='Image side length in pixels')
        parser.add_argument('--edit-fraction', type=float, help='Fraction of pixels edited in the second image')
        parser.add_argument('--seed', type=int, help='Base seed')
        parser.add_argument('--channels', type=int, help='1 for PGM, 3 for PPM')
        parser.add_argument('--shapes', type=int, help='Shapes drawn over the texture')
        parser.add_argument('--force', action='store_true', help='Overwrite an existing dataset')

    def execute_run(self, **options):
        config = self.load_config(options, {
            'data.count': options['count'],
            'data.size': options['size'],
            'data.edit_fraction': options['edit_fraction'],
            'data.channels': options['channels'],
            'data.shapes': options['shapes'],
            'seed.base': options['seed'],
        })
        out = Path(options['out'] or config['data.dir'])
        if (out / 'index.csv').exists() and not options['force']:
            raise UsageError(f'{out} already holds a dataset; pass --force to overwrite')
        self.stdout.write(f'generating {config["data.count"]} pairs...')
        with RunRecorder('gen_data', options, out / 'gen_data.manifest.json', config) as recorder:
            recorder.add_seed(config['seed.base'])
            recorder.add_outputs(write_pairs(out, config.pair_spec(), config['data.count'], config['seed.base']))
            recorder.add_output(config.write_effective(out))
        self.success(f'wrote {config["data.count"]} pairs to {out}')
