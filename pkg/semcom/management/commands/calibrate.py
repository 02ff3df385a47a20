from pathlib import Path

from ...codec import SEMANTIC_DECODER_FILE, SEMANTIC_ENCODER_FILE, load_semantic_codec
from ...pipeline import calibrate_stream_rankings
from ...ranking import save_stream_rankings
from ...runs import RunRecorder
from ..base import SmdmaCommand, load_dataset


class Command(SmdmaCommand):
    help = ('Average sensitivity scores of the shared and difference streams over the dataset and write '
            'both static ranking files (<out> and <out stem>_delta<suffix>).')

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--out', required=True, help='Shared-stream ranking file to write')
        parser.add_argument('--models', default='models', help='Directory holding the semantic codec')
        parser.add_argument('--data', help='Calibration dataset directory (default: data.dir)')

    def execute_run(self, **options):
        config = self.load_config(options)
        out = Path(options['out'])
        models_dir = Path(options['models'])
        codec = load_semantic_codec(models_dir)
        pairs = load_dataset(options['data'] or config['data.dir'], config)
        self.stdout.write(f'scoring {codec.cfg.feature_dim} dimensions of both streams over {len(pairs)} pairs...')
        with RunRecorder('calibrate', options, out.parent / 'calibrate.manifest.json', config) as recorder:
            for name in (SEMANTIC_ENCODER_FILE, SEMANTIC_DECODER_FILE):
                recorder.add_model(models_dir / name)
            shared, delta = calibrate_stream_rankings(pairs, config.pipeline(), codec)
            out.parent.mkdir(parents=True, exist_ok=True)
            paths = save_stream_rankings(shared, delta, out)
            recorder.add_outputs(paths)
        self.success(f'rankings of d={shared.dim} written to {", ".join(str(path) for path in paths)}')
