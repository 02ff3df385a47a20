import dataclasses
import math
from pathlib import Path

from ...codec import identity_channel_codec, load_channel_codec, load_semantic_codec
from ...models import SweepResult
from ...pipeline import (SENSITIVITY, SORTINGS, SmdmaModels, bandwidth_report, evaluate_sweep,
                         write_sweep_csv)
from ...ranking import CALIBRATED, load_stream_rankings, stream_ranking_paths
from ...runs import RunRecorder
from ..base import SmdmaCommand, load_dataset, parse_choices, parse_range

TRAINED = 'trained'
IDENTITY = 'identity'


def _nullable(value):
    return value if math.isfinite(value) else None


class Command(SmdmaCommand):
    help = 'Evaluate trained models over an SNR x ratio x sorting x normalization grid.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--out', required=True, help='Directory for sweep.csv and the manifest')
        parser.add_argument('--snr', default='-10:10:5', help='"a:b:step" in dB, a single value, or inf')
        parser.add_argument('--ratio', help='"a:b:step" bandwidth ratios (default: crop.ratio)')
        parser.add_argument('--sorting', default=SENSITIVITY, help='Comma list of sensitivity,random')
        parser.add_argument('--normalization', default='on', help='Comma list of on,off')
        parser.add_argument('--seeds', type=int, default=1, help='Seeds per grid point')
        parser.add_argument('--models', default='models', help='Directory holding the trained codecs')
        parser.add_argument('--data', help='Evaluation dataset directory (default: data.dir)')
        parser.add_argument('--ranking',
                            help='Shared-stream ranking file; its _delta sibling holds the difference ranking '
                                 '(default: <models>/ranking.txt)')
        parser.add_argument('--channel-codec', choices=(TRAINED, IDENTITY), default=TRAINED,
                            help='identity bypasses the channel codec')
        parser.add_argument('--workers', type=int, help='Parallel grid workers (default: sweep.workers)')
        parser.add_argument('--seed', type=int, help='Base seed')
        parser.add_argument('--save-images', action='store_true',
                            help='Write reconstructions of the first seed under <out>/images')

    def execute_run(self, **options):
        config = self.load_config(options, {'seed.base': options['seed'], 'sweep.workers': options['workers']})
        cfg = config.pipeline()
        snrs = parse_range(options['snr'], 'snr')
        ratios = parse_range(options['ratio'] or str(config['crop.ratio']), 'ratio')
        sortings = parse_choices(options['sorting'], SORTINGS, 'sorting')
        normalizations = [value == 'on' for value in parse_choices(options['normalization'], ('on', 'off'),
                                                                    'normalization')]
        out = Path(options['out'])
        out.mkdir(parents=True, exist_ok=True)
        models_dir = Path(options['models'])
        semantic = load_semantic_codec(models_dir)
        if options['channel_codec'] == IDENTITY:
            channel = identity_channel_codec()
        else:
            channel, _ = load_channel_codec(models_dir)
        rankings = ()
        ranking_path = Path(options['ranking'] or models_dir / 'ranking.txt')
        if cfg.ranking_mode == CALIBRATED and SENSITIVITY in sortings:
            rankings = load_stream_rankings(ranking_path)
        models = SmdmaModels(semantic, channel, *rankings)
        pairs = load_dataset(options['data'] or config['data.dir'], config)

        for ratio in ratios:
            report = bandwidth_report(dataclasses.replace(cfg, ratio=ratio), semantic.cfg.feature_dim)
            self.stdout.write(f'r={ratio:g}: K={report.keep} of d={report.dim}, {report.channel_uses} channel uses '
                              f'per frame vs {report.naive_uses} side by side (x{report.expansion:g})')

        with RunRecorder('sweep', options, out / 'sweep.manifest.json', config) as recorder:
            for path in sorted(models_dir.glob('*.nn')):
                recorder.add_model(path)
            if rankings:
                for path in stream_ranking_paths(ranking_path):
                    recorder.add_model(path)
            recorder.add_seed(config['seed.base'])
            records = evaluate_sweep(cfg, models, pairs, snrs, ratios, options['seeds'], config['seed.base'],
                                     sortings=sortings, normalizations=normalizations,
                                     workers=config['sweep.workers'],
                                     image_dir=out / 'images' if options['save_images'] else None)
            recorder.add_output(write_sweep_csv(records, out / 'sweep.csv'))
            recorder.add_output(config.write_effective(out))
            SweepResult.objects.bulk_create(SweepResult(
                run=recorder.run,
                snr_db=_nullable(record.snr_db),
                ratio=record.ratio,
                seed=record.seed,
                user=record.user,
                sorting=record.sorting,
                normalization=record.normalization,
                mse=record.mse,
                psnr_db=_nullable(record.psnr_db),
                ssim=record.ssim,
                post_fading_snr_db=_nullable(record.post_fading_snr_db),
            ) for record in records)
        self.success(f'{len(records)} records written to {out / "sweep.csv"}')
