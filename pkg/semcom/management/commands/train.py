from pathlib import Path

from ...codec import (build_semantic_codec, identity_channel_codec, load_semantic_codec, save_channel_codec,
                      save_semantic_codec, train_semantic)
from ...pipeline import SmdmaModels, channel_dataset, train_channel
from ...ranking import CALIBRATED, load_stream_rankings, stream_ranking_paths
from ...runs import RunRecorder
from ...streams import INIT, make_generator
from ..base import SmdmaCommand, load_dataset, write_rows

SEMANTIC = 'semantic'
CHANNEL = 'channel'


class Command(SmdmaCommand):
    help = 'Train the semantic codec (stage 1) or the channel codec with the multi-user loss (stage 2).'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--stage', choices=(SEMANTIC, CHANNEL), required=True)
        parser.add_argument('--out', required=True, help='Directory for model files, loss curve and manifest')
        parser.add_argument('--data', help='Dataset directory (default: data.dir)')
        parser.add_argument('--models', help='Directory holding the trained semantic codec (default: --out)')
        parser.add_argument('--ranking',
                            help='Shared-stream ranking file; its _delta sibling holds the difference ranking '
                                 '(default: <models>/ranking.txt)')
        parser.add_argument('--seed', type=int, help='Base seed')
        parser.add_argument('--epochs', type=int, help='Epoch count for the chosen stage')

    def execute_run(self, **options):
        stage = options['stage']
        epochs_key = 'semantic.epochs' if stage == SEMANTIC else 'train.epochs'
        config = self.load_config(options, {'seed.base': options['seed'], epochs_key: options['epochs']})
        out = Path(options['out'])
        out.mkdir(parents=True, exist_ok=True)
        data_dir = options['data'] or config['data.dir']
        pairs = load_dataset(data_dir, config)
        seed = config['seed.base']
        with RunRecorder('train', options, out / f'train_{stage}.manifest.json', config) as recorder:
            recorder.add_seed(seed)
            if stage == SEMANTIC:
                paths, loss_path = self.train_semantic(config, pairs, seed, out)
            else:
                paths, loss_path = self.train_channel(config, pairs, seed, out, recorder, options)
            for path in paths:
                recorder.add_model(path)
            recorder.add_outputs(paths + [loss_path, config.write_effective(out)])
        self.success(f'{stage} training finished; models in {out}')

    def train_semantic(self, config, pairs, seed, out):
        codec = build_semantic_codec(config.semantic_codec(), make_generator(seed, INIT))
        images = [image for pair in pairs for image in pair]
        result = train_semantic(images, codec, config['semantic.epochs'], seed,
                                batch_size=config['train.batch_size'],
                                learning_rate=config['semantic.learning_rate'])
        paths = save_semantic_codec(codec, out)
        loss_path = write_rows(out / 'semantic_loss.csv', ['epoch', 'loss'],
                               [(epoch, f'{loss:.9e}') for epoch, loss in enumerate(result.losses, start=1)])
        return paths, loss_path

    def train_channel(self, config, pairs, seed, out, recorder, options):
        cfg = config.pipeline()
        models_dir = Path(options['models'] or out)
        semantic = load_semantic_codec(models_dir)
        rankings = ()
        if cfg.ranking_mode == CALIBRATED:
            ranking_path = Path(options['ranking'] or models_dir / 'ranking.txt')
            rankings = load_stream_rankings(ranking_path)
            for path in stream_ranking_paths(ranking_path):
                recorder.add_model(path)
        dataset = channel_dataset(pairs, cfg, SmdmaModels(semantic, identity_channel_codec(), *rankings))
        self.stdout.write(f'training channel codec on {len(dataset)} frames for {cfg.epochs} epochs...')
        codec, result = train_channel(cfg, dataset, seed, codec_cfg=config.channel_codec())
        paths = save_channel_codec(codec, config.channel_codec(), out)
        rows = [(epoch, f'{loss:.9e}', *(f'{value:.9e}' for value in users))
                for epoch, (loss, users) in enumerate(zip(result.losses, result.user_losses), start=1)]
        loss_path = write_rows(out / 'channel_loss.csv', ['epoch', 'loss', 'user1_loss', 'user2_loss'], rows)
        return paths, loss_path
