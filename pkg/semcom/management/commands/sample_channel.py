from pathlib import Path

import numpy as np

from ...channel import SrParams, ks_critical, ks_statistic, sr_sample
from ...exceptions import UsageError
from ...runs import RunRecorder
from ..base import SmdmaCommand


class Command(SmdmaCommand):
    help = 'Dump Shadowed-Rician power-gain samples as CSV with a mean/KS footer.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--params', help='"b0,m,omega" (default: channel.b0, channel.m, channel.omega)')
        parser.add_argument('--n', type=int, default=100_000, help='Number of samples')
        parser.add_argument('--seed', type=int, help='Base seed')
        parser.add_argument('--out', required=True, help='CSV file to write')

    def execute_run(self, **options):
        config = self.load_config(options, {'seed.base': options['seed']})
        if options['n'] < 1:
            raise UsageError(f'--n must be >= 1, got {options["n"]}')
        params = SrParams.parse(options['params']) if options['params'] else config['channel.params']
        seed = config['seed.base']
        out = Path(options['out'])
        gains = sr_sample(options['n'], params, seed)
        statistic = ks_statistic(gains, params)
        with RunRecorder('sample_channel', options, out.with_name(out.name + '.manifest.json'),
                         config) as recorder:
            recorder.add_seed(seed)
            out.parent.mkdir(parents=True, exist_ok=True)
            with open(out, 'w', newline='') as handle:
                handle.write('index,gain\n')
                handle.writelines(f'{index},{gain:.12e}\n' for index, gain in enumerate(gains))
                handle.write(f'# mean={np.mean(gains):.6f} ks={statistic:.6f} '
                             f'critical={ks_critical(len(gains)):.6f}\n')
            recorder.add_output(out)
        self.success(f'{len(gains)} gains written to {out} (mean {np.mean(gains):.4f}, KS {statistic:.5f})')
