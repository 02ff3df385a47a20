from pathlib import Path

from ...pipeline import read_sweep_csv
from ...runs import RunRecorder
from ...svgplot import X_COLUMNS, Y_COLUMNS, render_plot
from ..base import SmdmaCommand


class Command(SmdmaCommand):
    help = 'Render a sweep CSV as an SVG line plot (one polyline per group).'

    def add_arguments(self, parser):
        parser.add_argument('--in', dest='in_csv', required=True, help='Sweep CSV')
        parser.add_argument('--x', choices=X_COLUMNS, default='snr_db')
        parser.add_argument('--y', choices=Y_COLUMNS, default='psnr_db')
        parser.add_argument('--group', default='sorting', help='CSV column whose values become curves')
        parser.add_argument('--out', required=True, help='SVG file to write')

    def execute_run(self, **options):
        out = Path(options['out'])
        rows = read_sweep_csv(options['in_csv'])
        # rendered before opening the output so a bad CSV leaves no file behind
        svg = render_plot(rows, options['x'], options['y'], options['group'])
        with RunRecorder('plot', options, out.with_name(out.name + '.manifest.json')) as recorder:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(svg)
            recorder.add_output(out)
        self.success(f'plot written to {out}')
