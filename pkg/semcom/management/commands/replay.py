from django.core.management import call_command

from ...exceptions import DataError
from ...runs import load_manifest
from ..base import SmdmaCommand

REPLAYABLE = ('gen_data', 'train', 'calibrate', 'sweep', 'plot', 'sample_channel')


class Command(SmdmaCommand):
    help = 'Re-run the command recorded in a run manifest with its recorded arguments.'

    def add_arguments(self, parser):
        parser.add_argument('--manifest', required=True, help='A *.manifest.json written by a previous run')

    def execute_run(self, **options):
        manifest = load_manifest(options['manifest'])
        command = manifest['command']
        if command not in REPLAYABLE:
            raise DataError(f'manifest records unknown command {command!r}')
        self.stdout.write(f'replaying {command}...')
        call_command(command, stdout=self.stdout, **manifest['arguments'])
