"""Shared plumbing for the simulator management commands."""
import csv
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ..config import ExperimentConfig
from ..exceptions import DataError, SmdmaError, UsageError
from ..media import load_pairs


class SmdmaCommand(BaseCommand):
    """Runs ``execute_run`` and turns simulator errors into one-line CommandErrors.

    The CommandError carries the error's exit code (2 usage, 3 config, 4 data,
    5 numeric).
    """

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Flat section.key = value experiment config file')

    def handle(self, *args, **options):
        try:
            self.execute_run(**options)
        except SmdmaError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc
        except OSError as exc:
            raise CommandError(str(exc), returncode=DataError.exit_code) from exc

    def execute_run(self, **options):
        raise NotImplementedError('subclasses of SmdmaCommand must provide an execute_run() method')

    @staticmethod
    def load_config(options, overrides=None):
        return ExperimentConfig.load(options.get('config'), overrides)

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))


def load_dataset(data_dir, config: ExperimentConfig):
    """Image pairs from ``data_dir``, checked against the configured geometry."""
    pairs = load_pairs(data_dir)
    expected = (config['data.size'], config['data.size'], config['data.channels'])
    for index, (first, second) in enumerate(pairs):
        if first.shape != expected or second.shape != expected:
            raise DataError(f'pair {index} in {data_dir} has shape {first.shape}/{second.shape}, '
                            f'the configuration expects {expected}')
    return pairs


def write_rows(path, header, rows):
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
    return Path(path)


def parse_range(text, name):
    """``a:b:step`` (inclusive), a single number, or ``inf``; errors name the offending token."""
    tokens = text.split(':')
    try:
        if len(tokens) == 1:
            return [float(tokens[0])]
        if len(tokens) != 3:
            raise ValueError(text)
        start, stop, step = (float(token) for token in tokens)
    except ValueError:
        bad = next((t for t in tokens if not _is_number(t)), text)
        raise UsageError(f'--{name}: malformed range token {bad!r} in {text!r} (expected a:b:step)')
    if not step > 0.0 or stop < start:
        raise UsageError(f'--{name}: range {text!r} needs step > 0 and a <= b')
    count = int((stop - start) / step + 1e-9) + 1
    return [round(start + i * step, 10) for i in range(count)]


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def parse_choices(text, allowed, name):
    values = [value.strip() for value in text.split(',') if value.strip()]
    unknown = [value for value in values if value not in allowed]
    if unknown or not values:
        raise UsageError(f'--{name}: unknown value {(unknown or [text])[0]!r} (expected {", ".join(allowed)})')
    return values
