"""Run ledger: one ExperimentRun row and one JSON manifest per command execution."""
import hashlib
import json
import logging
from pathlib import Path

from django.conf import settings
from django.utils import timezone

from .exceptions import DataError
from .models import ExperimentRun

logger = logging.getLogger(__name__)

# options every Django command accepts; they do not affect results
BASE_OPTIONS = {'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color', 'force_color', 'skip_checks',
                'stdout', 'stderr'}


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _json_safe(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    return value


class RunRecorder:
    """Context manager that records a command run in the database and a manifest file.

    The manifest is written only when the run succeeds.
    """

    def __init__(self, command, options, manifest_path, config=None):
        self.manifest_path = Path(manifest_path)
        self.run = ExperimentRun(
            command=command,
            arguments={key: _json_safe(value) for key, value in options.items() if key not in BASE_OPTIONS},
            config=dict(config.raw) if config is not None else {},
            version=settings.SMDMA_VERSION,
        )

    def __enter__(self):
        self.run.started_at = timezone.now()
        self.run.save()
        return self

    def add_seed(self, seed):
        self.run.seeds.append(int(seed))

    def add_output(self, path):
        self.run.outputs.append(str(path))

    def add_outputs(self, paths):
        for path in paths:
            self.add_output(path)

    def add_model(self, path):
        self.run.model_hashes[str(path)] = sha256_file(path)

    def manifest(self):
        run = self.run
        return {
            'command': run.command,
            'arguments': run.arguments,
            'config': run.config,
            'seeds': run.seeds,
            'model_hashes': run.model_hashes,
            'outputs': run.outputs,
            'version': run.version,
            'started_at': run.started_at.isoformat(),
            'finished_at': run.finished_at.isoformat() if run.finished_at else None,
        }

    def __exit__(self, exc_type, exc, traceback):
        run = self.run
        run.finished_at = timezone.now()
        if exc is None:
            run.status = 's'
            self.manifest_path.parent.mkdir(parents=True, exist_ok=True)
            self.manifest_path.write_text(json.dumps(self.manifest(), indent=2, sort_keys=True) + '\n')
        else:
            run.status = 'f'
            run.error = str(exc)
        run.save()
        logger.info('run %s of %s finished: %s', run.pk, run.command, run.get_status_display())
        return False


def load_manifest(path):
    try:
        manifest = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise DataError(f'cannot read manifest {path}: {exc}') from exc
    if not isinstance(manifest, dict) or 'command' not in manifest or 'arguments' not in manifest:
        raise DataError(f'{path} is not a run manifest')
    return manifest
