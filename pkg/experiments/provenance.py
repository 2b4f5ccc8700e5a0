"""
Provenance audit: which command, config hash and seeds produced a file.

The registry is consulted first; files written elsewhere (or after the database was
removed) are audited from the provenance they embed themselves.
"""

import json
import logging
from pathlib import Path

from core.exceptions import ArtifactMissing, InvalidArgument
from corpus.container import read_header
from corpus.manifest import MANIFEST_NAME
from surrogates.training import ModelCheckpoint

from .models import Artifact

logger = logging.getLogger(__name__)


def _from_json(path):
    with open(path, encoding='utf-8') as handle:
        data = json.load(handle)
    if path.name == MANIFEST_NAME:
        return 'manifest', {'config_hash': data.get('config_hash', ''), 'seeds': data.get('seeds', {})}
    return 'report', data.get('metadata', data.get('provenance', {}))


def embedded_provenance(path):
    """
    (kind, provenance dict) read back from the artifact itself.
    """

    path = Path(path)
    if path.suffix == '.plm':
        return 'corpus', read_header(path)['metadata']
    if path.suffix == '.pt':
        return 'checkpoint', ModelCheckpoint.load(path).provenance
    if path.suffix == '.json':
        return _from_json(path)
    raise InvalidArgument(f'{path} carries no embedded provenance; only .plm, .pt and .json artifacts do')


def audit(path):
    """
    A dict with the path, kind, config hash, seeds, command and where the answer came from.
    """

    path = Path(path)
    if not path.exists():
        raise ArtifactMissing(f'{path} does not exist')

    artifact = Artifact.objects.for_path(path)
    if artifact is not None:
        return {
            'path': artifact.path,
            'kind': artifact.kind,
            'config_hash': artifact.config_hash,
            'seeds': artifact.seeds,
            'command': artifact.command,
            'source': 'registry',
        }

    logger.info('%s is not in the registry; reading its embedded provenance', path)
    kind, provenance = embedded_provenance(path)
    return {
        'path': str(path.resolve()),
        'kind': kind,
        'config_hash': provenance.get('config_hash', ''),
        'seeds': provenance.get('seeds', {}),
        'command': provenance.get('command', ''),
        'source': 'file',
    }
