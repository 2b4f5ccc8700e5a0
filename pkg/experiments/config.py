"""
Experiment configuration: one JSON file, CLI overrides, validation and the config hash.
"""

import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from django.conf import settings

from core.exceptions import ArtifactMissing, InvalidConfig
from corpus.serializers import DataSerializer
from dispersion.serializers import SimulationSerializer
from evaluation.serializers import MetricSerializer
from surrogates.config import DEFAULT_EPOCHS
from surrogates.serializers import ModelsSerializer, TrainingSerializer

from .serializers import ExperimentConfigSerializer

logger = logging.getLogger(__name__)

SECTIONS = ('data', 'simulation', 'models', 'training', 'evaluation', 'output')
# sections whose nested defaults only apply when the sub-section exists
NESTED = {'models': ('tm', 'srm', 'hrtm'), 'training': ('tm', 'srm', 'hrtm'),
          'evaluation': ('metrics', 'sensors', 'benchmark')}


def parse_override(text):
    """
    'section.key=value' -> (['section', 'key'], value); value is JSON when it parses.
    """

    if '=' not in text:
        raise InvalidConfig(f'override {text!r} is not of the form section.key=value')
    key, raw = text.split('=', 1)
    path = [part for part in key.strip().split('.') if part]
    if len(path) < 2 or path[0] not in SECTIONS:
        raise InvalidConfig(f'override {text!r} must name a key inside one of {SECTIONS}')
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(raw, overrides):
    raw = copy.deepcopy(raw)
    for override in overrides:
        path, value = parse_override(override) if isinstance(override, str) else override
        node = raw
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise InvalidConfig(f'cannot override inside {".".join(path[:-1])}: not a section')
        node[path[-1]] = value
    return raw


def _with_sections(raw):
    raw = copy.deepcopy(raw)
    for section in SECTIONS:
        raw.setdefault(section, {})
    for section, children in NESTED.items():
        for child in children:
            raw[section].setdefault(child, {})
    return raw


def config_hash(data):
    text = json.dumps(data, sort_keys=True, separators=(',', ':'), default=list)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    """
    The validated experiment. 'data' holds the serializer output with every default
    filled in; 'hash' is the sha256 of its canonical JSON.
    """

    data: dict
    hash: str
    source_path: str = None
    overrides: tuple = field(default_factory=tuple)

    @property
    def corpus(self):
        return DataSerializer.to_config(self.data['data'])

    @property
    def simulation(self):
        return SimulationSerializer.to_config(self.data['simulation'])

    @property
    def models(self):
        return ModelsSerializer.to_configs(self.data['models'])

    def training(self, kind):
        section = dict(self.data['training'][kind])
        section.setdefault('epochs', DEFAULT_EPOCHS[kind])
        section.setdefault('device', settings.PLUME_DEVICE)
        return TrainingSerializer.to_config(section)

    def metrics(self, normalization=None):
        """
        MetricConfig; an unset IoU threshold sits three decades below the corpus maximum.
        """

        default = normalization.max_val - 3.0 if normalization is not None else None
        return MetricSerializer.to_config(self.data['evaluation']['metrics'], iou_threshold=default)

    @property
    def evaluation(self):
        return self.data['evaluation']

    @property
    def seeds(self):
        return dict(self.corpus.seeds, training={kind: self.training(kind).seed for kind in DEFAULT_EPOCHS})

    @property
    def output_dir(self):
        return Path(self.data['output']['directory'] or settings.PLUME_OUTPUT_DIR)

    @property
    def plots(self):
        return self.data['output']['plots']

    @property
    def corpus_dir(self):
        return self.output_dir / 'corpus' / self.corpus.name

    def checkpoint_dir(self, kind):
        return self.output_dir / 'checkpoints' / self.corpus.name / kind

    @property
    def reports_dir(self):
        return self.output_dir / 'reports' / self.corpus.name

    @property
    def figures_dir(self):
        return self.output_dir / 'figures' / self.corpus.name

    def provenance(self, command=''):
        return {'config_hash': self.hash, 'seeds': self.seeds, 'command': command}


def _jsonable(data):
    return json.loads(json.dumps(data, default=list))


def build_config(raw):
    serializer = ExperimentConfigSerializer(data=_with_sections(raw))
    if not serializer.is_valid():
        raise InvalidConfig(f'invalid experiment config: {json.dumps(serializer.errors)}', errors=serializer.errors)

    data = _jsonable(serializer.validated_data)
    return ExperimentConfig(data=data, hash=config_hash(data))


def load_config(path=None, overrides=()):
    """
    Reads the JSON config at 'path' (all defaults when None), applies the
    'section.key=value' overrides and validates the result.
    """

    raw = {}
    if path:
        path = Path(path)
        if not path.exists():
            raise ArtifactMissing(f'config file {path} does not exist')
        try:
            with open(path, encoding='utf-8') as handle:
                raw = json.load(handle)
        except json.JSONDecodeError as error:
            raise InvalidConfig(f'config file {path} is not valid JSON: {error}')
        if not isinstance(raw, dict):
            raise InvalidConfig(f'config file {path} must hold a JSON object')

    config = build_config(apply_overrides(raw, overrides))
    logger.debug('loaded config %s (hash %s)', path or '<defaults>', config.hash[:12])
    return replace(config, source_path=str(path) if path else None, overrides=tuple(overrides))

