"""
The corpus manifest: one JSON file listing every run, its split and the fitted normalization.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from core.exceptions import ArtifactMissing, InvalidArgument

from .container import atomic_write, read_sample
from .normalization import NormalizationSpec
from .splits import SPLITS

MANIFEST_NAME = 'manifest.json'


@dataclass
class CorpusManifest:
    name: str
    config_hash: str
    seeds: dict
    runs: list
    normalization: NormalizationSpec
    lr_shape: tuple
    hr_shape: tuple
    dt_output: float
    settings: dict = field(default_factory=dict)

    def runs_in(self, split):
        if split not in SPLITS:
            raise InvalidArgument(f'unknown split {split!r}, expected one of {SPLITS}')
        return [run for run in self.runs if run['split'] == split]

    def split_sizes(self):
        return tuple(len(self.runs_in(split)) for split in SPLITS)

    def to_dict(self):
        return {
            'name': self.name,
            'config_hash': self.config_hash,
            'seeds': self.seeds,
            'runs': self.runs,
            'normalization': self.normalization.to_dict(),
            'lr_shape': list(self.lr_shape),
            'hr_shape': list(self.hr_shape),
            'dt_output': self.dt_output,
            'settings': self.settings,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            name=data['name'],
            config_hash=data['config_hash'],
            seeds=data['seeds'],
            runs=data['runs'],
            normalization=NormalizationSpec.from_dict(data['normalization']),
            lr_shape=tuple(data['lr_shape']),
            hr_shape=tuple(data['hr_shape']),
            dt_output=data['dt_output'],
            settings=data.get('settings', {}),
        )

    def write(self, directory):
        path = Path(directory) / MANIFEST_NAME
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2) + '\n'
        atomic_write(path, [text.encode('utf-8')])
        return path


def read_manifest(directory):
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise ArtifactMissing(f'no corpus manifest at {path}; run the generate command first')

    with open(path, encoding='utf-8') as handle:
        return CorpusManifest.from_dict(json.load(handle))


def load_split(directory, manifest, split, mmap=True):
    """
    DualResolutionSamples of one split, memory-mapped by default.
    """

    return [read_sample(Path(directory) / run['file'], mmap=mmap) for run in manifest.runs_in(split)]
