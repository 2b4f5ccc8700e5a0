from dataclasses import asdict, dataclass, field

from core.exceptions import InvalidConfig
from dispersion.conditions import SourceSpec

from .normalization import LOG_FLOOR
from .transforms import CROP_ANCHOR_XY, CROP_EXTENT_ZYX


@dataclass(frozen=True)
class CorpusConfig:
    """
    How many runs to simulate and how each is cut down to the paired model grids.
    """

    name: str = 'desk'
    n_runs: int = 100
    sampling_seed: int = 0
    terrain_seed: int = 0
    split_seed: int = 0
    crop_extent_zyx: tuple = CROP_EXTENT_ZYX
    crop_anchor_xy: tuple = CROP_ANCHOR_XY
    lr_shape: tuple = (8, 32, 32)
    hr_shape: tuple = (32, 128, 128)
    log_floor: float = LOG_FLOOR
    source: SourceSpec = field(default_factory=SourceSpec)

    def __post_init__(self):
        for name in ('crop_extent_zyx', 'crop_anchor_xy', 'lr_shape', 'hr_shape'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if isinstance(self.source, dict):
            object.__setattr__(self, 'source', SourceSpec(**self.source))

        if self.n_runs < 3:
            raise InvalidConfig(f'a corpus needs at least 3 runs, got {self.n_runs}')
        if self.log_floor <= 0:
            raise InvalidConfig('log_floor must be positive')
        if len(self.lr_shape) != 3 or len(self.hr_shape) != 3:
            raise InvalidConfig('lr_shape and hr_shape must be (z, y, x) triples')
        ratios = {h / l for h, l in zip(self.hr_shape, self.lr_shape)}
        if len(ratios) != 1 or not float(next(iter(ratios))).is_integer():
            raise InvalidConfig(f'hr_shape {self.hr_shape} must be an integer multiple of lr_shape {self.lr_shape}')

    @property
    def scale(self):
        return self.hr_shape[0] // self.lr_shape[0]

    @property
    def seeds(self):
        return {'sampling': self.sampling_seed, 'terrain': self.terrain_seed, 'split': self.split_seed}

    def to_dict(self):
        return asdict(self)
