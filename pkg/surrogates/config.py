"""
Architecture and training settings of the three surrogate networks.
"""

from dataclasses import asdict, dataclass

from core.exceptions import InvalidConfig

BOTTLENECK_KINDS = ('conv', 'convlstm')
SKIP_MODES = ('none', 'additive')

# trainable parameter totals published for the reference architectures, logged for comparison only
REFERENCE_PARAMETERS = {'tm': 3_214_401, 'srm': 951_873, 'hrtm': 4_166_274}
DEFAULT_EPOCHS = {'tm': 1000, 'srm': 100, 'hrtm': 100}


def _check_common(config):
    if len(config.channels) != 3 or min(config.channels) <= 0:
        raise InvalidConfig(f'channels must be three positive widths, got {config.channels}')
    if not 0 <= config.dropout_rate < 1:
        raise InvalidConfig(f'dropout_rate must lie in [0, 1), got {config.dropout_rate}')
    if config.bottleneck_kind not in BOTTLENECK_KINDS:
        raise InvalidConfig(f'bottleneck_kind must be one of {BOTTLENECK_KINDS}')
    if config.skip_mode not in SKIP_MODES:
        raise InvalidConfig(f'skip_mode must be one of {SKIP_MODES}')
    if config.input_window < 1:
        raise InvalidConfig('input_window must be positive')


@dataclass(frozen=True)
class TMConfig:
    channels: tuple = (7 * 16, 7 * 32, 7 * 64)
    dropout_rate: float = 0.2
    bottleneck_kind: str = 'conv'
    skip_mode: str = 'additive'
    input_window: int = 5
    input_shape: tuple = (8, 32, 32)

    def __post_init__(self):
        object.__setattr__(self, 'channels', tuple(self.channels))
        object.__setattr__(self, 'input_shape', tuple(self.input_shape))
        _check_common(self)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class HRTMConfig:
    """
    The temporal autoencoder at high resolution; widths are num_layers x (32, 64, 128).
    """

    num_layers: int = 2
    dropout_rate: float = 0.2
    bottleneck_kind: str = 'conv'
    skip_mode: str = 'additive'
    input_window: int = 5
    input_shape: tuple = (32, 128, 128)

    def __post_init__(self):
        object.__setattr__(self, 'input_shape', tuple(self.input_shape))
        if self.num_layers < 1:
            raise InvalidConfig('num_layers must be positive')
        _check_common(self)

    @property
    def channels(self):
        return (32 * self.num_layers, 64 * self.num_layers, 128 * self.num_layers)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SRMConfig:
    """
    channels = (enc1, enc2, last hidden decoder width); the decoder runs
    enc2 -> enc2 -> enc1 -> last -> 1.
    """

    channels: tuple = (7 * 16, 7 * 32, 7 * 8)
    negative_slope: float = 0.01
    pool_dims: tuple = ((1, 2, 2), (1, 2, 2))
    up_strides: tuple = ((1, 2, 2), (1, 2, 2), (2, 2, 2), (2, 2, 2))
    input_shape: tuple = (8, 32, 32)
    scale: int = 4

    def __post_init__(self):
        object.__setattr__(self, 'channels', tuple(self.channels))
        object.__setattr__(self, 'pool_dims', tuple(tuple(p) for p in self.pool_dims))
        object.__setattr__(self, 'up_strides', tuple(tuple(s) for s in self.up_strides))
        object.__setattr__(self, 'input_shape', tuple(self.input_shape))

        if len(self.channels) != 3 or min(self.channels) <= 0:
            raise InvalidConfig(f'channels must be three positive widths, got {self.channels}')
        if len(self.pool_dims) != 2 or len(self.up_strides) != 4:
            raise InvalidConfig('the refinement network has two pooling stages and four upsampling stages')
        if self.negative_slope < 0:
            raise InvalidConfig('negative_slope must be non-negative')

    @property
    def output_shape(self):
        return tuple(self.scale * n for n in self.input_shape)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 100
    batch_size: int = 16
    learning_rate: float = 1e-3
    plateau_factor: float = 0.5
    plateau_patience: int = 20
    grad_clip: float = 1.0
    seed: int = 0
    device: str = 'cpu'

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidConfig('epochs and batch_size must be positive')
        if self.learning_rate <= 0:
            raise InvalidConfig('learning_rate must be positive')
        if not 0 < self.plateau_factor < 1:
            raise InvalidConfig('plateau_factor must lie in (0, 1)')

    def to_dict(self):
        return asdict(self)


MODEL_CONFIGS = {'tm': TMConfig, 'srm': SRMConfig, 'hrtm': HRTMConfig}
