"""
Domain types of the synthetic plume generator.
"""

import math
from dataclasses import asdict, dataclass

from core.exceptions import InvalidArgument, InvalidConfig

# sampling ranges of the wind conditions
SPEED_RANGE = (1.5, 10.0)
DIRECTION_RANGE = (340.0, 360.0)


@dataclass(frozen=True)
class WindCondition:
    """
    A wind speed (m/s) and a meteorological wind direction (degrees the wind blows FROM,
    360 = from north).
    """

    speed_ms: float
    direction_deg: float

    def __post_init__(self):
        if not SPEED_RANGE[0] <= self.speed_ms <= SPEED_RANGE[1]:
            raise InvalidArgument(f'wind speed {self.speed_ms} outside {SPEED_RANGE}')
        if not DIRECTION_RANGE[0] <= self.direction_deg <= DIRECTION_RANGE[1]:
            raise InvalidArgument(f'wind direction {self.direction_deg} outside {DIRECTION_RANGE}')

    def unit_vector(self):
        """
        (east, north) components of the direction the wind blows TO.
        """

        theta = math.radians(self.direction_deg)
        return -math.sin(theta), -math.cos(theta)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(speed_ms=float(data['speed_ms']), direction_deg=float(data['direction_deg']))


@dataclass(frozen=True)
class SourceSpec:
    """
    A continuous point release. 'z_release' of None puts the source one cell above the
    local terrain at the source column.
    """

    x_release: float = 5000.0
    y_release: float = 5000.0
    z_release: float = None
    emission_rate: float = 1.0

    def __post_init__(self):
        if self.emission_rate <= 0:
            raise InvalidArgument('emission_rate must be positive')

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SimConfig:
    """
    Grid, physics and output cadence of one simulation.

    dt_solver of None lets the solver pick the largest stable substep.
    record_interval of None records frames at dt_output directly; a smaller interval
    records finer frames that the generator subsamples back to dt_output.
    """

    domain_extent_zyx: tuple = (4000.0, 10000.0, 10000.0)
    grid_cells_zyx: tuple = (50, 125, 125)
    dt_solver: float = None
    dt_output: float = 600.0
    n_output_steps: int = 33
    duration: float = 19800.0
    diffusivity: float = 10.0
    decay_halflife: float = None
    roughness_length: float = 0.1
    reference_height: float = 10.0
    profile_cap_height: float = 1000.0
    terrain_amplitude: float = 500.0
    terrain_correlation_length: float = 1500.0
    terrain_features: int = 14
    projection_tolerance: float = 1e-9
    projection_max_iterations: int = 20000
    record_interval: float = None

    def __post_init__(self):
        object.__setattr__(self, 'domain_extent_zyx', tuple(float(e) for e in self.domain_extent_zyx))
        object.__setattr__(self, 'grid_cells_zyx', tuple(int(n) for n in self.grid_cells_zyx))

        if len(self.grid_cells_zyx) != 3 or min(self.grid_cells_zyx) <= 0:
            raise InvalidConfig(f'grid_cells_zyx must be three positive integers, got {self.grid_cells_zyx}')
        if len(self.domain_extent_zyx) != 3 or min(self.domain_extent_zyx) <= 0:
            raise InvalidConfig(f'domain_extent_zyx must be three positive lengths, got {self.domain_extent_zyx}')
        if self.dt_output <= 0 or self.n_output_steps < 1:
            raise InvalidConfig('dt_output must be positive and n_output_steps at least 1')
        if self.n_output_steps * self.dt_output < self.duration:
            raise InvalidConfig(
                f'{self.n_output_steps} outputs every {self.dt_output} s do not cover the duration {self.duration} s'
            )
        if self.dt_solver is not None and self.dt_solver <= 0:
            raise InvalidConfig('dt_solver must be positive')
        if self.diffusivity < 0:
            raise InvalidConfig('diffusivity must be non-negative')
        if self.decay_halflife is not None and self.decay_halflife <= 0:
            raise InvalidConfig('decay_halflife must be positive when set')
        if self.terrain_amplitude < 0 or self.terrain_amplitude >= self.domain_extent_zyx[0]:
            raise InvalidConfig('terrain_amplitude must be non-negative and below the domain top')
        if self.record_interval is not None:
            ratio = self.dt_output / self.record_interval
            if self.record_interval <= 0 or abs(ratio - round(ratio)) > 1e-9:
                raise InvalidConfig('record_interval must divide dt_output')

    @property
    def cell_size_zyx(self):
        return tuple(e / n for e, n in zip(self.domain_extent_zyx, self.grid_cells_zyx))

    @property
    def min_cell_size(self):
        return min(self.cell_size_zyx)

    @property
    def recording_stride(self):
        if self.record_interval is None:
            return 1
        return int(round(self.dt_output / self.record_interval))

    @property
    def n_recorded_frames(self):
        return self.n_output_steps * self.recording_stride

    def to_dict(self):
        return asdict(self)
