"""
Concentration payloads passed between the apps.

Frame k of a sequence is labelled with time k * dt_output on the frame clock.
The first frame is recorded one output interval after release onset, so frame 0
already carries plume mass; 'release_offset' keeps that interval.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from core.exceptions import InvalidArgument


@dataclass(frozen=True)
class ConcentrationSequence:
    """
    Time-ordered 3D concentration grids, shaped (time, z, y, x), in mass per volume.
    """

    values: np.ndarray
    dt_output: float
    cell_size_zyx: tuple
    origin: tuple = (0.0, 0.0, 0.0)
    release_offset: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values)

        if values.ndim != 4:
            raise InvalidArgument(f'concentration sequence must be 4D (t, z, y, x), got shape {values.shape}')
        if values.shape[0] < 1:
            raise InvalidArgument('concentration sequence has no frames')
        if not np.all(np.isfinite(values)):
            raise InvalidArgument('concentration sequence contains non-finite values')
        if values.size and values.min() < 0:
            raise InvalidArgument(f'concentration sequence contains negative values (min {values.min():.3e})')
        if self.dt_output <= 0:
            raise InvalidArgument('dt_output must be positive')

        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'cell_size_zyx', tuple(float(c) for c in self.cell_size_zyx))
        object.__setattr__(self, 'origin', tuple(float(o) for o in self.origin))

    @property
    def n_steps(self):
        return self.values.shape[0]

    @property
    def grid_shape(self):
        return self.values.shape[1:]

    @property
    def extent_zyx(self):
        return tuple(n * c for n, c in zip(self.grid_shape, self.cell_size_zyx))

    @property
    def cell_volume(self):
        dz, dy, dx = self.cell_size_zyx
        return dz * dy * dx

    def times(self):
        """
        Frame-clock labels in seconds: k * dt_output.
        """

        return np.arange(self.n_steps, dtype=np.float64) * self.dt_output

    def total_mass(self):
        """
        Mass per frame (concentration integrated over cell volumes).
        """

        return self.values.reshape(self.n_steps, -1).sum(axis=1, dtype=np.float64) * self.cell_volume

    def truncate(self, n_steps):
        if not 1 <= n_steps <= self.n_steps:
            raise InvalidArgument(f'cannot truncate {self.n_steps} frames to {n_steps}')
        return replace(self, values=self.values[:n_steps])

    def with_values(self, values, **changes):
        return replace(self, values=values, **changes)


@dataclass(frozen=True)
class DualResolutionSample:
    """
    Paired low/high-resolution sequences of one simulated run.

    'lr' and 'hr' are linear concentrations shaped (T, Z, Y, X); the high-resolution
    grid is 'scale' times finer than the low-resolution one along every axis.
    """

    run_id: str
    condition: object
    lr: np.ndarray
    hr: np.ndarray
    dt_output: float
    lr_cell_size_zyx: tuple
    hr_cell_size_zyx: tuple
    origin: tuple
    scale: int = 4
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lr.ndim != 4 or self.hr.ndim != 4:
            raise InvalidArgument('dual-resolution sample arrays must be 4D (t, z, y, x)')
        if self.lr.shape[0] != self.hr.shape[0]:
            raise InvalidArgument(
                f'lr and hr must have the same number of frames ({self.lr.shape[0]} != {self.hr.shape[0]})'
            )
        expected = tuple(self.scale * n for n in self.lr.shape[1:])
        if self.hr.shape[1:] != expected:
            raise InvalidArgument(f'hr grid {self.hr.shape[1:]} is not {self.scale}x the lr grid {self.lr.shape[1:]}')

    @property
    def n_steps(self):
        return self.lr.shape[0]

    def lr_sequence(self):
        return ConcentrationSequence(self.lr, self.dt_output, self.lr_cell_size_zyx, self.origin)

    def hr_sequence(self):
        return ConcentrationSequence(self.hr, self.dt_output, self.hr_cell_size_zyx, self.origin)
