"""
Explicit finite-volume advection-diffusion of a continuous point release.

First-order upwind advection and centred diffusion on the staggered wind grid.
Inflow boundaries bring clean air, outflow leaves through the lateral and top
boundaries, and the ground and terrain are zero-flux. Every output step checks
injected = retained + outflow + decayed.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import InvalidArgument, InvalidConfig, NumericalFailure
from corpus.sequence import ConcentrationSequence

logger = logging.getLogger(__name__)

# advective Courant bound enforced on every substep
CFL_LIMIT = 0.9
# relative mass-balance residual tolerated at every output step
MASS_BALANCE_TOLERANCE = 1e-6


@dataclass
class MassLedger:
    """
    Cumulative mass terms recorded at every output frame.
    """

    injected: list = field(default_factory=list)
    retained: list = field(default_factory=list)
    outflow: list = field(default_factory=list)
    decayed: list = field(default_factory=list)

    def record(self, injected, retained, outflow, decayed):
        self.injected.append(injected)
        self.retained.append(retained)
        self.outflow.append(outflow)
        self.decayed.append(decayed)

    def residuals(self):
        injected = np.asarray(self.injected)
        balance = np.asarray(self.retained) + np.asarray(self.outflow) + np.asarray(self.decayed)
        scale = np.where(injected > 0, injected, 1.0)
        return np.abs(injected - balance) / scale

    @property
    def max_residual(self):
        residuals = self.residuals()
        return float(residuals.max()) if residuals.size else 0.0


def source_cell(terrain, source, config):
    """
    Index (k, j, i) of the cell holding the release.
    """

    nz, ny, nx = config.grid_cells_zyx
    dz, dy, dx = config.cell_size_zyx
    i = int(math.floor(source.x_release / dx))
    j = int(math.floor(source.y_release / dy))
    if not (0 <= i < nx and 0 <= j < ny):
        raise InvalidArgument(f'source ({source.x_release}, {source.y_release}) is outside the domain')

    ground = terrain.ground_index(dz, nz)[j, i]
    z_release = source.z_release
    if z_release is None:
        z_release = ground * dz + dz
    k = int(math.floor(z_release / dz))
    if not ground <= k < nz:
        raise InvalidArgument(f'release height {z_release} m is inside the terrain or above the domain')

    return k, j, i


def _face_views(padded, axis):
    """
    Views of the cells on the low and high side of every face along 'axis' in a
    ghost-padded array. Ghost cells are zero: clean inflow and no diffusion across
    the boundary.
    """

    low = [slice(1, -1)] * 3
    high = [slice(1, -1)] * 3
    low[axis] = slice(None, -1)
    high[axis] = slice(1, None)
    return padded[tuple(low)], padded[tuple(high)]


def _difference(faces, axis):
    """
    High face minus low face for every cell along 'axis'.
    """

    low = [slice(None)] * 3
    high = [slice(None)] * 3
    low[axis] = slice(None, -1)
    high[axis] = slice(1, None)
    return faces[tuple(high)] - faces[tuple(low)]


def _boundary_net(faces, axis):
    first = [slice(None)] * 3
    last = [slice(None)] * 3
    first[axis] = 0
    last[axis] = -1
    return faces[tuple(last)].sum() - faces[tuple(first)].sum()


class AdvectionDiffusionSolver:
    """
    Steps one release forward in time on a fixed wind field.
    """

    def __init__(self, terrain, wind, source, config):
        if wind.grid_shape != tuple(config.grid_cells_zyx):
            raise InvalidArgument(f'wind grid {wind.grid_shape} does not match the configured grid')

        self.config = config
        self.wind = wind
        self.source = source
        self.source_index = source_cell(terrain, source, config)

        dz, dy, dx = config.cell_size_zyx
        self.volume = dx * dy * dz
        areas = (dx * dy, dx * dz, dy * dz)
        spacings = (dz, dy, dx)

        # velocity times face area per axis (z, y, x), split into upwind parts
        flows = (wind.w * areas[0], wind.v * areas[1], wind.u * areas[2])
        self.flow_out_high = [np.maximum(flow, 0.0) for flow in flows]
        self.flow_out_low = [np.minimum(flow, 0.0) for flow in flows]

        # diffusive conductance of interior faces between fluid cells only
        padded_fluid = np.pad(wind.fluid, 1)
        self.conductance = []
        for axis in range(3):
            low, high = _face_views(padded_fluid, axis)
            self.conductance.append(config.diffusivity * areas[axis] / spacings[axis] * (low & high))

        self.dt = self._choose_substep()
        self.substeps = int(round(self._record_interval() / self.dt))

    def _record_interval(self):
        return self.config.record_interval or self.config.dt_output

    def _outflow_rate(self):
        """
        Per-cell rate (1/s) at which mass leaves through outgoing advection and diffusion.
        """

        rate = np.zeros(self.wind.grid_shape, dtype=np.float64)
        for axis in range(3):
            low = [slice(None)] * 3
            high = [slice(None)] * 3
            low[axis] = slice(None, -1)
            high[axis] = slice(1, None)
            rate += self.flow_out_high[axis][tuple(high)] - self.flow_out_low[axis][tuple(low)]
            rate += self.conductance[axis][tuple(high)] + self.conductance[axis][tuple(low)]
        return rate / self.volume

    def _choose_substep(self):
        interval = self._record_interval()
        max_speed = self.wind.max_component()
        min_cell = self.config.min_cell_size
        max_rate = float(self._outflow_rate().max())

        if self.config.dt_solver is not None:
            dt = min(self.config.dt_solver, interval)
            courant = max_speed * dt / min_cell
            if courant > CFL_LIMIT:
                raise InvalidConfig(
                    f'dt_solver={self.config.dt_solver} s gives Courant number {courant:.3f} > {CFL_LIMIT}'
                )
            if max_rate * dt > 1.0:
                raise InvalidConfig(
                    f'dt_solver={self.config.dt_solver} s violates the positivity bound ({max_rate * dt:.3f} > 1)'
                )
        else:
            dt = interval
            if max_speed > 0:
                dt = min(dt, CFL_LIMIT * min_cell / max_speed)
            if max_rate > 0:
                dt = min(dt, 0.95 / max_rate)

        # the recording interval is an integer number of substeps
        substeps = max(1, int(math.ceil(interval / dt - 1e-12)))
        dt = interval / substeps
        logger.info(
            'solver substep %.4g s (%d per frame), Courant %.3f',
            dt, substeps, max_speed * dt / min_cell,
        )
        return dt

    def _fluxes(self, padded, axis):
        """
        Mass flux (mass/s) through every face along 'axis', positive towards higher index.
        """

        low, high = _face_views(padded, axis)
        return (
            self.flow_out_high[axis] * low
            + self.flow_out_low[axis] * high
            - self.conductance[axis] * (high - low)
        )

    def run(self):
        """
        Returns the recorded ConcentrationSequence and its MassLedger.
        """

        config = self.config
        padded = np.zeros(tuple(n + 2 for n in self.wind.grid_shape), dtype=np.float64)
        concentration = padded[1:-1, 1:-1, 1:-1]
        ledger = MassLedger()
        injected = outflow = decayed = 0.0
        k, j, i = self.source_index
        emission = self.source.emission_rate
        decay = None
        if config.decay_halflife is not None:
            decay = 2.0 ** (-self.dt / config.decay_halflife)

        frames = []
        for frame in range(config.n_recorded_frames):
            for _ in range(self.substeps):
                change = np.zeros(concentration.shape, dtype=np.float64)
                for axis in range(3):
                    flux = self._fluxes(padded, axis)
                    change -= _difference(flux, axis)
                    outflow += self.dt * _boundary_net(flux, axis)

                concentration += change * (self.dt / self.volume)
                concentration[k, j, i] += emission * self.dt / self.volume
                injected += emission * self.dt

                if decay is not None:
                    decayed += (1.0 - decay) * concentration.sum() * self.volume
                    concentration *= decay

            if not np.all(np.isfinite(concentration)):
                raise NumericalFailure(f'non-finite concentration at output step {frame}', step=frame)

            retained = concentration.sum() * self.volume
            ledger.record(injected, retained, outflow, decayed)
            residual = ledger.residuals()[-1]
            if residual > MASS_BALANCE_TOLERANCE:
                raise NumericalFailure(
                    f'mass balance residual {residual:.3e} at output step {frame}', step=frame, residual=residual
                )

            frames.append(np.maximum(concentration, 0.0))

        sequence = ConcentrationSequence(
            values=np.stack(frames),
            dt_output=self._record_interval(),
            cell_size_zyx=config.cell_size_zyx,
            origin=(0.0, 0.0, 0.0),
            release_offset=self._record_interval(),
        )
        logger.info(
            'simulated %d frames, max mass-balance residual %.2e', sequence.n_steps, ledger.max_residual
        )
        return sequence, ledger


def run_release(terrain, wind, source, config):
    """
    Simulates a release and returns (ConcentrationSequence, MassLedger).
    """

    return AdvectionDiffusionSolver(terrain, wind, source, config).run()


def simulate_release(terrain, wind, source, config):
    """
    Simulates a continuous release and returns the concentration sequence at the
    recording cadence (dt_output unless record_interval is set).
    """

    sequence, _ = run_release(terrain, wind, source, config)
    return sequence
