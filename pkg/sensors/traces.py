"""
Virtual point sensors: sensor layouts, z-averaged log10 traces and trace comparison.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from core.exceptions import InvalidArgument
from corpus.container import atomic_write
from corpus.normalization import LOG_FLOOR

logger = logging.getLogger(__name__)

# updates are judged after this time on the frame clock
SPLIT_TIME = 9000.0
NEAR_BAND = (0.0, 540.0)
FAR_BAND = (1510.0, 2120.0)

# (distance m, bearing deg clockwise from north) of the default layout, downwind of
# northerly winds so every sensor falls inside the southeast crop
DEFAULT_RING = {
    'N1': (250.0, 170.0),
    'N2': (400.0, 160.0),
    'N3': (520.0, 175.0),
    'F1': (1600.0, 170.0),
    'F2': (1850.0, 160.0),
    'F3': (2100.0, 175.0),
}


@dataclass(frozen=True)
class SensorSpec:
    id: str
    x: float
    y: float
    source_xy: tuple = (5000.0, 5000.0)

    @property
    def distance_to_source(self):
        return math.hypot(self.x - self.source_xy[0], self.y - self.source_xy[1])

    @property
    def band(self):
        distance = self.distance_to_source
        if NEAR_BAND[0] <= distance <= NEAR_BAND[1]:
            return 'near'
        if FAR_BAND[0] <= distance <= FAR_BAND[1]:
            return 'far'
        return 'other'


@dataclass(frozen=True)
class SensorTrace:
    sensor_id: str
    times: np.ndarray
    values: np.ndarray
    model: str = 'truth'

    def __post_init__(self):
        if self.times.shape != self.values.shape:
            raise InvalidArgument('trace times and values differ in length')
        if np.any(np.diff(self.times) <= 0):
            raise InvalidArgument('trace times must be strictly increasing')
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgument(f'trace of sensor {self.sensor_id} has non-finite values')


def default_sensor_ring(source_xy=(5000.0, 5000.0), ring=None):
    sensors = []
    for sensor_id, (distance, bearing) in (ring or DEFAULT_RING).items():
        theta = math.radians(bearing)
        sensors.append(SensorSpec(
            id=sensor_id,
            x=source_xy[0] + distance * math.sin(theta),
            y=source_xy[1] + distance * math.cos(theta),
            source_xy=tuple(source_xy),
        ))
    return sensors


def read_sensors(path, source_xy=(5000.0, 5000.0)):
    """
    Reads a sensor list CSV with columns id, x, y.
    """

    frame = pd.read_csv(path, dtype={'id': str})
    missing = {'id', 'x', 'y'} - set(frame.columns)
    if missing:
        raise InvalidArgument(f'sensor file {path} lacks columns {sorted(missing)}')
    return [SensorSpec(id=row.id, x=float(row.x), y=float(row.y), source_xy=tuple(source_xy))
            for row in frame.itertuples()]


def write_sensors(path, sensors):
    frame = pd.DataFrame([{'id': s.id, 'x': s.x, 'y': s.y} for s in sensors], columns=['id', 'x', 'y'])
    atomic_write(path, [frame.to_csv(index=False).encode()])


def sensor_cell(sequence, sensor):
    """
    (j, i) of the horizontal cell containing the sensor.
    """

    _, dy, dx = sequence.cell_size_zyx
    _, y0, x0 = sequence.origin
    _, ny, nx = sequence.grid_shape
    j = math.floor((sensor.y - y0) / dy)
    i = math.floor((sensor.x - x0) / dx)
    if not (0 <= j < ny and 0 <= i < nx):
        raise InvalidArgument(
            f'sensor {sensor.id} at ({sensor.x:.0f}, {sensor.y:.0f}) lies outside the domain '
            f'x [{x0:.0f}, {x0 + nx * dx:.0f}), y [{y0:.0f}, {y0 + ny * dy:.0f})'
        )
    return j, i


def extract_trace(sequence, sensor, model='truth', epsilon=LOG_FLOOR):
    """
    log10 of the full-column mean concentration above the sensor, per frame.
    """

    j, i = sensor_cell(sequence, sensor)
    column = np.asarray(sequence.values[:, :, j, i], dtype=np.float64)
    values = np.log10(np.maximum(column.mean(axis=1), epsilon))
    return SensorTrace(sensor_id=sensor.id, times=sequence.times(), values=values, model=model)


def traces_frame(traces, run_id=None):
    """
    Long table (run, sensor, model, time, value) of an iterable of traces.
    """

    rows = [
        {'run': run_id, 'sensor': trace.sensor_id, 'model': trace.model, 'time': time, 'value': value}
        for trace in traces
        for time, value in zip(trace.times, trace.values)
    ]
    return pd.DataFrame(rows, columns=['run', 'sensor', 'model', 'time', 'value'])


def _mae(a, b):
    return float(np.mean(np.abs(a - b))) if a.size else float('nan')


def compare_traces(truth_traces, model_traces, sensors, split_time=SPLIT_TIME):
    """
    Mean absolute trace error per sensor and model: overall, before and from split_time.

    truth_traces maps sensor id to trace; model_traces maps model name to such a dict.
    """

    sensors = {sensor.id: sensor for sensor in sensors}
    rows = []
    for model, traces in model_traces.items():
        for sensor_id, truth in truth_traces.items():
            trace = traces[sensor_id]
            if trace.times.shape != truth.times.shape or not np.allclose(trace.times, truth.times):
                raise InvalidArgument(f'{model} trace of sensor {sensor_id} is on a different time base')

            before = truth.times < split_time
            sensor = sensors[sensor_id]
            rows.append({
                'sensor': sensor_id,
                'model': model,
                'distance': sensor.distance_to_source,
                'band': sensor.band,
                'mae': _mae(trace.values, truth.values),
                'mae_before': _mae(trace.values[before], truth.values[before]),
                'mae_after': _mae(trace.values[~before], truth.values[~before]),
            })
    return pd.DataFrame(
        rows, columns=['sensor', 'model', 'distance', 'band', 'mae', 'mae_before', 'mae_after']
    )
