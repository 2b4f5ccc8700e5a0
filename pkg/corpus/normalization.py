"""
Log10 min-max normalization used for every model-facing tensor.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from core.exceptions import InvalidSpec

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class NormalizationSpec:
    """
    v -> (log10(max(v, log_floor)) - min_val) / (max_val - min_val)

    min_val and max_val are log10 bounds fitted on the training split only.
    """

    min_val: float
    max_val: float
    log_floor: float = LOG_FLOOR

    def validate(self):
        bounds = (self.min_val, self.max_val, self.log_floor)
        if not all(np.isfinite(b) for b in bounds):
            raise InvalidSpec(f'normalization bounds must be finite, got {bounds}')
        if self.max_val <= self.min_val:
            raise InvalidSpec(f'max_val ({self.max_val}) must exceed min_val ({self.min_val})')
        if self.log_floor <= 0:
            raise InvalidSpec('log_floor must be positive')

    @property
    def span(self):
        return self.max_val - self.min_val

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        spec = cls(
            min_val=float(data['min_val']),
            max_val=float(data['max_val']),
            log_floor=float(data.get('log_floor', LOG_FLOOR)),
        )
        spec.validate()
        return spec


def _values(data):
    return np.asarray(getattr(data, 'values', data), dtype=np.float64)


def log_normalize(data, spec):
    """
    Maps linear concentrations (array or ConcentrationSequence) to normalized log space.
    """

    spec.validate()
    values = _values(data)
    if values.size and values.min() < 0:
        raise InvalidSpec('cannot log-normalize negative concentrations')

    return (np.log10(np.maximum(values, spec.log_floor)) - spec.min_val) / spec.span


def inverse_log_normalize(normalized, spec):
    """
    Maps normalized values back to linear concentrations. Values at or below the floor
    come back as log_floor.
    """

    spec.validate()
    normalized = np.asarray(normalized, dtype=np.float64)
    return np.power(10.0, normalized * spec.span + spec.min_val)


def log_range(data, log_floor=LOG_FLOOR):
    """
    (min, max) of log10(max(v, log_floor)) over an array.
    """

    values = _values(data)
    logs = np.log10(np.maximum(values, log_floor))
    return float(logs.min()), float(logs.max())


def fit_normalization(items, log_floor=LOG_FLOOR):
    """
    Fits a NormalizationSpec over the training split.

    'items' holds DualResolutionSamples (both resolutions contribute), plain arrays, or
    precomputed (min, max) log ranges as returned by log_range.
    """

    lows, highs = [], []
    for item in items:
        if isinstance(item, tuple) and len(item) == 2:
            ranges = [item]
        elif hasattr(item, 'lr') and hasattr(item, 'hr'):
            ranges = [log_range(item.lr, log_floor), log_range(item.hr, log_floor)]
        else:
            ranges = [log_range(item, log_floor)]
        for low, high in ranges:
            lows.append(low)
            highs.append(high)

    if not lows:
        raise InvalidSpec('cannot fit normalization on an empty training split')

    spec = NormalizationSpec(min_val=min(lows), max_val=max(highs), log_floor=log_floor)
    spec.validate()
    logger.info('fitted normalization log10 range [%.3f, %.3f] (floor %g)', spec.min_val, spec.max_val, log_floor)

    return spec
