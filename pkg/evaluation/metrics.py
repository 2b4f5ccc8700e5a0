"""
Volumetric metrics of predicted against ground-truth concentration fields.

MSE and SSIM compare normalized log-space volumes, IoU thresholds log10
concentrations and the conservation-of-mass error compares linear concentrations.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from skimage.metrics import structural_similarity

from core.exceptions import InvalidArgument, InvalidConfig, UndefinedMetric
from corpus.container import atomic_write
from corpus.normalization import inverse_log_normalize

logger = logging.getLogger(__name__)

METRICS = ('mse', 'iou', 'ssim', 'cm')
LABELS = {'mse': 'MSE', 'iou': 'IoU', 'ssim': 'SSIM', 'cm': 'CM'}
CM_MODES = ('relative', 'absolute')
# round-trip slack when recognising floor-valued cells
FLOOR_RTOL = 1e-6


@dataclass(frozen=True)
class MetricConfig:
    iou_threshold: float = 1.0
    ssim_window: int = 7
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    ssim_data_range: float = 1.0
    cm_normalization: str = 'relative'

    def __post_init__(self):
        if not np.isfinite(self.iou_threshold):
            raise InvalidConfig('iou_threshold must be finite')
        if self.ssim_window < 3 or self.ssim_window % 2 == 0:
            raise InvalidConfig(f'ssim_window must be odd and at least 3, got {self.ssim_window}')
        if self.ssim_data_range <= 0:
            raise InvalidConfig('ssim_data_range must be positive')
        if self.cm_normalization not in CM_MODES:
            raise InvalidConfig(f'cm_normalization must be one of {CM_MODES}')

    def to_dict(self):
        return asdict(self)


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise InvalidArgument(f'prediction {pred.shape} and truth {truth.shape} differ in shape')
    return pred, truth


def mse(pred, truth):
    pred, truth = _pair(pred, truth)
    return float(np.mean((pred - truth) ** 2))


def iou(pred, truth, config=None):
    """
    Intersection over union of the masks value >= iou_threshold; 1.0 when both are empty.
    """

    config = config or MetricConfig()
    pred, truth = _pair(pred, truth)
    pred_mask = pred >= config.iou_threshold
    truth_mask = truth >= config.iou_threshold

    union = np.logical_or(pred_mask, truth_mask).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(pred_mask, truth_mask).sum() / union)


def ssim3d(pred, truth, config=None):
    """
    SSIM over a uniform cubic sliding window, averaged over the windows lying fully
    inside the volume.
    """

    config = config or MetricConfig()
    pred, truth = _pair(pred, truth)
    if pred.ndim != 3 or min(pred.shape) < config.ssim_window:
        raise InvalidArgument(f'volume {pred.shape} is smaller than the {config.ssim_window}-voxel SSIM window')

    return float(structural_similarity(
        pred,
        truth,
        win_size=config.ssim_window,
        data_range=config.ssim_data_range,
        gaussian_weights=False,
        K1=config.ssim_k1,
        K2=config.ssim_k2,
    ))


def conservation_mass(pred, truth, config=None, cell_volume=1.0):
    """
    Total-mass discrepancy of linear concentrations: relative to the true mass, or
    absolute in mass units.
    """

    config = config or MetricConfig()
    pred, truth = _pair(pred, truth)
    difference = abs(pred.sum() - truth.sum())

    if config.cm_normalization == 'absolute':
        return float(difference * cell_volume)

    total = truth.sum()
    if total <= 0:
        raise UndefinedMetric('relative mass conservation is undefined for a field without mass')
    return float(difference / total)


@dataclass
class MetricsReport:
    """
    Per-timestep metric values of one model, shaped (runs, steps) per metric.
    """

    model: str
    run_ids: list
    per_timestep: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.per_timestep = {name: np.asarray(values, dtype=np.float64) for name, values in self.per_timestep.items()}
        shapes = {values.shape for values in self.per_timestep.values()}
        if len(shapes) != 1 or next(iter(shapes))[0] != len(self.run_ids):
            raise InvalidArgument('every metric needs one row of values per run')

    @property
    def n_steps(self):
        return next(iter(self.per_timestep.values())).shape[1]

    def aggregate(self):
        """
        Mean and standard deviation over all steps of all runs.
        """

        return {
            name: {'mean': float(values.mean()), 'std': float(values.std())}
            for name, values in self.per_timestep.items()
        }

    def step_mean(self, name):
        return self.per_timestep[name].mean(axis=0)

    def step_std(self, name):
        return self.per_timestep[name].std(axis=0)

    def to_frame(self):
        rows = [
            {'run': run, 'step': step + 1, 'metric': name, 'value': value}
            for name, values in self.per_timestep.items()
            for run, row in zip(self.run_ids, values)
            for step, value in enumerate(row)
        ]
        return pd.DataFrame(rows, columns=['run', 'step', 'metric', 'value'])

    def to_dict(self):
        return {
            'model': self.model,
            'run_ids': list(self.run_ids),
            'n_steps': self.n_steps,
            'aggregate': self.aggregate(),
            'metadata': self.metadata,
        }

    def write(self, directory):
        """
        Writes <model>_metrics.csv (run, step, metric, value) and <model>_metrics.json.
        """

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f'{self.model}_metrics.csv'
        json_path = directory / f'{self.model}_metrics.json'

        atomic_write(csv_path, [self.to_frame().to_csv(index=False).encode()])
        atomic_write(json_path, [json.dumps(self.to_dict(), indent=2, sort_keys=True).encode()])
        logger.info('wrote %s metrics for %d runs to %s', self.model, len(self.run_ids), directory)
        return csv_path, json_path

    @classmethod
    def read(cls, csv_path, metadata=None):
        frame = pd.read_csv(csv_path, dtype={'run': str})
        run_ids = list(dict.fromkeys(frame['run']))
        per_timestep = {}
        for name, group in frame.groupby('metric', sort=False):
            table = group.pivot(index='run', columns='step', values='value').loc[run_ids]
            per_timestep[name] = table.to_numpy()
        model = Path(csv_path).name.removesuffix('_metrics.csv')
        return cls(model=model, run_ids=run_ids, per_timestep=per_timestep, metadata=metadata or {})


def to_log10(normalized, spec):
    return np.asarray(normalized, dtype=np.float64) * spec.span + spec.min_val


def to_linear_mass(normalized, spec):
    """
    Linear concentrations with cells at or below the log floor set to zero, so empty
    space carries no mass.
    """

    values = inverse_log_normalize(normalized, spec)
    values[values <= spec.log_floor * (1 + FLOOR_RTOL)] = 0.0
    return values


def evaluate_rollout(pred_sequence, truth_sequence, config, spec, run_id='run', model='model', cell_volume=1.0):
    """
    All four metrics at every step of one run.

    Both sequences are (T, Z, Y, X) in normalized log space; IoU is taken on log10
    values and mass conservation on linear concentrations with floor-valued cells empty.
    """

    pred_sequence = np.asarray(pred_sequence)
    truth_sequence = np.asarray(truth_sequence)
    if pred_sequence.shape != truth_sequence.shape or pred_sequence.ndim != 4:
        raise InvalidArgument(
            f'prediction {pred_sequence.shape} and truth {truth_sequence.shape} are not aligned (T, Z, Y, X) sequences'
        )

    values = {name: [] for name in METRICS}
    for pred, truth in zip(pred_sequence, truth_sequence):
        values['mse'].append(mse(pred, truth))
        values['iou'].append(iou(to_log10(pred, spec), to_log10(truth, spec), config))
        values['ssim'].append(ssim3d(pred, truth, config))
        values['cm'].append(conservation_mass(
            to_linear_mass(pred, spec), to_linear_mass(truth, spec), config, cell_volume
        ))

    return MetricsReport(
        model=model,
        run_ids=[str(run_id)],
        per_timestep={name: [row] for name, row in values.items()},
        metadata={'metric_config': config.to_dict()},
    )


def aggregate_reports(reports, model=None):
    """
    Stacks per-run reports of one model into a single report.
    """

    reports = list(reports)
    if not reports:
        raise InvalidArgument('no reports to aggregate')
    if len({report.n_steps for report in reports}) != 1:
        raise InvalidArgument('reports cover different numbers of steps')

    merged = MetricsReport(
        model=model or reports[0].model,
        run_ids=[run for report in reports for run in report.run_ids],
        per_timestep={
            name: np.concatenate([report.per_timestep[name] for report in reports])
            for name in reports[0].per_timestep
        },
        metadata=dict(reports[0].metadata),
    )
    logger.info(
        '%s over %d runs: %s', merged.model, len(merged.run_ids),
        ', '.join(f'{LABELS.get(k, k)} {v["mean"]:.3g}±{v["std"]:.2g}' for k, v in merged.aggregate().items()),
    )
    return merged


def comparison_table(reports):
    """
    One row per model with 'mean ± std' cells for each metric.
    """

    rows = []
    for report in reports:
        aggregate = report.aggregate()
        row = {'model': report.model}
        for name in METRICS:
            if name in aggregate:
                row[LABELS[name]] = f'{aggregate[name]["mean"]:.3g} ± {aggregate[name]["std"]:.2g}'
        rows.append(row)
    return pd.DataFrame(rows, columns=['model'] + [LABELS[name] for name in METRICS])
