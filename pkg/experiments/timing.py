"""
Per-step inference timing for the dual-stage pipeline and the high-resolution baseline.
"""

import json
import logging
import platform
from dataclasses import asdict, dataclass, field
from time import perf_counter

import numpy as np
import torch

from core.exceptions import InvalidArgument
from corpus.container import atomic_write
from surrogates.rollout import predict_step, super_resolve

logger = logging.getLogger(__name__)

MIN_REPEATS = 10


@dataclass
class TimingRecord:
    """
    Wall-clock seconds of 'repeats' timed steps; the 'warmup' untimed steps before them
    are not part of 'times'.
    """

    model: str
    times: list
    warmup: int
    hardware: dict = field(default_factory=dict)

    @property
    def mean(self):
        return float(np.mean(self.times))

    @property
    def std(self):
        return float(np.std(self.times))

    @property
    def median(self):
        return float(np.median(self.times))

    def to_dict(self):
        return dict(asdict(self), mean=self.mean, std=self.std, median=self.median)

    def __str__(self):
        return f'{self.model}: {self.mean:.4f} ± {self.std:.4f} s/step (median {self.median:.4f}, n={len(self.times)})'


def hardware_descriptor(device='cpu'):
    return {
        'platform': platform.platform(),
        'processor': platform.processor() or platform.machine(),
        'torch': torch.__version__,
        'threads': torch.get_num_threads(),
        'device': str(device),
    }


def _synchronizer(device):
    device = torch.device(device)
    if device.type == 'cuda':
        return lambda: torch.cuda.synchronize(device)
    return lambda: None


def time_steps(step, repeats=20, warmup=3, device='cpu'):
    """
    Calls 'step' warmup + repeats times and returns the wall time of the last 'repeats' calls.
    On CUDA devices each timed call is bracketed by a synchronize so queued kernels are counted.
    """

    if repeats < MIN_REPEATS:
        raise InvalidArgument(f'at least {MIN_REPEATS} timed repetitions are required, got {repeats}')
    if warmup < 0:
        raise InvalidArgument(f'warmup must be >= 0, got {warmup}')

    synchronize = _synchronizer(device)
    for _ in range(warmup):
        step()

    times = []
    for _ in range(repeats):
        synchronize()
        start = perf_counter()
        step()
        synchronize()
        times.append(perf_counter() - start)
    return times


def median_ratio(dual, baseline):
    return baseline.median / dual.median


def _window(model, device):
    shape = tuple(model.config.input_shape)
    return torch.rand((1, model.config.input_window, *shape), generator=torch.Generator().manual_seed(0)).to(device)


def benchmark(tm, srm, hrtm, repeats=20, warmup=3, device='cpu'):
    """
    Times one TM step followed by SRM refinement of its frame against one HRTM step.
    Returns (dual-stage record, baseline record, baseline/dual-stage median ratio).
    """

    hardware = hardware_descriptor(device)
    lr_window = _window(tm, device)
    hr_window = _window(hrtm, device)

    def dual_stage():
        frame = predict_step(tm, lr_window)
        super_resolve(srm, frame[:, 0])

    def baseline():
        predict_step(hrtm, hr_window)

    records = (
        TimingRecord('tm_srm', time_steps(dual_stage, repeats, warmup, device), warmup, hardware),
        TimingRecord('hrtm', time_steps(baseline, repeats, warmup, device), warmup, hardware),
    )
    ratio = median_ratio(*records)
    for record in records:
        logger.info('%s', record)
    logger.info('high-resolution baseline / dual-stage per-step time ratio: %.2f', ratio)
    return records[0], records[1], ratio


def write_timings(path, records, ratio):
    text = json.dumps({'records': [record.to_dict() for record in records], 'ratio': ratio}, indent=2) + '\n'
    atomic_write(path, [text.encode('utf-8')])
    return path
