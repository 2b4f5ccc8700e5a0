"""
Static figures: metric curves over time and averaged-plane comparisons.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from core.exceptions import InvalidArgument  # noqa: E402

from .metrics import LABELS, METRICS  # noqa: E402

logger = logging.getLogger(__name__)


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logger.info('wrote figure %s', path)
    return path


def time_axis(n_frames, dt_output=None):
    """
    Frame k on the frame clock, k * dt_output in hours; plain frame indices without a cadence.
    """

    frames = np.arange(n_frames, dtype=np.float64)
    return frames * dt_output / 3600.0 if dt_output else frames


def plot_metrics(reports_by_model, path, dt_output=None):
    """
    Four panels, one per metric: the run-mean of every model over time with a +-1 std band.
    """

    if not reports_by_model:
        raise InvalidArgument('no reports to plot')

    fig, axes = plt.subplots(2, 2, figsize=(11, 7), sharex=True)
    for ax, name in zip(axes.flat, METRICS):
        for model, report in reports_by_model.items():
            if name not in report.per_timestep:
                continue
            x = time_axis(report.n_steps, dt_output)
            mean, std = report.step_mean(name), report.step_std(name)
            ax.plot(x, mean, linewidth=2, label=model)
            ax.fill_between(x, mean - std, mean + std, alpha=0.25)
        ax.set_title(LABELS[name])
        ax.set_xlabel('time (h)' if dt_output else 'frame')
        ax.grid(True, alpha=0.3)
    axes.flat[0].legend()

    return _save(fig, path)


def _panel(ax, image, title, vmin, vmax, xlabel, ylabel):
    im = ax.imshow(image, origin='lower', cmap='viridis', vmin=vmin, vmax=vmax, aspect='auto')
    ax.set_title(title, fontsize=10)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return im


def plot_plane_means(truth, predictions, path, z_slices=None, title=None):
    """
    Compares log10 volumes (Z, Y, X) against the truth: one row per field, columns for
    the x-mean (y-z plane), y-mean (x-z plane), z-mean (x-y plane) and the requested
    z slices.
    """

    truth = np.asarray(truth, dtype=np.float64)
    fields = {'ground truth': truth}
    for name, volume in predictions.items():
        volume = np.asarray(volume, dtype=np.float64)
        if volume.shape != truth.shape:
            raise InvalidArgument(f'{name} volume {volume.shape} does not match the truth {truth.shape}')
        fields[name] = volume

    nz = truth.shape[0]
    z_slices = list(z_slices) if z_slices is not None else sorted({0, nz // 4, nz // 2})
    vmin = min(float(v.min()) for v in fields.values())
    vmax = max(float(v.max()) for v in fields.values())

    n_columns = 3 + len(z_slices)
    fig, axes = plt.subplots(len(fields), n_columns, figsize=(3.2 * n_columns, 2.8 * len(fields)), squeeze=False)
    im = None
    for row, (name, volume) in zip(axes, fields.items()):
        im = _panel(row[0], volume.mean(axis=2), f'{name}: x-mean', vmin, vmax, 'y', 'z')
        _panel(row[1], volume.mean(axis=1), f'{name}: y-mean', vmin, vmax, 'x', 'z')
        _panel(row[2], volume.mean(axis=0), f'{name}: z-mean', vmin, vmax, 'x', 'y')
        for ax, k in zip(row[3:], z_slices):
            _panel(ax, volume[k], f'{name}: z={k}', vmin, vmax, 'x', 'y')

    fig.colorbar(im, ax=axes, shrink=0.8, label='log10(concentration)')
    if title:
        fig.suptitle(title)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logger.info('wrote figure %s', path)
    return path
