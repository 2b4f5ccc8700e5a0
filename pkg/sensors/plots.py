import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

from core.exceptions import InvalidArgument  # noqa: E402

from .traces import SPLIT_TIME  # noqa: E402

logger = logging.getLogger(__name__)


def plot_sensor_traces(traces, sensors, path, split_time=SPLIT_TIME):
    """
    One panel per sensor with the run-mean trace of every model (truth included) and a
    dashed marker at split_time.
    """

    if traces.empty:
        raise InvalidArgument('no sensor traces to plot')

    n_columns = min(3, len(sensors))
    n_rows = math.ceil(len(sensors) / n_columns)
    fig, axes = plt.subplots(n_rows, n_columns, figsize=(4.5 * n_columns, 3.2 * n_rows), squeeze=False, sharex=True)
    means = traces.groupby(['sensor', 'model', 'time'])['value'].mean()

    for ax, sensor in zip(axes.flat, sensors):
        for model, series in means.loc[sensor.id].groupby(level='model'):
            series = series.droplevel('model')
            style = 'k-' if model == 'truth' else '-'
            ax.plot(series.index / 3600.0, series.values, style, linewidth=1.5, label=model)
        ax.axvline(split_time / 3600.0, color='grey', linestyle='--')
        ax.set_title(f'{sensor.id} ({sensor.distance_to_source / 1000:.2f} km)', fontsize=10)
        ax.set_xlabel('time (h)')
        ax.set_ylabel('log10 z-mean concentration')
        ax.grid(True, alpha=0.3)
    for ax in list(axes.flat)[len(sensors):]:
        ax.set_visible(False)
    axes.flat[0].legend(fontsize=8)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logger.info('wrote figure %s', path)
    return path
