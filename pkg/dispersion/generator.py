"""
One simulated release per wind condition: terrain, wind, transport, subsampling.
"""

import logging

from core.exceptions import InvalidArgument

from .conditions import SourceSpec
from .solver import run_release
from .terrain import generate_terrain
from .wind import build_wind_field

logger = logging.getLogger(__name__)


def subsample_output(sequence, stride):
    """
    Keeps every 'stride'-th frame of a finely recorded sequence, ending each group of
    'stride' frames, so the first kept frame lies one output interval after release.
    """

    if stride < 1:
        raise InvalidArgument(f'stride must be at least 1, got {stride}')
    if stride == 1:
        return sequence

    return sequence.with_values(
        sequence.values[stride - 1::stride],
        dt_output=sequence.dt_output * stride,
        release_offset=sequence.release_offset + (stride - 1) * sequence.dt_output,
    )


def simulate_condition(condition, config, source=None, terrain=None, terrain_seed=0):
    """
    Simulates one continuous release under 'condition' and returns
    (ConcentrationSequence at dt_output, MassLedger).

    All runs of a corpus share one terrain, so callers pass it in or let it be rebuilt
    from 'terrain_seed'.
    """

    source = source or SourceSpec()
    terrain = terrain or generate_terrain(config, terrain_seed)
    wind = build_wind_field(terrain, condition, config)
    sequence, ledger = run_release(terrain, wind, source, config)
    sequence = subsample_output(sequence, config.recording_stride)

    logger.info(
        'simulated w_s=%.2f m/s w_d=%.1f deg: %d frames, mass residual %.2e',
        condition.speed_ms, condition.direction_deg, sequence.n_steps, ledger.max_residual,
    )
    return sequence, ledger
