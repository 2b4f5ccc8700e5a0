import logging

import numpy as np
from scipy.stats import qmc

from core.exceptions import InvalidArgument

from .conditions import DIRECTION_RANGE, SPEED_RANGE, WindCondition

logger = logging.getLogger(__name__)


def sample_conditions(n, seed):
    """
    Draws n wind conditions with Latin hypercube sampling over the speed and direction
    ranges: each of the n equal-width strata of each parameter holds exactly one sample.
    """

    if n <= 0:
        raise InvalidArgument(f'number of conditions must be positive, got {n}')

    sampler = qmc.LatinHypercube(d=2, seed=np.random.default_rng(seed))
    unit = sampler.random(n)
    scaled = qmc.scale(
        unit,
        l_bounds=[SPEED_RANGE[0], DIRECTION_RANGE[0]],
        u_bounds=[SPEED_RANGE[1], DIRECTION_RANGE[1]],
    )

    logger.debug('sampled %d wind conditions with seed %s', n, seed)

    return [WindCondition(speed_ms=float(s), direction_deg=float(d)) for s, d in scaled]
