"""
Procedural terrain: randomized smooth ridges and bumps.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from core.exceptions import InvalidArgument

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TerrainField:
    """
    Terrain elevation in metres over the (y, x) grid.
    """

    heights: np.ndarray
    cell_size_xy: tuple
    seed: int

    def __post_init__(self):
        if self.heights.ndim != 2:
            raise InvalidArgument('terrain heights must be a 2D (y, x) grid')
        if not np.all(np.isfinite(self.heights)) or self.heights.min() < 0:
            raise InvalidArgument('terrain heights must be finite and non-negative')

    @property
    def shape(self):
        return self.heights.shape

    def ground_index(self, dz, nz):
        """
        Number of solid cells in each column: cell k is solid when its centre lies
        below the terrain surface. At least one fluid cell is kept at the top.
        """

        solid = np.ceil(self.heights / dz - 0.5)
        return np.clip(solid, 0, nz - 1).astype(np.int64)

    def solid_mask(self, dz, nz):
        """
        Boolean (z, y, x) mask of the cells inside the terrain.
        """

        levels = np.arange(nz)[:, None, None]
        return levels < self.ground_index(dz, nz)[None, :, :]


def generate_terrain(config, seed):
    """
    Builds a deterministic terrain for the configured grid: a sum of randomly placed,
    randomly oriented anisotropic Gaussian ridges, low-pass filtered and rescaled so that
    the relief spans [0, terrain_amplitude].
    """

    _, ny, nx = config.grid_cells_zyx
    _, dy, dx = config.cell_size_zyx
    heights = np.zeros((ny, nx), dtype=np.float64)

    if config.terrain_amplitude == 0:
        return TerrainField(heights=heights, cell_size_xy=(dx, dy), seed=seed)

    rng = np.random.default_rng(seed)
    _, extent_y, extent_x = config.domain_extent_zyx
    y = (np.arange(ny) + 0.5) * dy
    x = (np.arange(nx) + 0.5) * dx
    yy, xx = np.meshgrid(y, x, indexing='ij')
    length = config.terrain_correlation_length

    for _ in range(config.terrain_features):
        cy, cx = rng.uniform(0, extent_y), rng.uniform(0, extent_x)
        angle = rng.uniform(0, np.pi)
        # ridges are elongated along one axis, bumps are nearly round
        along = length * rng.uniform(1.0, 3.0)
        across = length * rng.uniform(0.4, 1.0)
        weight = rng.uniform(0.3, 1.0)

        ry = (yy - cy) * np.cos(angle) - (xx - cx) * np.sin(angle)
        rx = (yy - cy) * np.sin(angle) + (xx - cx) * np.cos(angle)
        heights += weight * np.exp(-0.5 * ((ry / along) ** 2 + (rx / across) ** 2))

    sigma = (length / (4 * dy), length / (4 * dx))
    heights = ndimage.gaussian_filter(heights, sigma=sigma, mode='nearest')

    span = heights.max() - heights.min()
    if span > 0:
        heights = config.terrain_amplitude * (heights - heights.min()) / span
    else:
        heights = np.zeros_like(heights)

    logger.info(
        'generated terrain seed=%s grid=%s relief=%.1f m', seed, heights.shape, heights.max() - heights.min()
    )

    return TerrainField(heights=heights, cell_size_xy=(dx, dy), seed=seed)
