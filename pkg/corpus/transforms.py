"""
Geometric transforms from raw simulation output to model-sized volumes.
"""

import logging
import math

import numpy as np
import torch
import torch.nn.functional as F
from skimage.measure import block_reduce
from skimage.transform import resize

from core.exceptions import InvalidArgument

logger = logging.getLogger(__name__)

# physical crop (z, y, x) in metres and the horizontal source corner it hangs from
CROP_EXTENT_ZYX = (2000.0, 5000.0, 5000.0)
CROP_ANCHOR_XY = (5000.0, 5000.0)


def _cells(extent, size):
    return int(math.floor(extent / size + 1e-9))


def crop_volume(sequence, extent_zyx=CROP_EXTENT_ZYX, anchor_xy=CROP_ANCHOR_XY):
    """
    Crops a sequence to 'extent_zyx' metres: from the ground up in z, and horizontally the
    quadrant east and south of the anchor (the source corner), shifted inwards when it
    would leave the domain. Cell counts use floor division; the realized extent and the
    new origin are carried by the returned sequence.
    """

    nz, ny, nx = sequence.grid_shape
    dz, dy, dx = sequence.cell_size_zyx
    cz, cy, cx = (_cells(e, s) for e, s in zip(extent_zyx, sequence.cell_size_zyx))

    if min(cz, cy, cx) < 1:
        raise InvalidArgument(f'crop extent {extent_zyx} is smaller than one cell')
    if cz > nz or cy > ny or cx > nx:
        raise InvalidArgument(
            f'crop of {(cz, cy, cx)} cells does not fit the {sequence.grid_shape} domain'
        )

    anchor_x, anchor_y = anchor_xy
    ox, oy = sequence.origin[2], sequence.origin[1]
    i_anchor = int(math.floor((anchor_x - ox) / dx))
    j_anchor = int(math.floor((anchor_y - oy) / dy))
    i0 = min(max(i_anchor, 0), nx - cx)
    j0 = max(0, min(j_anchor - cy + 1, ny - cy))

    values = sequence.values[:, :cz, j0:j0 + cy, i0:i0 + cx]
    origin = (sequence.origin[0], oy + j0 * dy, ox + i0 * dx)

    logger.debug('cropped %s to %s cells at origin %s', sequence.grid_shape, values.shape[1:], origin)

    return sequence.with_values(np.ascontiguousarray(values), origin=origin)


def resize_sequence(sequence, target_shape):
    """
    Trilinear resize of every frame to 'target_shape' (z, y, x). A Gaussian anti-aliasing
    prefilter is applied when any axis is downsampled. Cell sizes are rescaled so the
    physical extent is unchanged.
    """

    target_shape = tuple(int(n) for n in target_shape)
    if len(target_shape) != 3 or min(target_shape) <= 0:
        raise InvalidArgument(f'target shape must be three positive integers, got {target_shape}')

    downsampling = any(t < s for t, s in zip(target_shape, sequence.grid_shape))
    frames = [
        resize(
            frame,
            target_shape,
            order=1,
            mode='edge',
            anti_aliasing=downsampling,
            preserve_range=True,
        )
        for frame in sequence.values
    ]
    values = np.maximum(np.stack(frames), 0.0)
    cell_size = tuple(e / n for e, n in zip(sequence.extent_zyx, target_shape))

    return sequence.with_values(values, cell_size_zyx=cell_size)


def average_pool_downsample(volume, factor=4):
    """
    Mean over non-overlapping factor^3 blocks of the last three axes.
    Works on single frames (Z, Y, X) and on stacks (..., Z, Y, X).
    """

    volume = np.asarray(volume)
    if volume.ndim < 3:
        raise InvalidArgument(f'expected at least three axes, got shape {volume.shape}')
    if any(n % factor for n in volume.shape[-3:]):
        raise InvalidArgument(f'grid {volume.shape[-3:]} is not divisible by {factor}')

    block = (1,) * (volume.ndim - 3) + (factor,) * 3
    return block_reduce(volume, block_size=block, func=np.mean)


def nearest_upsample(volume, factor=4):
    """
    Repeats every cell of the last three axes into a factor^3 block.
    """

    volume = np.asarray(volume)
    for axis in (-3, -2, -1):
        volume = np.repeat(volume, factor, axis=axis)
    return volume


def trilinear_upsample(volume, factor=4):
    """
    Trilinear interpolation of (B, Z, Y, X) or (Z, Y, X) volumes by 'factor'; the
    baseline the spatial refinement model has to beat. Returns the input's type.
    """

    as_numpy = not torch.is_tensor(volume)
    tensor = torch.as_tensor(np.asarray(volume, dtype=np.float32)) if as_numpy else volume
    single = tensor.dim() == 3
    if single:
        tensor = tensor.unsqueeze(0)
    if tensor.dim() != 4:
        raise InvalidArgument(f'expected (B, Z, Y, X) or (Z, Y, X), got {tuple(tensor.shape)}')

    upsampled = F.interpolate(tensor.unsqueeze(1), scale_factor=factor, mode='trilinear', align_corners=False)
    upsampled = upsampled.squeeze(1)
    if single:
        upsampled = upsampled.squeeze(0)

    return upsampled.numpy() if as_numpy else upsampled
