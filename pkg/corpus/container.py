"""
PLM1 run files.

Layout (little-endian):

    b'PLM1'
    uint32          header length in bytes
    header          UTF-8 JSON, keys sorted
    float32[...]    low-resolution block, C order, shape header['lr_shape']
    float32[...]    high-resolution block, C order, shape header['hr_shape']

Writes go to a temporary file in the target directory and are renamed into place.
"""

import json
import logging
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from core.exceptions import ArtifactMissing, InvalidArgument
from dispersion.conditions import WindCondition

from .sequence import DualResolutionSample

logger = logging.getLogger(__name__)

MAGIC = b'PLM1'
DTYPE = '<f4'
_LENGTH = struct.Struct('<I')


def atomic_write(path, chunks):
    """
    Writes an iterable of bytes chunks to 'path' atomically.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temporary = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as handle:
            for chunk in chunks:
                handle.write(chunk)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.remove(temporary)
        raise


def encode_header(sample):
    return {
        'run_id': sample.run_id,
        'condition': sample.condition.to_dict(),
        'lr_shape': list(sample.lr.shape),
        'hr_shape': list(sample.hr.shape),
        'dt_output': sample.dt_output,
        'lr_cell_size_zyx': list(sample.lr_cell_size_zyx),
        'hr_cell_size_zyx': list(sample.hr_cell_size_zyx),
        'origin': list(sample.origin),
        'scale': sample.scale,
        'dtype': DTYPE,
        'metadata': sample.metadata,
    }


def write_sample(path, sample):
    """
    Stores a DualResolutionSample as a PLM1 file; arrays are written as float32.
    """

    header = json.dumps(encode_header(sample), sort_keys=True).encode('utf-8')
    lr = np.ascontiguousarray(sample.lr, dtype=DTYPE)
    hr = np.ascontiguousarray(sample.hr, dtype=DTYPE)

    atomic_write(path, [MAGIC, _LENGTH.pack(len(header)), header, lr.tobytes(), hr.tobytes()])
    logger.debug('wrote %s (%s, lr %s, hr %s)', path, sample.run_id, lr.shape, hr.shape)


def _read_header(handle, path):
    if handle.read(len(MAGIC)) != MAGIC:
        raise InvalidArgument(f'{path} is not a PLM1 run file')
    (length,) = _LENGTH.unpack(handle.read(_LENGTH.size))
    header = json.loads(handle.read(length).decode('utf-8'))
    return header, len(MAGIC) + _LENGTH.size + length


def read_header(path):
    path = Path(path)
    if not path.exists():
        raise ArtifactMissing(f'run file {path} does not exist')

    with open(path, 'rb') as handle:
        header, _ = _read_header(handle, path)
    return header


def read_sample(path, mmap=False):
    """
    Loads a PLM1 file as a DualResolutionSample. With mmap=True the arrays are read-only
    memory maps, so large corpora are paged in on demand.
    """

    path = Path(path)
    if not path.exists():
        raise ArtifactMissing(f'run file {path} does not exist')

    with open(path, 'rb') as handle:
        header, offset = _read_header(handle, path)

    lr_shape = tuple(header['lr_shape'])
    hr_shape = tuple(header['hr_shape'])
    lr_count = int(np.prod(lr_shape))
    hr_count = int(np.prod(hr_shape))
    item = np.dtype(DTYPE).itemsize

    expected = offset + (lr_count + hr_count) * item
    if path.stat().st_size != expected:
        raise InvalidArgument(f'{path} holds {path.stat().st_size} bytes, expected {expected}')

    if mmap:
        lr = np.memmap(path, dtype=DTYPE, mode='r', offset=offset, shape=lr_shape)
        hr = np.memmap(path, dtype=DTYPE, mode='r', offset=offset + lr_count * item, shape=hr_shape)
    else:
        lr = np.fromfile(path, dtype=DTYPE, count=lr_count, offset=offset).reshape(lr_shape)
        hr = np.fromfile(path, dtype=DTYPE, count=hr_count, offset=offset + lr_count * item).reshape(hr_shape)

    return DualResolutionSample(
        run_id=header['run_id'],
        condition=WindCondition.from_dict(header['condition']),
        lr=lr,
        hr=hr,
        dt_output=header['dt_output'],
        lr_cell_size_zyx=tuple(header['lr_cell_size_zyx']),
        hr_cell_size_zyx=tuple(header['hr_cell_size_zyx']),
        origin=tuple(header['origin']),
        scale=header['scale'],
        metadata=header['metadata'],
    )
