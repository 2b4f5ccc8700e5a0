"""
Sliding windows and torch datasets over normalized sequences.
"""

from dataclasses import dataclass

import numpy as np
import torch
from torch.utils.data import Dataset

from core.exceptions import InvalidArgument

from .normalization import log_normalize
from .transforms import average_pool_downsample

WINDOW = 5


@dataclass(frozen=True)
class SlidingWindow:
    """
    Frames start_index .. start_index + 4 as inputs and frame start_index + 5 as target.
    """

    inputs: np.ndarray
    target: np.ndarray
    start_index: int

    @property
    def target_index(self):
        return self.start_index + self.inputs.shape[0]


def _frames(sequence):
    values = getattr(sequence, 'values', sequence)
    values = np.asarray(values)
    if values.ndim != 4:
        raise InvalidArgument(f'expected a (T, Z, Y, X) sequence, got shape {values.shape}')
    return values


def window_count(n_steps, window=WINDOW):
    return max(n_steps - window, 0)


def make_windows(sequence, window=WINDOW):
    """
    Every (window -> next frame) pair of a sequence: T - window of them.
    """

    frames = _frames(sequence)
    if frames.shape[0] < window + 1:
        raise InvalidArgument(f'a sequence of {frames.shape[0]} frames is too short for {window}-frame windows')

    return [
        SlidingWindow(inputs=frames[k:k + window], target=frames[k + window:k + window + 1], start_index=k)
        for k in range(window_count(frames.shape[0], window))
    ]


class WindowDataset(Dataset):
    """
    5 -> 1 windows over a collection of linear-concentration sequences, normalized
    lazily per item. Items are (inputs (5, Z, Y, X), target (1, Z, Y, X)) float32 tensors.
    """

    def __init__(self, sequences, spec, window=WINDOW):
        self.sequences = [_frames(sequence) for sequence in sequences]
        self.spec = spec
        self.window = window
        self.index = [
            (run, start)
            for run, frames in enumerate(self.sequences)
            for start in range(window_count(frames.shape[0], window))
        ]
        if not self.index:
            raise InvalidArgument(f'no sequence is long enough for {window}-frame windows')

    def __len__(self):
        return len(self.index)

    def __getitem__(self, item):
        run, start = self.index[item]
        frames = log_normalize(self.sequences[run][start:start + self.window + 1], self.spec)
        frames = torch.from_numpy(frames.astype(np.float32))
        return frames[:self.window], frames[self.window:]


class SuperResolutionDataset(Dataset):
    """
    High-resolution frames paired with their average-pooled low-resolution inputs, both
    in normalized space. Items are (lr (Z, Y, X), hr (4Z, 4Y, 4X)) float32 tensors.
    """

    def __init__(self, sequences, spec, factor=4):
        self.sequences = [_frames(sequence) for sequence in sequences]
        self.spec = spec
        self.factor = factor
        self.index = [(run, step) for run, frames in enumerate(self.sequences) for step in range(frames.shape[0])]
        if not self.index:
            raise InvalidArgument('no frames to build super-resolution pairs from')

    def __len__(self):
        return len(self.index)

    def __getitem__(self, item):
        run, step = self.index[item]
        hr = log_normalize(self.sequences[run][step], self.spec).astype(np.float32)
        lr = average_pool_downsample(hr, self.factor).astype(np.float32)
        return torch.from_numpy(lr), torch.from_numpy(hr)
