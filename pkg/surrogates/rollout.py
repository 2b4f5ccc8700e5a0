"""
Inference: single steps, super-resolution and autoregressive rollouts.

All arrays here are in normalized space. A rollout starts from the first five
ground-truth frames; each step drops the oldest window frame and appends the newest
one, which is the model's prediction unless that frame index is scheduled for a
ground-truth update.
"""

import logging
from dataclasses import dataclass

import numpy as np
import torch

from core.exceptions import InvalidArgument, InvalidPlan

logger = logging.getLogger(__name__)

WINDOW = 5


def _device(model):
    return next(model.parameters()).device


def _as_tensor(data, device):
    if torch.is_tensor(data):
        return data.to(device=device, dtype=torch.float32)
    return torch.as_tensor(np.asarray(data, dtype=np.float32), device=device)


@torch.no_grad()
def predict_step(model, window):
    """
    (B, 5, Z, Y, X) -> (B, 1, Z, Y, X) in eval mode. Returns the input's type.
    """

    config = model.config
    expected = (config.input_window,) + tuple(config.input_shape)
    if tuple(window.shape[1:]) != expected or len(window.shape) != 5:
        raise InvalidArgument(f'expected windows shaped (B, {", ".join(map(str, expected))}), got {tuple(window.shape)}')

    model.eval()
    output = model(_as_tensor(window, _device(model)))
    return output if torch.is_tensor(window) else output.cpu().numpy()


@torch.no_grad()
def super_resolve(model, frames, batch_size=8):
    """
    (Z, Y, X) or (B, Z, Y, X) low-resolution frames -> refined frames at 4x the grid,
    processed in batches of 'batch_size'. Returns the input's type.
    """

    shape = tuple(model.config.input_shape)
    single = len(frames.shape) == 3
    if tuple(frames.shape[-3:]) != shape or len(frames.shape) not in (3, 4):
        raise InvalidArgument(f'expected frames shaped (B, {", ".join(map(str, shape))}), got {tuple(frames.shape)}')

    model.eval()
    tensor = _as_tensor(frames, _device(model))
    if single:
        tensor = tensor.unsqueeze(0)
    output = torch.cat([model(chunk) for chunk in torch.split(tensor, batch_size)])
    if single:
        output = output.squeeze(0)
    return output if torch.is_tensor(frames) else output.cpu().numpy()


@dataclass(frozen=True)
class RolloutPlan:
    """
    total_steps model steps; step s (1-based) produces frame 4 + s. 'update_schedule'
    holds frame indices at which the ground-truth frame is appended instead of the
    prediction; 'ground_truth' is the (T, Z, Y, X) array those frames come from.
    """

    total_steps: int
    update_schedule: frozenset = frozenset()
    ground_truth: object = None
    window: int = WINDOW

    def __post_init__(self):
        object.__setattr__(self, 'update_schedule', frozenset(int(i) for i in self.update_schedule))

    @property
    def n_frames(self):
        return self.window + self.total_steps

    def validate(self):
        if self.total_steps < 1:
            raise InvalidPlan(f'a rollout needs at least one step, got {self.total_steps}')

        for index in sorted(self.update_schedule):
            if not self.window <= index < self.n_frames:
                raise InvalidPlan(
                    f'update at frame {index} lies outside the predicted frames {self.window}..{self.n_frames - 1}'
                )
            if self.ground_truth is None or index >= len(self.ground_truth):
                raise InvalidPlan(f'no ground-truth frame available for the update at frame {index}')


@dataclass(frozen=True)
class RolloutResult:
    """
    frames:            (window + steps, Z, Y, X); the first 'window' are the initial ground truth
    predictions:       (steps, Z, Y, X) raw model outputs, also at updated frames
    provenance:        per frame, True when it is ground truth
    window_indices:    (steps, window) frame indices fed to the model at each step
    window_provenance: (steps, window) ground-truth flags of those inputs
    """

    frames: np.ndarray
    predictions: np.ndarray
    provenance: np.ndarray
    window_indices: np.ndarray
    window_provenance: np.ndarray


@torch.no_grad()
def rollout(model, initial_gt, plan, on_frame=None):
    """
    Autoregressive rollout of a temporal model from five ground-truth frames.

    on_frame(index, frame), when given, is called for every frame in order as it
    enters the sequence, the initial ground truth included.
    """

    plan.validate()
    initial_gt = np.asarray(initial_gt, dtype=np.float32)
    if initial_gt.shape[0] != plan.window:
        raise InvalidPlan(f'a rollout starts from {plan.window} ground-truth frames, got {initial_gt.shape[0]}')

    frames = list(initial_gt)
    provenance = [True] * plan.window
    predictions, indices = [], []
    if on_frame is not None:
        for index, frame in enumerate(frames):
            on_frame(index, frame)

    for step in range(1, plan.total_steps + 1):
        window = np.arange(step - 1, step - 1 + plan.window)
        indices.append(window)
        inputs = np.stack([frames[i] for i in window])[None]
        prediction = predict_step(model, inputs)[0, 0]
        predictions.append(prediction)

        index = step - 1 + plan.window
        if index in plan.update_schedule:
            frames.append(np.asarray(plan.ground_truth[index], dtype=np.float32))
            provenance.append(True)
        else:
            frames.append(prediction)
            provenance.append(False)
        if on_frame is not None:
            on_frame(index, frames[-1])

    provenance = np.array(provenance)
    indices = np.array(indices)
    logger.debug('rolled out %d steps with updates at %s', plan.total_steps, sorted(plan.update_schedule))

    return RolloutResult(
        frames=np.stack(frames),
        predictions=np.stack(predictions),
        provenance=provenance,
        window_indices=indices,
        window_provenance=provenance[indices],
    )


def rollout_hr(model, initial_gt, plan):
    """
    Rollout of the high-resolution baseline; same protocol at the high-resolution grid.
    """

    if model.kind != 'hrtm':
        raise InvalidArgument(f'rollout_hr expects the high-resolution temporal model, got {model.kind}')
    return rollout(model, initial_gt, plan)


def dual_stage_rollout(tm, srm, initial_lr, plan, srm_mode='batch', batch_size=8):
    """
    Temporal rollout at low resolution followed by spatial refinement of every frame.

    srm_mode 'batch' refines all frames after the rollout; 'stepwise' refines each frame
    as soon as it enters the sequence, before the next temporal step runs. Returns
    (RolloutResult, refined (T, 4Z, 4Y, 4X)).
    """

    if srm_mode not in ('batch', 'stepwise'):
        raise InvalidArgument(f"srm_mode must be 'batch' or 'stepwise', got {srm_mode!r}")

    if srm_mode == 'batch':
        result = rollout(tm, initial_lr, plan)
        return result, super_resolve(srm, result.frames, batch_size=batch_size)

    refined = []
    result = rollout(tm, initial_lr, plan, on_frame=lambda index, frame: refined.append(super_resolve(srm, frame)))
    return result, np.stack(refined)
