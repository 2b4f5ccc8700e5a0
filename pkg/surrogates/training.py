"""
One trainer for all three networks: MSE loss, Adam, plateau scheduler, gradient clipping,
best/last checkpoints and a per-epoch history CSV.

Every epoch reseeds torch from (seed, epoch), so a resumed run replays exactly the
shuffles and dropout masks of an uninterrupted one.
"""

import copy
import logging
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import pandas as pd
import torch
import torch.nn.functional as F
from torch.optim.lr_scheduler import ReduceLROnPlateau
from torch.utils.data import DataLoader

from core.exceptions import ArtifactMissing, InvalidArgument, TrainingDiverged
from corpus.normalization import NormalizationSpec
from corpus.transforms import trilinear_upsample

from .config import MODEL_CONFIGS, TrainingConfig
from .networks import BUILDERS

logger = logging.getLogger(__name__)

BEST = 'best.pt'
LAST = 'last.pt'
HISTORY = 'history.csv'


@dataclass
class ModelCheckpoint:
    """
    A self-describing training snapshot: rebuilding the network needs only 'kind' and 'config'.
    """

    kind: str
    config: dict
    parameters: dict
    normalization: dict
    trainer_state: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    best_val_loss: float = math.inf
    epoch: int = 0
    provenance: dict = field(default_factory=dict)

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, temporary = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
        os.close(fd)
        try:
            torch.save(asdict(self), temporary)
            os.replace(temporary, path)
        except BaseException:
            if os.path.exists(temporary):
                os.remove(temporary)
            raise
        logger.debug('saved %s checkpoint to %s (epoch %d)', self.kind, path, self.epoch)

    @classmethod
    def load(cls, path, device='cpu'):
        path = Path(path)
        if not path.exists():
            raise ArtifactMissing(f'checkpoint {path} does not exist; run the train command first')

        return cls(**torch.load(path, map_location=device, weights_only=False))

    def model_config(self):
        return MODEL_CONFIGS[self.kind](**self.config)

    def normalization_spec(self):
        return NormalizationSpec.from_dict(self.normalization)


def build_model(kind, config):
    if kind not in BUILDERS:
        raise InvalidArgument(f'unknown model kind {kind!r}, expected one of {sorted(BUILDERS)}')
    return BUILDERS[kind](config)


def load_checkpoint(path, device='cpu'):
    """
    Rebuilds the network stored in a checkpoint and returns (model in eval mode, checkpoint).
    """

    checkpoint = ModelCheckpoint.load(path, device)
    model = build_model(checkpoint.kind, checkpoint.model_config())
    model.load_state_dict(checkpoint.parameters)
    model.to(device).eval()
    return model, checkpoint


def _epoch_seed(seed, epoch):
    return seed * 100_003 + epoch


class Trainer:
    """
    Trains 'model' on (inputs, target) datasets and keeps the best validation weights.

    The validation loss is the squared error summed over every validation voxel divided
    by the voxel count, computed in eval mode.
    """

    def __init__(self, model, kind, train_dataset, val_dataset, config, normalization,
                 output_dir=None, provenance=None):
        if len(train_dataset) == 0 or len(val_dataset) == 0:
            raise InvalidArgument('training and validation splits must be non-empty')

        self.model = model.to(config.device)
        self.kind = kind
        self.train_dataset = train_dataset
        self.val_dataset = val_dataset
        self.config = config
        self.normalization = normalization
        self.output_dir = Path(output_dir) if output_dir else None
        self.provenance = provenance or {}

        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=config.learning_rate)
        self.scheduler = ReduceLROnPlateau(
            self.optimizer, mode='min', factor=config.plateau_factor, patience=config.plateau_patience
        )
        self.history = []
        self.best_val_loss = math.inf
        self.best_parameters = None
        self.best_epoch = 0
        self.start_epoch = 0

    def _loader(self, dataset, shuffle, generator=None):
        return DataLoader(dataset, batch_size=self.config.batch_size, shuffle=shuffle, generator=generator)

    def train_epoch(self, epoch):
        seed = _epoch_seed(self.config.seed, epoch)
        torch.manual_seed(seed)
        generator = torch.Generator().manual_seed(seed)

        self.model.train()
        total, count = 0.0, 0
        for batch, (inputs, targets) in enumerate(self._loader(self.train_dataset, True, generator)):
            inputs = inputs.to(self.config.device)
            targets = targets.to(self.config.device)

            self.optimizer.zero_grad()
            loss = F.mse_loss(self.model(inputs), targets)
            if not torch.isfinite(loss):
                raise TrainingDiverged(
                    f'{self.kind} loss became {loss.item()} at epoch {epoch}, batch {batch}', epoch=epoch, batch=batch
                )
            loss.backward()
            torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.config.grad_clip)
            self.optimizer.step()

            total += loss.item() * inputs.shape[0]
            count += inputs.shape[0]

        return total / count

    def extra_terms(self, inputs, outputs, targets):
        """
        Additional validation sums as {name: (sum of squared errors, element count)}.
        """

        return {}

    @torch.no_grad()
    def evaluate(self, dataset=None):
        """
        Returns (validation loss, {extra metric: value}).
        """

        self.model.eval()
        squared, count = 0.0, 0
        extras = {}
        for inputs, targets in self._loader(self.val_dataset if dataset is None else dataset, False):
            inputs = inputs.to(self.config.device)
            targets = targets.to(self.config.device)
            outputs = self.model(inputs)
            squared += ((outputs - targets) ** 2).sum().item()
            count += targets.numel()
            for name, (term, n) in self.extra_terms(inputs, outputs, targets).items():
                total, seen = extras.get(name, (0.0, 0))
                extras[name] = (total + term, seen + n)

        return squared / count, {name: total / n for name, (total, n) in extras.items()}

    def checkpoint(self, epoch, parameters=None):
        return ModelCheckpoint(
            kind=self.kind,
            config=self.model.config.to_dict(),
            parameters=parameters if parameters is not None else self.model.state_dict(),
            normalization=self.normalization.to_dict(),
            trainer_state={
                'optimizer': self.optimizer.state_dict(),
                'scheduler': self.scheduler.state_dict(),
                'training_config': self.config.to_dict(),
                'best_parameters': self.best_parameters,
                'best_epoch': self.best_epoch,
            },
            history=list(self.history),
            best_val_loss=self.best_val_loss,
            epoch=epoch,
            provenance=self.provenance,
        )

    def resume(self, path):
        """
        Continues from the trainer_state of a 'last' checkpoint.
        """

        checkpoint = ModelCheckpoint.load(path, self.config.device)
        if checkpoint.kind != self.kind:
            raise InvalidArgument(f'cannot resume {self.kind} training from a {checkpoint.kind} checkpoint')

        self.model.load_state_dict(checkpoint.parameters)
        self.optimizer.load_state_dict(checkpoint.trainer_state['optimizer'])
        self.scheduler.load_state_dict(checkpoint.trainer_state['scheduler'])
        self.best_parameters = checkpoint.trainer_state.get('best_parameters')
        self.best_epoch = checkpoint.trainer_state.get('best_epoch', 0)
        self.history = list(checkpoint.history)
        self.best_val_loss = checkpoint.best_val_loss
        self.start_epoch = checkpoint.epoch
        logger.info('resuming %s training after epoch %d', self.kind, self.start_epoch)

    def fit(self):
        """
        Trains up to config.epochs and returns the best-validation ModelCheckpoint,
        whose epoch is the one that reached the best loss.
        """

        for epoch in range(self.start_epoch + 1, self.config.epochs + 1):
            train_loss = self.train_epoch(epoch)
            val_loss, extras = self.evaluate()
            self.scheduler.step(val_loss)
            lr = self.optimizer.param_groups[0]['lr']

            if val_loss < self.best_val_loss:
                self.best_val_loss = val_loss
                self.best_parameters = copy.deepcopy(self.model.state_dict())
                self.best_epoch = epoch

            self.history.append(dict(epoch=epoch, train_loss=train_loss, val_loss=val_loss, lr=lr, **extras))
            logger.info(
                '%s epoch %d/%d train %.4e val %.4e lr %.2e%s',
                self.kind, epoch, self.config.epochs, train_loss, val_loss, lr,
                ''.join(f' {name} {value:.4e}' for name, value in extras.items()),
            )
            if self.output_dir:
                self.save(epoch)

        if self.best_parameters is None:
            self.best_parameters = copy.deepcopy(self.model.state_dict())
            self.best_epoch = self.config.epochs
        best = self.checkpoint(self.best_epoch, parameters=self.best_parameters)
        self.model.load_state_dict(self.best_parameters)
        return best

    def save(self, epoch):
        self.checkpoint(epoch).save(self.output_dir / LAST)
        if self.history[-1]['val_loss'] <= self.best_val_loss:
            self.checkpoint(self.best_epoch, parameters=self.best_parameters).save(self.output_dir / BEST)
        write_history(self.history, self.output_dir / HISTORY)


class SuperResolutionTrainer(Trainer):
    """
    Also tracks, on every validation pass, the downsample consistency of the refined
    frames and the trilinear-upsampling baseline.
    """

    def extra_terms(self, inputs, outputs, targets):
        factor = self.model.config.scale
        pooled = F.avg_pool3d(outputs.unsqueeze(1), factor).squeeze(1)
        baseline = trilinear_upsample(inputs, factor)
        baseline_pooled = F.avg_pool3d(baseline.unsqueeze(1), factor).squeeze(1)
        return {
            'downsample_mse': (((pooled - inputs) ** 2).sum().item(), inputs.numel()),
            'trilinear_mse': (((baseline - targets) ** 2).sum().item(), targets.numel()),
            'trilinear_downsample_mse': (((baseline_pooled - inputs) ** 2).sum().item(), inputs.numel()),
        }


def write_history(history, path):
    frame = pd.DataFrame(history)
    fd, temporary = tempfile.mkstemp(dir=Path(path).parent, suffix='.tmp')
    os.close(fd)
    frame.to_csv(temporary, index=False)
    os.replace(temporary, path)


def _train(kind, trainer_class, model, train_dataset, val_dataset, config, normalization, output_dir, resume,
           provenance):
    if normalization is None:
        raise InvalidArgument('a NormalizationSpec is required so the checkpoint can reproduce its inputs')

    config = config or TrainingConfig()
    trainer = trainer_class(model, kind, train_dataset, val_dataset, config, normalization, output_dir, provenance)
    if resume:
        if output_dir is None or not (Path(output_dir) / LAST).exists():
            raise ArtifactMissing(f'nothing to resume: no {LAST} in {output_dir}')
        trainer.resume(Path(output_dir) / LAST)
    return trainer.fit()


def train_tm(model, train_windows, val_windows, config=None, normalization=None, output_dir=None, resume=False,
             provenance=None):
    """
    Trains the low-resolution temporal model on WindowDatasets.
    """

    return _train('tm', Trainer, model, train_windows, val_windows, config, normalization, output_dir, resume,
                  provenance)


def train_hrtm(model, train_windows, val_windows, config=None, normalization=None, output_dir=None, resume=False,
               provenance=None):
    return _train('hrtm', Trainer, model, train_windows, val_windows, config, normalization, output_dir, resume,
                  provenance)


def train_srm(model, train_pairs, val_pairs, config=None, normalization=None, output_dir=None, resume=False,
              provenance=None):
    """
    Trains the refinement model on SuperResolutionDatasets built from training runs only.
    """

    return _train('srm', SuperResolutionTrainer, model, train_pairs, val_pairs, config, normalization, output_dir,
                  resume, provenance)
