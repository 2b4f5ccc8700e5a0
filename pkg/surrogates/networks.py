"""
The three surrogate networks.

TemporalAutoencoder serves both the low-resolution temporal model (tm) and the
high-resolution baseline (hrtm); RefinementUNet is the 4x spatial refinement model (srm).
Both check their stage shapes arithmetically at construction and log a per-stage audit.
"""

import logging

import torch
import torch.nn as nn

from core.exceptions import ConstructionFailure

from .config import REFERENCE_PARAMETERS, HRTMConfig, SRMConfig, TMConfig

logger = logging.getLogger(__name__)


def count_parameters(model):
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def _log_audit(kind, stages, model):
    for name, shape in stages:
        logger.debug('%s stage %-12s -> %s', kind, name, shape)
    logger.info(
        '%s built with %s trainable parameters (published reference %s)',
        kind, f'{count_parameters(model):,}', f'{REFERENCE_PARAMETERS[kind]:,}',
    )


class EncoderBlock(nn.Module):

    def __init__(self, in_channels, out_channels, dropout_rate):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv3d(in_channels, out_channels, kernel_size=3, padding=1),
            nn.BatchNorm3d(out_channels),
            nn.ReLU(inplace=True),
            nn.MaxPool3d(2),
            nn.Dropout3d(dropout_rate),
        )

    def forward(self, x):
        return self.block(x)


class DecoderBlock(nn.Module):

    def __init__(self, in_channels, out_channels, dropout_rate):
        super().__init__()
        self.block = nn.Sequential(
            nn.ConvTranspose3d(in_channels, out_channels, kernel_size=2, stride=2),
            nn.BatchNorm3d(out_channels),
            nn.ReLU(inplace=True),
            nn.Dropout3d(dropout_rate),
        )

    def forward(self, x):
        return self.block(x)


class ConvLSTMCell3d(nn.Module):
    """
    Convolutional LSTM cell over 3D feature maps; one convolution computes all four gates.
    """

    def __init__(self, input_channels, hidden_channels, kernel_size=3):
        super().__init__()
        self.hidden_channels = hidden_channels
        self.conv = nn.Conv3d(
            input_channels + hidden_channels,
            4 * hidden_channels,
            kernel_size=kernel_size,
            padding=kernel_size // 2,
        )

    def forward(self, x, h_cur, c_cur):
        gates = self.conv(torch.cat([x, h_cur], dim=1))
        cc_i, cc_f, cc_o, cc_g = torch.split(gates, self.hidden_channels, dim=1)
        i = torch.sigmoid(cc_i)
        f = torch.sigmoid(cc_f)
        o = torch.sigmoid(cc_o)
        g = torch.tanh(cc_g)
        c_next = f * c_cur + i * g
        h_next = o * torch.tanh(c_next)
        return h_next, c_next


class TemporalAutoencoder(nn.Module):
    """
    (B, window, Z, Y, X) -> (B, 1, Z, Y, X).

    With the 'conv' bottleneck the window is folded into the input channels. With
    'convlstm' every frame is encoded on its own and a ConvLSTM cell runs over the
    window at the bottleneck; skips then come from the newest frame.
    """

    def __init__(self, config, kind='tm'):
        super().__init__()
        self.config = config
        self.kind = kind
        self.stages = self.audit(config)

        c1, c2, c3 = config.channels
        recurrent = config.bottleneck_kind == 'convlstm'
        in_channels = 1 if recurrent else config.input_window

        self.enc1 = EncoderBlock(in_channels, c1, config.dropout_rate)
        self.enc2 = EncoderBlock(c1, c2, config.dropout_rate)
        self.enc3 = EncoderBlock(c2, c3, config.dropout_rate)
        if recurrent:
            self.bottleneck = ConvLSTMCell3d(c3, c3)
        else:
            self.bottleneck = nn.Conv3d(c3, c3, kernel_size=3, padding=1)
        self.dec1 = DecoderBlock(c3, c2, config.dropout_rate)
        self.dec2 = DecoderBlock(c2, c1, config.dropout_rate)
        self.dec3 = nn.ConvTranspose3d(c1, 1, kernel_size=2, stride=2)
        self.activation = nn.ReLU()

        _log_audit(kind, self.stages, self)

    @staticmethod
    def audit(config):
        """
        Stage output shapes for one sample; three 2x poolings need every axis divisible by 8.
        """

        window = config.input_window
        c1, c2, c3 = config.channels
        shape = tuple(config.input_shape)
        stages = [('input', (window,) + shape)]
        if len(shape) != 3 or any(n % 8 for n in shape):
            stages.append(('enc1', 'input grid not divisible by 8'))
            raise ConstructionFailure(f'input shape {shape} cannot pass three 2x poolings', stages=stages)

        down = [tuple(n // f for n in shape) for f in (2, 4, 8)]
        stages += [
            ('enc1', (c1,) + down[0]),
            ('enc2', (c2,) + down[1]),
            ('enc3', (c3,) + down[2]),
            ('bottleneck', (c3,) + down[2]),
            ('dec1', (c2,) + down[1]),
            ('dec2', (c1,) + down[0]),
            ('dec3', (1,) + shape),
        ]
        return stages

    def _encode(self, x):
        e1 = self.enc1(x)
        e2 = self.enc2(e1)
        return e1, e2, self.enc3(e2)

    def forward(self, x):
        if self.config.bottleneck_kind == 'convlstm':
            h = c = None
            for step in range(x.shape[1]):
                e1, e2, e3 = self._encode(x[:, step:step + 1])
                if h is None:
                    h = torch.zeros_like(e3)
                    c = torch.zeros_like(e3)
                h, c = self.bottleneck(e3, h, c)
            b = h
        else:
            e1, e2, e3 = self._encode(x)
            b = self.bottleneck(e3)

        d1 = self.dec1(b)
        if self.config.skip_mode == 'additive':
            d1 = d1 + e2
        d2 = self.dec2(d1)
        if self.config.skip_mode == 'additive':
            d2 = d2 + e1
        return self.activation(self.dec3(d2))


class RefinementUNet(nn.Module):
    """
    (B, Z, Y, X) -> (B, 4Z, 4Y, 4X) 3D U-Net.

    Encoder: two conv-BN-LeakyReLU blocks, each followed by max pooling over pool_dims.
    A 1x1x1 convolution lifts the first pooled features to the second width and is added
    after the first decoder stage. Decoder: four transposed convolutions (kernel 3) with
    LeakyReLU activations.
    """

    def __init__(self, config):
        super().__init__()
        self.config = config
        self.stages = self.audit(config)

        c1, c2, c3 = config.channels
        slope = config.negative_slope

        self.enc1 = nn.Sequential(nn.Conv3d(1, c1, 3, padding=1), nn.BatchNorm3d(c1), nn.LeakyReLU(slope))
        self.pool1 = nn.MaxPool3d(config.pool_dims[0])
        self.enc2 = nn.Sequential(nn.Conv3d(c1, c2, 3, padding=1), nn.BatchNorm3d(c2), nn.LeakyReLU(slope))
        self.pool2 = nn.MaxPool3d(config.pool_dims[1])
        self.adjust_channels = nn.Sequential(nn.Conv3d(c1, c2, 1), nn.BatchNorm3d(c2), nn.LeakyReLU(slope))

        widths = (c2, c2, c1, c3, 1)
        self.decoder = nn.ModuleList(
            nn.Sequential(self._up(widths[k], widths[k + 1], config.up_strides[k]), nn.LeakyReLU(slope))
            for k in range(4)
        )

        _log_audit('srm', self.stages, self)

    @staticmethod
    def _up(in_channels, out_channels, stride):
        return nn.ConvTranspose3d(
            in_channels,
            out_channels,
            kernel_size=3,
            stride=stride,
            padding=1,
            output_padding=tuple(s - 1 for s in stride),
        )

    @staticmethod
    def audit(config):
        c1, c2, c3 = config.channels
        shape = tuple(config.input_shape)
        stages = [('input', (1,) + shape)]

        def pooled(current, pool, name):
            if any(n % p for n, p in zip(current, pool)):
                stages.append((name, f'{current} not divisible by {pool}'))
                raise ConstructionFailure(f'{name} cannot pool {current} by {pool}', stages=stages)
            return tuple(n // p for n, p in zip(current, pool))

        stages.append(('enc1', (c1,) + shape))
        skip = pooled(shape, config.pool_dims[0], 'pool1')
        stages.append(('pool1', (c1,) + skip))
        stages.append(('enc2', (c2,) + skip))
        bottom = pooled(skip, config.pool_dims[1], 'pool2')
        stages.append(('pool2', (c2,) + bottom))

        current = bottom
        for k, (width, stride) in enumerate(zip((c2, c1, c3, 1), config.up_strides), start=1):
            current = tuple(n * s for n, s in zip(current, stride))
            stages.append((f'dec{k}', (width,) + current))
            if k == 1 and current != skip:
                raise ConstructionFailure(
                    f'dec1 output {current} does not match the skip path {skip}', stages=stages
                )

        if current != config.output_shape:
            raise ConstructionFailure(
                f'decoder output {current} differs from the required {config.output_shape}', stages=stages
            )
        return stages

    def forward(self, x):
        x = x.unsqueeze(1)
        e1 = self.enc1(x)
        p1 = self.pool1(e1)
        e2 = self.enc2(p1)
        p2 = self.pool2(e2)

        d = self.decoder[0](p2) + self.adjust_channels(p1)
        for stage in self.decoder[1:]:
            d = stage(d)
        return d.squeeze(1)


def build_tm(config=None):
    return TemporalAutoencoder(config or TMConfig(), kind='tm')


def build_hrtm(config=None):
    return TemporalAutoencoder(config or HRTMConfig(), kind='hrtm')


def build_srm(config=None):
    return RefinementUNet(config or SRMConfig())


BUILDERS = {'tm': build_tm, 'srm': build_srm, 'hrtm': build_hrtm}
