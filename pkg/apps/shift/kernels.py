"""
Temporal shift kernels and their initialization structures.

Modes:
    conv1d      untied full temporal convolution [C, C, 3], random init
    random      per-channel [C, 3] kernel, zero-mean uniform init, trainable
    frozen      per-channel kernel holding the TSM table, never updated
    pretrained  per-channel kernel starting from the TSM table, trainable
    identity    per-channel (0, 1, 0) rows, never updated
"""
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from apps.common.exceptions import ConfigError, ShapeError
from apps.tensor.params import ParamBundle
from apps.tensor.tensor import Tensor

SHIFT_MODES = ('conv1d', 'random', 'frozen', 'pretrained', 'identity')
TRAINABLE_MODES = ('conv1d', 'random', 'pretrained')

SHIFT_LEFT = (0.0, 0.0, 1.0)
SHIFT_RIGHT = (1.0, 0.0, 0.0)
KEEP = (0.0, 1.0, 0.0)


def require_shiftable(channels):
    if channels % 8:
        raise ShapeError("Temporal shift needs a channel count divisible by 8", expected='multiple of 8',
                         actual=channels)


def tsm_table(channels, dtype=np.float64):
    """Rows 0..C/8 read the next frame, C/8..C/4 the previous one, the rest stay"""
    require_shiftable(channels)
    fold = channels // 8
    table = np.tile(np.array(KEEP, dtype=dtype), (channels, 1))
    table[:fold] = SHIFT_LEFT
    table[fold:2 * fold] = SHIFT_RIGHT
    return table


@dataclass
class ShiftKernel(ParamBundle):
    """Temporal kernel of one shift layer"""

    kernels: Tensor
    mode: str = 'pretrained'

    def __post_init__(self):
        if self.mode not in SHIFT_MODES:
            raise ConfigError(f"Unknown shift mode '{self.mode}'; choose one of {', '.join(SHIFT_MODES)}")
        self.kernels.requires_grad = self.trainable

    @property
    def trainable(self):
        return self.mode in TRAINABLE_MODES

    @property
    def channels(self):
        return self.kernels.shape[0]

    @property
    def depthwise(self):
        return self.mode != 'conv1d'


def make_tsm_kernel(channels, mode='pretrained', dtype=np.float64):
    """Per-channel kernel whose convolution reproduces the TSM shift"""
    if mode not in ('frozen', 'pretrained'):
        raise ConfigError(f"The TSM table initializes 'frozen' or 'pretrained' kernels, not '{mode}'")
    return ShiftKernel(Tensor(tsm_table(channels, dtype), name='shift.kernels'), mode=mode)


def make_shift_kernel(channels, mode, rng=None, dtype=np.float64, scale=None):
    """Build a kernel for any mode; random modes draw from ``rng``"""
    require_shiftable(channels)
    if scale is None:
        scale = settings.MOTIONBENCH['RANDOM_SHIFT_SCALE']
    if mode in ('frozen', 'pretrained'):
        return make_tsm_kernel(channels, mode, dtype)
    if mode == 'identity':
        data = np.tile(np.array(KEEP, dtype=dtype), (channels, 1))
    elif mode == 'random':
        data = rng.uniform(-scale, scale, (channels, 3)).astype(dtype)
    elif mode == 'conv1d':
        bound = scale / np.sqrt(channels)
        data = rng.uniform(-bound, bound, (channels, channels, 3)).astype(dtype)
    else:
        raise ConfigError(f"Unknown shift mode '{mode}'; choose one of {', '.join(SHIFT_MODES)}")
    return ShiftKernel(Tensor(data, name='shift.kernels'), mode=mode)


def kernel_drift(kernel, reference):
    """Largest absolute change of a kernel from a reference value"""
    current = kernel.kernels.data if isinstance(kernel, ShiftKernel) else np.asarray(kernel)
    reference = reference.kernels.data if isinstance(reference, ShiftKernel) else np.asarray(reference)
    return float(np.abs(current - reference).max())
