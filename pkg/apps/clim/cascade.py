"""
Cascaded long-range integration over four channel slices.

Slice 0 passes through. Slice 1 goes through its own 3x3 convolution and
shift layer; slices 2 and 3 first add the previous slice's output, so each
later slice sees a wider temporal and spatial neighbourhood.
"""
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from apps.common.exceptions import ShapeError
from apps.shift.kernels import make_shift_kernel
from apps.shift.services import adaptive_shift
from apps.tensor import ops
from apps.tensor.params import ConvParams, ParamBundle
from apps.tensor.tensor import Tensor, as_tensor

SLICES = 4


def require_cascadable(channels):
    if channels % (SLICES * 8):
        raise ShapeError("CLIM needs channels divisible by 32 (four slices of a multiple of 8)",
                         expected='multiple of 32', actual=channels)


@dataclass
class ClimParams(ParamBundle):
    conv_spt: list = field(default_factory=list)
    shifts: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.conv_spt) != SLICES - 1 or len(self.shifts) != SLICES - 1:
            raise ShapeError("CLIM holds one convolution and one shift per processed slice",
                             expected=SLICES - 1, actual=(len(self.conv_spt), len(self.shifts)))

    @property
    def channels(self):
        return self.conv_spt[0].c_in * SLICES

    @classmethod
    def create(cls, channels, rng, shift_modes=None, dtype=np.float64, name='clim'):
        require_cascadable(channels)
        width = channels // SLICES
        if shift_modes is None or isinstance(shift_modes, str):
            shift_modes = (shift_modes or settings.MOTIONBENCH['SHIFT_MODE'],) * (SLICES - 1)
        return cls(
            conv_spt=[ConvParams.create(width, width, 3, rng, bias=True, dtype=dtype, name=f"{name}.conv_spt.{i}")
                      for i in range(SLICES - 1)],
            shifts=[make_shift_kernel(width, mode, rng, dtype=dtype) for mode in shift_modes],
        )


def _group(x, conv, shift):
    return adaptive_shift(ops.conv2d(x, conv.weight, conv.bias, conv.padding), shift)


def clim_forward(x, params):
    """[X_0, SSM(conv_1 X_1), SSM(conv_2 (X_2 + X'_1)), SSM(conv_3 (X_3 + X'_2))]"""
    x = as_tensor(x)
    require_cascadable(x.shape[2])
    if x.shape[2] != params.channels:
        raise ShapeError("CLIM input channels do not match its parameters", expected=params.channels,
                         actual=x.shape[2])
    slices = ops.split(x, SLICES, axis=2)
    outputs = [slices[0]]
    previous = None
    for index, (conv, shift) in enumerate(zip(params.conv_spt, params.shifts), start=1):
        source = slices[index] if previous is None else ops.add(slices[index], previous)
        previous = _group(source, conv, shift)
        outputs.append(previous)
    return ops.concat(outputs, axis=2)


def _probe_input(params, frames, size, seed, dtype):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((1, frames, params.channels, size, size)).astype(dtype)


def _changed(params, base, perturbed):
    before = clim_forward(Tensor(base), params).data
    after = clim_forward(Tensor(perturbed), params).data
    return np.split(before != after, SLICES, axis=2)


def temporal_dependency_probe(params, t0=None, frames=9, size=3, seed=0):
    """
    Perturb every channel of frame t0 and report, per slice, the sorted
    output frames that changed.
    """
    if t0 is None:
        t0 = frames // 2
    if not 0 <= t0 < frames:
        raise ShapeError("Probe frame out of range", expected=f"0..{frames - 1}", actual=t0)
    dtype = params.conv_spt[0].weight.dtype
    base = _probe_input(params, frames, size, seed, dtype)
    perturbed = base.copy()
    perturbed[:, t0] += 1.0
    return [tuple(int(t) for t in np.flatnonzero(mask.any(axis=(0, 2, 3, 4))))
            for mask in _changed(params, base, perturbed)]


def spatial_dependency_probe(params, h0=None, w0=None, size=9, frames=3, seed=0):
    """
    Perturb one pixel in every frame and channel and report, per slice, the
    (height, width) of the bounding box of changed output pixels.
    """
    h0 = size // 2 if h0 is None else h0
    w0 = size // 2 if w0 is None else w0
    dtype = params.conv_spt[0].weight.dtype
    base = _probe_input(params, frames, size, seed, dtype)
    perturbed = base.copy()
    perturbed[..., h0, w0] += 1.0
    extents = []
    for mask in _changed(params, base, perturbed):
        rows = np.flatnonzero(mask.any(axis=(0, 1, 2, 4)))
        cols = np.flatnonzero(mask.any(axis=(0, 1, 2, 3)))
        if rows.size == 0:
            extents.append((0, 0))
        else:
            extents.append((int(rows[-1] - rows[0] + 1), int(cols[-1] - cols[0] + 1)))
    return extents


def window_width(frames):
    return 0 if not frames else frames[-1] - frames[0] + 1
