import numpy as np

from apps.common.exceptions import ShapeError
from apps.tensor import ops
from apps.tensor.tensor import as_tensor, record

from .kernels import require_shiftable


def tsm_shift(x):
    """
    Fixed TSM shift: the first C/8 channels take the next frame, the next
    C/8 take the previous frame, the rest are unchanged. Vacated frames
    are zero.
    """
    x = as_tensor(x)
    if x.ndim != 5:
        raise ShapeError("tsm_shift expects a [N,T,C,H,W] tensor", expected=5, actual=x.ndim)
    require_shiftable(x.shape[2])
    fold = x.shape[2] // 8
    out = np.zeros_like(x.data)
    out[:, :-1, :fold] = x.data[:, 1:, :fold]
    out[:, 1:, fold:2 * fold] = x.data[:, :-1, fold:2 * fold]
    out[:, :, 2 * fold:] = x.data[:, :, 2 * fold:]

    def rule(grad):
        d_x = np.zeros_like(grad)
        d_x[:, 1:, :fold] = grad[:, :-1, :fold]
        d_x[:, :-1, fold:2 * fold] = grad[:, 1:, fold:2 * fold]
        d_x[:, :, 2 * fold:] = grad[:, :, 2 * fold:]
        return (d_x,)

    return record(out, (x,), rule)


def adaptive_shift(x, kernel):
    """Learnable shift as a temporal convolution with the layer's kernel"""
    x = as_tensor(x)
    if x.ndim != 5:
        raise ShapeError("adaptive_shift expects a [N,T,C,H,W] tensor", expected=5, actual=x.ndim)
    if kernel.channels != x.shape[2]:
        raise ShapeError("Shift kernel channels do not match the input", expected=kernel.channels,
                         actual=x.shape[2])
    if kernel.depthwise:
        return ops.temporal_depthwise_conv(x, kernel.kernels)
    return ops.temporal_conv1d(x, kernel.kernels)
