"""
Differentiable primitives over [N,T,C,H,W] video tensors.

Every operation validates its shapes, computes its value with numpy and
hands ``record`` a rule returning one gradient per input.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from apps.common.exceptions import ShapeError

from .tensor import Tensor, as_tensor, record

COSINE_EPS = 1e-8


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back to the operand's shape"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _require_video(x, op):
    if x.ndim != 5:
        raise ShapeError(f"{op} expects a [N,T,C,H,W] tensor", expected=5, actual=x.ndim)


# Elementwise

def _pair(a, b):
    """Coerce two operands, giving plain numbers the dtype of their tensor partner"""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, Tensor(np.asarray(b, dtype=a.dtype))
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return Tensor(np.asarray(a, dtype=b.dtype)), b
    return as_tensor(a), as_tensor(b)


def add(a, b):
    a, b = _pair(a, b)

    def rule(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    return record(a.data + b.data, (a, b), rule)


def sub(a, b):
    a, b = _pair(a, b)

    def rule(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)

    return record(a.data - b.data, (a, b), rule)


def mul(a, b):
    a, b = _pair(a, b)

    def rule(grad):
        return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)

    return record(a.data * b.data, (a, b), rule)


def scale(x, factor):
    x = as_tensor(x)
    factor = float(factor)

    def rule(grad):
        return (grad * factor,)

    return record(x.data * factor, (x,), rule)


def sigmoid(x):
    x = as_tensor(x)
    value = np.empty_like(x.data)
    positive = x.data >= 0
    value[positive] = 1.0 / (1.0 + np.exp(-x.data[positive]))
    exp_x = np.exp(x.data[~positive])
    value[~positive] = exp_x / (1.0 + exp_x)

    def rule(grad):
        return (grad * value * (1.0 - value),)

    return record(value, (x,), rule)


def relu(x):
    x = as_tensor(x)
    active = x.data > 0

    def rule(grad):
        return (grad * active,)

    return record(np.where(active, x.data, 0).astype(x.dtype), (x,), rule)


# Reductions

def sum_all(x):
    x = as_tensor(x)

    def rule(grad):
        return (np.broadcast_to(grad, x.shape).astype(x.dtype),)

    return record(np.asarray(x.data.sum(), dtype=x.dtype), (x,), rule)


def weighted_sum(x, weights):
    """Scalar sum of x weighted elementwise by a constant array"""
    x = as_tensor(x)
    weights = np.asarray(weights, dtype=x.dtype)
    if weights.shape != x.shape:
        raise ShapeError("weighted_sum weights must match the tensor", expected=x.shape, actual=weights.shape)

    def rule(grad):
        return (grad * weights,)

    return record(np.asarray((x.data * weights).sum(), dtype=x.dtype), (x,), rule)


def mean(x, axis):
    x = as_tensor(x)
    count = x.shape[axis]

    def rule(grad):
        return (np.broadcast_to(np.expand_dims(grad, axis) / count, x.shape).copy(),)

    return record(x.data.mean(axis=axis), (x,), rule)


def max_over(x, axis):
    """Maximum along an axis; the gradient flows to the first maximal entry"""
    x = as_tensor(x)
    index = np.expand_dims(x.data.argmax(axis=axis), axis)

    def rule(grad):
        dx = np.zeros_like(x.data)
        np.put_along_axis(dx, index, np.expand_dims(grad, axis), axis=axis)
        return (dx,)

    return record(np.take_along_axis(x.data, index, axis=axis).squeeze(axis), (x,), rule)


def spatial_global_avg_pool(x):
    """Mean over each H×W plane, keeping singleton spatial axes"""
    x = as_tensor(x)
    if x.ndim < 2 or x.shape[-1] < 1 or x.shape[-2] < 1:
        raise ShapeError("spatial pooling needs H, W >= 1", actual=x.shape)
    plane = x.shape[-2] * x.shape[-1]

    def rule(grad):
        return (np.broadcast_to(grad / plane, x.shape).copy(),)

    return record(x.data.mean(axis=(-2, -1), keepdims=True), (x,), rule)


# Layout

def reshape(x, shape):
    x = as_tensor(x)

    def rule(grad):
        return (grad.reshape(x.shape),)

    return record(x.data.reshape(shape), (x,), rule)


def permute(x, axes):
    x = as_tensor(x)
    inverse = np.argsort(axes)

    def rule(grad):
        return (grad.transpose(inverse),)

    return record(x.data.transpose(axes), (x,), rule)


def take(x, axis, start, stop):
    """Contiguous slice along one axis"""
    x = as_tensor(x)
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def rule(grad):
        dx = np.zeros_like(x.data)
        dx[index] = grad
        return (dx,)

    return record(x.data[index].copy(), (x,), rule)


def split(x, parts, axis=2):
    """Split into equal parts along an axis (channels by default)"""
    x = as_tensor(x)
    extent = x.shape[axis]
    if extent % parts:
        raise ShapeError(f"Cannot split axis of extent {extent} into {parts} equal parts")
    width = extent // parts
    return [take(x, axis, i * width, (i + 1) * width) for i in range(parts)]


def concat(tensors, axis=2):
    tensors = [as_tensor(t) for t in tensors]
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def rule(grad):
        grads = []
        for start, stop in zip(bounds[:-1], bounds[1:]):
            index = [slice(None)] * grad.ndim
            index[axis] = slice(start, stop)
            grads.append(grad[tuple(index)].copy())
        return grads

    return record(np.concatenate([t.data for t in tensors], axis=axis), tensors, rule)


def pad_time(x, before, after):
    """Zero frames added at either end of the time axis"""
    x = as_tensor(x)
    _require_video(x, 'pad_time')
    width = ((0, 0), (before, after), (0, 0), (0, 0), (0, 0))
    frames = x.shape[1]

    def rule(grad):
        return (grad[:, before:before + frames].copy(),)

    return record(np.pad(x.data, width), (x,), rule)


# Convolutions

def conv2d(x, weight, bias=None, padding=0):
    """
    Spatial convolution applied independently to every (n, t) frame.
    weight is [C_out, C_in, k_h, k_w]; padding keeps H and W when it
    equals k // 2.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    _require_video(x, 'conv2d')
    n, t, c_in, h, w = x.shape
    c_out, w_in, k_h, k_w = weight.shape
    if w_in != c_in:
        raise ShapeError("conv2d input channels do not match the weights' C_in", expected=w_in, actual=c_in)
    if k_h != 2 * padding + 1 or k_w != 2 * padding + 1:
        raise ShapeError(f"conv2d padding {padding} does not preserve extents for a {k_h}x{k_w} kernel")

    frames = x.data.reshape(n * t, c_in, h, w)
    padded = np.pad(frames, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(padded, (k_h, k_w), axis=(2, 3))
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out).reshape(n, t, c_out, h, w)

    def rule(grad):
        g = grad.reshape(n * t, c_out, h, w)
        d_weight = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        d_padded = np.zeros_like(padded)
        for i in range(k_h):
            for j in range(k_w):
                contribution = np.tensordot(g, weight.data[:, :, i, j], axes=([1], [0]))
                d_padded[:, :, i:i + h, j:j + w] += contribution.transpose(0, 3, 1, 2)
        d_x = d_padded[:, :, padding:padding + h, padding:padding + w].reshape(x.shape)
        grads = [np.ascontiguousarray(d_x), d_weight]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return record(out, inputs, rule)


def temporal_depthwise_conv(x, kernel):
    """
    Per-channel length-3 temporal convolution with zero padding of one
    frame at both ends: out[:, t] = k[:, 0] x[:, t-1] + k[:, 1] x[:, t] + k[:, 2] x[:, t+1].
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    _require_video(x, 'temporal_depthwise_conv')
    frames, channels = x.shape[1], x.shape[2]
    if kernel.shape != (channels, 3):
        raise ShapeError("temporal kernel must hold one length-3 row per channel",
                         expected=(channels, 3), actual=kernel.shape)

    padded = np.pad(x.data, ((0, 0), (1, 1), (0, 0), (0, 0), (0, 0)))
    taps = [kernel.data[:, j][None, None, :, None, None] for j in range(3)]
    out = taps[0] * padded[:, 0:frames]
    out = out + taps[1] * padded[:, 1:frames + 1]
    out = out + taps[2] * padded[:, 2:frames + 2]

    def rule(grad):
        d_padded = np.zeros_like(padded)
        d_kernel = np.empty_like(kernel.data)
        for j in range(3):
            d_padded[:, j:j + frames] += taps[j] * grad
            d_kernel[:, j] = (grad * padded[:, j:j + frames]).sum(axis=(0, 1, 3, 4))
        return d_padded[:, 1:frames + 1].copy(), d_kernel

    return record(out, (x, kernel), rule)


def temporal_conv1d(x, weight, bias=None):
    """Full temporal convolution mixing channels, weight [C_out, C_in, 3], zero padding 1"""
    x, weight = as_tensor(x), as_tensor(weight)
    _require_video(x, 'temporal_conv1d')
    frames, channels = x.shape[1], x.shape[2]
    if weight.ndim != 3 or weight.shape[1] != channels or weight.shape[2] != 3:
        raise ShapeError("temporal_conv1d weight must be [C_out, C_in, 3]",
                         expected=(weight.shape[0], channels, 3), actual=weight.shape)

    padded = np.pad(x.data, ((0, 0), (1, 1), (0, 0), (0, 0), (0, 0)))
    out = 0
    for j in range(3):
        out = out + np.einsum('ntchw,oc->ntohw', padded[:, j:j + frames], weight.data[:, :, j])
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data[None, None, :, None, None]

    def rule(grad):
        d_padded = np.zeros_like(padded)
        d_weight = np.empty_like(weight.data)
        for j in range(3):
            d_padded[:, j:j + frames] += np.einsum('ntohw,oc->ntchw', grad, weight.data[:, :, j])
            d_weight[:, :, j] = np.einsum('ntohw,ntchw->oc', grad, padded[:, j:j + frames])
        grads = [d_padded[:, 1:frames + 1].copy(), d_weight]
        if bias is not None:
            grads.append(grad.sum(axis=(0, 1, 3, 4)))
        return grads

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return record(out, inputs, rule)


# Similarity

def cosine_similarity_per_channel(a, b, eps=COSINE_EPS):
    """
    Cosine similarity between the H×W planes of a and b, one value per
    leading index. The denominator is max(sqrt(|a|²|b|²), eps), so a zero
    plane yields 0 rather than NaN.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError("cosine similarity needs equal shapes", expected=a.shape, actual=b.shape)
    axes = (-2, -1)
    dot = (a.data * b.data).sum(axis=axes, keepdims=True)
    norm_a = (a.data * a.data).sum(axis=axes, keepdims=True)
    norm_b = (b.data * b.data).sum(axis=axes, keepdims=True)
    raw = np.sqrt(norm_a * norm_b)
    guarded = raw < eps
    den = np.where(guarded, eps, raw)
    cos = dot / den

    def rule(grad):
        safe_a = np.where(guarded, 1.0, norm_a)
        safe_b = np.where(guarded, 1.0, norm_b)
        d_a = b.data / den - np.where(guarded, 0.0, cos / safe_a) * a.data
        d_b = a.data / den - np.where(guarded, 0.0, cos / safe_b) * b.data
        return grad * d_a, grad * d_b

    return record(cos, (a, b), rule)


# Normalization, regularization, classifier

def batch_norm(x, gamma, beta, running_mean, running_var, mode='train', momentum=0.1, eps=1e-5):
    """
    Per-channel normalization over (N, T, H, W). ``train`` normalizes with
    batch statistics and updates the running buffers in place; ``eval``
    and ``frozen`` use the running statistics and leave them untouched.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    _require_video(x, 'batch_norm')
    channels = x.shape[2]
    if gamma.shape != (channels,):
        raise ShapeError("batch_norm scale does not match channels", expected=(channels,), actual=gamma.shape)
    axes = (0, 1, 3, 4)
    view = (1, 1, channels, 1, 1)
    g = gamma.data.reshape(view)

    if mode == 'train':
        count = x.data.size // channels
        mu = x.data.mean(axis=axes, keepdims=True)
        var = x.data.var(axis=axes, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + eps)
        x_hat = (x.data - mu) * inv_std
        unbiased = var.reshape(channels) * (count / max(count - 1, 1))
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu.reshape(channels)
        running_var *= 1.0 - momentum
        running_var += momentum * unbiased

        def rule(grad):
            d_hat = grad * g
            d_x = inv_std * (d_hat - d_hat.mean(axis=axes, keepdims=True)
                             - x_hat * (d_hat * x_hat).mean(axis=axes, keepdims=True))
            return d_x, (grad * x_hat).sum(axis=axes), grad.sum(axis=axes)
    elif mode in ('eval', 'frozen'):
        inv_std = 1.0 / np.sqrt(running_var.reshape(view) + eps)
        x_hat = (x.data - running_mean.reshape(view)) * inv_std

        def rule(grad):
            return grad * g * inv_std, (grad * x_hat).sum(axis=axes), grad.sum(axis=axes)
    else:
        raise ValueError(f"Unknown batch_norm mode '{mode}'")

    out = (g * x_hat + beta.data.reshape(view)).astype(x.dtype)
    return record(out, (x, gamma, beta), rule)


def dropout(x, rate, rng=None):
    """Inverted dropout; a no-op when rng is None or rate is 0"""
    x = as_tensor(x)
    if rng is None or rate <= 0:
        return x
    if rate >= 1:
        raise ValueError(f"Dropout rate must be below 1, got {rate}")
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)

    def rule(grad):
        return (grad * mask,)

    return record(x.data * mask, (x,), rule)


def linear(x, weight, bias=None):
    """Map the last axis: x[..., C] @ weight[M, C].T + bias[M]"""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.shape[-1] != weight.shape[1]:
        raise ShapeError("linear input width does not match weights", expected=weight.shape[1], actual=x.shape[-1])
    out = x.data @ weight.data.T
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data

    def rule(grad):
        lead = tuple(range(grad.ndim - 1))
        grads = [grad @ weight.data, np.tensordot(grad, x.data, axes=(lead, lead))]
        if bias is not None:
            grads.append(grad.sum(axis=lead))
        return grads

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return record(out, inputs, rule)


def log_softmax(scores):
    """Row-wise log-softmax with max subtraction"""
    scores = as_tensor(scores)
    shifted = scores.data - scores.data.max(axis=-1, keepdims=True)
    log_prob = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    prob = np.exp(log_prob)

    def rule(grad):
        return (grad - prob * grad.sum(axis=-1, keepdims=True),)

    return record(log_prob, (scores,), rule)


def as_video(value, dtype=None):
    """Coerce an array to a constant [N,T,C,H,W] Tensor"""
    tensor = value if isinstance(value, Tensor) else Tensor(value, dtype=dtype)
    _require_video(tensor, 'as_video')
    return tensor
