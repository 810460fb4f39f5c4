"""
Central finite-difference gradient oracle.
"""
import logging

import numpy as np

from apps.common.exceptions import GradientCheckError, ShapeError

from .params import ParamBundle
from .tensor import Tape, Tensor, backward

logger = logging.getLogger('motionbench')

ERROR_FLOOR = 1e-8


def _scalar(value):
    data = value.data if isinstance(value, Tensor) else np.asarray(value)
    if data.size != 1:
        raise ShapeError("gradient checks need a scalar-valued function", expected=1, actual=data.size)
    return float(data.reshape(()))


def _coordinates(shape, sample, seed):
    size = int(np.prod(shape))
    if sample is None or sample >= size:
        flat = np.arange(size)
    else:
        flat = np.sort(np.random.default_rng(seed).choice(size, size=sample, replace=False))
    return [np.unravel_index(index, shape) for index in flat]


def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), ERROR_FLOOR)


def _probe(evaluate, tensor, analytic, eps, coordinates):
    worst = 0.0
    for index in coordinates:
        original = tensor.data[index]
        tensor.data[index] = original + eps
        plus = evaluate()
        tensor.data[index] = original - eps
        minus = evaluate()
        tensor.data[index] = original
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise GradientCheckError(f"Non-finite value while probing '{tensor.name or 'input'}'", index=index)
        numeric = (plus - minus) / (2 * eps)
        worst = max(worst, relative_error(float(analytic[index]), numeric))
    return worst


def gradient_check(f, x, eps=1e-4, sample=None, seed=0):
    """
    Max relative error between the taped gradient of f at x and central
    differences. ``sample`` limits the check to that many random coordinates.
    """
    if not isinstance(x, Tensor):
        x = Tensor(x)
    if x.dtype != np.float64:
        raise TypeError("gradient checks run in 64-bit")
    was_tracked = x.requires_grad
    x.requires_grad = True
    try:
        with Tape() as tape:
            tape.watch(x)
            out = f(x)
        if not np.isfinite(out.data).all():
            raise GradientCheckError("Non-finite function value at the check point")
        analytic = backward(out, tape)[x]
        if not np.isfinite(analytic).all():
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(analytic))[0])
            raise GradientCheckError("Non-finite analytic gradient", index=bad)
        return _probe(lambda: _scalar(f(x)), x, analytic, eps, _coordinates(x.shape, sample, seed))
    finally:
        x.requires_grad = was_tracked


def check_gradients(f, params, eps=1e-4, sample=None, seed=0):
    """
    Run the oracle once per named tensor of ``params`` (a bundle or a
    name -> Tensor map) for a zero-argument scalar function ``f``.
    Returns {name: max relative error}.
    """
    named = params.named_parameters() if isinstance(params, ParamBundle) else dict(params)
    for tensor in named.values():
        if tensor.dtype != np.float64:
            raise TypeError("gradient checks run in 64-bit")
    with Tape() as tape:
        tape.watch(*named.values())
        out = f()
    grads = backward(out, tape)

    report = {}
    for offset, (name, tensor) in enumerate(named.items()):
        coordinates = _coordinates(tensor.shape, sample, seed + offset)
        report[name] = _probe(lambda: _scalar(f()), tensor, grads[tensor], eps, coordinates)
        logger.debug(f"Gradient check {name}: max relative error {report[name]:.3e}")
    return report
