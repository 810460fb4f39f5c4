"""
Named bundles of learnable tensors and running buffers.

A bundle is a dataclass whose fields are Tensors (parameters), numpy
arrays (buffers), nested bundles, lists of bundles, or plain settings.
Names are dotted paths, e.g. ``blocks.0.cmem.conv_prev.weight``.
"""
import copy
import dataclasses
from dataclasses import dataclass

import numpy as np

from apps.common.exceptions import ShapeError

from .tensor import Tensor

ALLOWED_KERNELS = (1, 3)


def kaiming_normal(rng, shape, fan_in, dtype=np.float64):
    std = np.sqrt(2.0 / fan_in)
    return (rng.standard_normal(shape) * std).astype(dtype)


class ParamBundle:
    """Base for parameter dataclasses"""

    def _children(self):
        for field in dataclasses.fields(self):
            yield field.name, getattr(self, field.name)

    def _walk(self, prefix=''):
        """Yield (dotted name, owner, key, value) for every tensor and buffer"""
        for name, value in self._children():
            path = f"{prefix}{name}"
            if isinstance(value, (Tensor, np.ndarray)):
                yield path, self, name, value
            elif isinstance(value, ParamBundle):
                yield from value._walk(f"{path}.")
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, ParamBundle):
                        yield from item._walk(f"{path}.{index}.")
                    elif isinstance(item, Tensor):
                        yield f"{path}.{index}", value, index, item

    def named_tensors(self):
        return {name: value for name, _, _, value in self._walk() if isinstance(value, Tensor)}

    def named_parameters(self):
        """Trainable tensors only"""
        return {name: tensor for name, tensor in self.named_tensors().items() if tensor.requires_grad}

    def named_buffers(self):
        return {name: value for name, _, _, value in self._walk() if isinstance(value, np.ndarray)}

    def parameters(self):
        return list(self.named_parameters().values())

    def count(self, trainable_only=False):
        tensors = self.named_parameters() if trainable_only else self.named_tensors()
        return sum(tensor.size for tensor in tensors.values())

    def state(self):
        """Flat name -> array map of every tensor and buffer"""
        state = {name: tensor.data for name, tensor in self.named_tensors().items()}
        state.update(self.named_buffers())
        return state

    def load_state(self, state, strict=True):
        for name, owner, key, value in self._walk():
            if name not in state:
                if strict:
                    raise KeyError(f"Missing entry '{name}'")
                continue
            array = np.asarray(state[name])
            if array.shape != value.shape:
                raise ShapeError(f"Shape mismatch for '{name}'", expected=value.shape, actual=array.shape)
            if isinstance(value, Tensor):
                value.data = array.astype(value.dtype).copy()
            else:
                value[...] = array
        return self

    def astype(self, dtype):
        """Deep copy with every tensor and buffer cast to dtype"""
        clone = copy.deepcopy(self)
        for _, owner, key, value in list(clone._walk()):
            if isinstance(value, Tensor):
                value.data = value.data.astype(dtype)
                value.grad = None
            elif isinstance(owner, ParamBundle):
                setattr(owner, key, value.astype(dtype))
        return clone


@dataclass
class ConvParams(ParamBundle):
    """2D convolution weights [C_out, C_in, k, k] and optional bias"""

    weight: Tensor
    bias: Tensor = None
    padding: int = 0

    def __post_init__(self):
        c_out, c_in, k_h, k_w = self.weight.shape
        if k_h not in ALLOWED_KERNELS or k_w not in ALLOWED_KERNELS:
            raise ShapeError("Convolution kernels must be 1x1 or 3x3", actual=(k_h, k_w))
        if self.bias is not None and self.bias.shape != (c_out,):
            raise ShapeError("Convolution bias must have one entry per output channel",
                             expected=(c_out,), actual=self.bias.shape)

    @property
    def c_in(self):
        return self.weight.shape[1]

    @property
    def c_out(self):
        return self.weight.shape[0]

    @classmethod
    def create(cls, c_in, c_out, kernel, rng, bias=False, dtype=np.float64, name=''):
        weight = Tensor(kaiming_normal(rng, (c_out, c_in, kernel, kernel), c_in * kernel * kernel, dtype),
                        requires_grad=True, name=f"{name}.weight")
        bias_tensor = Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True, name=f"{name}.bias") if bias else None
        return cls(weight=weight, bias=bias_tensor, padding=kernel // 2)


@dataclass
class BatchNormParams(ParamBundle):
    """Scale, shift and running statistics of one batch-norm layer"""

    gamma: Tensor
    beta: Tensor
    running_mean: np.ndarray
    running_var: np.ndarray
    frozen: bool = False

    @classmethod
    def create(cls, channels, dtype=np.float64, gamma=1.0, name=''):
        return cls(
            gamma=Tensor(np.full(channels, gamma, dtype=dtype), requires_grad=True, name=f"{name}.gamma"),
            beta=Tensor(np.zeros(channels, dtype=dtype), requires_grad=True, name=f"{name}.beta"),
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype),
        )

    def freeze(self):
        self.frozen = True
        self.gamma.requires_grad = False
        self.beta.requires_grad = False
        return self


@dataclass
class LinearParams(ParamBundle):
    """Classifier weights [M, C] and bias [M]"""

    weight: Tensor
    bias: Tensor

    @classmethod
    def create(cls, c_in, c_out, rng, dtype=np.float64, name=''):
        bound = 1.0 / np.sqrt(c_in)
        return cls(
            weight=Tensor(rng.uniform(-bound, bound, (c_out, c_in)).astype(dtype), requires_grad=True,
                          name=f"{name}.weight"),
            bias=Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True, name=f"{name}.bias"),
        )
