"""
Dense tensors with reverse-mode differentiation.

A ``Tape`` records every operation executed inside its ``with`` block whose
inputs need gradients. ``backward`` replays the records in reverse and
accumulates one gradient per reachable tensor. Outside a tape, operations
only compute values.
"""
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from apps.common.exceptions import ShapeError, TapeError

_active_tape = ContextVar('motionbench_tape', default=None)


class Tensor:
    """Array value with an optional gradient slot"""

    def __init__(self, data, requires_grad=False, name='', dtype=None):
        self.data = np.asarray(data, dtype=dtype)
        if not np.issubdtype(self.data.dtype, np.floating):
            self.data = self.data.astype(np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.grad = None
        self._tape = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        if self.data.size != 1:
            raise ShapeError("item() needs a single-element tensor", expected=1, actual=self.data.size)
        return self.data.reshape(()).item()

    def detach(self):
        return Tensor(self.data.copy(), name=self.name)

    def backward(self):
        return backward(self)

    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ''
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}, requires_grad={self.requires_grad})"


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass
class Node:
    output: Tensor
    inputs: Sequence[Tensor]
    rule: Callable


@dataclass
class Tape:
    """Ordered record of differentiable operations"""

    nodes: list = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    consumed: bool = False

    def __post_init__(self):
        self._tokens = []

    def __enter__(self):
        self._tokens.append(_active_tape.set(self))
        return self

    def __exit__(self, *exc_info):
        _active_tape.reset(self._tokens.pop())
        return False

    def watch(self, *tensors):
        """Register trainable tensors so they always receive a gradient entry"""
        for tensor in tensors:
            tensor.requires_grad = True
            self.parameters[id(tensor)] = tensor
        return self

    def record(self, output, inputs, rule):
        output.requires_grad = True
        output._tape = self
        self.nodes.append(Node(output, tuple(inputs), rule))
        for tensor in inputs:
            if tensor.requires_grad and tensor._tape is None:
                self.parameters.setdefault(id(tensor), tensor)
        return output


def current_tape():
    return _active_tape.get()


def record(data, inputs, rule, name=''):
    """
    Wrap an operation result, recording it when a tape is active and any
    input needs a gradient. ``rule`` maps the output gradient to one
    gradient (or None) per input.
    """
    out = Tensor(data, name=name)
    tape = _active_tape.get()
    if tape is not None and any(tensor.requires_grad for tensor in inputs):
        tape.record(out, inputs, rule)
    return out


def backward(loss, tape=None):
    """
    Replay the tape in reverse from a scalar loss.

    Returns a map from every leaf tensor needing a gradient to its gradient
    array; ``grad`` is also set on every reached tensor. A tape can be
    replayed once; a second call raises ``TapeError``.
    """
    tape = tape or loss._tape
    if tape is None:
        raise TapeError("Loss was not produced under an active tape")
    if loss.data.size != 1:
        raise ShapeError("backward() needs a scalar loss", expected=1, actual=loss.data.size)
    if tape.consumed:
        raise TapeError("Tape was already replayed; record a new forward pass")
    tape.consumed = True

    grads = {id(loss): np.ones_like(loss.data)}
    reached = {id(loss): loss}
    for node in reversed(tape.nodes):
        upstream = grads.get(id(node.output))
        if upstream is None:
            continue
        for tensor, grad in zip(node.inputs, node.rule(upstream)):
            if grad is None or not tensor.requires_grad:
                continue
            if grad.shape != tensor.shape:
                raise ShapeError(f"Gradient shape mismatch for {tensor!r}", expected=tensor.shape, actual=grad.shape)
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = np.array(grad, dtype=tensor.dtype, copy=True)
                reached[key] = tensor

    for key, tensor in reached.items():
        tensor.grad = grads[key]

    leaves = {}
    for key, tensor in tape.parameters.items():
        if key not in grads:
            tensor.grad = np.zeros_like(tensor.data)
        leaves[tensor] = tensor.grad
    return leaves
