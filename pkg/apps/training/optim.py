"""
SGD with momentum, decoupled weight decay and step learning-rate decay
"""
from dataclasses import dataclass

import numpy as np

from apps.common.exceptions import ConfigError


@dataclass(frozen=True)
class SgdConfig:
    batch_size: int = 32
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    dropout: float = 0.5
    epochs: int = 30
    decay_epochs: tuple[int, ...] = (20, 27)
    decay_factor: float = 10.0
    eval_views: int = 1
    init_checkpoint: str = ''
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"Batch size must be positive, got {self.batch_size}")
        if self.lr < 0:
            raise ConfigError(f"Learning rate must be non-negative, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"Momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"Weight decay must be non-negative, got {self.weight_decay}")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"Dropout must lie in [0, 1), got {self.dropout}")
        if self.epochs < 1:
            raise ConfigError(f"Need at least one epoch, got {self.epochs}")
        if self.decay_factor <= 1:
            raise ConfigError(f"Decay factor must exceed 1, got {self.decay_factor}")
        steps = tuple(self.decay_epochs)
        if any(later <= earlier for earlier, later in zip(steps, steps[1:])):
            raise ConfigError(f"Decay epochs must be strictly increasing, got {steps}")
        if steps and (steps[0] < 0 or steps[-1] >= self.epochs):
            raise ConfigError(f"Decay epochs must lie in [0, {self.epochs}), got {steps}")
        if self.eval_views < 1:
            raise ConfigError(f"Evaluation needs at least one view, got {self.eval_views}")


# Named recipes: optimizer settings plus model settings they imply.
RECIPES = {
    'desk': (SgdConfig(), {}),
    'full': (SgdConfig(epochs=50, decay_epochs=(30, 40, 45)), {}),
    'finetune': (
        SgdConfig(lr=0.001, weight_decay=5e-4, dropout=0.8, epochs=25, decay_epochs=(10, 20)),
        {'norm_mode': 'frozen-except-first'},
    ),
}


def recipe(name):
    if name not in RECIPES:
        raise ConfigError(f"Unknown recipe '{name}'; choose one of {', '.join(RECIPES)}")
    return RECIPES[name]


def lr_at(epoch, config):
    """initial lr / factor ** (number of decay epochs <= epoch)"""
    passed = sum(1 for step in config.decay_epochs if step <= epoch)
    return config.lr / config.decay_factor ** passed


def decayed_names(params):
    """Convolution and linear weights; norms, biases and shift kernels are exempt"""
    return {name for name in params.named_parameters() if name.endswith('.weight')}


class SgdOptimizer:
    """Momentum SGD over the trainable tensors of a parameter bundle"""

    def __init__(self, params, config, buffers=None):
        self.params = params.named_parameters()
        self.config = config
        self.decayed = decayed_names(params)
        self.buffers = {name: np.zeros_like(tensor.data) for name, tensor in self.params.items()}
        if buffers:
            self.load_buffers(buffers)

    def load_buffers(self, buffers):
        for name, buffer in buffers.items():
            if name not in self.buffers:
                raise ConfigError(f"Momentum buffer '{name}' has no matching parameter")
            self.buffers[name] = np.asarray(buffer, dtype=self.buffers[name].dtype).reshape(self.buffers[name].shape).copy()

    def step(self, grads, lr):
        """Apply one update; ``grads`` maps parameter names to gradient arrays"""
        momentum, decay = self.config.momentum, self.config.weight_decay
        for name, tensor in self.params.items():
            buffer = self.buffers[name]
            buffer *= momentum
            buffer += grads[name]
            if name in self.decayed and decay:
                tensor.data -= lr * decay * tensor.data
            tensor.data -= lr * buffer

    def state(self):
        return dict(self.buffers)
