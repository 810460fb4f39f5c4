"""
Channel attention driven by short-range motion.

The reduced features of every frame pair (t, t+1) go through one shared
3x3 convolution. Their difference (M) and per-channel cosine similarity
(P) fill slot t; the last slot of both stays zero. The pooled difference
and the similarity are blended, expanded back to C channels and squashed
into a gain applied as X + X * F^s.
"""
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from apps.common.exceptions import ConfigError, ShapeError
from apps.tensor import ops
from apps.tensor.params import ConvParams, ParamBundle
from apps.tensor.tensor import Tensor, as_tensor

ATTENTION_FORMS = ('shifted-sigmoid', 'sigmoid-offset')
# Other spellings accepted in run files
ATTENTION_ALIASES = {'literal-Eq8': 'sigmoid-offset'}


def canonical_attention_form(name):
    form = ATTENTION_ALIASES.get(name, name)
    if form not in ATTENTION_FORMS:
        choices = ', '.join(ATTENTION_FORMS + tuple(ATTENTION_ALIASES))
        raise ConfigError(f"Unknown attention form '{name}'; choose one of {choices}")
    return form


def _default(key):
    return field(default_factory=lambda: settings.MOTIONBENCH[key])


@dataclass(frozen=True)
class CmemConfig:
    r: int = _default('REDUCTION_RATIO')
    alpha: float = _default('ALPHA')
    beta: float = _default('BETA')
    attention_form: str = _default('ATTENTION_FORM')

    def __post_init__(self):
        if self.r < 1:
            raise ConfigError(f"Reduction ratio must be positive, got {self.r}")
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ConfigError(f"Need alpha, beta >= 0 with a positive sum, got {self.alpha}, {self.beta}")
        object.__setattr__(self, 'attention_form', canonical_attention_form(self.attention_form))

    def reduced(self, channels):
        if channels % self.r:
            raise ShapeError(f"Channels must be divisible by the reduction ratio {self.r}",
                             expected=f"multiple of {self.r}", actual=channels)
        return channels // self.r


@dataclass
class CmemParams(ParamBundle):
    conv_prev: ConvParams
    conv_trans: ConvParams
    conv_exp: ConvParams

    @classmethod
    def create(cls, channels, config, rng, dtype=np.float64, name='cmem'):
        reduced = config.reduced(channels)
        return cls(
            conv_prev=ConvParams.create(channels, reduced, 1, rng, bias=True, dtype=dtype, name=f"{name}.conv_prev"),
            conv_trans=ConvParams.create(reduced, reduced, 3, rng, bias=True, dtype=dtype, name=f"{name}.conv_trans"),
            conv_exp=ConvParams.create(reduced, channels, 1, rng, bias=True, dtype=dtype, name=f"{name}.conv_exp"),
        )

    @property
    def channels(self):
        return self.conv_prev.c_in


def _conv(x, conv):
    return ops.conv2d(x, conv.weight, conv.bias, conv.padding)


def reduce_channels(x, params, config=None):
    """X^r: 1x1 reduction of C channels to C/r"""
    x = as_tensor(x)
    if config is not None:
        config.reduced(x.shape[2])
    if x.shape[2] != params.channels:
        raise ShapeError("CMEM input channels do not match conv_prev", expected=params.channels, actual=x.shape[2])
    return _conv(x, params.conv_prev)


def _transition_features(xr, params):
    """conv_trans of frames 1..T-1 and of frames 0..T-2, as separate calls"""
    frames = xr.shape[1]
    later = _conv(ops.take(xr, 1, 1, frames), params.conv_trans)
    earlier = _conv(ops.take(xr, 1, 0, frames - 1), params.conv_trans)
    return later, earlier


def _zeros(xr, params, spatial=True):
    n, t, _, h, w = xr.shape
    shape = (n, t, params.conv_trans.c_out, h if spatial else 1, w if spatial else 1)
    return Tensor(np.zeros(shape, dtype=xr.dtype))


def motion_difference(xr, params, features=None):
    """M: slot t holds conv_trans(X^r[t+1]) - conv_trans(X^r[t]); last slot zero"""
    xr = as_tensor(xr)
    if xr.shape[1] < 2:
        return _zeros(xr, params)
    later, earlier = features or _transition_features(xr, params)
    return ops.pad_time(ops.sub(later, earlier), 0, 1)


def motion_cosine(xr, params, features=None):
    """P: per-channel cosine similarity of the same frame pairs; last slot zero"""
    xr = as_tensor(xr)
    if xr.shape[1] < 2:
        return _zeros(xr, params, spatial=False)
    later, earlier = features or _transition_features(xr, params)
    eps = settings.MOTIONBENCH['COSINE_EPS']
    return ops.pad_time(ops.cosine_similarity_per_channel(later, earlier, eps=eps), 0, 1)


def motion_attention(x, config, params):
    """F^s: per-(n, t, c) gain computed from the motion encodings"""
    xr = reduce_channels(x, params, config)
    features = _transition_features(xr, params) if xr.shape[1] > 1 else None
    pooled = ops.spatial_global_avg_pool(motion_difference(xr, params, features))
    similarity = motion_cosine(xr, params, features)
    fused = ops.add(ops.scale(pooled, config.alpha), ops.scale(similarity, config.beta))
    logits = _conv(fused, params.conv_exp)
    if config.attention_form == 'shifted-sigmoid':
        return ops.sub(ops.scale(ops.sigmoid(logits), 2.0), 1.0)
    return ops.scale(ops.sigmoid(ops.sub(logits, 1.0)), 2.0)


def fuse_and_excite(x, config, params, trace=None):
    """X^o = X + X * F^s, each gain broadcast over its H x W plane"""
    x = as_tensor(x)
    gain = motion_attention(x, config, params)
    if trace is not None:
        trace.append(gain.data[..., 0, 0].copy())
    return ops.add(x, ops.mul(x, gain))


cmem_forward = fuse_and_excite
