"""
IMG residual block: 1x1 reduce, motion attention, long-range cascade,
1x1 expand, added to the (possibly projected) input.
"""
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from apps.clim.cascade import ClimParams, clim_forward
from apps.cmem.attention import CmemParams, fuse_and_excite
from apps.common.exceptions import ShapeError
from apps.tensor import ops
from apps.tensor.params import BatchNormParams, ConvParams, ParamBundle
from apps.tensor.tensor import as_tensor


@dataclass
class ImgBlockParams(ParamBundle):
    head: ConvParams
    head_norm: BatchNormParams
    tail: ConvParams
    tail_norm: BatchNormParams
    cmem: CmemParams = None
    clim: ClimParams = None
    mid_norm: BatchNormParams = None
    shortcut: ConvParams = None
    shortcut_norm: BatchNormParams = None

    @property
    def in_width(self):
        return self.head.c_in

    @property
    def out_width(self):
        return self.tail.c_out

    @property
    def mid_width(self):
        return self.head.c_out

    @classmethod
    def create(cls, in_width, out_width, config, rng, dtype=np.float32, name='block'):
        mid = config.mid_width
        cmem = CmemParams.create(mid, config.cmem_config(), rng, dtype, name=f"{name}.cmem") if config.cmem_enabled else None
        clim = ClimParams.create(mid, rng, config.clim_shift_modes(), dtype, name=f"{name}.clim") if config.clim_enabled else None
        projected = in_width != out_width
        return cls(
            head=ConvParams.create(in_width, mid, 1, rng, dtype=dtype, name=f"{name}.head"),
            head_norm=BatchNormParams.create(mid, dtype, name=f"{name}.head_norm"),
            tail=ConvParams.create(mid, out_width, 1, rng, dtype=dtype, name=f"{name}.tail"),
            tail_norm=BatchNormParams.create(out_width, dtype, gamma=0.0, name=f"{name}.tail_norm"),
            cmem=cmem,
            clim=clim,
            mid_norm=BatchNormParams.create(mid, dtype, name=f"{name}.mid_norm") if cmem or clim else None,
            shortcut=ConvParams.create(in_width, out_width, 1, rng, dtype=dtype, name=f"{name}.shortcut") if projected else None,
            shortcut_norm=BatchNormParams.create(out_width, dtype, name=f"{name}.shortcut_norm") if projected else None,
        )

    def norms(self):
        return [norm for norm in (self.head_norm, self.mid_norm, self.tail_norm, self.shortcut_norm) if norm is not None]


def norm_mode(norm, training):
    if norm.frozen:
        return 'frozen'
    return 'train' if training else 'eval'


def conv_bn(x, conv, norm, training):
    motionbench = settings.MOTIONBENCH
    y = ops.conv2d(x, conv.weight, conv.bias, conv.padding)
    return ops.batch_norm(y, norm.gamma, norm.beta, norm.running_mean, norm.running_var,
                          mode=norm_mode(norm, training), momentum=motionbench['BN_MOMENTUM'],
                          eps=motionbench['BN_EPS'])


def _norm_relu(x, norm, training):
    motionbench = settings.MOTIONBENCH
    y = ops.batch_norm(x, norm.gamma, norm.beta, norm.running_mean, norm.running_var,
                       mode=norm_mode(norm, training), momentum=motionbench['BN_MOMENTUM'],
                       eps=motionbench['BN_EPS'])
    return ops.relu(y)


def img_block_forward(x, params, config, training=True, trace=None):
    """y = shortcut(x) + BN(tail(relu(BN(CLIM(CMEM(relu(BN(head(x)))))))))"""
    x = as_tensor(x)
    if x.shape[2] != params.in_width:
        raise ShapeError("Block input width does not match its head convolution",
                         expected=params.in_width, actual=x.shape[2])
    h = ops.relu(conv_bn(x, params.head, params.head_norm, training))

    stages = []
    if params.cmem is not None:
        cmem_config = config.cmem_config()
        stages.append(lambda t: fuse_and_excite(t, cmem_config, params.cmem, trace))
    if params.clim is not None:
        stages.append(lambda t: clim_forward(t, params.clim))
    if config.swap_order:
        stages.reverse()
    for stage in stages:
        h = stage(h)
    if params.mid_norm is not None:
        h = _norm_relu(h, params.mid_norm, training)

    h = conv_bn(h, params.tail, params.tail_norm, training)
    shortcut = x if params.shortcut is None else conv_bn(x, params.shortcut, params.shortcut_norm, training)
    return ops.add(shortcut, h)
