"""
Classification network: stem, stacked IMG blocks, per-frame classifier
and temporal consensus.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from apps.tensor import ops
from apps.tensor.params import BatchNormParams, ConvParams, LinearParams, ParamBundle
from apps.tensor.tensor import Tensor

from .blocks import ImgBlockParams, conv_bn, img_block_forward
from .metrics import softmax

logger = logging.getLogger('motionbench')

# Spatial translations used for multi-view evaluation, in view order.
VIEW_OFFSETS = ((0, 0), (0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (-1, -1), (1, -1), (-1, 1))


@dataclass
class NetworkParams(ParamBundle):
    stem: ConvParams
    stem_norm: BatchNormParams
    classifier: LinearParams
    blocks: list = field(default_factory=list)

    def norms(self):
        return [self.stem_norm] + [norm for block in self.blocks for norm in block.norms()]


def init_network(config, dtype=np.float32, seed=None):
    """Fresh parameters for a topology, seeded by config.seed unless overridden"""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    params = NetworkParams(
        stem=ConvParams.create(config.in_channels, config.stem_width, 3, rng, dtype=dtype, name='stem'),
        stem_norm=BatchNormParams.create(config.stem_width, dtype, name='stem_norm'),
        classifier=None,
    )
    width = config.stem_width
    for index, out_width in enumerate(config.blocks):
        params.blocks.append(ImgBlockParams.create(width, out_width, config, rng, dtype, name=f"blocks.{index}"))
        width = out_width
    params.classifier = LinearParams.create(width, config.num_classes, rng, dtype, name='classifier')
    apply_norm_mode(params, config.norm_mode)
    return params


def apply_norm_mode(params, mode):
    """Freeze batch norms: all of them, or all but the stem's"""
    if mode == 'train':
        return params
    norms = params.norms()
    if mode == 'frozen-except-first':
        norms = norms[1:]
    for norm in norms:
        norm.freeze()
    return params


def count_parameters(params, trainable_only=False):
    return params.count(trainable_only=trainable_only)


def network_forward(clip, config, params, training=False, dropout_rng=None, trace=None):
    """
    Class scores [N, M] for clips [N, T, C_in, H, W]. Dropout applies only
    when training with an rng; ``trace`` collects one attention array per
    block when given a list.
    """
    x = clip if isinstance(clip, Tensor) else Tensor(clip, dtype=params.stem.weight.dtype)
    h = ops.relu(conv_bn(x, params.stem, params.stem_norm, training))
    for block in params.blocks:
        h = img_block_forward(h, block, config, training=training, trace=trace)
    n, t, c = h.shape[:3]
    features = ops.reshape(ops.spatial_global_avg_pool(h), (n, t, c))
    if training:
        features = ops.dropout(features, config.dropout, dropout_rng)
    logits = ops.linear(features, params.classifier.weight, params.classifier.bias)
    if config.consensus == 'max':
        return ops.max_over(logits, axis=1)
    return ops.mean(logits, axis=1)


def translate(clips, dy, dx):
    """Shift clips spatially by (dy, dx) pixels, zero-filling vacated pixels"""
    out = np.zeros_like(clips)
    h, w = clips.shape[-2:]
    src_y = slice(max(-dy, 0), h - max(dy, 0))
    dst_y = slice(max(dy, 0), h - max(-dy, 0))
    src_x = slice(max(-dx, 0), w - max(dx, 0))
    dst_x = slice(max(dx, 0), w - max(-dx, 0))
    out[..., dst_y, dst_x] = clips[..., src_y, src_x]
    return out


def evaluate_clips(clips, config, params, views=1, batch_size=32, workers=None):
    """
    Eval-mode scores for a stack of clips, averaging softmax probabilities
    over ``views`` spatial translations. Batches may run on several threads;
    results are concatenated in batch order.
    """
    if not 1 <= views <= len(VIEW_OFFSETS):
        raise ValueError(f"views must be between 1 and {len(VIEW_OFFSETS)}, got {views}")
    workers = workers or settings.MOTIONBENCH_WORKERS
    clips = np.asarray(clips, dtype=params.stem.weight.dtype)
    starts = range(0, len(clips), batch_size)

    def score(start):
        batch = clips[start:start + batch_size]
        total = 0
        for dy, dx in VIEW_OFFSETS[:views]:
            view = batch if (dy, dx) == (0, 0) else translate(batch, dy, dx)
            total = total + softmax(network_forward(view, config, params, training=False).data)
        return total / views

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(score, starts))
    else:
        parts = [score(start) for start in starts]
    if not parts:
        return np.zeros((0, config.num_classes), dtype=clips.dtype)
    return np.concatenate(parts, axis=0)
