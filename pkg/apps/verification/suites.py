"""
Property suites behind ``manage.py verify``.

Every check measures one number (an error, a difference or a window size)
and compares it with a threshold; a check passes when measured <= threshold.
"""
import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from apps.clim.cascade import (
    SLICES, ClimParams, clim_forward, spatial_dependency_probe, temporal_dependency_probe, window_width,
)
from apps.cmem.attention import (
    CmemConfig, CmemParams, fuse_and_excite, motion_cosine, motion_difference, reduce_channels,
)
from apps.common.exceptions import ConfigError
from apps.network.blocks import ImgBlockParams, img_block_forward
from apps.network.config import NetworkConfig
from apps.network.metrics import cross_entropy_loss
from apps.shift.kernels import make_tsm_kernel
from apps.shift.services import adaptive_shift, tsm_shift
from apps.tensor import ops
from apps.tensor.gradcheck import check_gradients, gradient_check
from apps.tensor.params import LinearParams
from apps.tensor.tensor import Tensor

logger = logging.getLogger('motionbench')

# N, T, C, H, W used by the shift and gradient suites
SHIFT_SHAPE = (2, 8, 32, 7, 7)
GRADIENT_SHAPE = (2, 4, 32, 5, 5)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    measured: float
    threshold: float

    @property
    def passed(self):
        return bool(self.measured <= self.threshold)

    def line(self):
        status = 'PASS' if self.passed else 'FAIL'
        return f"{status} {self.suite}/{self.name}: {self.measured:.3e} (threshold {self.threshold:.3e})"


def shift_equivalence(count=100, seed=0, **_):
    """Adaptive shift with the TSM kernel against the fixed TSM shift"""
    rng = np.random.default_rng(seed)
    worst = {np.float64: 0.0, np.float32: 0.0}
    for _ in range(count):
        x = rng.standard_normal(SHIFT_SHAPE)
        for dtype in worst:
            data = x.astype(dtype)
            kernel = make_tsm_kernel(SHIFT_SHAPE[2], 'frozen', dtype=dtype)
            diff = np.abs(adaptive_shift(Tensor(data), kernel).data - tsm_shift(Tensor(data)).data).max()
            worst[dtype] = max(worst[dtype], float(diff))
    return [
        CheckResult('shift-equivalence', f"float64 max abs diff over {count} tensors", worst[np.float64], 0.0),
        CheckResult('shift-equivalence', f"float32 max abs diff over {count} tensors", worst[np.float32], 1e-6),
    ]


def _weighted(output_shape, seed):
    return np.random.default_rng(seed).standard_normal(output_shape)


def gradients(eps=None, sample=20, seed=0, **_):
    """Finite-difference checks per parameter group of CMEM, CLIM, one IMG block and the loss head"""
    motionbench = settings.MOTIONBENCH
    eps = motionbench['GRADCHECK_EPS'] if eps is None else eps
    tolerance = motionbench['GRADCHECK_TOLERANCE']
    rng = np.random.default_rng(seed)
    x = Tensor(rng.standard_normal(GRADIENT_SHAPE))
    weights = _weighted(GRADIENT_SHAPE, seed + 1)
    results = []

    def collect(component, report):
        for name, error in report.items():
            results.append(CheckResult('gradients', f"{component} {name}", error, tolerance))

    cmem_config = CmemConfig(r=16)
    cmem = CmemParams.create(GRADIENT_SHAPE[2], cmem_config, rng)
    collect('cmem', check_gradients(lambda: ops.weighted_sum(fuse_and_excite(x, cmem_config, cmem), weights),
                                    cmem, eps=eps, sample=sample, seed=seed))

    clim = ClimParams.create(GRADIENT_SHAPE[2], rng, shift_modes=('pretrained', 'random', 'conv1d'))
    collect('clim', check_gradients(lambda: ops.weighted_sum(clim_forward(x, clim), weights),
                                    clim, eps=eps, sample=sample, seed=seed))

    # The block runs on its running statistics.
    block_config = NetworkConfig(mid_width=32, r=16, shift_mode='pretrained')
    block = ImgBlockParams.create(32, 32, block_config, rng, dtype=np.float64, name='block')
    block.tail_norm.gamma.data[...] = rng.uniform(0.5, 1.5, 32)
    block_x = Tensor(rng.standard_normal(GRADIENT_SHAPE))

    def block_loss(inputs=block_x):
        return ops.weighted_sum(img_block_forward(inputs, block, block_config, training=False), weights)

    collect('block', check_gradients(block_loss, block, eps=eps, sample=sample, seed=seed))
    results.append(CheckResult('gradients', 'block input',
                               gradient_check(block_loss, block_x, eps=eps, sample=sample, seed=seed), tolerance))

    head = LinearParams.create(GRADIENT_SHAPE[2], 4, rng, name='classifier')
    features = Tensor(rng.standard_normal(GRADIENT_SHAPE[:3]))
    labels = np.array([1, 3])

    def loss():
        scores = ops.mean(ops.linear(features, head.weight, head.bias), axis=1)
        return cross_entropy_loss(scores, labels)

    collect('loss head', check_gradients(loss, head, eps=eps, sample=sample, seed=seed))
    return results


def cmem(seed=0, **_):
    """Static-video neutrality, zero-expansion identity and frame-reversal antisymmetry"""
    rng = np.random.default_rng(seed)
    n, t, c, h, w = GRADIENT_SHAPE
    config = CmemConfig(r=16)
    params = CmemParams.create(c, config, rng)

    static = Tensor(np.repeat(rng.standard_normal((n, 1, c, h, w)), t, axis=1))
    xr = reduce_channels(static, params, config)
    static_m = float(np.abs(motion_difference(xr, params).data).max())
    static_p = float(np.abs(motion_cosine(xr, params).data[:, :-1] - 1.0).max())

    x = Tensor(rng.standard_normal(GRADIENT_SHAPE))
    zeroed = dataclasses.replace(params)
    zeroed.conv_exp = dataclasses.replace(params.conv_exp, weight=Tensor(np.zeros_like(params.conv_exp.weight.data)),
                                          bias=Tensor(np.zeros_like(params.conv_exp.bias.data)))
    identity = float(np.abs(fuse_and_excite(x, config, zeroed).data - x.data).max())

    xr = reduce_channels(x, params, config)
    forward = motion_difference(xr, params).data[:, :-1]
    backward = motion_difference(Tensor(xr.data[:, ::-1].copy()), params).data[:, :-1]
    reversal = float(np.abs(backward + forward[:, ::-1]).max())
    return [
        CheckResult('cmem', 'static video max |M|', static_m, 0.0),
        CheckResult('cmem', 'static video max |P - 1| on valid slots', static_p, 0.0),
        CheckResult('cmem', 'zero expansion max |X^o - X|', identity, 0.0),
        CheckResult('cmem', 'frame reversal max |M_rev + M|', reversal, 1e-6),
    ]


def clim(seed=0, **_):
    """Slice-0 passthrough and per-slice temporal and spatial dependency windows"""
    rng = np.random.default_rng(seed)
    params = ClimParams.create(32, rng, shift_modes='frozen')
    x = rng.standard_normal(GRADIENT_SHAPE)
    width = GRADIENT_SHAPE[2] // SLICES
    passthrough = float(np.abs(clim_forward(Tensor(x), params).data[:, :, :width] - x[:, :, :width]).max())
    results = [CheckResult('clim', 'slice 0 passthrough max abs diff', passthrough, 0.0)]
    temporal = temporal_dependency_probe(params, seed=seed)
    spatial = spatial_dependency_probe(params, size=11, seed=seed)
    for index, (frames, extent) in enumerate(zip(temporal, spatial)):
        bound = 2 * index + 1
        results.append(CheckResult('clim', f"slice {index} temporal window", window_width(frames), bound))
        results.append(CheckResult('clim', f"slice {index} spatial extent", max(extent), bound))
    return results


SUITES = {
    'shift-equivalence': shift_equivalence,
    'gradients': gradients,
    'cmem': cmem,
    'clim': clim,
}


def run_suite(name, eps=None, seed=0):
    """Run one suite, or every suite for 'all'; returns CheckResults in order"""
    if name == 'all':
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise ConfigError(f"Unknown suite '{name}'; choose one of {', '.join(SUITES)}, all")
    results = []
    for suite in names:
        checks = SUITES[suite](eps=eps, seed=seed)
        failed = sum(not check.passed for check in checks)
        logger.info(f"Suite {suite}: {len(checks) - failed} passed, {failed} failed")
        results.extend(checks)
    return results
