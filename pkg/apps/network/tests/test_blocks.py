"""
Tests for the IMG residual block
"""
import numpy as np
import pytest

from apps.common.exceptions import ShapeError
from apps.network.blocks import ImgBlockParams, img_block_forward
from apps.network.config import NetworkConfig
from apps.tensor import ops
from apps.tensor.gradcheck import check_gradients, gradient_check


def make_block(in_width=32, out_width=32, seed=0, **kwargs):
    config = NetworkConfig(mid_width=32, r=16, shift_mode='pretrained', **kwargs)
    params = ImgBlockParams.create(in_width, out_width, config, np.random.default_rng(seed), dtype=np.float64)
    return config, params


@pytest.mark.network
@pytest.mark.unit
class TestImgBlock:
    """Test block assembly and its ablation switches"""

    def test_zero_tail_scale_gives_identity(self, create_video):
        config, params = make_block()
        x = create_video(n=2, t=4, c=32, h=5, w=5)
        np.testing.assert_array_equal(img_block_forward(x, params, config).data, x.data)

    def test_projection_shortcut_on_width_change(self, create_video):
        config, params = make_block(in_width=16, out_width=32)
        assert params.shortcut is not None and params.shortcut_norm is not None
        assert img_block_forward(create_video(c=16), params, config).shape == (1, 3, 32, 4, 4)

    def test_equal_widths_use_identity_shortcut(self):
        _, params = make_block()
        assert params.shortcut is None

    def test_wrong_input_width(self, create_video):
        config, params = make_block()
        with pytest.raises(ShapeError):
            img_block_forward(create_video(c=16), params, config)

    @pytest.mark.parametrize('cmem_enabled,clim_enabled,has_mid_norm', [
        (False, False, False), (True, False, True), (False, True, True), (True, True, True),
    ])
    def test_switches(self, cmem_enabled, clim_enabled, has_mid_norm):
        _, params = make_block(cmem_enabled=cmem_enabled, clim_enabled=clim_enabled)
        assert (params.cmem is not None) == cmem_enabled
        assert (params.clim is not None) == clim_enabled
        assert (params.mid_norm is not None) == has_mid_norm

    def test_parameter_counts_grow_with_modules(self):
        counts = {
            switches: make_block(cmem_enabled=switches[0], clim_enabled=switches[1])[1].count()
            for switches in [(False, False), (True, False), (False, True), (True, True)]
        }
        assert counts[(False, False)] < counts[(True, False)] < counts[(True, True)]
        assert counts[(False, False)] < counts[(False, True)] < counts[(True, True)]

    def test_swap_order_changes_output(self, create_video, rng):
        x = create_video(n=2, t=4, c=32, h=4, w=4)
        outputs = []
        for swap in (False, True):
            config, params = make_block(swap_order=swap)
            params.tail_norm.gamma.data[...] = rng.uniform(0.5, 1.5, 32)
            outputs.append(img_block_forward(x, params, config).data)
        assert not np.allclose(outputs[0], outputs[1])

    def test_trace_collects_attention(self, create_video):
        config, params = make_block()
        trace = []
        img_block_forward(create_video(t=4, c=32), params, config, trace=trace)
        assert len(trace) == 1 and trace[0].shape == (1, 4, 32)

    def test_tail_gradients(self, create_video, rng):
        config, params = make_block()
        params.tail_norm.gamma.data[...] = rng.uniform(0.5, 1.5, 32)
        x = create_video(n=2, t=3, c=32, h=3, w=3)
        weights = rng.standard_normal(x.shape)
        tail = {
            'tail.weight': params.tail.weight,
            'tail_norm.gamma': params.tail_norm.gamma,
            'tail_norm.beta': params.tail_norm.beta,
        }
        report = check_gradients(lambda: ops.weighted_sum(img_block_forward(x, params, config), weights), tail,
                                 sample=30)
        assert max(report.values()) <= 1e-5

    def test_gradients_through_block(self, create_video, rng):
        config, params = make_block()
        params.tail_norm.gamma.data[...] = rng.uniform(0.5, 1.5, 32)
        x = create_video(n=2, t=4, c=32, h=5, w=5)
        weights = rng.standard_normal(x.shape)

        def loss(inputs=x):
            return ops.weighted_sum(img_block_forward(inputs, params, config, training=False), weights)

        report = check_gradients(loss, params, sample=20)
        assert set(report) == set(params.named_parameters())
        assert max(report.values()) <= 1e-5
        assert gradient_check(loss, x, sample=100) <= 1e-5
