"""
Tests for the differentiable primitives
"""
import numpy as np
import pytest

from apps.common.exceptions import ShapeError
from apps.tensor import ops
from apps.tensor.tensor import Tape, Tensor, backward

from .oracles import naive_conv2d, naive_temporal_depthwise


@pytest.mark.tensor
@pytest.mark.unit
class TestConv2d:
    """Test spatial convolution"""

    def test_identity_kernel_returns_input(self, create_video):
        x = create_video(c=4)
        weight = np.eye(4).reshape(4, 4, 1, 1)
        out = ops.conv2d(x, weight, np.zeros(4), padding=0)
        np.testing.assert_array_equal(out.data, x.data)

    def test_box_filter_on_constant_input(self):
        v = 2.5
        x = Tensor(np.full((1, 1, 1, 5, 5), v))
        out = ops.conv2d(x, np.full((1, 1, 3, 3), 1.0 / 9), padding=1)
        assert out.data[0, 0, 0, 2, 2] == pytest.approx(v)
        assert out.data[0, 0, 0, 0, 0] == pytest.approx(4 * v / 9)
        assert out.data[0, 0, 0, 4, 4] == pytest.approx(4 * v / 9)

    def test_matches_sliding_window_oracle(self, rng):
        x = rng.standard_normal((1, 1, 2, 4, 4))
        weight = rng.standard_normal((3, 2, 3, 3))
        bias = rng.standard_normal(3)
        out = ops.conv2d(Tensor(x), weight, bias, padding=1)
        np.testing.assert_allclose(out.data, naive_conv2d(x, weight, bias), rtol=1e-6, atol=1e-12)

    def test_linearity(self, rng):
        x, y = rng.standard_normal((2, 2, 1, 3, 5, 5))
        weight = rng.standard_normal((2, 3, 3, 3))
        alpha, beta = 0.7, -1.3
        combined = ops.conv2d(Tensor(alpha * x + beta * y), weight, padding=1).data
        separate = alpha * ops.conv2d(Tensor(x), weight, padding=1).data + beta * ops.conv2d(Tensor(y), weight, padding=1).data
        np.testing.assert_allclose(combined, separate, rtol=1e-5, atol=1e-10)

    def test_channel_mismatch_names_both_extents(self, create_video):
        x = create_video(c=4)
        with pytest.raises(ShapeError) as excinfo:
            ops.conv2d(x, np.zeros((2, 3, 1, 1)))
        assert excinfo.value.expected == 3
        assert excinfo.value.actual == 4


@pytest.mark.tensor
@pytest.mark.unit
class TestTemporalDepthwiseConv:
    """Test per-channel temporal convolution"""

    def test_forward_tap_reads_next_frame(self):
        x = Tensor(np.array([1.0, 2.0, 3.0]).reshape(1, 3, 1, 1, 1))
        out = ops.temporal_depthwise_conv(x, np.array([[0.0, 0.0, 1.0]]))
        np.testing.assert_array_equal(out.data.ravel(), [2.0, 3.0, 0.0])

    def test_center_tap_is_identity(self, create_video):
        x = create_video(c=8)
        kernel = np.tile([0.0, 1.0, 0.0], (8, 1))
        np.testing.assert_array_equal(ops.temporal_depthwise_conv(x, kernel).data, x.data)

    def test_matches_naive_oracle(self, rng, create_video):
        x = create_video(n=2, t=8, c=8, h=3, w=3)
        kernel = rng.standard_normal((8, 3))
        out = ops.temporal_depthwise_conv(x, kernel)
        np.testing.assert_allclose(out.data, naive_temporal_depthwise(x.data, kernel), rtol=1e-6, atol=1e-12)

    def test_kernel_channel_mismatch_rejected(self, create_video):
        with pytest.raises(ShapeError):
            ops.temporal_depthwise_conv(create_video(c=8), np.zeros((4, 3)))


@pytest.mark.tensor
@pytest.mark.unit
class TestPoolingAndSimilarity:
    """Test spatial pooling and per-channel cosine similarity"""

    def test_constant_plane_pools_to_value(self):
        x = Tensor(np.full((1, 1, 1, 3, 3), -4.0))
        assert ops.spatial_global_avg_pool(x).data.item() == -4.0

    def test_two_by_two_plane(self):
        x = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 1, 2, 2))
        assert ops.spatial_global_avg_pool(x).data.item() == 2.5

    def test_matches_direct_summation(self, rng):
        plane = rng.standard_normal((7, 7))
        total = 0.0
        for value in plane.ravel():
            total += value
        pooled = ops.spatial_global_avg_pool(Tensor(plane.reshape(1, 1, 1, 7, 7))).data.item()
        assert pooled == pytest.approx(total / 49, abs=1e-7)

    def test_self_similarity_is_one(self, rng):
        a = rng.standard_normal((2, 3, 4, 4))
        np.testing.assert_array_equal(ops.cosine_similarity_per_channel(a, a.copy()).data, 1.0)

    def test_orthogonal_planes(self):
        a = np.zeros((1, 1, 1, 3))
        b = np.zeros((1, 1, 1, 3))
        a[..., 0] = 1.0
        b[..., 1] = 1.0
        assert ops.cosine_similarity_per_channel(a, b).data.item() == 0.0

    def test_hand_evaluated_pair(self):
        a = np.array([1.0, 2.0, 2.0]).reshape(1, 1, 1, 3)
        b = np.array([2.0, 1.0, 2.0]).reshape(1, 1, 1, 3)
        assert ops.cosine_similarity_per_channel(a, b).data.item() == pytest.approx(8 / 9)

    def test_zero_plane_is_finite(self):
        a = np.zeros((1, 2, 3, 3))
        out = ops.cosine_similarity_per_channel(a, np.ones_like(a)).data
        assert np.isfinite(out).all()
        np.testing.assert_array_equal(out, 0.0)

    def test_output_within_unit_interval(self, rng):
        a = rng.standard_normal((3, 5, 4, 4))
        b = a + 1e-3 * rng.standard_normal(a.shape)
        out = ops.cosine_similarity_per_channel(a, b).data
        assert out.max() <= 1 + 1e-6
        assert out.min() >= -1 - 1e-6


@pytest.mark.tensor
@pytest.mark.unit
class TestNormalizationAndClassifier:
    """Test batch norm, dropout and the linear map"""

    def test_train_mode_normalizes_per_channel(self, create_video):
        x = create_video(n=2, t=3, c=4)
        running_mean, running_var = np.zeros(4), np.ones(4)
        out = ops.batch_norm(x, np.ones(4), np.zeros(4), running_mean, running_var, mode='train')
        np.testing.assert_allclose(out.data.mean(axis=(0, 1, 3, 4)), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.data.var(axis=(0, 1, 3, 4)), 1.0, rtol=1e-4)
        assert not np.allclose(running_mean, 0.0)

    def test_frozen_mode_leaves_statistics(self, create_video):
        x = create_video(c=4)
        running_mean, running_var = np.full(4, 0.5), np.full(4, 2.0)
        out = ops.batch_norm(x, np.ones(4), np.zeros(4), running_mean, running_var, mode='frozen', eps=0.0)
        np.testing.assert_array_equal(running_mean, 0.5)
        np.testing.assert_array_equal(running_var, 2.0)
        np.testing.assert_allclose(out.data, (x.data - 0.5) / np.sqrt(2.0))

    def test_unknown_mode_rejected(self, create_video):
        with pytest.raises(ValueError):
            ops.batch_norm(create_video(c=2), np.ones(2), np.zeros(2), np.zeros(2), np.ones(2), mode='online')

    def test_dropout_seeded_mask_is_reproducible(self, create_video):
        x = create_video()
        first = ops.dropout(x, 0.5, np.random.default_rng(3)).data
        second = ops.dropout(x, 0.5, np.random.default_rng(3)).data
        np.testing.assert_array_equal(first, second)

    def test_dropout_without_rng_is_identity(self, create_video):
        x = create_video()
        assert ops.dropout(x, 0.5, None) is x

    def test_linear_maps_last_axis(self, rng):
        x = rng.standard_normal((2, 3, 4))
        weight, bias = rng.standard_normal((5, 4)), rng.standard_normal(5)
        out = ops.linear(x, weight, bias)
        np.testing.assert_allclose(out.data, x @ weight.T + bias)


@pytest.mark.tensor
@pytest.mark.unit
class TestLayoutOps:
    """Test split, concat, permutation and padding gradients"""

    def test_split_concat_round_trip_gradient(self, create_video):
        x = create_video(c=8)
        x.requires_grad = True
        weights = np.random.default_rng(0).standard_normal(x.shape)
        order = [6, 7, 4, 5, 2, 3, 0, 1]
        with Tape():
            parts = ops.split(x, 4)
            loss = ops.weighted_sum(ops.concat(parts[::-1]), weights[:, :, order])
        grads = backward(loss)
        np.testing.assert_allclose(grads[x], weights)

    def test_split_rejects_uneven_parts(self, create_video):
        with pytest.raises(ShapeError):
            ops.split(create_video(c=6), 4)

    def test_pad_time_gradient_crops(self, create_video):
        x = create_video(t=2)
        x.requires_grad = True
        with Tape():
            loss = ops.sum_all(ops.pad_time(x, 1, 2))
        np.testing.assert_array_equal(backward(loss)[x], np.ones(x.shape))

    def test_permute_inverse(self, rng):
        x = Tensor(rng.standard_normal((2, 3, 4)), requires_grad=True)
        weights = rng.standard_normal((4, 2, 3))
        with Tape():
            loss = ops.weighted_sum(ops.permute(x, (2, 0, 1)), weights)
        np.testing.assert_allclose(backward(loss)[x], weights.transpose(1, 2, 0))
