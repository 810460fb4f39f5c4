"""
Tests for the classification network
"""
import numpy as np
import pytest

from apps.common.exceptions import ConfigError
from apps.network.config import NetworkConfig
from apps.network.model import VIEW_OFFSETS, count_parameters, evaluate_clips, network_forward, translate


def clips(n=2, t=4, seed=0):
    return np.random.default_rng(seed).standard_normal((n, t, 1, 8, 8)).astype(np.float32)


@pytest.mark.network
@pytest.mark.unit
class TestNetworkConfig:
    """Test topology validation"""

    @pytest.mark.parametrize('kwargs', [
        {'num_classes': 1},
        {'blocks': ()},
        {'mid_width': 48},
        {'consensus': 'median'},
        {'norm_mode': 'sometimes'},
        {'shift_mode': 'sideways'},
        {'slice_shift_modes': ('frozen', 'random')},
        {'dropout': 1.0},
    ])
    def test_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            NetworkConfig(**kwargs)

    def test_slice_modes_override_shift_mode(self):
        config = NetworkConfig(shift_mode='random', slice_shift_modes=('frozen', 'random', 'pretrained'))
        assert config.clim_shift_modes() == ('frozen', 'random', 'pretrained')
        assert NetworkConfig(shift_mode='random').clim_shift_modes() == ('random',) * 3


@pytest.mark.network
@pytest.mark.unit
class TestNetworkForward:
    """Test scores, consensus and evaluation"""

    def test_score_shape(self, create_network):
        config, params = create_network()
        assert network_forward(clips(), config, params).shape == (2, 4)

    def test_single_frame_clip(self, create_network):
        config, params = create_network()
        scores = network_forward(clips(t=1), config, params)
        assert scores.shape == (2, 4) and np.isfinite(scores.data).all()

    def test_zero_classifier_gives_uniform_probabilities(self, create_network):
        config, params = create_network()
        params.classifier.weight.data[...] = 0.0
        params.classifier.bias.data[...] = 0.0
        probs = evaluate_clips(clips(), config, params, views=3)
        np.testing.assert_allclose(probs, 0.25, rtol=1e-6)

    def test_identical_clips_identical_rows(self, create_network):
        config, params = create_network()
        batch = np.repeat(clips(n=1), 3, axis=0)
        scores = network_forward(batch, config, params).data
        np.testing.assert_allclose(scores[1:], np.repeat(scores[:1], 2, axis=0), rtol=1e-5, atol=1e-6)

    def test_eval_mode_ignores_dropout(self, create_network):
        config, params = create_network(dropout=0.9)
        batch = clips()
        first = network_forward(batch, config, params, training=False, dropout_rng=np.random.default_rng(1))
        second = network_forward(batch, config, params, training=False, dropout_rng=np.random.default_rng(2))
        np.testing.assert_array_equal(first.data, second.data)

    def test_max_consensus(self, create_network):
        config, params = create_network(consensus='max')
        assert network_forward(clips(), config, params).shape == (2, 4)

    def test_trace_has_one_entry_per_cmem_block(self, create_network):
        config, params = create_network(blocks=(16, 16))
        trace = []
        network_forward(clips(t=4), config, params, trace=trace)
        assert [entry.shape for entry in trace] == [(2, 4, 32), (2, 4, 32)]

    def test_batches_and_workers_do_not_change_scores(self, create_network):
        config, params = create_network()
        batch = clips(n=5)
        serial = evaluate_clips(batch, config, params, batch_size=2, workers=1)
        threaded = evaluate_clips(batch, config, params, batch_size=2, workers=3)
        np.testing.assert_array_equal(serial, threaded)
        np.testing.assert_allclose(serial.sum(axis=1), 1.0, rtol=1e-5)

    def test_too_many_views(self, create_network):
        config, params = create_network()
        with pytest.raises(ValueError):
            evaluate_clips(clips(), config, params, views=len(VIEW_OFFSETS) + 1)


@pytest.mark.network
@pytest.mark.unit
class TestNetworkParams:
    """Test initialization, norm modes and parameter counts"""

    def test_same_seed_same_parameters(self, create_network):
        _, first = create_network(seed=3)
        _, second = create_network(seed=3)
        for name, array in first.state().items():
            np.testing.assert_array_equal(array, second.state()[name])

    def test_dotted_names(self, create_network):
        _, params = create_network()
        names = set(params.named_tensors())
        assert {'stem.weight', 'classifier.weight', 'blocks.0.cmem.conv_prev.weight',
                'blocks.0.clim.shifts.0.kernels'} <= names

    def test_frozen_except_first(self, create_network):
        _, params = create_network(norm_mode='frozen-except-first')
        norms = params.norms()
        assert not norms[0].frozen
        assert all(norm.frozen for norm in norms[1:])
        assert 'stem_norm.gamma' in params.named_parameters()
        assert 'blocks.0.head_norm.gamma' not in params.named_parameters()

    def test_frozen_shifts_are_not_trainable(self, create_network):
        _, trainable = create_network(shift_mode='pretrained')
        _, frozen = create_network(shift_mode='frozen')
        assert count_parameters(trainable) == count_parameters(frozen)
        assert count_parameters(frozen, trainable_only=True) < count_parameters(trainable, trainable_only=True)


@pytest.mark.network
@pytest.mark.unit
def test_translate_moves_pixels_and_zero_fills():
    frame = np.arange(9, dtype=np.float32).reshape(1, 1, 1, 3, 3)
    moved = translate(frame, 0, 1)
    np.testing.assert_array_equal(moved[0, 0, 0], [[0, 0, 1], [0, 3, 4], [0, 6, 7]])
    np.testing.assert_array_equal(translate(frame, 0, 0), frame)
