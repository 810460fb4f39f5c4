"""
Shared test fixtures for the motionbench project
"""
import numpy as np
import pytest


@pytest.fixture
def rng():
    """Return a seeded random generator"""
    return np.random.default_rng(0)


@pytest.fixture
def create_video():
    """Create and return a random [N, T, C, H, W] tensor factory function"""
    def _create_video(n=1, t=3, c=8, h=4, w=4, seed=0, dtype=np.float64):
        from apps.tensor.tensor import Tensor

        data = np.random.default_rng(seed).standard_normal((n, t, c, h, w)).astype(dtype)
        return Tensor(data)
    return _create_video


@pytest.fixture
def create_static_video():
    """Create and return a factory for clips repeating one random frame"""
    def _create_static_video(n=1, t=4, c=8, h=4, w=4, seed=0, dtype=np.float64):
        from apps.tensor.tensor import Tensor

        frame = np.random.default_rng(seed).standard_normal((n, 1, c, h, w)).astype(dtype)
        return Tensor(np.repeat(frame, t, axis=1))
    return _create_static_video


@pytest.fixture
def create_cmem_params():
    """Create and return a CMEM parameter factory function"""
    def _create_cmem_params(channels=32, r=16, seed=0, dtype=np.float64, **kwargs):
        from apps.cmem.attention import CmemConfig, CmemParams

        config = CmemConfig(r=r, **kwargs)
        return CmemParams.create(channels, config, np.random.default_rng(seed), dtype=dtype)
    return _create_cmem_params


@pytest.fixture
def create_clim_params():
    """Create and return a CLIM parameter factory function"""
    def _create_clim_params(channels=32, shift_modes=None, seed=0, dtype=np.float64):
        from apps.clim.cascade import ClimParams

        return ClimParams.create(channels, np.random.default_rng(seed), shift_modes=shift_modes, dtype=dtype)
    return _create_clim_params


@pytest.fixture
def create_network():
    """Create and return a factory for a small (config, params) network"""
    def _create_network(dtype=np.float32, **kwargs):
        from apps.network.config import NetworkConfig
        from apps.network.model import init_network

        network_data = {
            'in_channels': 1,
            'stem_width': 8,
            'blocks': (16,),
            'mid_width': 32,
            'num_classes': 4,
            'r': 16,
            'shift_mode': 'pretrained',
        }
        network_data.update(kwargs)

        config = NetworkConfig(**network_data)
        return config, init_network(config, dtype=dtype)
    return _create_network


@pytest.fixture
def small_spec():
    """Return a tiny direction4 dataset spec"""
    from apps.videos.specs import DatasetSpec

    return DatasetSpec(task='direction4', train_per_class=4, val_per_class=2, frames=4, height=8, width=8)


@pytest.fixture
def create_archive():
    """Create and return a generated archive factory function"""
    def _create_archive(**kwargs):
        from apps.videos.generator import generate
        from apps.videos.specs import DatasetSpec

        spec_data = {
            'task': 'direction4',
            'train_per_class': 4,
            'val_per_class': 2,
            'frames': 4,
            'height': 8,
            'width': 8,
        }
        spec_data.update(kwargs)
        return generate(DatasetSpec(**spec_data))
    return _create_archive
