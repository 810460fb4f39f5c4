"""
Ablation matrices: named lists of network deltas trained with shared seeds
"""
import dataclasses
import logging

import numpy as np

from apps.common.exceptions import ConfigError
from apps.network.model import count_parameters, init_network
from apps.shift.kernels import kernel_drift
from apps.videos.archive import DatasetArchive

from .services import Trainer

logger = logging.getLogger('motionbench')

REPORT_FIELDS = ('config_id', 'top1', 'top5', 'params', 'epochs')

_SHIFT_ONLY = {'cmem_enabled': False, 'clim_enabled': True, 'slice_shift_modes': ()}

MATRICES = {
    'module-combinations': (
        ('baseline', {'cmem_enabled': False, 'clim_enabled': False}),
        ('cmem', {'cmem_enabled': True, 'clim_enabled': False}),
        ('clim', {'cmem_enabled': False, 'clim_enabled': True}),
        ('cmem+clim', {'cmem_enabled': True, 'clim_enabled': True}),
    ),
    'shift-structures': tuple(
        (f"shift-{mode}", dict(_SHIFT_ONLY, shift_mode=mode))
        for mode in ('conv1d', 'random', 'frozen', 'pretrained')
    ),
    'long-range': tuple(
        (f"shift-{mode}", dict(_SHIFT_ONLY, shift_mode=mode))
        for mode in ('pretrained', 'frozen', 'identity')
    ),
    'short-range': (
        ('cmem', {'cmem_enabled': True, 'clim_enabled': True, 'shift_mode': 'identity', 'slice_shift_modes': ()}),
        ('motion-disabled', {'cmem_enabled': False, 'clim_enabled': True, 'shift_mode': 'identity',
                             'slice_shift_modes': ()}),
    ),
}


def matrix(name):
    if name not in MATRICES:
        raise ConfigError(f"Unknown ablation matrix '{name}'; choose one of {', '.join(MATRICES)}")
    return MATRICES[name]


def shift_drift(params, initial):
    """Largest change of any CLIM shift kernel since initialization; 0 without CLIM"""
    drifts = [
        kernel_drift(shift, start)
        for block, first in zip(params.blocks, initial.blocks) if block.clim is not None
        for shift, start in zip(block.clim.shifts, first.clim.shifts)
    ]
    return max(drifts, default=0.0)


def train_row(archive, run_config, config_id, deltas, seed):
    """Train one matrix row for one seed and report its final validation scores"""
    network_config = dataclasses.replace(run_config.bind(archive), seed=seed, **deltas)
    sgd_config = dataclasses.replace(run_config.trainer, seed=seed)
    state = Trainer(archive, network_config, sgd_config).run()
    final = state.metrics[-1]
    initial = init_network(network_config, seed=seed)
    row = {
        'config_id': config_id,
        'seed': seed,
        'top1': final['top1'],
        'top5': final['top5'],
        'params': count_parameters(state.params),
        'epochs': state.epoch,
        'kernel_drift': shift_drift(state.params, initial),
    }
    logger.info(f"Ablation row {config_id} (seed {seed}): top1 {row['top1']:.3f}, {row['params']} parameters")
    return row


def average_rows(rows):
    """Collapse per-seed rows of one configuration into a report row"""
    first = rows[0]
    return {
        'config_id': first['config_id'],
        'top1': float(np.mean([row['top1'] for row in rows])),
        'top5': float(np.mean([row['top5'] for row in rows])),
        'params': first['params'],
        'epochs': first['epochs'],
        'kernel_drift': max(row['kernel_drift'] for row in rows),
        'seeds': len(rows),
    }


def run_ablation(name, archive_path, run_config, seeds=(0,)):
    """
    Train every row of a matrix for each seed through the Celery task and
    return one averaged report row per matrix entry, in matrix order.
    """
    from .tasks import run_ablation_entry

    entries = matrix(name)
    if not seeds:
        raise ConfigError("An ablation needs at least one seed")
    archive = DatasetArchive.load(archive_path)
    config_text = dataclasses.replace(run_config, model=run_config.bind(archive)).to_ini()
    pending = [
        [run_ablation_entry.delay(str(archive_path), config_text, config_id, deltas, seed) for seed in seeds]
        for config_id, deltas in entries
    ]
    return [average_rows([result.get() for result in results]) for results in pending]
