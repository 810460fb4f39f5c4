"""
Checkpoint persistence and inspection dumps for trained networks
"""
import csv
import logging
from pathlib import Path

import numpy as np

from apps.common.config import section_from_mapping, section_to_mapping
from apps.common.exceptions import CheckpointError, ShapeError

from .checkpoint import load_checkpoint, save_checkpoint
from .config import NetworkConfig
from .model import init_network, network_forward

logger = logging.getLogger('motionbench')

EXTRA_PREFIX = 'momentum:'
SHIFT_FIELDS = ('block', 'slice', 'mode', 'channel', 'source', 'k_prev', 'k_center', 'k_next')


class NetworkStore:
    """Save and restore network parameters with their topology"""

    def save(self, path, config, params, metadata=None, momentum=None):
        """Write parameters, running statistics and optional momentum buffers"""
        tensors = dict(params.state())
        for name, buffer in (momentum or {}).items():
            tensors[f"{EXTRA_PREFIX}{name}"] = buffer
        meta = dict(metadata or {})
        meta['network'] = section_to_mapping(config)
        save_checkpoint(path, tensors, meta)
        logger.info(f"Checkpoint written to {path} ({len(tensors)} entries)")
        return Path(path)

    def load(self, path):
        """Return (config, params, metadata, momentum buffers)"""
        metadata, tensors = load_checkpoint(path)
        if 'network' not in metadata:
            raise CheckpointError(f"Checkpoint {path} does not record its network topology")
        config = section_from_mapping(NetworkConfig, metadata['network'], 'network')
        params = init_network(config)
        momentum = {name[len(EXTRA_PREFIX):]: array for name, array in tensors.items()
                    if name.startswith(EXTRA_PREFIX)}
        state = {name: array for name, array in tensors.items() if not name.startswith(EXTRA_PREFIX)}
        try:
            params.load_state(state)
        except KeyError as exc:
            raise CheckpointError(f"Checkpoint {path} is missing an entry: {exc}") from exc
        return config, params, metadata, momentum


class InspectionService:
    """Dump per-block attention gains and shift kernels as CSV"""

    def attention_rows(self, clip, config, params):
        trace = []
        network_forward(clip[None], config, params, training=False, trace=trace)
        rows = []
        for block, gains in enumerate(trace):
            for frame, values in enumerate(gains[0]):
                row = {'block': block, 'frame': frame}
                row.update({f"c{channel}": repr(float(value)) for channel, value in enumerate(values)})
                rows.append(row)
        return rows

    def shift_rows(self, params):
        rows = []
        for block, block_params in enumerate(params.blocks):
            if block_params.clim is None:
                continue
            for index, shift in enumerate(block_params.clim.shifts, start=1):
                kernels = shift.kernels.data
                if shift.depthwise:
                    for channel, taps in enumerate(kernels):
                        rows.append(self._shift_row(block, index, shift.mode, channel, '', taps))
                else:
                    for out_channel, matrix in enumerate(kernels):
                        for in_channel, taps in enumerate(matrix):
                            rows.append(self._shift_row(block, index, shift.mode, out_channel, in_channel, taps))
        return rows

    @staticmethod
    def _shift_row(block, index, mode, channel, source, taps):
        return {
            'block': block, 'slice': index, 'mode': mode, 'channel': channel, 'source': source,
            'k_prev': repr(float(taps[0])), 'k_center': repr(float(taps[1])), 'k_next': repr(float(taps[2])),
        }

    def dump(self, checkpoint, archive, clip_index, out_dir, store=None):
        """Write attention.csv and shifts.csv; return both paths"""
        config, params, _, _ = (store or NetworkStore()).load(checkpoint)
        if not 0 <= clip_index < len(archive.clips):
            raise ShapeError("Clip index out of range", expected=f"0..{len(archive.clips) - 1}", actual=clip_index)
        clip = archive.normalized(clip_index).astype(np.float32)
        if clip.shape[1] != config.in_channels:
            raise ShapeError("Archive channels do not match the network input", expected=config.in_channels,
                             actual=clip.shape[1])
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        attention = write_csv(out_dir / 'attention.csv', self.attention_rows(clip, config, params))
        shifts = write_csv(out_dir / 'shifts.csv', self.shift_rows(params), SHIFT_FIELDS)
        return attention, shifts


def write_csv(path, rows, fieldnames=None):
    """Write dict rows with a header; the header comes from the first row by default"""
    fieldnames = fieldnames or (list(rows[0]) if rows else [])
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames, extrasaction='ignore', lineterminator='\n')
        writer.writeheader()
        writer.writerows(rows)
    return Path(path)
