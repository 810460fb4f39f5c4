"""
Versioned binary checkpoints.

Layout (little-endian):
    b"IMGC" | u32 version | u32 metadata length | metadata JSON (UTF-8)
    u32 entry count
    per entry: u16 name length | name | u8 ndim | u32 extent * ndim | f32 payload
"""
import json
import struct
from pathlib import Path

import numpy as np

from apps.common.exceptions import CheckpointError

MAGIC = b'IMGC'
VERSION = 1


def encode_checkpoint(tensors, metadata=None):
    chunks = [MAGIC, struct.pack('<I', VERSION)]
    meta = json.dumps(metadata or {}, sort_keys=True).encode('utf-8')
    chunks += [struct.pack('<I', len(meta)), meta, struct.pack('<I', len(tensors))]
    for name, array in tensors.items():
        array = np.asarray(array)
        encoded = name.encode('utf-8')
        chunks += [struct.pack('<H', len(encoded)), encoded, struct.pack('<B', array.ndim)]
        chunks += [struct.pack(f'<{array.ndim}I', *array.shape), array.astype('<f4').tobytes()]
    return b''.join(chunks)


class _Reader:
    def __init__(self, payload):
        self.payload = payload
        self.offset = 0

    def take(self, size, what):
        if self.offset + size > len(self.payload):
            raise CheckpointError(f"Truncated checkpoint while reading {what}", offset=self.offset)
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(payload):
    """Return (metadata, {name: float32 array})"""
    reader = _Reader(payload)
    if reader.take(len(MAGIC), 'magic') != MAGIC:
        raise CheckpointError("Not a checkpoint: missing 'IMGC' magic", offset=0)
    (version,) = reader.unpack('<I', 'version')
    if version != VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version}", offset=4)
    (meta_length,) = reader.unpack('<I', 'metadata length')
    try:
        metadata = json.loads(reader.take(meta_length, 'metadata').decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"Corrupt checkpoint metadata ({exc})", offset=12) from exc
    (count,) = reader.unpack('<I', 'entry count')
    tensors = {}
    for _ in range(count):
        (name_length,) = reader.unpack('<H', 'entry name length')
        name = reader.take(name_length, 'entry name').decode('utf-8')
        (ndim,) = reader.unpack('<B', f"rank of '{name}'")
        shape = reader.unpack(f'<{ndim}I', f"shape of '{name}'")
        size = int(np.prod(shape)) * 4
        tensors[name] = np.frombuffer(reader.take(size, f"payload of '{name}'"), dtype='<f4').reshape(shape).copy()
    if reader.offset != len(payload):
        raise CheckpointError("Trailing bytes after the last entry", offset=reader.offset)
    return metadata, tensors


def save_checkpoint(path, tensors, metadata=None):
    path = Path(path)
    path.write_bytes(encode_checkpoint(tensors, metadata))
    return path


def load_checkpoint(path):
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())
