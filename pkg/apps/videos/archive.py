"""
IMGD dataset archives.

Layout (little-endian):
    b"IMGD" | u32 version | u32 header length | header JSON (UTF-8)
    clips  f32 [N, T, C, H, W]
    labels i32 [N]
    splits u8  [N]    (0 train, 1 val)

The header echoes the generating spec, the class names, the training-split
mean/std and the sha256 of everything after the header.
"""
import dataclasses
import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from apps.common.config import section_from_mapping, section_to_mapping
from apps.common.exceptions import ArchiveError, ConfigError

from .specs import SPLITS, DatasetSpec

MAGIC = b'IMGD'
VERSION = 1
PREAMBLE = len(MAGIC) + 8


@dataclass
class DatasetArchive:
    spec: DatasetSpec
    clips: np.ndarray
    labels: np.ndarray
    splits: np.ndarray
    class_names: tuple
    mean: float
    std: float

    def __len__(self):
        return len(self.labels)

    @property
    def clip_shape(self):
        return self.clips.shape[1:]

    @property
    def num_classes(self):
        return len(self.class_names)

    def payload(self):
        return b''.join([
            np.ascontiguousarray(self.clips, dtype='<f4').tobytes(),
            np.ascontiguousarray(self.labels, dtype='<i4').tobytes(),
            np.ascontiguousarray(self.splits, dtype='u1').tobytes(),
        ])

    @property
    def checksum(self):
        return hashlib.sha256(self.payload()).hexdigest()

    def split_indices(self, split):
        if split not in SPLITS:
            raise ArchiveError(f"Unknown split '{split}'; choose one of {', '.join(SPLITS)}")
        return np.flatnonzero(self.splits == SPLITS.index(split))

    def normalized(self, index):
        """One clip [T, C, H, W] standardized with the stored training statistics"""
        return ((self.clips[index] - np.float32(self.mean)) / np.float32(self.std)).astype(np.float32)

    def normalized_batch(self, indices):
        return ((self.clips[indices] - np.float32(self.mean)) / np.float32(self.std)).astype(np.float32)

    def header(self):
        return {
            'spec': section_to_mapping(self.spec),
            'class_names': list(self.class_names),
            'mean': self.mean,
            'std': self.std,
            'count': len(self.labels),
            'clip_shape': list(self.clip_shape),
            'sha256': self.checksum,
        }

    def encode(self):
        header = json.dumps(self.header(), sort_keys=True).encode('utf-8')
        return MAGIC + struct.pack('<II', VERSION, len(header)) + header + self.payload()

    def save(self, path):
        path = Path(path)
        path.write_bytes(self.encode())
        return path

    @classmethod
    def decode(cls, data):
        if data[:len(MAGIC)] != MAGIC:
            raise ArchiveError("Not a dataset archive: missing 'IMGD' magic", offset=0)
        if len(data) < PREAMBLE:
            raise ArchiveError("Truncated archive header", offset=len(data))
        version, header_length = struct.unpack('<II', data[len(MAGIC):PREAMBLE])
        if version != VERSION:
            raise ArchiveError(f"Unsupported archive version {version}", offset=len(MAGIC))
        end = PREAMBLE + header_length
        if len(data) < end:
            raise ArchiveError("Truncated archive header", offset=len(data))
        try:
            header = json.loads(data[PREAMBLE:end].decode('utf-8'))
            spec = section_from_mapping(DatasetSpec, header['spec'], 'dataset')
        except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ConfigError) as exc:
            raise ArchiveError(f"Corrupt archive header ({exc})", offset=PREAMBLE) from exc

        count = header['count']
        clip_shape = tuple(header['clip_shape'])
        clip_bytes = count * int(np.prod(clip_shape)) * 4
        offsets = [end, end + clip_bytes, end + clip_bytes + 4 * count, end + clip_bytes + 5 * count]
        if len(data) < offsets[-1]:
            raise ArchiveError(f"Truncated archive payload (expected {offsets[-1]} bytes, found {len(data)})",
                               offset=len(data))
        if len(data) > offsets[-1]:
            raise ArchiveError("Trailing bytes after the archive payload", offset=offsets[-1])
        payload = data[end:]
        if hashlib.sha256(payload).hexdigest() != header['sha256']:
            raise ArchiveError("Archive checksum mismatch", offset=end)

        clips = np.frombuffer(data[offsets[0]:offsets[1]], dtype='<f4').reshape((count,) + clip_shape)
        labels = np.frombuffer(data[offsets[1]:offsets[2]], dtype='<i4')
        splits = np.frombuffer(data[offsets[2]:offsets[3]], dtype='u1')
        return cls(spec=spec, clips=clips.astype(np.float32), labels=labels.astype(np.int32),
                   splits=splits.copy(), class_names=tuple(header['class_names']),
                   mean=header['mean'], std=header['std'])

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.is_file():
            raise ArchiveError(f"Dataset archive not found: {path}")
        return cls.decode(path.read_bytes())

    def equals(self, other):
        """Bitwise equality of payload and header"""
        return (self.header() == other.header()
                and dataclasses.astuple(self.spec) == dataclasses.astuple(other.spec)
                and self.payload() == other.payload())
