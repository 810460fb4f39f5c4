"""
Synthetic sprite clips whose class is decidable only from motion.

direction4      the sprite moves 1 px/frame right, left, down or up. Every
                class visits the same distribution of positions, so a frame
                on its own says nothing about the class.
phase-order2    the sprite moves right then left (rising path) or left then
                right (falling path), switching at frame T/2. Both paths
                visit the same multiset of positions. Played backwards a
                path keeps its class; mirrored left-right it swaps class.
mixed           all six classes.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from django.conf import settings

from apps.common.exceptions import ConfigError

from .archive import DatasetArchive
from .specs import PHASE_ORDERS, SPLITS

logger = logging.getLogger('motionbench')


def clip_rng(seed, index):
    """Per-clip generator independent of scheduling order"""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def direction_path(direction, frames, span_x, span_y, rng):
    """Sprite top-left corners (y, x) per frame for straight 1 px/frame motion"""
    horizontal = direction in ('right', 'left')
    moving_span, still_span = (span_x, span_y) if horizontal else (span_y, span_x)
    start = rng.integers(0, moving_span - (frames - 1) + 1)
    moving = start + np.arange(frames)
    if direction in ('left', 'up'):
        moving = moving[::-1]
    still = rng.integers(0, still_span - (frames - 1) + 1) + rng.integers(0, frames)
    still = np.full(frames, still)
    return (still, moving) if horizontal else (moving, still)


def phase_path(order, frames, span_x, span_y, rng):
    """Rising path x0 .. x0+T/2 .. x0+1, or the falling path starting at x0+T/2"""
    half = frames // 2
    base = rng.integers(0, span_x - half + 1)
    offsets = np.array([t if t <= half else frames - t for t in range(frames)])
    xs = base + offsets if order == 'right-then-left' else base + half - offsets
    ys = np.full(frames, rng.integers(0, span_y + 1))
    return ys, xs


def phase_order(xs):
    """Phase class of a column sequence, read from its first step"""
    return PHASE_ORDERS[0] if xs[1] > xs[0] else PHASE_ORDERS[1]


def mirror_columns(xs, span_x):
    """Sprite columns after flipping the field left-right"""
    return span_x - np.asarray(xs)


def check_phase_symmetry(class_name, xs, span_x):
    """Reversal keeps the class of a phase path, a left-right mirror swaps it"""
    other = PHASE_ORDERS[1 - PHASE_ORDERS.index(class_name)]
    if (phase_order(xs), phase_order(xs[::-1]), phase_order(mirror_columns(xs, span_x))) != (
            class_name, class_name, other):
        raise ConfigError(f"Phase path {[int(x) for x in xs]} breaks the {class_name} symmetry")
    return xs


def sprite_path(class_name, spec, rng):
    span_x = spec.width - spec.sprite_size
    span_y = spec.height - spec.sprite_size
    if class_name in PHASE_ORDERS:
        ys, xs = phase_path(class_name, spec.frames, span_x, span_y, rng)
        return ys, check_phase_symmetry(class_name, xs, span_x)
    return direction_path(class_name, spec.frames, span_x, span_y, rng)


def render_clip(spec, ys, xs, rng):
    """[T, C, H, W] float32 clip in [0, 1]"""
    size = spec.sprite_size
    clip = np.zeros((spec.frames, spec.channels, spec.height, spec.width), dtype=np.float64)
    for frame, (y, x) in enumerate(zip(ys, xs)):
        clip[frame, :, y:y + size, x:x + size] = 1.0
    if spec.noise_std > 0:
        clip += rng.normal(0.0, spec.noise_std, clip.shape)
    return np.clip(clip, 0.0, 1.0).astype(np.float32)


def clip_plan(spec):
    """(label, split) per clip: splits in order, classes interleaved within a split"""
    plan = []
    sizes = {'train': spec.train_per_class, 'val': spec.val_per_class}
    for split_index, split in enumerate(SPLITS):
        for _ in range(sizes[split]):
            for label in range(spec.num_classes):
                plan.append((label, split_index))
    return plan


def make_clip(spec, index, label):
    rng = clip_rng(spec.seed, index)
    ys, xs = sprite_path(spec.class_names[label], spec, rng)
    return render_clip(spec, ys, xs, rng)


def generate(spec, workers=None):
    """Build a DatasetArchive; identical specs give bitwise identical archives"""
    workers = workers or settings.MOTIONBENCH_WORKERS
    plan = clip_plan(spec)
    labels = np.array([label for label, _ in plan], dtype=np.int32)
    splits = np.array([split for _, split in plan], dtype=np.uint8)

    def build(index):
        return make_clip(spec, index, int(labels[index]))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            clips = list(executor.map(build, range(len(plan))))
    else:
        clips = [build(index) for index in range(len(plan))]
    clips = np.stack(clips).astype(np.float32)

    train = clips[splits == 0]
    mean, std = float(train.mean(dtype=np.float64)), float(train.std(dtype=np.float64))
    archive = DatasetArchive(spec=spec, clips=clips, labels=labels, splits=splits,
                             class_names=tuple(spec.class_names), mean=mean, std=std or 1.0)
    logger.info(f"Generated {len(plan)} {spec.task} clips ({spec.frames}x{spec.height}x{spec.width}), "
                f"sha256 {archive.checksum}")
    return archive