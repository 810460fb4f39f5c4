"""
Dataset generation parameters
"""
from dataclasses import dataclass, field

from django.conf import settings

from apps.common.config import read_ini, section_from_mapping
from apps.common.exceptions import ConfigError

DIRECTIONS = ('right', 'left', 'down', 'up')
PHASE_ORDERS = ('right-then-left', 'left-then-right')
TASK_CLASSES = {
    'direction4': DIRECTIONS,
    'phase-order2': PHASE_ORDERS,
    'mixed': DIRECTIONS + PHASE_ORDERS,
}
SPLITS = ('train', 'val')


@dataclass(frozen=True)
class DatasetSpec:
    task: str = 'direction4'
    train_per_class: int = 50
    val_per_class: int = 10
    frames: int = 8
    height: int = 32
    width: int = 32
    channels: int = 1
    noise_std: float = field(default_factory=lambda: settings.MOTIONBENCH['NOISE_STD'])
    sprite_size: int = field(default_factory=lambda: settings.MOTIONBENCH['SPRITE_SIZE'])
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASK_CLASSES:
            raise ConfigError(f"Unknown task '{self.task}'; choose one of {', '.join(TASK_CLASSES)}")
        if self.train_per_class < 1 or self.val_per_class < 0:
            raise ConfigError("Need at least one training clip per class and a non-negative validation count")
        if self.channels not in (1, 3):
            raise ConfigError(f"Clips have 1 or 3 channels, got {self.channels}")
        if self.frames < 2:
            raise ConfigError(f"Motion needs at least 2 frames, got {self.frames}")
        if self.noise_std < 0:
            raise ConfigError(f"Noise stddev must be non-negative, got {self.noise_std}")
        if self.sprite_size < 1:
            raise ConfigError(f"Sprite size must be positive, got {self.sprite_size}")
        uses_directions = self.task in ('direction4', 'mixed')
        uses_phases = self.task in ('phase-order2', 'mixed')
        if uses_phases and (self.frames % 2 or self.frames < 4):
            raise ConfigError(f"Phase-order clips switch direction at T/2 and need an even T >= 4, got {self.frames}")
        span = self.frames - 1 if uses_directions else self.frames // 2
        for extent, axis in ((self.width, 'width'), (self.height, 'height')):
            if extent - self.sprite_size < span:
                raise ConfigError(
                    f"Sprite path of {span} px does not fit a field {axis} of {extent} with a "
                    f"{self.sprite_size}px sprite"
                )

    @property
    def class_names(self):
        return TASK_CLASSES[self.task]

    @property
    def num_classes(self):
        return len(self.class_names)

    def split_sizes(self):
        return {'train': self.train_per_class * self.num_classes, 'val': self.val_per_class * self.num_classes}


def read_spec(path):
    """Load a [dataset] section from an INI file"""
    sections = read_ini(path)
    unknown = sorted(set(sections) - {'dataset'})
    if unknown:
        raise ConfigError(f"Unknown section(s) in dataset spec: {', '.join(unknown)}")
    return section_from_mapping(DatasetSpec, sections.get('dataset', {}), 'dataset')
