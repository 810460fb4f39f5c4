"""
Network topology and ablation switches
"""
from dataclasses import dataclass, field

from django.conf import settings

from apps.cmem.attention import CmemConfig, canonical_attention_form
from apps.common.exceptions import ConfigError
from apps.shift.kernels import SHIFT_MODES

CONSENSUS_RULES = ('mean', 'max')
NORM_MODES = ('train', 'frozen', 'frozen-except-first')


def _setting(key):
    return field(default_factory=lambda: settings.MOTIONBENCH[key])


@dataclass(frozen=True)
class NetworkConfig:
    in_channels: int = 3
    stem_width: int = 32
    blocks: tuple[int, ...] = (64, 64, 64)
    mid_width: int = 32
    num_classes: int = 4
    dropout: float = 0.5
    consensus: str = 'mean'
    cmem_enabled: bool = True
    clim_enabled: bool = True
    shift_mode: str = _setting('SHIFT_MODE')
    slice_shift_modes: tuple[str, ...] = ()
    r: int = _setting('REDUCTION_RATIO')
    alpha: float = _setting('ALPHA')
    beta: float = _setting('BETA')
    attention_form: str = _setting('ATTENTION_FORM')
    norm_mode: str = 'train'
    swap_order: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError(f"A classifier needs at least 2 classes, got {self.num_classes}")
        if not self.blocks:
            raise ConfigError("At least one block width is required")
        if self.clim_enabled and self.mid_width % 32:
            raise ConfigError(f"Bottleneck width {self.mid_width} must be divisible by 32 when CLIM is enabled")
        if self.cmem_enabled and self.mid_width % self.r:
            raise ConfigError(f"Bottleneck width {self.mid_width} must be divisible by r={self.r}")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"Dropout must lie in [0, 1), got {self.dropout}")
        if self.consensus not in CONSENSUS_RULES:
            raise ConfigError(f"Unknown consensus '{self.consensus}'; choose one of {', '.join(CONSENSUS_RULES)}")
        if self.norm_mode not in NORM_MODES:
            raise ConfigError(f"Unknown norm mode '{self.norm_mode}'; choose one of {', '.join(NORM_MODES)}")
        object.__setattr__(self, 'attention_form', canonical_attention_form(self.attention_form))
        for mode in (self.shift_mode,) + tuple(self.slice_shift_modes):
            if mode not in SHIFT_MODES:
                raise ConfigError(f"Unknown shift mode '{mode}'; choose one of {', '.join(SHIFT_MODES)}")
        if self.slice_shift_modes and len(self.slice_shift_modes) != 3:
            raise ConfigError("slice_shift_modes needs one mode per processed CLIM slice (3)")

    def cmem_config(self):
        return CmemConfig(r=self.r, alpha=self.alpha, beta=self.beta, attention_form=self.attention_form)

    def clim_shift_modes(self):
        return tuple(self.slice_shift_modes) or (self.shift_mode,) * 3
