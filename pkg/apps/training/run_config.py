"""
Run configuration: [dataset], [model] and [trainer] sections of an INI
file, command-line overrides on top, IMG_SEED over every seed.
"""
import dataclasses
from dataclasses import dataclass, field

from apps.common.config import (
    parse_ini, parse_overrides, read_ini, section_from_mapping, section_to_mapping, seed_override, write_ini,
)
from apps.common.exceptions import ConfigError, ShapeError
from apps.network.config import NetworkConfig
from apps.videos.specs import DatasetSpec

from .optim import SgdConfig, recipe

SECTIONS = ('dataset', 'model', 'trainer')


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSpec
    model: NetworkConfig
    trainer: SgdConfig
    recipe: str = 'desk'
    model_keys: frozenset = field(default=frozenset(), compare=False)

    @classmethod
    def from_sections(cls, sections, overrides=None):
        merged = {name: dict(values) for name, values in sections.items()}
        for name, values in (overrides or {}).items():
            merged.setdefault(name, {}).update(values)
        unknown = sorted(set(merged) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"Unknown section(s): {', '.join(unknown)}")

        trainer_values = dict(merged.get('trainer', {}))
        recipe_name = trainer_values.pop('recipe', 'desk').strip()
        base_trainer, model_defaults = recipe(recipe_name)
        trainer = section_from_mapping(SgdConfig, trainer_values, 'trainer', base=base_trainer)

        model_values = dict(model_defaults)
        model_values.update(merged.get('model', {}))
        model_values['dropout'] = trainer.dropout
        model = section_from_mapping(NetworkConfig, model_values, 'model')
        dataset = section_from_mapping(DatasetSpec, merged.get('dataset', {}), 'dataset')

        seed = seed_override()
        if seed is not None:
            dataset = dataclasses.replace(dataset, seed=seed)
            model = dataclasses.replace(model, seed=seed)
            trainer = dataclasses.replace(trainer, seed=seed)
        return cls(dataset=dataset, model=model, trainer=trainer, recipe=recipe_name,
                   model_keys=frozenset(merged.get('model', {})))

    @classmethod
    def parse(cls, text, overrides=()):
        return cls.from_sections(parse_ini(text), parse_overrides(overrides))

    @classmethod
    def load(cls, path=None, overrides=()):
        sections = read_ini(path) if path else {}
        return cls.from_sections(sections, parse_overrides(overrides))

    def to_sections(self):
        trainer = {'recipe': self.recipe}
        trainer.update(section_to_mapping(self.trainer))
        return {
            'dataset': section_to_mapping(self.dataset),
            'model': section_to_mapping(self.model),
            'trainer': trainer,
        }

    def to_ini(self):
        return write_ini(self.to_sections())

    def bind(self, archive):
        """
        Model config for an archive: input channels and class count come
        from the archive unless the [model] section set them, in which case
        they must agree.
        """
        clip_channels = archive.clip_shape[1]
        changes = {}
        for key, actual in (('in_channels', clip_channels), ('num_classes', archive.num_classes)):
            configured = getattr(self.model, key)
            if key in self.model_keys and configured != actual:
                raise ShapeError(f"Model {key} does not match the dataset", expected=configured, actual=actual)
            changes[key] = actual
        return dataclasses.replace(self.model, **changes)
