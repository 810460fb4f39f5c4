"""
INI-style run configuration helpers.

Sections are plain dataclasses; every key maps onto a field and is cast with
the field's annotation. Unknown keys are rejected so typos never pass silently.
"""
import configparser
import dataclasses
import typing
from pathlib import Path

from decouple import Csv, config, strtobool

from .exceptions import ConfigError


def cast_value(raw, hint, key='value'):
    """Cast a raw INI string to the annotated field type"""
    if not isinstance(raw, str):
        return raw
    origin = typing.get_origin(hint)
    try:
        if origin is tuple:
            item_type = typing.get_args(hint)[0]
            return Csv(cast=item_type, post_process=tuple)(raw)
        if hint is bool:
            return bool(strtobool(raw.strip()))
        if hint in (int, float):
            return hint(raw.strip())
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"Invalid value for '{key}': {raw!r} ({exc})") from exc


def format_value(value):
    """Render a field value back to its INI text"""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, tuple):
        return ','.join(format_value(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def section_from_mapping(cls, mapping, section=None, base=None):
    """Build a dataclass instance from a key/value mapping, on top of an optional base"""
    section = section or cls.__name__
    hints = typing.get_type_hints(cls)
    names = {field.name for field in dataclasses.fields(cls) if field.init}
    unknown = sorted(set(mapping) - names)
    if unknown:
        raise ConfigError(f"Unknown key(s) in [{section}]: {', '.join(unknown)}")
    values = {key: cast_value(raw, hints[key], f"{section}.{key}") for key, raw in mapping.items()}
    if base is not None:
        return dataclasses.replace(base, **values)
    return cls(**values)


def section_to_mapping(instance):
    """Inverse of section_from_mapping"""
    return {
        field.name: format_value(getattr(instance, field.name))
        for field in dataclasses.fields(instance)
        if field.init
    }


def _parser():
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def parse_ini(text):
    """Parse INI text into {section: {key: raw}}"""
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"Malformed configuration: {exc}") from exc
    return {name: dict(parser.items(name)) for name in parser.sections()}


def read_ini(path):
    """Read an INI file into {section: {key: raw}}"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Configuration file not found: {path}")
    return parse_ini(path.read_text(encoding="utf-8"))


def write_ini(sections):
    """Render {section: {key: text}} as INI text with a stable key order"""
    lines = []
    for name, values in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {value}" for key, value in values.items())
        lines.append('')
    return '\n'.join(lines)


def parse_overrides(items):
    """Parse repeated ``section.key=value`` command-line overrides"""
    overrides = {}
    for item in items or ():
        target, sep, value = item.partition('=')
        section, dot, key = target.strip().partition('.')
        if not sep or not dot or not key:
            raise ConfigError(f"Override must look like section.key=value: {item!r}")
        overrides.setdefault(section, {})[key] = value.strip()
    return overrides


def seed_override():
    """IMG_SEED from the environment (or .env), if set"""
    value = config('IMG_SEED', default='')
    if value == '':
        return None
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"IMG_SEED must be an integer, got {value!r}") from exc
