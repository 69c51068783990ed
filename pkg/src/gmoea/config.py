"""
YAML configuration loading.

User files are merged over the packaged ``defaults.yaml``; every key a user
file sets must exist in the defaults. Errors carry the file path and the
1-based line of the offending key so the CLI can point at it.
"""

import copy
import logging
from pathlib import Path

import yaml

from gmoea.errors import ConfigError, GmoeaError, PreconditionError, UnknownProblemError
from gmoea.gan import GanConfig
from gmoea.operators import VariationConfig

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).with_name("defaults.yaml")

_NUMBER = (int, float)


def load_defaults():
    with open(DEFAULTS_PATH, "r") as f:
        return yaml.safe_load(f)


def _key_lines(node, prefix=()):
    """Map key paths to the line they appear on."""
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = prefix + (key_node.value,)
            lines[path] = key_node.start_mark.line + 1
            lines.update(_key_lines(value_node, path))
    return lines


def _parse(text, source):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise ConfigError(f"invalid YAML: {e.problem}", source, line) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}", source) from e
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", source, 1)
    return data, _key_lines(node)


def _type_ok(default, value):
    if default is None or value is None:
        return True
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, _NUMBER):
        return isinstance(value, _NUMBER) and not isinstance(value, bool)
    if isinstance(default, list):
        return isinstance(value, list)
    return isinstance(value, type(default))


def _merge(defaults, user, source, lines, prefix=()):
    merged = copy.deepcopy(defaults)
    for key, value in user.items():
        path = prefix + (key,)
        line = lines.get(path)
        if key not in defaults:
            raise ConfigError(f"unknown key {'.'.join(map(str, path))!r}", source, line)
        default = defaults[key]
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{'.'.join(path)} must be a mapping", source, line)
            merged[key] = _merge(default, value, source, lines, path)
        elif not _type_ok(default, value):
            raise ConfigError(
                f"{'.'.join(path)} expects {type(default).__name__}, got {type(value).__name__}",
                source,
                line,
            )
        else:
            merged[key] = value
    return merged


class Settings:
    """Merged configuration plus the key lines needed for error messages."""

    def __init__(self, data, source=None, lines=None):
        self.data = data
        self.source = source
        self.lines = lines or {}

    def __getitem__(self, section):
        return self.data[section]

    def line_of(self, *path):
        return self.lines.get(tuple(path))

    def error(self, message, *path):
        return ConfigError(message, self.source, self.line_of(*path))

    def run_config(self, **overrides):
        """RunConfig built from the ``run`` section."""
        from gmoea.algorithms import Algorithm
        from gmoea.problems import make_problem

        section = dict(self.data["run"], **overrides)
        try:
            Algorithm.parse(section["algorithm"])
        except ConfigError as e:
            raise self.error(e.message, "run", "algorithm") from None
        try:
            make_problem(section["problem"], section["D"])
        except UnknownProblemError as e:
            raise self.error(str(e), "run", "problem") from None
        except PreconditionError as e:
            raise self.error(str(e), "run", "D") from None
        return build_run_config(section, self)


def build_run_config(section, settings=None):
    """RunConfig from a plain mapping shaped like the ``run`` section."""
    from gmoea.algorithms import RunConfig

    source = settings.source if settings is not None else None
    section = dict(section)
    variation = dict(section.pop("variation", {}) or {})
    gan = dict(section.pop("gan", {}) or {})
    try:
        return RunConfig(
            variation=VariationConfig(**variation),
            gan=GanConfig(**gan),
            **section,
        )
    except TypeError as e:
        raise ConfigError(f"bad run configuration: {e}", source) from e
    except GmoeaError as e:
        raise ConfigError(f"bad run configuration: {e}", source) from e


def load_text(text, source=None):
    """Settings from YAML (or JSON) text, merged over the packaged defaults."""
    user, lines = _parse(text, source)
    defaults = load_defaults()
    data = _merge(defaults, user, source, lines)
    for section in defaults:
        if section not in user:
            logger.debug(f"Section {section!r} not set in {source or 'config'}; using defaults")
    return Settings(data, source, lines)


def load_config(path=None):
    """Settings from a config file; the packaged defaults alone when path is None."""
    if path is None:
        return Settings(load_defaults(), str(DEFAULTS_PATH))
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", str(path)) from e
    settings = load_text(text, str(path))
    logger.info(f"Configuration loaded from {path}")
    return settings
