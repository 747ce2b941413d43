import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, Literal, Optional, Union, get_args, get_origin

from autooia.exceptions.exception import ConfigError

THREADS_ENV = "OIA_THREADS"


@dataclass
class Settings:
    """
    Runtime settings shared by every command.

    Attributes:
        threads (int): Upper bound on worker processes/threads. Overridden by OIA_THREADS. Default: 1.
        dtype (Literal['float64', 'float32']): Storage precision of model parameters. Default: 'float64'.
        style (Dict[str, str]): Styling for console messages, mapping status keys to rich styles.
        color_system (Optional[Literal['auto', 'standard', '256', 'truecolor', 'windows']]): Color system
            used by the rich console. Default: 'auto'.
    """
    threads: int = 1
    dtype: Literal['float64', 'float32'] = 'float64'
    style: Dict[str, str] = field(default_factory=lambda: {
        "success": "green",
        "failed": "bold red",
        "info": "yellow bold"
    })
    color_system: Optional[Literal['auto', 'standard', '256', 'truecolor', 'windows']] = 'auto'

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.dtype not in ('float64', 'float32'):
            raise ConfigError(f"dtype must be float64 or float32, got {self.dtype!r}")


def read_config_file(path: Optional[Path]) -> configparser.ConfigParser:
    """
    Reads an optional ini file. A missing default file yields an empty parser.

    Raises:
        ConfigError: If an explicitly given file does not exist.
    """
    parser = configparser.ConfigParser()
    if path is None:
        return parser
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    parser.read(path)
    return parser


def _type_name(annotation) -> str:
    if isinstance(annotation, str):
        return annotation
    if get_origin(annotation) is Union:
        # Optional[X] converts like X
        annotation = next(arg for arg in get_args(annotation) if arg is not type(None))
    return getattr(annotation, "__name__", "")


def section_overrides(parser: configparser.ConfigParser, section: str, target) -> dict:
    """
    Converts the values of one ini section to the field types of a dataclass.

    Unknown keys are rejected so typos do not silently fall back to defaults.
    """
    if section not in parser:
        return {}
    types = {f.name: f.type for f in fields(target)}
    overrides = {}
    for key, raw in parser[section].items():
        if key not in types:
            raise ConfigError(f"Unknown key '{key}' in section [{section}]")
        kind = _type_name(types[key])
        try:
            if "int" in kind and "float" not in kind:
                overrides[key] = parser[section].getint(key)
            elif "float" in kind:
                overrides[key] = parser[section].getfloat(key)
            elif "bool" in kind:
                overrides[key] = parser[section].getboolean(key)
            else:
                overrides[key] = raw
        except ValueError as e:
            raise ConfigError(f"Invalid value for [{section}] {key}: {raw!r} ({e})")
    return overrides


def load_settings(parser: Optional[configparser.ConfigParser] = None) -> Settings:
    """
    Builds Settings from defaults, the [settings] ini section and OIA_THREADS, in that order.
    """
    overrides = section_overrides(parser, "settings", Settings) if parser is not None else {}
    overrides.pop("style", None)
    env_threads = os.environ.get(THREADS_ENV)
    if env_threads:
        try:
            overrides["threads"] = int(env_threads)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env_threads!r}")
    return Settings(**overrides)
