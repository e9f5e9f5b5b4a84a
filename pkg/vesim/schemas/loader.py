from pathlib import Path
from typing import Union

import yaml
from pydantic import ValidationError

from vesim.errors import ConfigError
from vesim.schemas.schemas import RunConfig


def _location(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"]) or "<root>"


def parse_config(text: str) -> RunConfig:
    """Validate a YAML run document; errors name the offending key."""
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as error:
        raise ConfigError(f"invalid YAML: {error}")
    if not isinstance(document, dict):
        raise ConfigError("run document must be a mapping of keys to values")
    try:
        return RunConfig.model_validate(document)
    except ValidationError as error:
        first = error.errors()[0]
        key = _location(first)
        raise ConfigError(f"{key}: {first['msg']}", key=key)


def render_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as error:
        raise ConfigError(f"cannot read config {path}: {error.strerror or error}", key=str(path))
    return parse_config(text)
