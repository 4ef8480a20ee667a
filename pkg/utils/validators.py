"""Run Configuration Loading and Validation.

This module turns a flat ``KEY=VALUE`` run file plus command-line overrides
into a validated pydantic run config.

Config Rules:
- The file uses the ``.env`` format and is read with ``dotenv_values``
- Keys match model fields case-insensitively; ``-`` and ``_`` are equivalent
- Empty values and ``none`` mean "use the default"
- Command-line overrides win over the file
- Any validation failure is a ``ConfigError`` naming the offending key
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar

from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError

from utils.error_handler import ConfigError

logger = logging.getLogger("vqaa.config")

ModelT = TypeVar("ModelT", bound=BaseModel)

NULL_VALUES = {"", "none", "null"}


def _field_lookup(model_cls: Type[BaseModel]) -> Dict[str, str]:
    return {name.lower(): name for name in model_cls.model_fields}


def normalize_keys(raw: Dict[str, Any], model_cls: Type[BaseModel]) -> Dict[str, Any]:
    """Map raw keys onto model field names, dropping unset values.

    Args:
        raw: Keys as written in the file or on the command line
        model_cls: Target run-config model

    Returns:
        Dict keyed by exact field names

    Raises:
        ConfigError: For a key the model does not know
    """
    lookup = _field_lookup(model_cls)
    out: Dict[str, Any] = {}
    for key, value in raw.items():
        if value is None or (isinstance(value, str) and value.strip().lower() in NULL_VALUES):
            continue
        name = lookup.get(key.strip().replace("-", "_").lower())
        if name is None:
            raise ConfigError(f"Unknown configuration key '{key}'", key=key)
        out[name] = value.strip() if isinstance(value, str) else value
    return out


def read_config_file(path: Optional[str]) -> Dict[str, Optional[str]]:
    """Raw key/value pairs of a run file (empty when no file is given)."""
    if not path:
        return {}
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"Config file not found: {path}", key="config")
    values = dotenv_values(file_path)
    logger.debug(f"Read {len(values)} keys from {file_path}")
    return dict(values)


def validate_config(values: Dict[str, Any], model_cls: Type[ModelT]) -> ModelT:
    """Validate normalized values, converting pydantic errors to ``ConfigError``."""
    try:
        return model_cls.model_validate(values)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else None
        raise ConfigError(first["msg"], key=key) from e


def load_run_config(
    path: Optional[str],
    overrides: Optional[Dict[str, Any]],
    model_cls: Type[ModelT],
) -> ModelT:
    """Merge a run file with overrides (overrides win) and validate.

    Args:
        path: Optional run file
        overrides: Command-line values; ``None`` entries are ignored
        model_cls: Run-config model of the sub-command

    Returns:
        Validated config

    Raises:
        ConfigError: Unknown key, missing file or invalid value
    """
    merged = normalize_keys(read_config_file(path), model_cls)
    merged.update(normalize_keys(overrides or {}, model_cls))
    config = validate_config(merged, model_cls)
    logger.info(f"Loaded {model_cls.__name__} ({len(merged)} keys set)")
    return config


def config_from_manifest(path: str, model_cls: Type[ModelT]) -> ModelT:
    """Re-parse the config snapshot embedded in a run manifest."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read manifest {path}: {e}", key="manifest") from e
    return validate_config(data["config"], model_cls)
