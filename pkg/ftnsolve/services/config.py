"""RunConfig assembly: defaults < preset < YAML file < command-line overrides."""
import copy
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import yaml
from pydantic import ValidationError

from ..models import RunConfig
from .errors import ConfigError
from .presets import FigurePresets

logger = logging.getLogger(__name__)

THREADS_ENV = "FTNSOLVE_THREADS"


def merge(base: Dict[str, Any], layer: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; values of ``layer`` win."""
    out = copy.deepcopy(base)
    for key, value in layer.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_value(raw: str) -> Any:
    """A YAML scalar or flow collection; a bare comma-separated string becomes a list."""
    raw = raw.strip()
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        return raw
    if isinstance(value, str) and "," in value:
        return [parse_value(item) for item in value.split(",") if item.strip()]
    return raw if value is None else value


def parse_override(text: str) -> Dict[str, Any]:
    """``model.gamma=-0.5`` -> ``{"model": {"gamma": -0.5}}``."""
    text = text[2:] if text.startswith("--") else text
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"override {text!r} has an empty key")
    doc: Dict[str, Any] = {parts[-1]: parse_value(raw)}
    for part in reversed(parts[:-1]):
        doc = {part: doc}
    return doc


def read_config_file(path) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path) as f:
            doc = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}") from e
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must hold a mapping of config sections")
    return doc


def build_config(
    config_file: Optional[str] = None,
    preset: Optional[str] = None,
    overrides: Iterable[str] = (),
    seed: Optional[int] = None,
    out: Optional[str] = None,
) -> RunConfig:
    doc: Dict[str, Any] = {}
    if preset:
        try:
            doc = merge(doc, FigurePresets.get(preset))
        except KeyError:
            raise ConfigError(f"unknown preset {preset!r} (choose from {', '.join(FigurePresets.names())})")
        logger.info(f"Using preset {preset}")
    if config_file:
        doc = merge(doc, read_config_file(config_file))
        logger.info(f"Loaded config file {config_file}")
    for item in overrides:
        doc = merge(doc, parse_override(item))
    if seed is not None:
        doc = merge(doc, {"optimizer": {"seed": seed}})
    if out is not None:
        doc = merge(doc, {"output": {"directory": out}})
    try:
        return RunConfig.model_validate(doc)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def worker_slots(config: RunConfig) -> int:
    slots = config.scan.workers
    cap = os.getenv(THREADS_ENV)
    if cap:
        try:
            slots = min(slots, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}")
    return slots
