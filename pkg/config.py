#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
config.py - Toolkit Settings

Loads tool defaults from config.json into a validated settings model.
Environment variables prefixed LTID_ (optionally from a .env file)
override file values; command-line flags override both.
"""

import json
import logging
import os
from typing import Literal, Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

from lt_codec import InactivationStrategy

logger = logging.getLogger("ltid-config")

ENV_PREFIX = "LTID_"
DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config.json")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class AnnealDefaults(BaseModel):
    t_init: float = 10.0
    t_final: float = 1e-3
    cooling_factor: float = Field(default=0.95, gt=0, lt=1)
    moves_per_temperature: int = Field(default=50, gt=0)
    perturbation_scale: float = Field(default=0.2, ge=0)
    max_steps: int = Field(default=100_000, gt=0)


class ToolkitSettings(BaseModel):
    master_seed: int = 0
    workers: int = Field(default=1, ge=1)
    trials: int = Field(default=200, ge=1)
    strategy: str = InactivationStrategy.RANDOM.value
    first_ripple_rule: Literal["resolution", "empty-ripple"] = "resolution"
    bound_precision: int = Field(default=256, ge=53)
    bound_exponent_mode: Literal["integer", "real"] = "integer"
    ripple_depth: int = Field(default=3, ge=1)
    archive_url: Optional[str] = None
    log_level: str = "INFO"
    anneal: AnnealDefaults = Field(default_factory=AnnealDefaults)

    @field_validator("strategy")
    @classmethod
    def _known_strategy(cls, value: str) -> str:
        return InactivationStrategy.parse(value).value

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"log level must be one of {LOG_LEVELS}")
        return level

    @field_validator("archive_url", mode="before")
    @classmethod
    def _blank_is_none(cls, value):
        if isinstance(value, str) and value.strip().lower() in ("", "none", "null"):
            return None
        return value


def _env_overrides(environ: Mapping[str, str]) -> dict:
    overrides = {}
    for name in ToolkitSettings.model_fields:
        if name == "anneal":
            continue
        key = ENV_PREFIX + name.upper()
        if key in environ:
            overrides[name] = environ[key]
    return overrides


def load_settings(path: Optional[str] = None,
                  environ: Optional[Mapping[str, str]] = None) -> ToolkitSettings:
    """
    Build settings from config.json plus LTID_* overrides.

    Args:
        path: Config file; defaults to config.json next to this module.
            A missing file means built-in defaults.
        environ: Mapping to read overrides from; defaults to os.environ
            after loading a .env file.
    """
    if environ is None:
        load_dotenv()
        environ = os.environ
    path = path or DEFAULT_CONFIG_PATH

    data = {}
    if os.path.exists(path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"config file {path} is not valid JSON: {e}") from e
        logger.debug(f"Loaded settings from {path}")
    else:
        logger.debug(f"No config file at {path}, using defaults")

    data.update(_env_overrides(environ))
    return ToolkitSettings.model_validate(data)
