"""
Configuration loader for walker-lab.

Loads config from config/config.json, validates against schema,
and allows environment variable overrides.
"""

import copy
import json
import os
from pathlib import Path
from typing import Any

import jsonschema

from src.common.exceptions import ConfigError

CONFIG_DIR = Path(__file__).parent.parent.parent / "config"
SIM_CONFIG_SCHEMA_PATH = CONFIG_DIR / "sim_config.schema.json"


def load_schema(path: Path) -> dict[str, Any]:
    """Load a JSON schema document."""
    try:
        with open(path, "r") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Schema file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in schema file {path}: {e}")


def validate_document(document: dict[str, Any], schema_path: Path, what: str) -> None:
    """
    Validate a JSON document against a schema file.

    Raises:
        ConfigError: If the document does not satisfy the schema
    """
    schema = load_schema(schema_path)
    try:
        jsonschema.validate(document, schema)
    except jsonschema.ValidationError as e:
        location = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{what} validation failed at {location}: {e.message}")


class Config:
    """
    Configuration manager for walker-lab.

    Loads configuration from JSON file, validates against schema,
    and provides access to configuration values.
    """

    def __init__(self, config_path: str | None = None, schema_path: str | None = None):
        """
        Initialize configuration.

        Args:
            config_path: Path to config.json (default: config/config.json)
            schema_path: Path to config.schema.json (default: config/config.schema.json)
        """
        self._config_path = Path(config_path) if config_path else CONFIG_DIR / "config.json"
        self._schema_path = Path(schema_path) if schema_path else CONFIG_DIR / "config.schema.json"
        self._config: dict[str, Any] = {}
        self._load()

    def _load(self) -> None:
        """Load and validate configuration."""
        if not self._config_path.exists():
            raise ConfigError(f"Configuration file not found: {self._config_path}")

        try:
            with open(self._config_path, "r") as f:
                self._config = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in config file: {e}")

        if self._schema_path.exists():
            validate_document(self._config, self._schema_path, "Configuration")

        self._apply_env_overrides()

    def _apply_env_overrides(self) -> None:
        """Apply environment variable overrides to configuration."""
        if log_level := os.environ.get("LOG_LEVEL"):
            self._config["app"]["log_level"] = log_level

        if log_format := os.environ.get("LOG_FORMAT"):
            self._config["app"]["log_format"] = log_format

        if seed := os.environ.get("WALKER_LAB_SEED"):
            try:
                self._config["simulation"]["seed"] = int(seed)
            except ValueError:
                raise ConfigError(f"WALKER_LAB_SEED must be an integer, got {seed!r}")

    def get(self, path: str, default: Any = None) -> Any:
        """
        Get configuration value by dot-separated path.

        Args:
            path: Dot-separated path (e.g., "simulation.friction")
            default: Default value if path not found

        Returns:
            Configuration value or default
        """
        keys = path.split(".")
        value = self._config

        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default

        return value

    def __getitem__(self, path: str) -> Any:
        """Get configuration value by path, raises KeyError if not found."""
        value = self.get(path)
        if value is None:
            raise KeyError(f"Configuration key not found: {path}")
        return value

    @property
    def app(self) -> dict[str, Any]:
        """Get app configuration section."""
        return self._config.get("app", {})

    @property
    def simulation(self) -> dict[str, Any]:
        """Get simulation defaults section."""
        return self._config.get("simulation", {})

    @property
    def calibration(self) -> dict[str, Any]:
        """Get kick calibration section."""
        return self._config.get("calibration", {})

    @property
    def analysis(self) -> dict[str, Any]:
        """Get analysis section."""
        return self._config.get("analysis", {})

    @property
    def lab(self) -> dict[str, Any]:
        """Get sweep harness section."""
        return self._config.get("lab", {})

    @property
    def units(self) -> dict[str, Any]:
        """Get physical scales section."""
        return self._config.get("units", {})

    def to_dict(self) -> dict[str, Any]:
        """Return the full configuration as a dictionary."""
        return copy.deepcopy(self._config)


# Global config instance
_config: Config | None = None


def get_config() -> Config:
    """
    Get the global configuration instance.

    Loads config/config.json on first use.

    Returns:
        Config: The configuration instance
    """
    global _config
    if _config is None:
        _config = Config()
    return _config


def init_config(config_path: str | None = None, schema_path: str | None = None) -> Config:
    """
    Initialize the global configuration.

    Args:
        config_path: Path to config.json
        schema_path: Path to config.schema.json

    Returns:
        Config: The initialized configuration instance
    """
    global _config
    _config = Config(config_path, schema_path)
    return _config
