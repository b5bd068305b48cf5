"""
Bootstrap module for walker-lab.

Loads the environment, configuration and logging before a command runs.
"""

from pathlib import Path

from dotenv import load_dotenv

from src.common.config import Config, init_config
from src.common.logging import get_logger, setup_logging

logger = get_logger(__name__)


def load_environment(env_file: Path | None = None) -> None:
    """
    Load variables from the project's .env file, if there is one.

    Variables already present in the environment win.
    """
    env_file = env_file or Path(__file__).parent.parent / ".env"
    if not env_file.exists():
        return
    load_dotenv(env_file, override=False)
    logger.debug("Loaded environment from .env file", path=str(env_file))


def initialize(config_path: str | None = None, log_level: str | None = None) -> Config:
    """
    Initialize configuration and logging.

    Args:
        config_path: Alternative config.json
        log_level: Overrides app.log_level and LOG_LEVEL

    Returns:
        Config: The global configuration
    """
    load_environment()
    config = init_config(config_path)
    setup_logging(
        level=log_level or config.app.get("log_level", "INFO"),
        format_type=config.app.get("log_format", "json"),
    )
    logger.debug("Configuration loaded", seed=config.get("simulation.seed"), log_format=config.app.get("log_format"))
    return config
