"""Config-driven experiment runner and its command-line entry point."""

from .cli import main, run
from .config import RunConfig, config_hash, load_config, parse_config

__all__ = ["main", "run", "RunConfig", "config_hash", "load_config", "parse_config"]
