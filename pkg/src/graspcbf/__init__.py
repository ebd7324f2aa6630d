"""Grasp-constraint safety filter for multi-fingered in-hand manipulation."""

from .config import ScenarioConfig, canonical_config, load_config, parse_config
from .errors import GraspError

__all__ = ["ScenarioConfig", "canonical_config", "load_config", "parse_config", "GraspError"]
__version__ = "0.1.0"
