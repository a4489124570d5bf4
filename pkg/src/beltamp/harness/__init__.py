"""Experiment configuration, runners and the command line."""

from .config import ConfigError, ExperimentConfig, load_config, parse_seeds
from .experiments import make_env, normalized_reward, summarize, wao_reference

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "make_env", "normalized_reward",
           "parse_seeds", "summarize", "wao_reference"]
