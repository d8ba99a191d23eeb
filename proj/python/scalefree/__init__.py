"""Scale-free adversarial bandits and episodic MDPs."""

import json

from ._core import (
    clip,
    max_reach_probabilities,
    next_threshold,
    normalize_config,
    solve_shannon,
    solve_tsallis,
)
from . import _core

__all__ = [
    "clip",
    "max_reach_probabilities",
    "next_threshold",
    "normalize_config",
    "run_experiment",
    "run_seed",
    "solve_shannon",
    "solve_tsallis",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def run_seed(config, seed):
    """Trace of one seed. `config` is a dict or JSON text."""
    return _core.run_seed(_text(config), seed)


def run_experiment(config):
    """Runs all seeds (writing files when output_dir is set) and returns the summary dict."""
    return json.loads(_core.run_experiment(_text(config)))
