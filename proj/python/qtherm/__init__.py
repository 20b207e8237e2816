"""Python interface to the qtherm simulation library.

Configurations are plain dicts with the same layout as the JSON files
accepted by the ``qtherm`` command line tool.
"""

import json

from . import _core
from ._core import (
    ConfigError,
    NumericError,
    analytic,
    chi2_quartiles,
    diagonalize,
    g0_monte_carlo,
    preset_names,
    shannon_entropy,
)

__version__ = _core.__version__

__all__ = [
    "ConfigError",
    "NumericError",
    "analytic",
    "boltzmann_distribution",
    "chi2_quartiles",
    "curve",
    "describe_model",
    "diagonalize",
    "g0_monte_carlo",
    "preset",
    "preset_names",
    "run",
    "shannon_entropy",
    "sweep",
    "verify",
]


def preset(name):
    return json.loads(_core.preset_json(name))


def describe_model(model):
    return json.loads(_core.describe_model_json(json.dumps(model)))


def boltzmann_distribution(model):
    return _core.boltzmann_json(json.dumps(model))


def run(config, out=None, jobs=1):
    """Evolve one initial-state family; returns summary statistics."""
    return json.loads(_core.run_json(json.dumps(config), None if out is None else str(out), jobs))


def curve(config, out=None, jobs=1):
    return json.loads(_core.curve_json(json.dumps(config), None if out is None else str(out), jobs))


def sweep(config, out=None, jobs=1):
    return json.loads(_core.sweep_json(json.dumps(config), None if out is None else str(out), jobs))


def verify(seed=1, only=(), jobs=1):
    return json.loads(_core.verify_json(seed, list(only), jobs))
