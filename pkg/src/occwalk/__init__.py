"""Occupation times of monitored quantum walks on the line.

A walker evolves under a coined or CMV unitary and is measured after
every step with the projection onto the positive half of the line.
The package computes the law of the number of positive outcomes and
compares it with the classical coin-tossing laws.
"""

__version__ = "0.1.0"

from .basis import StateVector, initial_state, project_negative, project_positive
from .cmv import BandedUnitary, build_cmv, build_coined, gauge_transform
from .coins import Coin, VerblunskySequence, coin_from_alpha, fair_extend
from .engines import (
    OccupationDistribution,
    brute_force,
    density_recursion,
    run_engine,
    transform_recursion,
)
from .errors import (
    EngineGuardError,
    InvalidConfigError,
    OccupationError,
    OutputError,
)
from .models import ModelSpec, build_unitary, catalog

__all__ = [
    "__version__",
    "BandedUnitary",
    "Coin",
    "EngineGuardError",
    "InvalidConfigError",
    "ModelSpec",
    "OccupationDistribution",
    "OccupationError",
    "OutputError",
    "StateVector",
    "VerblunskySequence",
    "brute_force",
    "build_cmv",
    "build_coined",
    "build_unitary",
    "catalog",
    "coin_from_alpha",
    "density_recursion",
    "fair_extend",
    "gauge_transform",
    "initial_state",
    "project_negative",
    "project_positive",
    "run_engine",
    "transform_recursion",
]
