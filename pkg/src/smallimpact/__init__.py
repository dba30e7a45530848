"""Asymptotically optimal trading under small linear price impact."""
from .errors import (CeUndefined, ConfigError, ConvergenceError, DomainError, GridError, InsufficientHorizon,
                     NotPositiveDefinite, NotProvided, NotSymmetric, SimulationError, SmallImpactError,
                     StiffnessError)
from .frictionless import MarketModel, StatePoint, solve_bachelier_exp, solve_statevar_exp
from .pde import PdeGrid
from .simkit import McConfig, PolicySpec, simulate_paths

__version__ = "0.1.0"
