"""Inland-waterway vessel traffic flow analysis toolkit."""

from .config import Config, load_config
from .errors import (
    DegenerateClusteringError,
    DegenerateFitError,
    DomainError,
    FairwayError,
    InsufficientDataError,
    MalformedTrackError,
    NoFeasibleDensityError,
    ParseError,
    SchemaVersionError,
)

__all__ = [
    "Config",
    "load_config",
    "FairwayError",
    "DomainError",
    "MalformedTrackError",
    "DegenerateFitError",
    "InsufficientDataError",
    "DegenerateClusteringError",
    "NoFeasibleDensityError",
    "ParseError",
    "SchemaVersionError",
]

__version__ = "0.1.0"
