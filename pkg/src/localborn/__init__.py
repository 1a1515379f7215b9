"""Local-observer state reconstruction and scattering-driven measurement."""

from localborn.errors import (
    DegenerateDominant,
    IncompleteSet,
    LocalBornError,
    NotCommuting,
    NotIdempotent,
    QuadratureFailure,
    TieOutcome,
    ZeroOperator,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateDominant",
    "IncompleteSet",
    "LocalBornError",
    "NotCommuting",
    "NotIdempotent",
    "QuadratureFailure",
    "TieOutcome",
    "ZeroOperator",
]
