"""Automated discovery of autonomous bosonic error-correcting codes."""

from .hilbert import TWO_PI, joint_operators, liouvillian, mhz
from .lindblad import IntegrationDivergedError, LindbladModel, propagate, propagate_code
from .objective import LogicalPair, average_fidelity, break_even, modified_average_fidelity

__all__ = [
    "TWO_PI",
    "IntegrationDivergedError",
    "LindbladModel",
    "LogicalPair",
    "average_fidelity",
    "break_even",
    "joint_operators",
    "liouvillian",
    "mhz",
    "modified_average_fidelity",
    "propagate",
    "propagate_code",
]

__version__ = "0.1.0"
