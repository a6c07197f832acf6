"""Optimal allocation of excitations and measurements for dynamic-network identification."""

from netemp.netmodel import (
    InstabilityError,
    InvalidSizeError,
    NetworkModel,
    SignalConfig,
    ValidationError,
    build_branch,
    build_cycle,
    build_general,
    spectral_radius,
)
from netemp.emp import (
    Emp,
    direct_modules,
    enumerate_branch_emps,
    enumerate_constrained,
    enumerate_cycle_emps,
    validate_necessary,
)
from netemp.infoengine import InfoResult, information_matrix, rank_emps

__version__ = "0.1.0"

__all__ = [
    "Emp",
    "InfoResult",
    "InstabilityError",
    "InvalidSizeError",
    "NetworkModel",
    "SignalConfig",
    "ValidationError",
    "build_branch",
    "build_cycle",
    "build_general",
    "direct_modules",
    "enumerate_branch_emps",
    "enumerate_constrained",
    "enumerate_cycle_emps",
    "information_matrix",
    "rank_emps",
    "spectral_radius",
    "validate_necessary",
]
