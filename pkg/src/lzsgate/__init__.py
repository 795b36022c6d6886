"""Two-level dynamics of a periodically driven Forster resonance and CZ gates built on it."""

from ._backend import BACKEND
from .core import (DecayRates, DriveParams, PhysicalChannel, TwoLevelState, Units,
                   decay_from_lifetimes, delta_of_t, vdd_from_channel)
from .numerics import IntegrationError, IntegratorConfig, bessel_j

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DecayRates", "DriveParams", "IntegrationError", "IntegratorConfig",
    "PhysicalChannel", "TwoLevelState", "Units", "bessel_j", "decay_from_lifetimes",
    "delta_of_t", "vdd_from_channel",
]
