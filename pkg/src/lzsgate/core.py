"""Domain types and unit conventions shared by the rest of the package.

All frequencies are stored as angular frequencies. A :class:`Units` tag on
every parameter set records whether they are expressed in units of the
dipole-dipole coupling (``V_DD = 1``) or in rad/us for physical runs; mixing
the two raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

TWO_PI = 2.0 * math.pi

# C3 = -154968 MHz um^3 at R = 20 um should give V_DD/2pi = 3.2 MHz; only the
# proportionality is known, so the constant is back-solved from that pair.
CS_GEOMETRIC_PREFACTOR = 3.2 * 8000.0 / 154968.0


class Units(str, Enum):
    DIMENSIONLESS = "dimensionless"
    RAD_PER_US = "rad/us"


def check_units(*tags: Units) -> Units:
    """Return the common unit tag, raising if the inputs disagree."""
    first = tags[0]
    for tag in tags[1:]:
        if tag != first:
            raise ValueError(f"unit mismatch: {first.value} vs {tag.value}")
    return first


@dataclass(frozen=True)
class DriveParams:
    """Periodic drive of the Forster defect, delta(t) = delta0 + a*cos(omega*t + phi).

    Parameters
    ----------
    v_dd : float
        Dipole-dipole coupling (sets the avoided-crossing gap), > 0.
    a : float
        Drive amplitude.
    delta0 : float
        Static Forster defect.
    omega : float
        Drive angular frequency, > 0.
    phi : float
        Initial drive phase in radians.
    units : Units
        Unit system of the four frequencies.
    """

    v_dd: float
    a: float
    delta0: float
    omega: float
    phi: float = 0.0
    units: Units = Units.DIMENSIONLESS

    def __post_init__(self):
        for name in ("v_dd", "a", "delta0", "omega", "phi"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.v_dd <= 0:
            raise ValueError("v_dd must be positive")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        object.__setattr__(self, "units", Units(self.units))

    @classmethod
    def from_mhz(cls, v_dd, a, delta0, omega, phi=0.0):
        """Build from ordinary frequencies in MHz (each multiplied by 2*pi)."""
        return cls(TWO_PI * v_dd, TWO_PI * a, TWO_PI * delta0, TWO_PI * omega,
                   phi, Units.RAD_PER_US)

    @property
    def drive_period(self) -> float:
        return TWO_PI / self.omega

    def ratios(self) -> tuple[float, float, float]:
        """(A, delta0, omega) / V_DD, the form used in the figure captions."""
        return (self.a / self.v_dd, self.delta0 / self.v_dd, self.omega / self.v_dd)

    def replace(self, **changes) -> "DriveParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"v_dd": self.v_dd, "a": self.a, "delta0": self.delta0,
                "omega": self.omega, "phi": self.phi, "units": self.units.value}


@dataclass(frozen=True)
class TwoLevelState:
    """Amplitudes on |g> = |r>|r> and the symmetric pair state |e>."""

    c_g: complex
    c_e: complex

    @classmethod
    def ground(cls) -> "TwoLevelState":
        return cls(1.0 + 0j, 0j)

    @classmethod
    def from_array(cls, y) -> "TwoLevelState":
        return cls(complex(y[0]), complex(y[1]))

    @property
    def norm(self) -> float:
        return abs(self.c_g) ** 2 + abs(self.c_e) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.c_g, self.c_e], dtype=complex)


@dataclass(frozen=True)
class DecayRates:
    """Loss rates entering the conditional (non-Hermitian) Hamiltonian.

    ``gamma_g`` and ``gamma_e`` are the summed rates of the two Rydberg states
    forming each pair state. ``gamma_01`` and ``gamma_10`` are single-atom rates
    applied to the singly excited gate branches; when omitted each defaults to
    ``gamma_g / 2``.
    """

    gamma_g: float
    gamma_e: float
    gamma_01: float | None = None
    gamma_10: float | None = None
    units: Units = Units.RAD_PER_US

    def __post_init__(self):
        for name in ("gamma_g", "gamma_e", "gamma_01", "gamma_10"):
            value = getattr(self, name)
            if value is not None and not value >= 0:
                raise ValueError(f"{name} must be >= 0")
        object.__setattr__(self, "units", Units(self.units))

    @property
    def single_rates(self) -> tuple[float, float]:
        """Rates for the |01> and |10> branches."""
        g01 = self.gamma_g / 2 if self.gamma_01 is None else self.gamma_01
        g10 = self.gamma_g / 2 if self.gamma_10 is None else self.gamma_10
        return g01, g10

    def to_dict(self) -> dict:
        g01, g10 = self.single_rates
        return {"gamma_g": self.gamma_g, "gamma_e": self.gamma_e,
                "gamma_01": g01, "gamma_10": g10, "units": self.units.value}


@dataclass(frozen=True)
class PhysicalChannel:
    """A Forster channel r_a + r_b -> p_a + p_b with its dipole coefficient.

    ``lifetimes`` is ordered (tau_S1, tau_S2, tau_P1, tau_P2) in us: the two
    states making up |g> first, then the two making up |e>. ``c3`` is in
    MHz um^3 and ``r`` in um.
    """

    c3: float
    r: float
    lifetimes: tuple[float, float, float, float]
    geometric_prefactor: float = CS_GEOMETRIC_PREFACTOR
    label: str = ""
    delta0_mhz: float | None = None
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.lifetimes) != 4:
            raise ValueError("lifetimes needs four entries")
        if any(not tau > 0 for tau in self.lifetimes):
            raise ValueError("lifetimes must be positive")
        object.__setattr__(self, "lifetimes", tuple(float(x) for x in self.lifetimes))

    def to_dict(self) -> dict:
        return {"c3": self.c3, "r": self.r, "lifetimes": list(self.lifetimes),
                "geometric_prefactor": self.geometric_prefactor,
                "label": self.label, "delta0_mhz": self.delta0_mhz}


def delta_of_t(p: DriveParams, t):
    """Instantaneous Forster defect; accepts scalars or arrays."""
    if np.ndim(t) == 0:
        return p.delta0 + p.a * math.cos(p.omega * t + p.phi)
    return p.delta0 + p.a * np.cos(p.omega * np.asarray(t, dtype=float) + p.phi)


def vdd_from_channel(ch: PhysicalChannel) -> float:
    """Dipole-dipole coupling in rad/us for c3 in MHz um^3 and r in um."""
    if not ch.r > 0:
        raise ValueError("interatomic distance must be positive")
    return TWO_PI * ch.geometric_prefactor * abs(ch.c3) / ch.r ** 3


def decay_from_lifetimes(ch: PhysicalChannel) -> DecayRates:
    tau_s1, tau_s2, tau_p1, tau_p2 = ch.lifetimes
    return DecayRates(
        gamma_g=1.0 / tau_s1 + 1.0 / tau_s2,
        gamma_e=1.0 / tau_p1 + 1.0 / tau_p2,
        # qubit 1 carries the first S label: |10> has atom 1 in S1, |01> has atom 2 in S2
        gamma_01=1.0 / tau_s2,
        gamma_10=1.0 / tau_s1,
        units=Units.RAD_PER_US,
    )
