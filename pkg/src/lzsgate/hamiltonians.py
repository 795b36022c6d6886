"""Two-level generators in the lab, rotated, Floquet-truncated and interaction frames.

All frames share the form ``-1/2 [[0, X(t)], [conj X(t), 2 D(t)]]``:

========================  ==================================================  =========
frame                     X(t)                                                D(t)
========================  ==================================================  =========
lab                       V                                                   delta(t)
rotated                   V exp(+i (A/w) sin wt)                              delta0
floquet(N)                sum_{|n|<=N} Omega_n exp(+i n w t)                  delta0
interaction               sum_{|n|<=N} (-1)^n Omega_n exp(+i (delta0 - n w) t)  0
========================  ==================================================  =========

with ``Omega_n = V J_n(A/w)``. The rotated frame removes the drive from |e> by
``U(t) = exp(-i (A/w) sin(wt) |e><e|)``; the interaction frame additionally
removes ``delta0``. Neither touches |g>, so c_g is the same in every frame.
Only the lab frame supports a nonzero drive phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _model
from .core import DecayRates, DriveParams, check_units, delta_of_t
from .numerics import bessel_j, bessel_j_orders

# truncation target for the adaptive harmonic cutoff: dropped sum of |J_n|
CUTOFF_TAIL = 1e-12
CUTOFF_MARGIN = 10


class FrameKind(str, Enum):
    LAB = "lab"
    ROTATED = "rotated"
    INTERACTION = "interaction"
    FLOQUET = "floquet"


@dataclass(frozen=True)
class Frame:
    """Frame selector; ``cutoff`` is the harmonic cutoff N for the series frames.

    ``cutoff=None`` on a series frame means :func:`default_cutoff`.
    """

    kind: FrameKind
    cutoff: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", FrameKind(self.kind))
        if self.cutoff is not None:
            if self.kind in (FrameKind.LAB, FrameKind.ROTATED):
                raise ValueError(f"{self.kind.value} frame takes no cutoff")
            if int(self.cutoff) != self.cutoff or self.cutoff < 1:
                raise ValueError("harmonic cutoff must be an integer >= 1")
            object.__setattr__(self, "cutoff", int(self.cutoff))

    @classmethod
    def lab(cls) -> "Frame":
        return cls(FrameKind.LAB)

    @classmethod
    def rotated(cls) -> "Frame":
        return cls(FrameKind.ROTATED)

    @classmethod
    def interaction(cls, cutoff: int | None = None) -> "Frame":
        return cls(FrameKind.INTERACTION, cutoff)

    @classmethod
    def floquet(cls, cutoff: int | None = None) -> "Frame":
        return cls(FrameKind.FLOQUET, cutoff)

    @classmethod
    def parse(cls, text: str) -> "Frame":
        """Parse ``lab``, ``rotated``, ``interaction[:N]`` or ``floquet[:N]``."""
        name, _, n = str(text).strip().lower().partition(":")
        return cls(FrameKind(name), int(n) if n else None)

    def label(self) -> str:
        return self.kind.value if self.cutoff is None else f"{self.kind.value}:{self.cutoff}"


LAB = Frame.lab()
ROTATED = Frame.rotated()


@dataclass(frozen=True)
class SpectralPoint:
    """Lab-frame eigenvalues and mixing angle; fields are arrays for array input."""

    t: float | np.ndarray
    e_plus: float | np.ndarray
    e_minus: float | np.ndarray
    theta: float | np.ndarray

    @property
    def gap(self):
        return self.e_plus - self.e_minus


def default_cutoff(p: DriveParams) -> int:
    """Harmonic cutoff for the series frames.

    Starts at ceil(A/w) + 10 and grows until the dropped Bessel weight
    sum_{|n|>N} |J_n(A/w)| is below ``CUTOFF_TAIL``, so truncation stays under
    the integrator tolerance even for large A/w.
    """
    x = abs(p.a) / p.omega
    n = math.ceil(x) + CUTOFF_MARGIN
    orders = bessel_j_orders(n + 4 * CUTOFF_MARGIN + math.ceil(x), x)
    tail = 2.0 * np.cumsum(np.abs(orders[::-1]))[::-1]  # tail[k] = 2 sum_{j>=k} |J_j|
    while n + 1 < len(tail) and tail[n + 1] >= CUTOFF_TAIL:
        n += 1
    return n


def harmonic_couplings(p: DriveParams, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Orders n = -N..N and the couplings Omega_n = V J_n(A/w)."""
    x = p.a / p.omega
    orders = np.arange(-cutoff, cutoff + 1)
    positive = bessel_j_orders(cutoff, abs(x))
    j = positive[np.abs(orders)]
    # J_{-n}(x) = (-1)^n J_n(x), J_n(-x) = (-1)^n J_n(x)
    flip = (orders < 0) != (x < 0)
    j = np.where(flip & (orders % 2 == 1), -j, j)
    return orders, p.v_dd * j


def effective_rabi(p: DriveParams, n: int) -> float:
    """Signed effective coupling of the n-th harmonic, V J_n(A/w)."""
    return p.v_dd * bessel_j(n, p.a / p.omega)


def resonance_order(p: DriveParams) -> tuple[int, float]:
    """Nearest multi-photon order m = round(delta0/w) and the mismatch delta0 - m w."""
    m = math.floor(p.delta0 / p.omega + 0.5)
    return m, p.delta0 - m * p.omega


def kernel_model(p: DriveParams, frame: Frame = LAB,
                 decay: DecayRates | None = None) -> _model.KernelModel:
    """Flat generator description consumed by the propagation backends."""
    if frame.kind != FrameKind.LAB and p.phi != 0.0:
        raise ValueError("a nonzero drive phase is only supported in the lab frame")
    gg = ge = 0.0
    if decay is not None:
        check_units(p.units, decay.units)
        gg, ge = decay.gamma_g, decay.gamma_e
    if frame.kind == FrameKind.LAB:
        return _model.KernelModel.build(_model.LAB, v=p.v_dd, a=p.a, d0=p.delta0, w=p.omega,
                                        phi=p.phi, gg=gg, ge=ge)
    if frame.kind == FrameKind.ROTATED:
        return _model.KernelModel.build(_model.ROTATED, v=p.v_dd, a=p.a, d0=p.delta0,
                                        w=p.omega, gg=gg, ge=ge)
    cutoff = default_cutoff(p) if frame.cutoff is None else frame.cutoff
    orders, omega_n = harmonic_couplings(p, cutoff)
    if frame.kind == FrameKind.FLOQUET:
        return _model.KernelModel.build(_model.HARMONIC, d0=p.delta0, w=p.omega, gg=gg, ge=ge,
                                        coef=omega_n, nu=orders * p.omega)
    sign = np.where(orders % 2 == 0, 1.0, -1.0)
    return _model.KernelModel.build(_model.HARMONIC, d0=0.0, w=p.omega, gg=gg, ge=ge,
                                    coef=sign * omega_n, nu=p.delta0 - orders * p.omega)


def hamiltonian(p: DriveParams, frame: Frame, t: float) -> np.ndarray:
    """Hermitian 2x2 generator of the given frame at time t (no decay)."""
    return _model.hamiltonian_matrix(kernel_model(p, frame), t, with_decay=False)


def instantaneous_spectrum(p: DriveParams, t) -> SpectralPoint:
    """Eigenvalues of the lab-frame matrix and the mixing angle theta in (0, pi/2).

    For H = -1/2 [[0, V], [V, 2 delta]] the eigenvalues are
    -delta/2 +- sqrt(delta^2 + V^2)/2 and theta = atan2(V, delta)/2.
    """
    d = delta_of_t(p, t)
    half_gap = 0.5 * np.hypot(d, p.v_dd)
    e_plus = -0.5 * d + half_gap
    e_minus = -0.5 * d - half_gap
    theta = 0.5 * np.arctan2(p.v_dd, d)
    if np.ndim(t) == 0:
        return SpectralPoint(float(t), float(e_plus), float(e_minus), float(theta))
    return SpectralPoint(np.asarray(t, dtype=float), e_plus, e_minus, theta)
