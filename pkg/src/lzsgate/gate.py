"""CZ gate built on the doubly-excited pair-state dynamics, plus two baselines.

Only the |11> input reaches the doubly excited state |g>; |00> never leaves the
qubit manifold and |01>, |10> sit in a single Rydberg state without a Forster
partner. Those two branches carry no dynamical phase (the excitation pulses
and a rotating reference absorb bare Rydberg energies) and decay with the
single-atom rate. Lost population is discarded, never renormalised, so
fidelities here are lower bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend, _model
from .core import TWO_PI, DecayRates, DriveParams, Units, check_units
from .hamiltonians import LAB, Frame, FrameKind, kernel_model
from .numerics import IntegrationError, IntegratorConfig

_CZ_SIGNS = np.array([1.0, 1.0, 1.0, -1.0])


def cz_fidelity(amps) -> float:
    """|<psi_f| U_cz |psi_0>|^2 for psi_0 = (|00> + |01> + |10> + |11>)/2.

    Examples
    --------
    >>> cz_fidelity([0.5, 0.5, 0.5, -0.5])
    1.0
    >>> cz_fidelity([0.5, 0.5, 0.5, 0.5])
    0.25
    """
    overlap = np.dot(np.conj(np.asarray(amps, dtype=complex)), _CZ_SIGNS) / 2.0
    return float(abs(overlap) ** 2)


@dataclass(frozen=True)
class GateResult:
    amp_00: complex
    amp_01: complex
    amp_10: complex
    amp_11: complex
    fidelity: float
    scheme: str = ""
    duration: float = math.nan

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.amp_00, self.amp_01, self.amp_10, self.amp_11])

    @property
    def c_g(self) -> complex:
        """Final |g> amplitude of the doubly excited branch."""
        return 2.0 * self.amp_11

    def to_dict(self) -> dict:
        out = {}
        for key in ("amp_00", "amp_01", "amp_10", "amp_11"):
            z = complex(getattr(self, key))
            out[key] = [z.real, z.imag]
        out.update(fidelity=self.fidelity, scheme=self.scheme, duration=self.duration)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "GateResult":
        amps = {k: complex(*data[k]) for k in ("amp_00", "amp_01", "amp_10", "amp_11")}
        return cls(**amps, fidelity=float(data["fidelity"]), scheme=data.get("scheme", ""),
                   duration=float(data.get("duration", math.nan)))


def compose(c_g: complex, duration: float, decay: DecayRates | None,
            scheme: str = "") -> GateResult:
    """Assemble the four branch amplitudes from the |11> branch's final c_g."""
    g01, g10 = (0.0, 0.0) if decay is None else decay.single_rates
    amps = (0.5 + 0j,
            0.5 * math.exp(-0.5 * g01 * duration) + 0j,
            0.5 * math.exp(-0.5 * g10 * duration) + 0j,
            0.5 * complex(c_g))
    return GateResult(*amps, fidelity=cz_fidelity(amps), scheme=scheme, duration=duration)


def _lab_final_cg(p: DriveParams, decay: DecayRates | None, durations,
                  cfg: IntegratorConfig, backend: str | None):
    gg = ge = 0.0
    if decay is not None:
        check_units(p.units, decay.units)
        gg, ge = decay.gamma_g, decay.gamma_e
    finals, status = _backend.run_lab_batch(
        dict(v=p.v_dd, a=p.a, d0=p.delta0, w=p.omega, phi=p.phi, gg=gg, ge=ge,
             t1=np.atleast_1d(np.asarray(durations, dtype=float))), cfg, backend)
    return finals[:, 0], status


def run_cz_lzs(p: DriveParams, decay: DecayRates | None, duration: float,
               cfg: IntegratorConfig = IntegratorConfig(), frame: Frame = LAB,
               backend: str | None = None) -> GateResult:
    """CZ gate whose |11> branch is driven by the periodic Forster-defect modulation.

    Lab-frame runs go through the same batch kernel call as the sweeps, so a
    zero-deviation sweep cell reproduces this result bit for bit.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    if frame.kind == FrameKind.LAB:
        cg, status = _lab_final_cg(p, decay, [duration], cfg, backend)
        if status[0] != _backend.OK:
            _diagnose(p, decay, duration, cfg, backend)
        c_g = cg[0]
    else:
        model = kernel_model(p, frame, decay)
        ys, _ = _backend.run_model(model, [1.0, 0.0], 0.0, [duration], cfg, backend)
        c_g = ys[-1, 0]
    return compose(c_g, duration, decay, "lzs")


def coherent_params(v_dd: float, units: Units = Units.DIMENSIONLESS) -> DriveParams:
    """Undriven, exactly resonant coupling (A = delta0 = 0)."""
    return DriveParams(v_dd, 0.0, 0.0, 1.0, 0.0, units)


def run_cz_coherent(v_dd: float, decay: DecayRates | None, duration: float | None = None,
                    cfg: IntegratorConfig = IntegratorConfig(),
                    units: Units = Units.DIMENSIONLESS, backend: str | None = None) -> GateResult:
    """CZ gate from a resonant 2pi Rabi cycle on the pair states (nominal 2pi/V)."""
    duration = TWO_PI / v_dd if duration is None else duration
    if not duration > 0:
        raise ValueError("duration must be positive")
    p = coherent_params(v_dd, units)
    cg, status = _lab_final_cg(p, decay, [duration], cfg, backend)
    if status[0] != _backend.OK:
        _diagnose(p, decay, duration, cfg, backend)
    return compose(cg[0], duration, decay, "coherent")


@dataclass(frozen=True)
class AdiabaticPulse:
    """Two power-law sweeps delta_k(t) = s1 (t - t_k) + s2 (t - t_k)^5.

    The first acts on [0, T/2), the second on [T/2, T]. Rates are angular
    (rad/us per us and per us^5 in physical units).
    """

    s1: float
    s2: float
    total_t: float
    t1: float
    t2: float
    units: Units = Units.RAD_PER_US
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if not (0 < self.t1 < self.total_t / 2 <= self.t2 < self.total_t):
            raise ValueError("need 0 < t1 < T/2 <= t2 < T")
        object.__setattr__(self, "units", Units(self.units))

    @classmethod
    def symmetric(cls, s1, s2, total_t, units=Units.RAD_PER_US, label=""):
        return cls(s1, s2, total_t, total_t / 4, 3 * total_t / 4, units, label)

    def segments(self, timing_error: float = 0.0) -> list[tuple[float, float, float]]:
        """(start, end, centre) of each sweep.

        A timing error stretches every sweep window by (1 + timing_error); the
        sweep centre keeps its relative position inside its window.
        """
        if not -0.5 < timing_error < 0.5:
            raise ValueError("timing error must lie in (-0.5, 0.5)")
        scale = 1.0 + timing_error
        half = 0.5 * self.total_t
        out, start = [], 0.0
        for nominal_start, centre in ((0.0, self.t1), (half, self.t2)):
            length = half * scale
            out.append((start, start + length, start + (centre - nominal_start) * scale))
            start += length
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["units"] = self.units.value
        return d


def run_cz_adiabatic(pulse: AdiabaticPulse, v_dd: float, decay: DecayRates | None,
                     cfg: IntegratorConfig = IntegratorConfig(), timing_error: float = 0.0,
                     backend: str | None = None) -> GateResult:
    """CZ gate from two adiabatic passages through the Forster resonance."""
    gg = ge = 0.0
    if decay is not None:
        check_units(pulse.units, decay.units)
        gg, ge = decay.gamma_g, decay.gamma_e
    y = np.array([1.0, 0.0], complex)
    segments = pulse.segments(timing_error)
    for start, end, centre in segments:
        model = _model.KernelModel.build(_model.POWERLAW, v=v_dd, s1=pulse.s1, s2=pulse.s2,
                                         c=centre, gg=gg, ge=ge)
        ys, _ = _backend.run_model(model, y, start, [end], cfg, backend)
        y = ys[-1]
    return compose(y[0], segments[-1][1], decay, "adiabatic")


def _diagnose(p, decay, duration, cfg, backend):
    """Re-run a failed batch entry singly so the error carries the time reached."""
    _backend.run_model(kernel_model(p, LAB, decay), [1.0, 0.0], 0.0, [duration], cfg, backend)
    raise IntegrationError("batch propagation failed", math.nan)
