"""Named parameter sets: figure panels, the Cs channel, baselines and the Stark mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (TWO_PI, DecayRates, DriveParams, PhysicalChannel, Units,
                   decay_from_lifetimes, vdd_from_channel)
from .gate import AdiabaticPulse, _lab_final_cg, compose
from .hamiltonians import effective_rabi, resonance_order
from .numerics import IntegratorConfig
from .sweeps import StarkField, stark_to_drive

# Gate time for the Cs robustness presets, in us. It maximises the worst
# fidelity over a +-10% timing window on a 1 ns grid for delta0/2pi = 75.6 MHz
# (the first plateau of the 24-photon resonance).
CS_GATE_TIME = 1.312

CS_LIFETIMES = (270.0, 314.0, 361.0, 406.0)

CS_CHANNEL = PhysicalChannel(
    c3=-154968.0, r=20.0, lifetimes=CS_LIFETIMES,
    label="Cs 90S1/2 + 96S1/2 -> 90P1/2 + 95P1/2", delta0_mhz=75.6)

# Rb n = 37 Stark-tuned intermediate drive: w/2pi = 1 MHz, V = w/0.75,
# E_dc = 1.69 V/cm and E_rf = 0.1 E_dc. kappa and the bare defect are solved
# from delta0' = 16 w = 12 V and A' = 13 V.
RB37_OMEGA = TWO_PI * 1.0
RB37_VDD = RB37_OMEGA / 0.75
RB37_E_DC = 1.69
RB37_STARK = StarkField(
    e_dc=RB37_E_DC, e_rf=0.1 * RB37_E_DC,
    kappa=13.0 * RB37_VDD / (0.2 * RB37_E_DC ** 2),
    delta0_bare=12.0 * RB37_VDD - 13.0 * RB37_VDD / 0.2)


@dataclass(frozen=True)
class Preset:
    """A named configuration; which fields are set depends on ``kind``.

    ``kind`` is ``drive`` (params + duration), ``pulse`` (adiabatic baseline)
    or ``stark`` (field parameters mapped to a drive).
    """

    name: str
    kind: str
    description: str
    params: DriveParams | None = None
    duration: float | None = None
    channel: PhysicalChannel | None = None
    pulse: AdiabaticPulse | None = None
    v_dd: float | None = None
    stark: StarkField | None = None

    @property
    def decay(self) -> DecayRates | None:
        return None if self.channel is None else decay_from_lifetimes(self.channel)

    @property
    def units(self) -> Units:
        if self.params is not None:
            return self.params.units
        return self.pulse.units

    def summary(self) -> str:
        if self.kind == "pulse":
            p = self.pulse
            body = (f"s1/2pi={p.s1 / TWO_PI:g} MHz/us s2/2pi={p.s2 / TWO_PI:g} MHz/us^5 "
                    f"T={p.total_t:g} us t1={p.t1:g} t2={p.t2:g} V/2pi={self.v_dd / TWO_PI:g} MHz")
        else:
            p = self.params
            if p.units == Units.DIMENSIONLESS:
                a, d0, w = p.ratios()
                body = f"(A, delta0, omega)/V = ({a:g}, {d0:g}, {w:g})"
                if self.duration is not None:
                    body += f" V*T = 2pi x {p.v_dd * self.duration / TWO_PI:.4g}"
            else:
                mhz = [x / TWO_PI for x in (p.v_dd, p.a, p.delta0, p.omega)]
                body = ("(V, A, delta0, omega)/2pi = (" + ", ".join(f"{x:.4g}" for x in mhz)
                        + ") MHz")
                if self.duration is not None:
                    body += f" T = {self.duration:g} us"
        if self.channel is not None:
            body += " lifetimes=" + "/".join(f"{x:g}" for x in self.channel.lifetimes) + " us"
        if self.stark is not None:
            s = self.stark
            body += f" E_dc={s.e_dc:g} V/cm E_rf={s.e_rf:g} V/cm"
        return f"{self.name:22s} {self.kind:6s} {body}  # {self.description}"


def _panel(name, a, d0, w, duration, description):
    return Preset(name, "drive", description, DriveParams(1.0, a, d0, w), duration)


def _rabi_cycle(a, d0, w):
    """One cycle of the resonant harmonic: 2pi / |V J_m(A/w)|."""
    p = DriveParams(1.0, a, d0, w)
    m, _ = resonance_order(p)
    return TWO_PI / abs(effective_rabi(p, m))


def _cs(name, delta0_mhz, description, a_mhz=83.2, w_mhz=3.15, duration=CS_GATE_TIME):
    v = vdd_from_channel(CS_CHANNEL)
    params = DriveParams(v, TWO_PI * a_mhz, TWO_PI * delta0_mhz, TWO_PI * w_mhz, 0.0,
                         Units.RAD_PER_US)
    return Preset(name, "drive", description, params, duration, channel=CS_CHANNEL)


def _build() -> dict[str, Preset]:
    items = [
        _panel("fig2", 10, 5, 1, TWO_PI, "avoided-crossing spectrum over one drive period"),
        _panel("fig3", 4, 20, 20, TWO_PI * 30, "weak driving, three Rabi cycles"),
        _panel("fig4_abc", 18, 6, 6, _rabi_cycle(18, 6, 6), "strong driving, fast"),
        _panel("fig4_def", 18, 6, 3, TWO_PI * 4, "strong driving, T = 12 drive periods"),
        _panel("fig4_ghi", 18, 6, 0.75, TWO_PI * 5 / 0.75,
               "strong driving, slow passage, T = 5 drive periods"),
        _panel("fig5_abc", 13, 12, 12, _rabi_cycle(13, 12, 12), "intermediate driving, fast"),
        _panel("fig5_def", 13, 12, 3, TWO_PI * 4, "intermediate driving, V*T = 2pi x 4"),
        _panel("fig5_ghi", 13, 12, 0.75, TWO_PI * 4,
               "intermediate driving, slow passage, T = 3 drive periods"),
        _cs("cs_channel", 75.6, "Cs channel with the quoted defect"),
        _cs("cs_robust_base", 76.8, "Cs robustness-map base (defect 76.8 MHz)"),
        _cs("cs_robust_base_text", 75.6, "Cs robustness-map base with the 75.6 MHz defect"),
        _cs("cs_intermediate", 38.4, "slow-passage intermediate set scaled to V/2pi = 3.2 MHz",
            a_mhz=41.6, w_mhz=2.4, duration=1.25),
        Preset("adiabatic_beterov", "pulse", "double adiabatic passage baseline",
               pulse=AdiabaticPulse.symmetric(TWO_PI * -10.0, TWO_PI * -2600.0, 1.8,
                                              label="adiabatic_beterov"),
               v_dd=TWO_PI * 2.1),
        Preset("rb37_stark", "stark", "Rb n=37 dc+rf Stark drive mapped to the slow intermediate set",
               params=stark_to_drive(RB37_STARK, RB37_OMEGA, RB37_VDD),
               duration=TWO_PI * 4 / RB37_VDD, stark=RB37_STARK),
    ]
    return {p.name: p for p in items}


PRESETS: dict[str, Preset] = _build()


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


def list_presets() -> list[str]:
    return [p.summary() for p in PRESETS.values()]


def gate_time_window_optimum(p: DriveParams, t_lo: float, t_hi: float, step: float,
                             window: float = 0.1, decay: DecayRates | None = None) -> float:
    """Gate time in [t_lo, t_hi] maximising the worst fidelity over (1 +- window) T.

    Evaluated on a grid of spacing ``step``; among centres whose worst case
    agrees within 1e-6 the one with the highest nominal fidelity wins. This is
    how :data:`CS_GATE_TIME` was frozen.
    """
    n_lo = math.floor(t_lo * (1 - window) / step)
    n_hi = math.ceil(t_hi * (1 + window) / step)
    grid_t = step * np.arange(n_lo, n_hi + 1)
    c_g, status = _lab_final_cg(p, decay, grid_t, IntegratorConfig(), None)
    fid = np.array([compose(c, t, decay).fidelity for c, t in zip(c_g, grid_t)])
    fid[status != 0] = -math.inf
    centres = step * np.arange(math.ceil(t_lo / step), math.floor(t_hi / step) + 1)
    worst = np.array([fid[np.abs(grid_t - t) <= window * t + 1e-9 * step].min()
                      for t in centres])
    # the worst case is often set by one shared dip; break near-ties by the nominal fidelity
    tied = worst >= worst.max() - 1e-6
    nominal = np.interp(centres, grid_t, fid)
    return float(centres[tied][np.argmax(nominal[tied])])
