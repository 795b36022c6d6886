"""Robustness scans, regime labels, Stark-field drive mapping and Rabi-rate extraction."""

from __future__ import annotations

import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import find_peaks

from . import _backend
from .core import DecayRates, DriveParams, Units, check_units
from .dynamics import Trajectory
from .gate import coherent_params, compose, run_cz_adiabatic
from .numerics import IntegrationError, IntegratorConfig

MISSING = math.nan

# regime thresholds, in units of the coupling or of E_q = sqrt(delta0^2 + V^2)
WEAK_FRACTION = 1.0 / 5.0
STRONG_EXCESS = 3.0

STARK_RATIO_LIMIT = 0.3

# 2D maps trade the default 1e-11 for 1e-8: ~1e-6 amplitude error, 4x fewer steps
MAP_CONFIG = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10)

METRICS = ("fidelity", "p_g_final", "phase_over_pi")
AXES = ("a", "delta0", "omega", "phi")


class Regime(str, Enum):
    WEAK = "weak"
    STRONG = "strong"
    INTERMEDIATE = "intermediate"
    OTHER = "other"


@dataclass(eq=False)
class SweepGrid:
    """Axis values (fractional deviations, or multiples of pi for ``phi``) and the metric.

    ``data`` has shape ``(len(axis1_values),)`` or
    ``(len(axis1_values), len(axis2_values))``; failed cells hold NaN.
    """

    axis1_name: str
    axis1_values: np.ndarray
    metric: str
    data: np.ndarray
    axis2_name: str | None = None
    axis2_values: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        self.axis1_values = np.asarray(self.axis1_values, dtype=float)
        self.data = np.asarray(self.data, dtype=float)
        shape = (len(self.axis1_values),)
        if self.axis2_name is not None:
            self.axis2_values = np.asarray(self.axis2_values, dtype=float)
            shape += (len(self.axis2_values),)
        if self.data.shape != shape:
            raise ValueError(f"data shape {self.data.shape} does not match axes {shape}")

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def missing(self) -> int:
        return int(np.isnan(self.data).sum())

    def to_csv(self) -> str:
        """Header comments, then one row per axis1 value.

        1D grids have columns (axis1, metric). 2D grids start with a row
        holding the axis2 values after the corner cell.
        """
        buf = io.StringIO()
        buf.write(f"# metric: {self.metric}\n")
        buf.write("# missing cells (integration failures) are written as nan\n")
        fmt = "%.12g"
        if self.ndim == 1:
            buf.write(f"{self.axis1_name},{self.metric}\n")
            np.savetxt(buf, np.column_stack([self.axis1_values, self.data]), fmt=fmt,
                       delimiter=",")
        else:
            corner = f"{self.axis1_name}\\{self.axis2_name}"
            buf.write(corner + "," + ",".join(fmt % v for v in self.axis2_values) + "\n")
            np.savetxt(buf, np.column_stack([self.axis1_values, self.data]), fmt=fmt,
                       delimiter=",")
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(values):
            return [None if math.isnan(v) else float(v) for v in np.ravel(values)]

        axes = [{"name": self.axis1_name, "values": clean(self.axis1_values)}]
        if self.axis2_name is not None:
            axes.append({"name": self.axis2_name, "values": clean(self.axis2_values)})
        record = {"metric": self.metric, "axes": axes, "shape": list(self.data.shape),
                  "data": clean(self.data), "missing": None, "metadata": self.metadata}
        return json.dumps(record, indent=2, sort_keys=True)


def metric_values(c_g: np.ndarray, durations: np.ndarray, decay: DecayRates | None,
                  metric: str) -> np.ndarray:
    """Cell metric from final |g> amplitudes; NaN amplitudes propagate."""
    c_g = np.asarray(c_g, dtype=complex)
    if metric == "p_g_final":
        return np.abs(c_g) ** 2
    if metric == "phase_over_pi":
        return np.mod(np.angle(c_g), 2 * math.pi) / math.pi
    if metric == "fidelity":
        return np.array([compose(c, T, decay).fidelity if np.isfinite(c) else MISSING
                         for c, T in zip(c_g, np.broadcast_to(durations, c_g.shape))])
    raise ValueError(f"unknown metric {metric!r}")


def _decay_columns(p: DriveParams, decay: DecayRates | None):
    if decay is None:
        return 0.0, 0.0
    check_units(p.units, decay.units)
    return decay.gamma_g, decay.gamma_e


def _lab_batch(columns: dict, cfg: IntegratorConfig, workers: int, backend: str | None):
    """Final c_g for every row of ``columns``; chunks run concurrently when workers > 1."""
    n = max(np.size(v) for v in columns.values())
    columns = {k: np.broadcast_to(np.asarray(v, dtype=float), (n,)) for k, v in columns.items()}
    if workers <= 1 or n < 2 * workers:
        finals, status = _backend.run_lab_batch(columns, cfg, backend)
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        chunks = [{k: v[a:b] for k, v in columns.items()} for a, b in zip(bounds, bounds[1:])]
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: _backend.run_lab_batch(c, cfg, backend), chunks))
        finals = np.concatenate([f for f, _ in parts])
        status = np.concatenate([s for _, s in parts])
    c_g = finals[:, 0].copy()
    c_g[status != _backend.OK] = complex(MISSING, MISSING)
    return c_g


def scan_time_deviation(scheme: str, base, deviations, *, duration: float | None = None,
                        v_dd: float | None = None, decay: DecayRates | None = None,
                        cfg: IntegratorConfig = IntegratorConfig(), metric: str = "fidelity",
                        workers: int = 1, backend: str | None = None) -> SweepGrid:
    """Metric against a fractional gate-time deviation.

    Parameters
    ----------
    scheme : {"lzs", "coherent", "adiabatic"}
    base
        DriveParams for ``lzs``; DriveParams or the coupling for ``coherent``;
        AdiabaticPulse for ``adiabatic``.
    deviations
        Fractional deviations Delta in (-0.5, 0.5). ``lzs`` and ``coherent``
        run for ``duration * (1 + Delta)``; ``adiabatic`` stretches each sweep
        window by ``1 + Delta``.
    duration
        Nominal gate time (``lzs`` requires it; ``coherent`` defaults to 2pi/V).
    v_dd
        Coupling for ``adiabatic``.
    """
    devs = np.asarray(deviations, dtype=float)
    if np.any(np.abs(devs) >= 0.5):
        raise ValueError("deviations must lie in (-0.5, 0.5)")
    meta = {"scheme": scheme, "metric": metric, "cfg": cfg.to_dict(),
            "decay": None if decay is None else decay.to_dict()}
    if scheme in ("lzs", "coherent"):
        if scheme == "coherent":
            if isinstance(base, DriveParams):
                p = coherent_params(base.v_dd, base.units)
            else:
                p = coherent_params(float(base), decay.units if decay else Units.DIMENSIONLESS)
            duration = 2 * math.pi / p.v_dd if duration is None else duration
        else:
            if duration is None:
                raise ValueError("lzs scans need a nominal duration")
            p = base
        gg, ge = _decay_columns(p, decay)
        durations = duration * (1.0 + devs)
        c_g = _lab_batch(dict(v=p.v_dd, a=p.a, d0=p.delta0, w=p.omega, phi=p.phi, gg=gg, ge=ge,
                              t1=durations), cfg, workers, backend)
        data = metric_values(c_g, durations, decay, metric)
        meta.update(params=p.to_dict(), duration=duration)
    elif scheme == "adiabatic":
        if v_dd is None:
            raise ValueError("adiabatic scans need v_dd")
        data = np.empty(len(devs))
        for i, d in enumerate(devs):
            try:
                res = run_cz_adiabatic(base, v_dd, decay, cfg, timing_error=float(d),
                                       backend=backend)
            except IntegrationError:
                data[i] = MISSING
                continue
            data[i] = metric_values(np.array([res.c_g]), np.array([res.duration]), decay,
                                    metric)[0]
        meta.update(pulse=base.to_dict(), v_dd=v_dd)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return SweepGrid("deviation", devs, metric, data, metadata=meta)


def perturb(p: DriveParams, axis: str, delta: float) -> DriveParams:
    """Apply a fractional deviation on a/delta0/omega, or delta*pi added to phi."""
    if axis == "phi":
        return p.replace(phi=p.phi + delta * math.pi)
    if axis in ("a", "delta0", "omega"):
        return p.replace(**{axis: getattr(p, axis) * (1.0 + delta)})
    raise ValueError(f"unknown axis {axis!r}; choose from {AXES}")


def scan_2d(base: DriveParams, duration: float, axes=("a", "delta0"),
            ranges=((-0.1, 0.1), (-0.1, 0.1)), resolution=(41, 41), *,
            decay: DecayRates | None = None, metric: str = "fidelity",
            cfg: IntegratorConfig = MAP_CONFIG, workers: int = 1,
            backend: str | None = None) -> SweepGrid:
    """Gate metric over a rectangular grid of two drive-parameter deviations.

    Cells are laid out row-major (axis1 slow, axis2 fast) and evaluated by the
    batch kernel; results do not depend on ``workers``. The default
    integrator tolerance is the looser ``MAP_CONFIG``.
    """
    ax1, ax2 = axes
    if ax1 == ax2 or ax1 not in AXES or ax2 not in AXES:
        raise ValueError(f"axes must be two distinct names from {AXES}")
    n1, n2 = resolution
    if n1 < 2 or n2 < 2:
        raise ValueError("resolution must be >= 2 per axis")
    v1 = np.linspace(*ranges[0], n1)
    v2 = np.linspace(*ranges[1], n2)
    d1, d2 = (g.ravel() for g in np.meshgrid(v1, v2, indexing="ij"))
    cols = {"a": np.full(d1.size, base.a), "delta0": np.full(d1.size, base.delta0),
            "omega": np.full(d1.size, base.omega), "phi": np.full(d1.size, base.phi)}
    for name, d in ((ax1, d1), (ax2, d2)):
        cols[name] = cols[name] + d * math.pi if name == "phi" else cols[name] * (1.0 + d)
    gg, ge = _decay_columns(base, decay)
    c_g = _lab_batch(dict(v=base.v_dd, a=cols["a"], d0=cols["delta0"], w=cols["omega"],
                          phi=cols["phi"], gg=gg, ge=ge, t1=duration), cfg, workers, backend)
    data = metric_values(c_g, np.full(c_g.shape, duration), decay, metric).reshape(n1, n2)
    meta = {"scheme": "lzs", "metric": metric, "params": base.to_dict(), "duration": duration,
            "decay": None if decay is None else decay.to_dict(), "cfg": cfg.to_dict()}
    return SweepGrid(ax1, v1, metric, data, ax2, v2, meta)


def find_ridges(grid: SweepGrid, axis: str = "delta0", base_value: float = 1.0,
                min_height: float = 0.9) -> np.ndarray:
    """Absolute positions of high-metric ridges along one axis of a 2D grid.

    The grid is first collapsed by taking the maximum over the other axis;
    local maxima above ``min_height`` are refined by a three-point parabola
    and returned as ``base_value * (1 + deviation)``.
    """
    if grid.ndim != 2:
        raise ValueError("ridges need a 2D grid")
    if axis == grid.axis2_name:
        profile, values = np.nanmax(grid.data, axis=0), grid.axis2_values
    elif axis == grid.axis1_name:
        profile, values = np.nanmax(grid.data, axis=1), grid.axis1_values
    else:
        raise ValueError(f"grid has no axis {axis!r}")
    peaks, _ = find_peaks(np.nan_to_num(profile, nan=-np.inf), height=min_height)
    step = values[1] - values[0]
    refined = []
    for k in peaks:
        y0, y1, y2 = profile[k - 1], profile[k], profile[k + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        refined.append(values[k] + shift * step)
    return base_value * (1.0 + np.array(refined))


def classify_regime(p: DriveParams) -> Regime:
    """Label the drive as weak, strong or intermediate using the declared thresholds."""
    e_q = math.hypot(p.delta0, p.v_dd)
    if p.a < WEAK_FRACTION * e_q:
        return Regime.WEAK
    if p.a - p.delta0 > STRONG_EXCESS * p.v_dd:
        return Regime.STRONG
    if abs(p.a - p.delta0) <= STRONG_EXCESS * p.v_dd:
        return Regime.INTERMEDIATE
    return Regime.OTHER


@dataclass(frozen=True)
class StarkField:
    """Static plus rf field E(t) = e_dc + e_rf cos(wt) acting on the Forster defect.

    ``kappa`` collects the quadratic polarisabilities of the four states into
    one angular-frequency shift per (V/cm)^2; ``delta0_bare`` is the zero-field
    defect.
    """

    e_dc: float
    e_rf: float
    kappa: float
    delta0_bare: float

    def __post_init__(self):
        if not self.e_dc > 0:
            raise ValueError("e_dc must be positive")
        if not self.e_rf >= 0:
            raise ValueError("e_rf must be >= 0")


def stark_to_drive(f: StarkField, omega: float, v_dd: float,
                   units: Units = Units.RAD_PER_US) -> DriveParams:
    """Drive obtained by expanding kappa E(t)^2 to first order in e_rf.

    delta0' = delta0_bare + kappa e_dc^2 and A' = 2 kappa e_rf e_dc; the
    second harmonic (kappa e_rf^2 / 2) is dropped, so a warning is issued
    once e_rf / e_dc exceeds 0.3.
    """
    if f.e_rf / f.e_dc > STARK_RATIO_LIMIT:
        warnings.warn(f"e_rf/e_dc = {f.e_rf / f.e_dc:.3g} > {STARK_RATIO_LIMIT}: "
                      "first-order field expansion is inaccurate", stacklevel=2)
    delta0 = f.delta0_bare + f.kappa * f.e_dc ** 2
    amplitude = 2.0 * f.kappa * f.e_rf * f.e_dc
    return DriveParams(v_dd, amplitude, delta0, omega, 0.0, units)


def extract_rabi_frequency(traj: Trajectory, prominence: float = 0.5) -> float:
    """Angular frequency of the dominant P_e oscillation from its peak spacing.

    Peaks must rise by ``prominence`` times the peak-to-peak P_e swing, which
    suppresses the small fast ripple of the drive. The frequency is 2pi times
    (number of peaks - 1) over the first-to-last peak time.
    """
    p_e = traj.p_e
    swing = float(np.ptp(p_e))
    if swing < 1e-9:
        raise ValueError("P_e is flat; no oscillation to measure")
    peaks, _ = find_peaks(p_e, prominence=prominence * swing)
    if len(peaks) < 3:
        raise ValueError(f"found {len(peaks)} P_e peaks, need at least 3")
    span = traj.t[peaks[-1]] - traj.t[peaks[0]]
    return 2 * math.pi * (len(peaks) - 1) / span
