"""Propagation of the pair-state amplitudes and the observables read from them."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import TWO_PI, DecayRates, DriveParams, TwoLevelState
from .hamiltonians import LAB, Frame, kernel_model
from .numerics import IntegratorConfig, sample_grid, unwrap_phase, wrap_to_pi

SAMPLES_PER_PERIOD = 200
RETURN_THRESHOLD = 0.99

CSV_COLUMNS = ("t", "p_g", "p_e", "phase_g_over_pi", "norm")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled amplitudes; the observables are derived on access."""

    t: np.ndarray
    c_g: np.ndarray
    c_e: np.ndarray

    def __post_init__(self):
        if not (self.t.shape == self.c_g.shape == self.c_e.shape):
            raise ValueError("trajectory arrays must have equal length")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def p_g(self) -> np.ndarray:
        return np.abs(self.c_g) ** 2

    @property
    def p_e(self) -> np.ndarray:
        return np.abs(self.c_e) ** 2

    @property
    def norm(self) -> np.ndarray:
        return self.p_g + self.p_e

    @property
    def phase_g(self) -> np.ndarray:
        """Unwrapped arg c_g(t)."""
        return unwrap_phase(np.angle(self.c_g))

    @property
    def final_state(self) -> TwoLevelState:
        return TwoLevelState(complex(self.c_g[-1]), complex(self.c_e[-1]))

    def rows(self) -> np.ndarray:
        """Array with the CSV columns (t, p_g, p_e, phase_g/pi, norm)."""
        return np.column_stack([self.t, self.p_g, self.p_e, self.phase_g / math.pi, self.norm])

    def to_csv(self) -> str:
        buf = io.StringIO()
        np.savetxt(buf, self.rows(), fmt="%.12g", delimiter=",",
                   header=",".join(CSV_COLUMNS), comments="")
        return buf.getvalue()


def default_sample_interval(p: DriveParams, duration: float) -> float:
    """200 samples per drive period or per bare Rabi period, whichever is shorter."""
    return min(TWO_PI / p.omega, TWO_PI / p.v_dd, duration) / SAMPLES_PER_PERIOD


def propagate(p: DriveParams, frame: Frame = LAB, decay: DecayRates | None = None,
              y0: TwoLevelState | None = None, duration: float = 1.0,
              cfg: IntegratorConfig = IntegratorConfig(), backend: str | None = None) -> Trajectory:
    """Integrate the (optionally lossy) two-level system from t = 0 to ``duration``.

    The loss enters as -i/2 diag(gamma_g, gamma_e). Samples are taken every
    ``cfg.sample_interval`` (default :func:`default_sample_interval`) plus the
    endpoint.

    Raises
    ------
    IntegrationError
        If the step size underflows; carries the time reached.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    y0 = TwoLevelState.ground() if y0 is None else y0
    interval = cfg.sample_interval or default_sample_interval(p, duration)
    ts = sample_grid(0.0, duration, interval)
    model = kernel_model(p, frame, decay)
    ys, _ = _backend.run_model(model, y0.as_array(), 0.0, ts, cfg, backend)
    return Trajectory(ts, ys[:, 0].copy(), ys[:, 1].copy())


def evolve_state(p: DriveParams, frame: Frame, decay: DecayRates | None, y0: TwoLevelState,
                 t0: float, t1: float, cfg: IntegratorConfig = IntegratorConfig(),
                 backend: str | None = None) -> TwoLevelState:
    """State at t1 starting from y0 at t0; t1 < t0 integrates backwards."""
    if t1 == t0:
        return y0
    model = kernel_model(p, frame, decay)
    ys, _ = _backend.run_model(model, y0.as_array(), t0, [t1], cfg, backend)
    return TwoLevelState.from_array(ys[-1])


def cycle_metrics(traj: Trajectory) -> tuple[float, float, float]:
    """(p_g_final, phase_final, t_return) of a run started in |g>.

    ``phase_final`` is arg c_g at the last row, reported in (-pi, pi].
    ``t_return`` is the last upward crossing of P_g through 0.99
    (linearly interpolated), or the duration if there is none.
    """
    p_g = traj.p_g
    if not p_g[0] > 0.999:
        raise ValueError("trajectory must start in |g>")
    below = p_g < RETURN_THRESHOLD
    ups = np.nonzero(below[:-1] & ~below[1:])[0]
    if len(ups):
        i = ups[-1]
        frac = (RETURN_THRESHOLD - p_g[i]) / (p_g[i + 1] - p_g[i])
        t_return = float(traj.t[i] + frac * (traj.t[i + 1] - traj.t[i]))
    else:
        t_return = float(traj.t[-1])
    return float(p_g[-1]), wrap_to_pi(float(np.angle(traj.c_g[-1]))), t_return
