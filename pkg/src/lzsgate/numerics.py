"""Special functions and ODE integration primitives.

The integrator here is the generic reference path: it accepts any callable
generator ``G(t)`` with ``dy/dt = G(t) y``. The built-in two-level generator
families are also served by the compiled kernel (see ``_backend``), which runs
the same Dormand-Prince scheme and step controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal

import numpy as np

BESSEL_MAX_ORDER = 200
BESSEL_MAX_ARG = 500.0

_MAX_STEPS = 50_000_000


class IntegrationError(RuntimeError):
    """Raised when the step size underflows; ``t_reached`` is the last accepted time."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (reached t={t_reached:.12g})")
        self.t_reached = t_reached


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``max_step`` caps adaptive steps and is the step size for ``rk4``.
    ``sample_interval=None`` lets the caller pick a cadence (``propagate``
    uses 200 samples per drive period).
    """

    method: Literal["rk45", "rk4"] = "rk45"
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_step: float = math.inf
    sample_interval: float | None = None

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.method == "rk4" and not math.isfinite(self.max_step):
            raise ValueError("rk4 needs a finite max_step (its fixed step)")
        if self.sample_interval is not None and not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")

    def replace(self, **changes) -> "IntegratorConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"method": self.method, "rel_tol": self.rel_tol, "abs_tol": self.abs_tol,
                "max_step": self.max_step, "sample_interval": self.sample_interval}


# --------------------------------------------------------------------------
# Bessel functions of the first kind
# --------------------------------------------------------------------------

def _miller_start(n: int, x: float) -> int:
    top = max(n, math.ceil(x))
    m = top + 40 + 10 * math.ceil(x ** (1.0 / 3.0))
    return m + (m % 2)


def bessel_j_orders(n_max: int, x: float) -> np.ndarray:
    """J_0(x) .. J_{n_max}(x) for x >= 0 by Miller's backward recurrence.

    The recurrence J_{k-1} = (2k/x) J_k - J_{k+1} is run downward from a
    start index well past both n_max and x, and the result is normalised with
    J_0 + 2 * sum_k J_{2k} = 1. Below x = 1 the power series is summed instead.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if x < 0:
        raise ValueError("x must be >= 0 here")
    out = np.zeros(n_max + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    if x < 1.0:
        return _bessel_series(n_max, x)
    m = _miller_start(n_max, x)
    j_next, j_cur = 0.0, 1e-300
    vals = np.zeros(m + 1)
    vals[m] = j_cur
    for k in range(m, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        vals[k - 1] = j_cur
        if abs(j_cur) > 1e250:
            vals[k - 1:] *= 1e-250
            j_next *= 1e-250
            j_cur *= 1e-250
    norm = vals[0] + 2.0 * vals[2::2].sum()
    out[:] = vals[: n_max + 1] / norm
    return out


def _bessel_series(n_max: int, x: float) -> np.ndarray:
    """Power series for 0 < x < 1, where the backward recurrence would overflow."""
    half = 0.5 * x
    log_half = math.log(x) - math.log(2.0)  # 0.5 * x underflows for subnormal x
    out = np.zeros(n_max + 1)
    for n in range(n_max + 1):
        log_lead = n * log_half - math.lgamma(n + 1)
        if log_lead < -745.0:  # J_n underflows, as do all higher orders
            break
        term = math.exp(log_lead)
        total, k = term, 0
        while abs(term) > 1e-17 * abs(total):
            k += 1
            term *= -half * half / (k * (k + n))
            total += term
        out[n] = total
    return out


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind J_n(x).

    Supported on |n| <= 200 and |x| <= 500 with absolute error below 1e-12.
    """
    if int(n) != n:
        raise ValueError("order must be an integer")
    n = int(n)
    if abs(n) > BESSEL_MAX_ORDER or not abs(x) <= BESSEL_MAX_ARG:
        raise ValueError(f"J_{n}({x}) outside the supported range")
    sign = 1.0
    if n < 0:
        n = -n
        sign *= -1.0 if n % 2 else 1.0
    if x < 0:
        x = -x
        sign *= -1.0 if n % 2 else 1.0
    return sign * float(bessel_j_orders(n, x)[n])


# --------------------------------------------------------------------------
# Integration
# --------------------------------------------------------------------------

# Dormand-Prince 5(4); the seventh stage is FSAL.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@dataclass
class IntegrationResult:
    y: np.ndarray          # final state
    t: np.ndarray          # sample times
    ys: np.ndarray         # states at sample times, shape (len(t), dim)
    nsteps: int


def sample_grid(t0: float, t1: float, interval: float | None) -> np.ndarray:
    """Sample times from t0 to t1 inclusive at the given cadence."""
    if interval is None or t1 == t0:
        return np.array([t0, t1]) if t1 != t0 else np.array([t0])
    span = abs(t1 - t0)
    n = int(math.floor(span / interval + 1e-9))
    direction = 1.0 if t1 >= t0 else -1.0
    ts = t0 + direction * interval * np.arange(n + 1)
    if abs(ts[-1] - t1) > 1e-9 * max(1.0, span):
        ts = np.append(ts, t1)
    else:
        ts[-1] = t1
    return ts


def _rms_err(err, y, y_new, atol, rtol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return math.sqrt(float(np.mean((np.abs(err) / scale) ** 2)))


def integrate(generator: Callable[[float], np.ndarray], y0, t0: float, t1: float,
              cfg: IntegratorConfig = IntegratorConfig(),
              sample_times=None) -> IntegrationResult:
    """Integrate dy/dt = G(t) y from t0 to t1.

    Parameters
    ----------
    generator
        Callable returning the (complex) matrix G(t). For Schrodinger
        evolution use :func:`schrodinger_generator`.
    y0
        Initial complex vector.
    sample_times
        Times at which to record the state; must run monotonically from t0
        towards t1. Defaults to ``cfg.sample_interval`` cadence, or just the
        two endpoints. Steps are shortened to land on every sample time.

    Raises
    ------
    IntegrationError
        On step-size underflow.
    """
    y = np.array(y0, dtype=complex)
    if not np.all(np.isfinite(y)):
        raise ValueError("y0 must be finite")
    if sample_times is None:
        sample_times = sample_grid(t0, t1, cfg.sample_interval)
    sample_times = np.asarray(sample_times, dtype=float)
    direction = 1.0 if t1 >= t0 else -1.0
    out = np.empty((len(sample_times), y.size), dtype=complex)
    rhs = lambda t, v: generator(t) @ v  # noqa: E731
    if cfg.method == "rk4":
        nsteps = _rk4_fixed(rhs, y, t0, direction, cfg, sample_times, out)
    else:
        nsteps = _dopri(rhs, y, t0, direction, cfg, sample_times, out)
    return IntegrationResult(out[-1].copy(), sample_times, out, nsteps)


def _rk4_fixed(rhs, y, t, direction, cfg, sample_times, out) -> int:
    nsteps = 0
    for idx, target in enumerate(sample_times):
        span = (target - t) * direction
        if span > 0:
            n = max(1, math.ceil(span / cfg.max_step - 1e-9))
            h = (target - t) / n
            for i in range(n):
                k1 = rhs(t, y)
                k2 = rhs(t + h / 2, y + h / 2 * k1)
                k3 = rhs(t + h / 2, y + h / 2 * k2)
                k4 = rhs(t + h, y + h * k3)
                y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                t = t + h if i < n - 1 else target
                nsteps += 1
        out[idx] = y
    return nsteps


def _dopri(rhs, y, t, direction, cfg, sample_times, out) -> int:
    atol, rtol = cfg.abs_tol, cfg.rel_tol
    k1 = rhs(t, y)
    span = abs(sample_times[-1] - t)
    h = _initial_step(y, k1, span, cfg)
    nsteps = 0
    for idx, target in enumerate(sample_times):
        while (target - t) * direction > 0:
            remaining = abs(target - t)
            hs = min(h, remaining)
            landing = hs >= remaining
            hmin = 1e-14 * max(1.0, abs(t))
            if hs < hmin and not landing:
                raise IntegrationError("step size underflow", t)
            sh = direction * hs
            ks = [k1]
            for s in range(1, 6):
                acc = y + sh * sum(a * k for a, k in zip(_A[s], ks))
                ks.append(rhs(t + _C[s] * sh, acc))
            y_new = y + sh * sum(b * k for b, k in zip(_B, ks))
            t_new = target if landing else t + sh
            k7 = rhs(t_new, y_new)
            ks.append(k7)
            err = sh * sum(e * k for e, k in zip(_E, ks))
            err_norm = _rms_err(err, y, y_new, atol, rtol)
            if err_norm <= 1.0:
                fac = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
                t, y, k1 = t_new, y_new, k7
                if not landing or hs * fac < h:
                    h = min(hs * fac, cfg.max_step)
                nsteps += 1
                if nsteps > _MAX_STEPS:
                    raise IntegrationError("step budget exhausted", t)
            else:
                h = hs * max(0.2, 0.9 * err_norm ** -0.2)
        out[idx] = y
    return nsteps


def _initial_step(y, f0, span, cfg) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y)
    # RMS via norm(): it rescales internally, so extreme tolerances do not overflow
    d0 = float(np.linalg.norm(np.abs(y) / scale)) / math.sqrt(y.size)
    d1 = float(np.linalg.norm(np.abs(f0) / scale)) / math.sqrt(y.size)
    if d0 < 1e-5 or d1 < 1e-5:
        h = span if span > 0 else 1e-6
    else:
        h = 0.01 * d0 / d1
    return max(min(h, cfg.max_step, span if span > 0 else h), 1e-12)


def schrodinger_generator(hamiltonian: Callable[[float], np.ndarray]):
    """Wrap H(t) as the generator -i H(t) of i dy/dt = H y."""
    return lambda t: -1j * np.asarray(hamiltonian(t), dtype=complex)


def unwrap_phase(samples) -> np.ndarray:
    """Remove 2*pi jumps so consecutive phases differ by at most pi."""
    return np.unwrap(np.asarray(samples, dtype=float))


def wrap_to_pi(phase):
    """Map phases into (-pi, pi]."""
    wrapped = np.mod(np.asarray(phase, dtype=float) + math.pi, 2 * math.pi) - math.pi
    wrapped = np.where(wrapped == -math.pi, math.pi, wrapped)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped
