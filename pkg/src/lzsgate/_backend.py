"""Select the propagation backend at import time.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``LZSGATE_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the pure-Python implementation is used. Both expose ``evolve`` and
``evolve_lab_batch`` with identical signatures.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback
from ._model import KernelModel
from .numerics import IntegrationError, IntegratorConfig

OK, UNDERFLOW, BUDGET = 0, 1, 2

_forced_pure = os.environ.get("LZSGATE_PURE_PYTHON", "") not in ("", "0")

if _forced_pure:
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"


def implementation(name: str | None = None):
    """Kernel module by name ("compiled" or "python"); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def run_model(model: KernelModel, y0, t0: float, sample_times, cfg: IntegratorConfig,
              backend: str | None = None) -> tuple[np.ndarray, int]:
    """Propagate ``y0`` through ``model``; returns (samples, nsteps).

    Raises :class:`IntegrationError` on step-size underflow or budget exhaustion.
    """
    impl = implementation(backend)
    ts = np.ascontiguousarray(sample_times, dtype=float)
    y0 = np.asarray(y0, dtype=complex)
    status, t_reached, nsteps, out = impl.evolve(
        model.kind, np.ascontiguousarray(model.params, dtype=float),
        np.ascontiguousarray(model.coef.real), np.ascontiguousarray(model.coef.imag),
        np.ascontiguousarray(model.nu, dtype=float),
        complex(y0[0]), complex(y0[1]), float(t0), ts,
        cfg.method, cfg.rel_tol, cfg.abs_tol, cfg.max_step)
    if status != OK:
        reason = "step budget exhausted" if status == BUDGET else "step size underflow"
        raise IntegrationError(reason, t_reached)
    return np.asarray(out), int(nsteps)


def run_lab_batch(columns: dict, cfg: IntegratorConfig, backend: str | None = None):
    """Final |g>-started states for many lab-frame runs from t=0.

    ``columns`` maps v, a, d0, w, phi, gg, ge, t1 to equal-length arrays.
    Returns (finals[n, 2], status[n]); failed entries are zero with nonzero status.
    """
    impl = implementation(backend)
    keys = ("v", "a", "d0", "w", "phi", "gg", "ge", "t1")
    arrays = np.broadcast_arrays(*(np.asarray(columns[k], dtype=float) for k in keys))
    arrays = [np.ascontiguousarray(x.ravel()) for x in arrays]
    finals, status, _ = impl.evolve_lab_batch(*arrays, cfg.method, cfg.rel_tol,
                                              cfg.abs_tol, cfg.max_step)
    return np.asarray(finals), np.asarray(status)
