"""Pure-Python implementation of the compiled kernel API."""

from __future__ import annotations

import numpy as np

from . import _model
from .numerics import IntegrationError, IntegratorConfig, integrate

OK, UNDERFLOW, BUDGET = 0, 1, 2


def _run(model, y0, t0, sample_times, method, rtol, atol, max_step):
    cfg = IntegratorConfig(method=method, rel_tol=rtol, abs_tol=atol, max_step=max_step)
    ns = len(sample_times)
    if ns == 0:
        return OK, t0, 0, np.zeros((0, 2), complex)
    try:
        res = integrate(lambda t: _model.generator_matrix(model, t), y0, t0,
                        float(sample_times[-1]), cfg, sample_times=sample_times)
    except IntegrationError as exc:
        status = BUDGET if "budget" in str(exc) else UNDERFLOW
        return status, exc.t_reached, 0, np.zeros((ns, 2), complex)
    return OK, float(sample_times[-1]), res.nsteps, res.ys


def evolve(kind, params, cre, cim, nu, yg0, ye0, t0, sample_times,
           method, rtol, atol, max_step):
    params = np.asarray(params, dtype=float)
    if params.shape != (10,):
        raise ValueError("params must have 10 entries")
    cre, cim, nu = (np.asarray(x, dtype=float) for x in (cre, cim, nu))
    if not (cre.shape == cim.shape == nu.shape):
        raise ValueError("harmonic arrays disagree in length")
    if method not in ("rk45", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    model = _model.KernelModel(int(kind), params, cre + 1j * cim, nu)
    return _run(model, np.array([yg0, ye0], complex), t0,
                np.asarray(sample_times, dtype=float), method, rtol, atol, max_step)


def evolve_lab_batch(v, a, d0, w, phi, gg, ge, t1, method, rtol, atol, max_step):
    arrays = [np.asarray(x, dtype=float) for x in (v, a, d0, w, phi, gg, ge, t1)]
    n = arrays[0].shape[0]
    if any(x.shape != (n,) for x in arrays):
        raise ValueError("batch arrays must share one length")
    if method not in ("rk45", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    finals = np.zeros((n, 2), complex)
    status = np.zeros(n, dtype=np.int32)
    steps = np.zeros(n, dtype=np.int64)
    y0 = np.array([1.0, 0.0], complex)
    for i in range(n):
        vi, ai, di, wi, pi_, gi, ei, ti = (x[i] for x in arrays)
        model = _model.KernelModel.build(_model.LAB, v=vi, a=ai, d0=di, w=wi, phi=pi_,
                                         gg=gi, ge=ei)
        st, _, ns, out = _run(model, y0, 0.0, np.array([ti]), method, rtol, atol, max_step)
        status[i], steps[i] = st, ns
        if st == OK:
            finals[i] = out[-1]
    return finals, status, steps
