"""Flat description of the built-in two-level generators.

Every family has the form

    H(t) = -1/2 [[0, X(t)], [conj(X(t)), 2 D(t)]] - i/2 diag(gamma_g, gamma_e)

and differs only in how the coupling X(t) and the detuning D(t) are built.
The compiled kernel mirrors :func:`coupling_detuning` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LAB = 0        # X = v,                   D = d0 + a cos(w t + phi)
ROTATED = 1    # X = v exp(i (a/w) sin wt), D = d0
HARMONIC = 2   # X = sum_k coef_k exp(i nu_k t), D = d0
POWERLAW = 3   # X = v,                   D = s1 (t - c) + s2 (t - c)^5

# index layout of KernelModel.params
V, A, D0, W, PHI, GG, GE, S1, S2, C = range(10)

_EMPTY = np.zeros(0)


@dataclass(frozen=True, eq=False)
class KernelModel:
    kind: int
    params: np.ndarray
    coef: np.ndarray = _EMPTY.astype(complex)
    nu: np.ndarray = _EMPTY

    @classmethod
    def build(cls, kind, *, v=0.0, a=0.0, d0=0.0, w=1.0, phi=0.0, gg=0.0, ge=0.0,
              s1=0.0, s2=0.0, c=0.0, coef=None, nu=None):
        params = np.array([v, a, d0, w, phi, gg, ge, s1, s2, c], dtype=float)
        coef = np.zeros(0, complex) if coef is None else np.ascontiguousarray(coef, dtype=complex)
        nu = np.zeros(0) if nu is None else np.ascontiguousarray(nu, dtype=float)
        if coef.shape != nu.shape:
            raise ValueError("coef and nu must have the same length")
        return cls(kind, params, coef, nu)

    def with_decay(self, gg: float, ge: float) -> "KernelModel":
        params = self.params.copy()
        params[GG], params[GE] = gg, ge
        return KernelModel(self.kind, params, self.coef, self.nu)


def coupling_detuning(model: KernelModel, t: float) -> tuple[complex, float]:
    p = model.params
    kind = model.kind
    if kind == LAB:
        return complex(p[V]), p[D0] + p[A] * math.cos(p[W] * t + p[PHI])
    if kind == ROTATED:
        theta = (p[A] / p[W]) * math.sin(p[W] * t)
        return p[V] * complex(math.cos(theta), math.sin(theta)), p[D0]
    if kind == HARMONIC:
        return complex(np.sum(model.coef * np.exp(1j * model.nu * t))), p[D0]
    if kind == POWERLAW:
        u = t - p[C]
        return complex(p[V]), p[S1] * u + p[S2] * u ** 5
    raise ValueError(f"unknown model kind {kind}")


def hamiltonian_matrix(model: KernelModel, t: float, with_decay: bool = True) -> np.ndarray:
    x, d = coupling_detuning(model, t)
    h = -0.5 * np.array([[0.0, x], [x.conjugate(), 2.0 * d]], dtype=complex)
    if with_decay:
        h[0, 0] -= 0.5j * model.params[GG]
        h[1, 1] -= 0.5j * model.params[GE]
    return h


def generator_matrix(model: KernelModel, t: float) -> np.ndarray:
    return -1j * hamiltonian_matrix(model, t)
