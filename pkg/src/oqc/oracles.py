"""Brute-force reference computations used to check the closed forms.

Slow on purpose: they search instead of solving, so agreement with the fast paths
is meaningful evidence.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq, minimize

from .qcore import rng_for


def _unit(v):
    v = np.asarray(v, dtype=complex).reshape(-1)
    return v / np.linalg.norm(v)


def overlap_oracle_reduced(psi, Q: np.ndarray, nu: float, grid: int = 20001) -> float:
    """Minimum of <lam|Q|lam> over |<lam|psi>|^2 >= 1 - nu, in the plane of psi's split.

    Writes lam = cos t e_- + sin t e_+ with e_-/e_+ the normalised components of psi
    inside/outside Q, scans t on a grid, then sharpens at the constraint boundary.
    """
    x = _unit(psi)
    Q = np.asarray(Q, dtype=complex)
    qm = float(np.clip(np.real(np.vdot(x, Q @ x)), 0.0, 1.0))
    qp = 1.0 - qm
    rank_plus = Q.shape[0] - int(round(np.real(np.trace(Q))))
    if rank_plus == 0:
        return 1.0
    a, b = math.sqrt(qm), math.sqrt(qp)
    c = math.sqrt(1.0 - nu)
    t = np.linspace(0.0, math.pi, grid)
    f = a * np.cos(t) + b * np.sin(t)
    feas = np.abs(f) >= c
    best = float(np.min(np.cos(t[feas]) ** 2)) if feas.any() else 1.0
    if b >= c:
        return 0.0
    t0 = math.atan2(b, a)
    g = lambda s: a * math.cos(s) + b * math.sin(s) - c
    if g(t0) >= 0:
        root = brentq(g, t0, math.pi / 2, xtol=1e-15, rtol=1e-15)
        best = min(best, math.cos(root) ** 2)
    return best


def overlap_oracle_search(psi, Q: np.ndarray, nu: float, seed: int = 0,
                          n_samples: int = 100_000, n_refine: int = 4) -> float:
    """Same minimum found by random sampling of the ball in the full space plus SLSQP."""
    x = _unit(psi)
    Q = np.asarray(Q, dtype=complex)
    d = x.size
    rng = rng_for(seed, 11)
    g = rng.standard_normal((n_samples, d)) + 1j * rng.standard_normal((n_samples, d))
    g -= np.outer(g @ x.conj(), x)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    t = nu * rng.random(n_samples) ** 0.25
    lam = np.sqrt(1 - t)[:, None] * x[None, :] + np.sqrt(t)[:, None] * g
    vals = np.real(np.einsum("ni,ij,nj->n", lam.conj(), Q, lam))
    order = np.argsort(vals)[:n_refine]
    best = float(vals[order[0]])

    def split(z):
        return z[:d] + 1j * z[d:]

    def obj(z):
        v = split(z)
        n2 = np.real(np.vdot(v, v))
        qv = Q @ v
        val = np.real(np.vdot(v, qv)) / n2
        grad_c = 2 * (qv - val * v) / n2
        return val, np.r_[grad_c.real, grad_c.imag]

    def con(z):
        v = split(z)
        n2 = np.real(np.vdot(v, v))
        ov = np.vdot(x, v)
        return abs(ov) ** 2 / n2 - (1 - nu)

    def con_jac(z):
        v = split(z)
        n2 = np.real(np.vdot(v, v))
        ov = np.vdot(x, v)
        h = abs(ov) ** 2 / n2
        grad_c = 2 * (x * ov - h * v) / n2
        return np.r_[grad_c.real, grad_c.imag]

    for i in order:
        z0 = np.r_[lam[i].real, lam[i].imag]
        res = minimize(obj, z0, jac=True, method="SLSQP",
                       constraints=[{"type": "ineq", "fun": con, "jac": con_jac}],
                       options={"ftol": 1e-15, "maxiter": 500})
        v = split(res.x)
        v = v / np.linalg.norm(v)
        if abs(np.vdot(x, v)) ** 2 >= 1 - nu - 1e-12:
            best = min(best, float(np.real(np.vdot(v, Q @ v))))
    return best


def random_projector(d: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    q, _ = np.linalg.qr(g)
    return q @ q.conj().T
