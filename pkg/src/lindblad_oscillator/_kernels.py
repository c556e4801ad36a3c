"""Compiled inner loop of the Fock-basis RK4 integrator.

The generator maps ``rho[i, j]`` onto five neighbours with fixed weights (see
``oracle.FockGenerator``).  Fusing the stencil, the Hermitian-conjugate term
and the RK4 stages into one loop avoids the array temporaries that dominate
the pure-numpy version.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# order of the weight planes in the stacked array
PLANES = ("0_0", "m2_0", "0_p2", "m1_p1", "p1_p1", "m1_m1")


@njit(cache=True)
def _half(w, r, x):
    n = r.shape[0]
    for i in range(n):
        for j in range(n):
            v = w[0, i, j] * r[i, j]
            if i >= 2:
                v += w[1, i, j] * r[i - 2, j]
            if j + 2 < n:
                v += w[2, i, j] * r[i, j + 2]
            if i >= 1 and j + 1 < n:
                v += w[3, i, j] * r[i - 1, j + 1]
            if i + 1 < n and j + 1 < n:
                v += w[4, i, j] * r[i + 1, j + 1]
            if i >= 1 and j >= 1:
                v += w[5, i, j] * r[i - 1, j - 1]
            x[i, j] = v


@njit(cache=True)
def _rhs(w, r, x, out):
    _half(w, r, x)
    n = r.shape[0]
    for i in range(n):
        for j in range(n):
            out[i, j] = x[i, j] + np.conj(x[j, i])


@njit(cache=True)
def rk4_run(w, r0, dt, n_steps, save_every):
    """Integrate a batch; returns (saved states, hermiticity residual, edge population).

    ``w`` has shape (B, 6, dim, dim), ``r0`` shape (B, dim, dim).  States are
    saved at step 0, every ``save_every`` steps and at the final step.
    """
    nb, n = r0.shape[0], r0.shape[1]
    n_saved = n_steps // save_every + 1
    if n_steps % save_every != 0:
        n_saved += 1
    saved = np.empty((n_saved, nb, n, n), dtype=np.complex128)
    herm = 0.0
    edge = 0.0
    x = np.empty((n, n), dtype=np.complex128)
    k1 = np.empty((n, n), dtype=np.complex128)
    k2 = np.empty((n, n), dtype=np.complex128)
    k3 = np.empty((n, n), dtype=np.complex128)
    k4 = np.empty((n, n), dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    for b in range(nb):
        r = r0[b].copy()
        saved[0, b] = r
        edge = max(edge, r[n - 1, n - 1].real)
        s = 1
        for step in range(1, n_steps + 1):
            _rhs(w[b], r, x, k1)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = r[i, j] + 0.5 * dt * k1[i, j]
            _rhs(w[b], tmp, x, k2)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = r[i, j] + 0.5 * dt * k2[i, j]
            _rhs(w[b], tmp, x, k3)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = r[i, j] + dt * k3[i, j]
            _rhs(w[b], tmp, x, k4)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = r[i, j] + dt / 6.0 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
            for i in range(n):
                for j in range(i, n):
                    a = tmp[i, j]
                    c = np.conj(tmp[j, i])
                    d = abs(a - c)
                    if d > herm:
                        herm = d
                    m = 0.5 * (a + c)
                    r[i, j] = m
                    r[j, i] = np.conj(m)
            e = r[n - 1, n - 1].real
            if not e <= edge:
                edge = e
            if step % save_every == 0 or step == n_steps:
                saved[s, b] = r
                s += 1
    return saved, herm, edge
