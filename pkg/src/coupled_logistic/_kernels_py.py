"""Pure-numpy reference versions of the hot kernels.

Signatures mirror the compiled ``_kernels`` extension exactly; the selector in
``kernels.py`` picks one of the two at import time.
"""

from __future__ import annotations

import numpy as np


def neg_lap_1d(f, h):
    out = 2.0 * f
    out[1:] -= f[:-1]
    out[:-1] -= f[1:]
    out /= h * h
    return out


def neg_lap_2d(f, n1, n2, h1, h2):
    F = f.reshape(n1, n2)
    out = np.empty_like(F)
    # axis 0
    a = 2.0 * F
    a[1:, :] -= F[:-1, :]
    a[:-1, :] -= F[1:, :]
    # axis 1
    b = 2.0 * F
    b[:, 1:] -= F[:, :-1]
    b[:, :-1] -= F[:, 1:]
    np.add(a / (h1 * h1), b / (h2 * h2), out=out)
    return out.reshape(-1)


def power_sums(u, v, p):
    """Return (sum |u|^p, sum |v|^p, sum |u|^{p/2} |v|^{p/2})."""
    au = np.abs(u)
    av = np.abs(v)
    q = 0.5 * p
    uq = au**q
    vq = av**q
    return float(np.dot(uq, uq)), float(np.dot(vq, vq)), float(np.dot(uq, vq))


def nonlinear_grad(u, v, p, beta):
    """Pointwise nonlinear part of the gradient.

    u-slot: |u|^{p-2} u - beta sign(u) |u|^{p/2-1} |v|^{p/2}, v-slot symmetric.
    """
    au = np.abs(u)
    av = np.abs(v)
    q = 0.5 * p
    uq1 = au ** (q - 1.0)
    vq1 = av ** (q - 1.0)
    uq = uq1 * au
    vq = vq1 * av
    su = np.sign(u)
    sv = np.sign(v)
    gu = su * (uq * uq1 - beta * uq1 * vq)
    gv = sv * (vq * vq1 - beta * vq1 * uq)
    return gu, gv


def sturm_count(diag, off, shift):
    """Number of eigenvalues <= shift of the symmetric tridiagonal (diag, off)."""
    n = diag.shape[0]
    count = 0
    q = 1.0
    tiny = 1e-300
    for i in range(n):
        b2 = off[i - 1] * off[i - 1] if i > 0 else 0.0
        q = diag[i] - shift - b2 / q
        if q <= 0.0:
            count += 1
            if q == 0.0:
                q = -tiny
    return count
