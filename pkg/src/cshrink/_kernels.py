"""Numeric inner loops: complex Jacobi eigensolver and Cholesky pieces.

Every kernel takes and returns plain arrays and signals failure through a
status value; the public wrappers in :mod:`cshrink.cmatrix` raise.
"""
import math

import numpy as np

from ._accel import jit

# relative off-diagonal size at which a sweep counts as converged
JACOBI_EPS = 1e-15


@jit
def jacobi_herm(a, max_sweeps):
    """Cyclic two-sided Jacobi sweeps on a Hermitian matrix.

    Returns ``(w, v, sweeps, converged)`` with ``a = v @ diag(w) @ v^H``.
    Eigenvalues are unsorted; pairs are visited in row-cyclic order, so the
    result is a deterministic function of ``a``.
    """
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=np.complex128)
    fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += a[i, j].real ** 2 + a[i, j].imag ** 2
    tol2 = (JACOBI_EPS ** 2) * fro2
    sweeps = 0
    converged = False
    while True:
        off2 = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off2 += 2.0 * (a[i, j].real ** 2 + a[i, j].imag ** 2)
        if off2 <= tol2:
            converged = True
            break
        if sweeps >= max_sweeps:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                e = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                se = s * e
                sec = s * np.conj(e)
                # columns: A <- A J, V <- V J
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - sec * colq
                a[:, q] = se * colp + c * colq
                colp = v[:, p].copy()
                colq = v[:, q].copy()
                v[:, p] = c * colp - sec * colq
                v[:, q] = se * colp + c * colq
                # rows: A <- J^H A
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - se * rowq
                a[q, :] = sec * rowp + c * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i].real
    return w, v, sweeps, converged


@jit
def cholesky_lower(h):
    """Lower Cholesky factor of a Hermitian matrix; ``ok`` False on a pivot <= 0."""
    n = h.shape[0]
    low = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        d = h[j, j].real
        for k in range(j):
            d -= low[j, k].real ** 2 + low[j, k].imag ** 2
        if not d > 0.0:
            return low, False
        ljj = math.sqrt(d)
        low[j, j] = ljj
        for i in range(j + 1, n):
            acc = h[i, j]
            for k in range(j):
                acc -= low[i, k] * np.conj(low[j, k])
            low[i, j] = acc / ljj
    return low, True


@jit
def lower_tri_inverse(low):
    """Inverse of a nonsingular lower-triangular matrix by forward substitution."""
    n = low.shape[0]
    inv = np.zeros((n, n), dtype=np.complex128)
    for col in range(n):
        inv[col, col] = 1.0 / low[col, col]
        for i in range(col + 1, n):
            acc = 0.0 + 0.0j
            for k in range(col, i):
                acc += low[i, k] * inv[k, col]
            inv[i, col] = -acc / low[i, i]
    return inv
