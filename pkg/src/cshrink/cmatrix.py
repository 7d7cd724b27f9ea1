"""Dense complex linear algebra on ``complex128`` numpy arrays.

Matrices are ordinary 2-D numpy arrays.  Eigenvalues are always returned in
descending order and eigenvector columns carry a fixed phase (largest-modulus
entry real and positive), so every decomposition is reproducible.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    NoConvergence,
    NotHermitian,
    NotPositiveDefinite,
)

DEFAULT_TOL = 1e-10
GAP_TOL = 1e-8
MAX_SWEEPS = 100


def as_cmatrix(x):
    a = np.array(x, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def hermitian_defect(m):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return np.inf
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m, tol=DEFAULT_TOL):
    """Square and ``max|M - M^H| <= tol * max(1, max|M|)``."""
    m = np.asarray(m)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return hermitian_defect(m) <= tol * scale


def is_unitary(m, tol=DEFAULT_TOL):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))) <= tol


def _require_hermitian(h, tol, what="matrix"):
    h = as_cmatrix(h)
    if h.shape[0] == 0:
        raise DimensionMismatch(f"{what} is empty")
    if not is_hermitian(h, tol):
        raise NotHermitian(f"{what} fails the Hermitian check (defect {hermitian_defect(h):.3g})")
    return 0.5 * (h + h.conj().T)


def fix_phases(v):
    """Rotate each column so its largest-modulus entry is real positive."""
    v = np.array(v, dtype=np.complex128)
    idx = np.argmax(np.abs(v), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    mod = np.abs(pivots)
    mod[mod == 0.0] = 1.0
    out = v * (np.conj(pivots) / mod)[None, :]
    cols = np.arange(v.shape[1])
    out[idx, cols] = np.abs(pivots)  # exactly real, not just to rounding
    return out


def min_relative_gap(values):
    """``min_k (v_k - v_{k+1}) / max|v|`` for a descending vector (inf if length 1)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return np.inf
    scale = float(np.max(np.abs(v)))
    if scale == 0.0:
        return 0.0
    return float(np.min(v[:-1] - v[1:])) / scale


@dataclass(frozen=True)
class HermEigen:
    """``h = u @ diag(lam) @ u^H`` with ``lam`` descending."""

    u: np.ndarray
    lam: np.ndarray

    def reconstruct(self):
        return (self.u * self.lam[None, :]) @ self.u.conj().T


@dataclass(frozen=True)
class SimDiag:
    """``a^H s a = I`` and ``a^H w a = diag(f)`` with ``f`` descending, positive."""

    a: np.ndarray
    f: np.ndarray


def herm_eigen(h, tol=DEFAULT_TOL, max_sweeps=MAX_SWEEPS):
    h = _require_hermitian(h, tol)
    w, v, _, converged = _kernels.jacobi_herm(h, max_sweeps)
    if not converged:
        raise NoConvergence(f"Jacobi sweeps did not converge within {max_sweeps} sweeps")
    order = np.argsort(-w, kind="stable")
    return HermEigen(u=fix_phases(v[:, order]), lam=w[order])


def cholesky(h, tol=DEFAULT_TOL):
    """Lower-triangular ``L`` with real positive diagonal and ``L L^H = h``."""
    h = _require_hermitian(h, tol)
    low, ok = _kernels.cholesky_lower(h)
    if not ok:
        raise NotPositiveDefinite("Cholesky pivot is not positive")
    return low


def inv_hpd(h, tol=DEFAULT_TOL):
    """Inverse of a Hermitian positive definite matrix via its Cholesky factor."""
    low_inv = _kernels.lower_tri_inverse(cholesky(h, tol))
    out = low_inv.conj().T @ low_inv
    return 0.5 * (out + out.conj().T)


def sim_diag(w, s, tol=DEFAULT_TOL, gap_tol=GAP_TOL):
    """Simultaneously diagonalize ``w`` (PSD) and ``s`` (PD) by congruence.

    With ``s = L L^H`` and ``L^{-1} w L^{-H} = V diag(f) V^H``, returns
    ``a = L^{-H} V``.
    """
    w = _require_hermitian(w, tol, "w")
    s = _require_hermitian(s, tol, "s")
    if w.shape != s.shape:
        raise DimensionMismatch(f"w is {w.shape} but s is {s.shape}")
    low_inv = _kernels.lower_tri_inverse(cholesky(s, tol))
    core = low_inv @ w @ low_inv.conj().T
    eig = herm_eigen(0.5 * (core + core.conj().T), tol)
    f = eig.lam
    fmax = float(np.max(np.abs(f)))
    if fmax == 0.0 or f[-1] <= 1e-12 * fmax:
        raise DegenerateSpectrum("w s^{-1} has a zero or negative eigenvalue")
    if min_relative_gap(f) < gap_tol:
        raise DegenerateSpectrum(f"relative eigengap {min_relative_gap(f):.3g} below {gap_tol:g}")
    return SimDiag(a=low_inv.conj().T @ eig.u, f=f)


def _spectral_power(k, power, tol):
    eig = herm_eigen(k, tol)
    lam = eig.lam
    if lam[-1] <= 0.0 or lam[-1] <= 1e-14 * lam[0]:
        raise NotPositiveDefinite("matrix is not positive definite")
    out = (eig.u * lam[None, :] ** power) @ eig.u.conj().T
    return 0.5 * (out + out.conj().T)


def sqrt_herm(k, tol=DEFAULT_TOL):
    return _spectral_power(k, 0.5, tol)


def inv_sqrt_herm(k, tol=DEFAULT_TOL):
    return _spectral_power(k, -0.5, tol)


def to_json(m):
    m = as_cmatrix(m)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
    }


def from_json(obj):
    """Decode ``{"rows", "cols", "re", "im"}``; ``im`` may be omitted for real data."""
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros(rows * cols)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DimensionMismatch(f"malformed matrix JSON: {exc}") from exc
    if rows < 1 or cols < 1 or re.size != rows * cols or im.size != rows * cols:
        raise DimensionMismatch(
            f"matrix JSON declares {rows}x{cols} but carries {re.size} re / {im.size} im entries"
        )
    return (re + 1j * im).reshape(rows, cols)
