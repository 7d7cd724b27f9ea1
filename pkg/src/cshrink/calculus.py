"""Eigenvalue calculus for complex matrices.

Analytic Wirtinger derivatives of the eigendecompositions used by the
estimators, closed-form divergence traces, and the finite-difference oracles
that check them.

Conventions
-----------
* ``d/dz = (d/dRe z - i d/dIm z) / 2`` (Wirtinger).
* For Hermitian ``s``, ``d/ds_jk = (1 + delta_jk)/2 * (d/dRe s_jk + (1 - delta_jk) i d/dIm s_jk)``
  with ``s_kj`` moving as the conjugate of ``s_jk``.  Under this operator
  ``d s_kl / d s_ij = delta_il delta_jk``.
* Eigenvector derivatives use the gauge in which ``v_l^{-1} dv_l`` has no
  imaginary diagonal part; FD oracles re-phase each probe to match.
"""
from dataclasses import dataclass

import numpy as np

from . import cmatrix as cm
from .errors import BranchMismatch, DegenerateSpectrum, NonFiniteResult, NotHermitian

FD_STEP = 1e-6


def _finite(x):
    if not np.all(np.isfinite(x)):
        raise NonFiniteResult("function returned a non-finite value at a probe point")
    return x


def fd_wirtinger_all(func, z, step=FD_STEP):
    """Central-difference Wirtinger derivatives of an array-valued ``func``.

    Returns ``d`` with ``d[..., j, k] = d func(z)[...] / d z_jk``.
    """
    z = cm.as_cmatrix(z)
    m, p = z.shape
    out = None
    for j in range(m):
        for k in range(p):
            h = step * max(1.0, abs(z[j, k]))
            e = np.zeros_like(z)
            e[j, k] = h
            d_re = (_finite(np.asarray(func(z + e))) - _finite(np.asarray(func(z - e)))) / (2 * h)
            d_im = (_finite(np.asarray(func(z + 1j * e))) - _finite(np.asarray(func(z - 1j * e)))) / (2 * h)
            d = 0.5 * (d_re - 1j * d_im)
            if out is None:
                out = np.zeros(d.shape + (m, p), dtype=complex)
            out[..., j, k] = d
    return out


def fd_wirtinger(func, z, j, k, step=FD_STEP):
    """Wirtinger derivative of a scalar ``func`` with respect to ``z[j, k]``."""
    z = cm.as_cmatrix(z)
    h = step * max(1.0, abs(z[j, k]))
    e = np.zeros_like(z)
    e[j, k] = h
    vals = [complex(_finite(np.asarray(func(z + d)))) for d in (e, -e, 1j * e, -1j * e)]
    d_re = (vals[0] - vals[1]) / (2 * h)
    d_im = (vals[2] - vals[3]) / (2 * h)
    return 0.5 * (d_re - 1j * d_im)


def _herm_directions(s, j, k, h):
    re = np.zeros_like(s)
    re[j, k] += h
    if j == k:
        return re, None
    re[k, j] += h
    im = np.zeros_like(s)
    im[j, k] = 1j * h
    im[k, j] = -1j * h
    return re, im


def _fd_hermitian_entry(func, s, j, k, step):
    h = step * max(1.0, abs(s[j, k]))
    re, im = _herm_directions(s, j, k, h)
    d_re = (_finite(np.asarray(func(s + re))) - _finite(np.asarray(func(s - re)))) / (2 * h)
    if im is None:
        return d_re
    d_im = (_finite(np.asarray(func(s + im))) - _finite(np.asarray(func(s - im)))) / (2 * h)
    return 0.5 * (d_re + 1j * d_im)


def _require_herm(s):
    s = cm.as_cmatrix(s)
    if not cm.is_hermitian(s):
        raise NotHermitian("Hermitian derivative needs a Hermitian base point")
    return 0.5 * (s + s.conj().T)


def fd_hermitian(func, s, j, k, step=FD_STEP):
    """Hermitian-matrix partial ``d func / d s_jk``; probes stay Hermitian."""
    return complex(_fd_hermitian_entry(func, _require_herm(s), j, k, step))


def fd_hermitian_all(func, s, step=FD_STEP):
    """``d[..., i, j] = d func(s)[...] / d s_ij`` for every entry."""
    s = _require_herm(s)
    p = s.shape[0]
    out = None
    for i in range(p):
        for j in range(p):
            d = np.asarray(_fd_hermitian_entry(func, s, i, j, step))
            if out is None:
                out = np.zeros(d.shape + (p, p), dtype=complex)
            out[..., i, j] = d
    return out


def align_columns(base_inv, v):
    """Re-phase columns of ``v`` so that ``diag(base_inv @ v)`` is real positive."""
    d = np.einsum("ij,ji->i", base_inv, v)
    mod = np.abs(d)
    mod[mod == 0.0] = 1.0
    return v * (np.conj(d) / mod)[None, :]


def _gap_matrix(vals, gap_tol):
    gap = cm.min_relative_gap(vals)
    if gap < gap_tol:
        raise DegenerateSpectrum(f"relative eigengap {gap:.3g} below {gap_tol:g}")
    diff = vals[None, :] - vals[:, None]  # diff[c, l] = v_l - v_c
    np.fill_diagonal(diff, 1.0)
    g = 1.0 / diff
    np.fill_diagonal(g, 0.0)
    return g


# -- analytic tensors ------------------------------------------------------


@dataclass(frozen=True)
class KnownEigDerivs:
    """Derivatives of ``Z^H Z = U diag(l) U^H``; axes ``[i, l, j, k]`` / ``[i, j, k]``."""

    u: np.ndarray
    ell: np.ndarray
    du: np.ndarray
    dubar: np.ndarray
    dl: np.ndarray


def eig_derivs_known(z, gap_tol=cm.GAP_TOL):
    z = cm.as_cmatrix(z)
    eig = cm.herm_eigen(z.conj().T @ z)
    u, ell = eig.u, eig.lam
    g = _gap_matrix(ell, gap_tol)
    zu_bar = np.conj(z @ u)  # [j, c] = sum_b conj(z_jb) conj(u_bc)
    du = np.einsum("ic,jc,kl,cl->iljk", u, zu_bar, u, g)
    dubar = np.einsum("ic,kc,jl,cl->iljk", np.conj(u), u, zu_bar, g)
    dl = np.einsum("ki,ji->ijk", u, zu_bar)
    return KnownEigDerivs(u, ell, du, dubar, dl)


@dataclass(frozen=True)
class MgtpEigDerivs:
    """Derivatives of ``A^H S A = I, A^H Z^H Z A = diag(f)`` (m > p).

    ``da_inv[l, k', j, k]``, ``da[i, l, j, k]``, ``df_dz[k', j, k]`` are
    Wirtinger derivatives in ``z_jk``; ``dpair_ds[k, i, j]`` is
    ``d(a^{ki} conj(a^{kj})) / d s_ij`` and ``df_ds[i, k, k']`` is
    ``d f_i / d s_kk'``.
    """

    a: np.ndarray
    f: np.ndarray
    da_inv: np.ndarray
    da: np.ndarray
    df_dz: np.ndarray
    dpair_ds: np.ndarray
    df_ds: np.ndarray


def eig_derivs_unknown_mgtp(z, s, gap_tol=cm.GAP_TOL):
    z, s = cm.as_cmatrix(z), cm.as_cmatrix(s)
    m, p = z.shape
    if not m > p:
        raise BranchMismatch(f"this branch needs m > p, got m={m}, p={p}")
    sd = cm.sim_diag(z.conj().T @ z, s, gap_tol=gap_tol)
    a, f = sd.a, sd.f
    a_inv = np.linalg.inv(a)
    g = _gap_matrix(f, gap_tol)
    za_bar = np.conj(z @ a)  # [j, l] = sum_b conj(a_bl) conj(z_jb)
    da_inv = np.einsum("jl,kc,ce,cl->lejk", za_bar, a, a_inv, g)
    da = np.einsum("ic,jc,kl,cl->iljk", a, za_bar, a, g)
    df_dz = np.einsum("je,ke->ejk", za_bar, a)

    pmat = a * a_inv.T  # [i, k] = a_ik a^{ki}
    ratio = f[:, None] / (f[:, None] - f[None, :] + np.eye(p))  # [b, k] = f_b / (f_b - f_k)
    np.fill_diagonal(ratio, 0.0)
    term1 = np.einsum("ki,kj,jk,ik->kij", a_inv, np.conj(a_inv), np.conj(a), a)
    term2 = np.einsum("ik,jk->kij", pmat, np.conj(pmat) @ ratio)
    term3 = np.einsum("jk,ik->kij", np.conj(pmat), pmat @ ratio)
    dpair_ds = term1 + term2 + term3
    df_ds = -np.einsum("ei,ki,i->ike", np.conj(a), a, f)
    return MgtpEigDerivs(a, f, da_inv, da, df_dz, dpair_ds, df_ds)


@dataclass(frozen=True)
class PgtmEigDerivs:
    """Derivatives of ``Z S^{-1} Z^H = U diag(f) U^H`` (p > m).

    ``du[i, l, j, k]``, ``dubar``, ``df_dz[b, j, k]`` are Wirtinger in
    ``z_jk``; ``du_ds[k, l, i, j]``, ``dubar_ds`` and ``df_ds[l', i, j]`` are
    Hermitian derivatives in ``s_ij``.
    """

    u: np.ndarray
    f: np.ndarray
    du: np.ndarray
    dubar: np.ndarray
    df_dz: np.ndarray
    du_ds: np.ndarray
    dubar_ds: np.ndarray
    df_ds: np.ndarray


def eig_derivs_unknown_pgtm(z, s, gap_tol=cm.GAP_TOL):
    z, s = cm.as_cmatrix(z), cm.as_cmatrix(s)
    m, p = z.shape
    if not p > m:
        raise BranchMismatch(f"this branch needs p > m, got m={m}, p={p}")
    s_inv = cm.inv_hpd(s)
    zs = z @ s_inv
    eig = cm.herm_eigen(zs @ z.conj().T)
    u, f = eig.u, eig.lam
    if f[-1] <= 1e-12 * f[0]:
        raise DegenerateSpectrum("Z S^{-1} Z^H is singular")
    g = _gap_matrix(f, gap_tol)
    x = u.T @ np.conj(zs)  # [l, k] = sum_b3 u_{b3 l} sum_b5 s^{k b5} conj(z_{b3 b5})
    du = np.einsum("ic,jc,cl,lk->iljk", u, np.conj(u), g, x)
    dubar = np.einsum("ic,jl,cl,ck->iljk", np.conj(u), np.conj(u), g, x)
    df_dz = np.einsum("jc,ck->cjk", np.conj(u), x)
    left = u.conj().T @ zs  # [b1, j] = sum_b2 conj(u_{b2 b1}) (Z S^{-1})_{b2 j}
    right = s_inv @ z.conj().T @ u  # [i, l] = sum_b3 (S^{-1} Z^H)_{i b3} u_{b3 l}
    du_ds = -np.einsum("kc,cj,il,cl->klij", u, left, right, g)
    dubar_ds = -np.einsum("kc,lj,ic,cl->klij", np.conj(u), left, right, g)
    df_ds = -np.einsum("ej,ie->eij", left, right)
    return PgtmEigDerivs(u, f, du, dubar, df_dz, du_ds, dubar_ds, df_ds)


# -- closed-form divergence traces ----------------------------------------


def pair_sum(f, v):
    """``sum_k sum_{b > k} (v_k - v_b) / (f_k - f_b)``."""
    f = np.asarray(f, dtype=float)
    v = np.asarray(v, dtype=float)
    if f.size < 2:
        return 0.0
    # each term is symmetric in (k, b), so sum the full off-diagonal and halve
    num = v[:, None] - v[None, :]
    den = f[:, None] - f[None, :]
    np.fill_diagonal(den, 1.0)
    return 0.5 * float(np.sum(num / den))


def trace_known(ell, phi, dphi, m):
    ell = np.asarray(ell, dtype=float)
    p = ell.size
    return float(np.sum((m - p + 1) * phi + ell * dphi)) + 2.0 * pair_sum(ell, ell * phi)


def trace_z(f, phi, dphi, m, p):
    """Closed-form z-divergence; ``(m, p)`` are the model dimensions."""
    f = np.asarray(f, dtype=float)
    coef = (m - p + 1) if m > p else (p - m + 1)
    return float(np.sum(f * dphi + coef * phi)) + 2.0 * pair_sum(f, f * phi)


def trace_s(f, phi, dphi, m, p):
    f = np.asarray(f, dtype=float)
    if m > p:
        return float(np.sum((2 * p - 1) * phi - f * dphi)) - 2.0 * pair_sum(f, f * phi)
    return -(float(np.sum(f**2 * dphi - 2 * (m - 1) * f * phi)) + 2.0 * pair_sum(f, f**2 * phi))


def _branch(z, s):
    m, p = z.shape
    if m == p:
        raise BranchMismatch("unknown-covariance calculus needs m != p")
    if s.shape != (p, p):
        raise BranchMismatch(f"s must be {p}x{p}, got {s.shape}")
    return m, p


def unknown_spectrum(z, s, gap_tol=cm.GAP_TOL):
    """Eigenvalues of ``Z^H Z S^{-1}`` (m > p) or ``Z S^{-1} Z^H`` (p > m) and the basis.

    Returns ``(f, basis)`` where basis is ``A`` (m > p) or ``U`` (p > m).
    """
    z, s = cm.as_cmatrix(z), cm.as_cmatrix(s)
    m, p = _branch(z, s)
    if m > p:
        sd = cm.sim_diag(z.conj().T @ z, s, gap_tol=gap_tol)
        return sd.f, sd.a
    eig = cm.herm_eigen(z @ cm.inv_hpd(s) @ z.conj().T)
    f = eig.lam
    if f[-1] <= 1e-12 * f[0]:
        raise DegenerateSpectrum("Z S^{-1} Z^H is singular")
    if cm.min_relative_gap(f) < gap_tol:
        raise DegenerateSpectrum(f"relative eigengap {cm.min_relative_gap(f):.3g} below {gap_tol:g}")
    return f, eig.u


def divergence_known(z, phi, gap_tol=cm.GAP_TOL):
    """``Tr Re(grad_Z' Z U Phi(L) U^H)`` in closed form."""
    z = cm.as_cmatrix(z)
    ell = cm.herm_eigen(z.conj().T @ z).lam
    if cm.min_relative_gap(ell) < gap_tol:
        raise DegenerateSpectrum(f"relative eigengap {cm.min_relative_gap(ell):.3g} below {gap_tol:g}")
    return trace_known(ell, phi.values(ell), phi.derivs(ell), z.shape[0])


def divergence_unknown_z(z, s, phi, gap_tol=cm.GAP_TOL):
    """``Tr Re(grad_Z' Z A Phi A^{-1})`` (m > p) or ``Tr Re(grad_Z' U Phi U^H Z)`` (p > m)."""
    z = cm.as_cmatrix(z)
    f, _ = unknown_spectrum(z, s, gap_tol)
    m, p = z.shape
    return trace_z(f, phi.values(f), phi.derivs(f), m, p)


def divergence_unknown_s(z, s, phi, gap_tol=cm.GAP_TOL):
    """``Tr D_S (A^H)^{-1} Phi A^{-1}`` (m > p) or ``Tr D_S Z^H U Phi U^H Z`` (p > m)."""
    z = cm.as_cmatrix(z)
    f, _ = unknown_spectrum(z, s, gap_tol)
    m, p = z.shape
    return trace_s(f, phi.values(f), phi.derivs(f), m, p)


# -- matrix fields whose divergences the traces describe -------------------


def field_known(z, phi):
    eig = cm.herm_eigen(z.conj().T @ z)
    return z @ (eig.u * phi.values(eig.lam)[None, :]) @ eig.u.conj().T


def field_unknown_z(z, s, phi):
    """``Z A Phi A^{-1}`` (m > p) or ``U Phi U^H Z`` (p > m)."""
    f, basis = unknown_spectrum(z, s, gap_tol=0.0)
    vals = phi.values(f)
    if z.shape[0] > z.shape[1]:
        return z @ (basis * vals[None, :]) @ np.linalg.inv(basis)
    return (basis * vals[None, :]) @ basis.conj().T @ z


def field_unknown_s(z, s, phi):
    """``(A^H)^{-1} Phi A^{-1}`` (m > p) or ``Z^H U Phi U^H Z`` (p > m)."""
    f, basis = unknown_spectrum(z, s, gap_tol=0.0)
    vals = phi.values(f)
    if z.shape[0] > z.shape[1]:
        a_inv = np.linalg.inv(basis)
        return (a_inv.conj().T * vals[None, :]) @ a_inv
    return z.conj().T @ (basis * vals[None, :]) @ basis.conj().T @ z


def fd_divergence_z(g, z, step=FD_STEP):
    """``sum_jk Re d g_jk / d z_jk`` by finite differences."""
    d = fd_wirtinger_all(g, z, step)
    m, p = cm.as_cmatrix(z).shape
    return float(sum(d[j, k, j, k].real for j in range(m) for k in range(p)))


def fd_divergence_s(g, s, step=FD_STEP):
    """``Tr D_S G = sum_ij d g_ji / d s_ij`` by finite differences."""
    d = fd_hermitian_all(g, s, step)
    p = d.shape[-1]
    return complex(sum(d[j, i, i, j] for i in range(p) for j in range(p)))
