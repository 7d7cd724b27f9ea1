"""Losses, unbiased risk estimates and Monte Carlo identity checks."""
from dataclasses import dataclass

import numpy as np

from . import calculus
from . import cmatrix as cm
from .calculus import pair_sum
from .errors import BranchMismatch, DegenerateSpectrum, DimensionMismatch, NonFiniteResult
from .sampling import sample_cwishart


@dataclass(frozen=True)
class UreValue:
    value: float
    delta: float
    min_gap: float
    degenerate_flag: bool


def loss_known(xi_hat, xi):
    """``Tr (xi_hat - xi)^H (xi_hat - xi)``, the squared Frobenius distance."""
    xi_hat, xi = cm.as_cmatrix(xi_hat), cm.as_cmatrix(xi)
    if xi_hat.shape != xi.shape:
        raise DimensionMismatch(f"shapes {xi_hat.shape} and {xi.shape} differ")
    d = xi_hat - xi
    return float(np.sum(d.real**2 + d.imag**2))


def loss_invariant(xi_hat, xi, sigma, k, sigma_inv=None, k_inv=None):
    """``Tr Sigma^{-1} (xi_hat - xi)^H K^{-1} (xi_hat - xi)``."""
    xi_hat, xi = cm.as_cmatrix(xi_hat), cm.as_cmatrix(xi)
    if xi_hat.shape != xi.shape:
        raise DimensionMismatch(f"shapes {xi_hat.shape} and {xi.shape} differ")
    m, p = xi.shape
    sigma_inv = cm.inv_hpd(sigma) if sigma_inv is None else sigma_inv
    k_inv = cm.inv_hpd(k) if k_inv is None else k_inv
    if sigma_inv.shape != (p, p) or k_inv.shape != (m, m):
        raise DimensionMismatch("sigma / k do not conform with xi")
    d = xi_hat - xi
    return float(np.real(np.trace(sigma_inv @ d.conj().T @ k_inv @ d)))


def _ure(mp, delta, min_gap, gap_threshold):
    return UreValue(float(mp + delta), float(delta), float(min_gap), bool(min_gap < gap_threshold))


def known_increment(ell, h, dh, m):
    """Known-covariance URE increment at eigenvalues ``ell`` of ``Z^H Z``."""
    ell = np.asarray(ell, dtype=float)
    p = ell.size
    with np.errstate(divide="ignore", invalid="ignore"):
        return (float(np.sum(2 * (m - p + 1) * h + 2 * ell * dh + ell * h**2))
                + 4.0 * pair_sum(ell, ell * h))


def ure_known_from_eigs(ell, profile, m, gap_threshold=cm.GAP_TOL):
    ell = np.asarray(ell, dtype=float)
    delta = known_increment(ell, profile.values(ell), profile.derivs(ell), m)
    return _ure(m * ell.size, delta, cm.min_relative_gap(ell), gap_threshold)


def ure_known(z, profile, gap_threshold=cm.GAP_TOL):
    """Unbiased estimate of ``E Tr (xi_hat - xi)^H (xi_hat - xi)`` for ``Z ~ CN(xi, I (x) I)``."""
    z = cm.as_cmatrix(z)
    m, p = z.shape
    if m < p:
        raise BranchMismatch(f"known-covariance URE needs m >= p, got m={m}, p={p}")
    ell = cm.herm_eigen(z.conj().T @ z).lam
    return ure_known_from_eigs(ell, profile, m, gap_threshold)


def _delta_terms(n, m, p, f, h, dh):
    with np.errstate(divide="ignore", invalid="ignore"):
        single = np.sum(2 * (m - p + 1) * h + 2 * f * dh + (n + p - 2) * f * h**2
                        - 2 * f**2 * dh * h)
        return float(single) + 4.0 * pair_sum(f, f * h) - 2.0 * pair_sum(f, f**2 * h**2)


def delta_hat(n, m, p, f, profile, gap_tol=1e-12):
    """Risk increment for the invariant class at eigenvalues ``f`` (length ``p``)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (p,):
        raise DimensionMismatch(f"expected {p} eigenvalues, got shape {f.shape}")
    if np.any(f <= 0):
        raise DegenerateSpectrum("eigenvalues must be positive")
    if cm.min_relative_gap(f) <= gap_tol:
        raise DegenerateSpectrum("eigenvalues must be strictly descending")
    return _delta_terms(n, m, p, f, profile.values(f), profile.derivs(f))


def substituted_dims(n, m, p):
    """Arguments ``(n, m, p)`` at which the increment is evaluated for model dims ``(m, p)``."""
    if m > p:
        return n, m, p
    if p > m:
        return n + m - p, p, m
    raise BranchMismatch("m == p has no invariant-class URE")


def ure_unknown_from_eigs(f, n, m, p, profile, gap_threshold=cm.GAP_TOL):
    f = np.asarray(f, dtype=float)
    nn, mm, pp = substituted_dims(n, m, p)
    gap = cm.min_relative_gap(f)
    if gap < gap_threshold:
        delta = _delta_terms(nn, mm, pp, f, profile.values(f), profile.derivs(f))
    else:
        delta = delta_hat(nn, mm, pp, f, profile)
    return _ure(m * p, delta, gap, gap_threshold)


def ure_unknown(z, s, n, profile, gap_threshold=cm.GAP_TOL):
    """Unbiased estimate of the invariant-loss risk of the unknown-covariance class."""
    z = cm.as_cmatrix(z)
    m, p = z.shape
    f, _ = calculus.unknown_spectrum(z, s, gap_tol=0.0)
    return ure_unknown_from_eigs(f, n, m, p, profile, gap_threshold)


def ure_general(z, s, n, g, step=calculus.FD_STEP):
    """Slow reference URE for ``Z + G(Z, S)`` with both divergences by finite differences."""
    z, s = cm.as_cmatrix(z), cm.as_cmatrix(s)
    m, p = z.shape
    s_inv = cm.inv_hpd(s)
    gz = cm.as_cmatrix(g(z, s))
    div_z = calculus.fd_divergence_z(lambda zz: g(zz, s), z, step)

    def gram(ss):
        gg = g(z, ss)
        return gg.conj().T @ gg

    div_s = calculus.fd_divergence_s(gram, s, step).real
    tail = float(np.real(np.trace(gz.conj().T @ gz @ s_inv)))
    value = m * p + 2.0 * div_z + div_s + (n - p) * tail
    if not np.isfinite(value):
        raise NonFiniteResult("general URE is not finite")
    return float(value)


# -- Monte Carlo identity checks -------------------------------------------


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    se: float

    @property
    def gap(self):
        return abs(self.lhs - self.rhs)

    def within(self, k=3.0):
        return self.gap <= k * self.se


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteResult("non-finite Monte Carlo sample")
    if x.size < 2:
        return float(x.mean()), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def _fd_vector_divergence(g, z):
    """``sum_i dRe g_i/dRe z_i + dIm g_i/dIm z_i`` = ``2 Re sum_i dg_i/dz_i``."""
    zz = z.reshape(-1, 1)
    d = calculus.fd_wirtinger_all(lambda v: g(v.reshape(1, -1))[0], zz)
    return 2.0 * float(sum(d[i, i, 0].real for i in range(z.size)))


def stein_identity_check(theta, sigma, g, reps, rng, divergence=None):
    """Monte Carlo check of the complex Stein identity for ``Z ~ CN_p(theta, sigma)``.

    ``g`` maps an ``(N, p)`` batch of vectors to an ``(N, p)`` batch;
    ``divergence`` (same batching, returning ``(N,)``) gives
    ``sum_i dRe g_i/dRe z_i + dIm g_i/dIm z_i``; by default it is estimated by
    finite differences.  ``se`` is the standard error of the paired difference.
    """
    theta = np.asarray(theta, dtype=complex).ravel()
    sigma = cm.as_cmatrix(sigma)
    p = theta.size
    if sigma.shape != (p, p):
        raise DimensionMismatch(f"sigma must be {p}x{p}")
    root = cm.sqrt_herm(sigma)
    sigma_inv = cm.inv_hpd(sigma)
    e = rng.standard_cn((reps, p))
    # rows are column vectors root @ e, so E (z - theta)(z - theta)^H = sigma
    z = theta[None, :] + e @ root.T
    gz = np.asarray(g(z), dtype=complex)
    centered = z - theta[None, :]
    lhs = 2.0 * np.real(np.einsum("ri,ij,rj->r", np.conj(centered), sigma_inv, gz))
    if divergence is None:
        rhs = np.array([_fd_vector_divergence(g, row) for row in z])
    else:
        rhs = np.asarray(divergence(z), dtype=float) * np.ones(reps)
    lhs_mean, _ = _mean_se(lhs)
    rhs_mean, _ = _mean_se(rhs)
    _, se = _mean_se(lhs - rhs)
    return IdentityCheck(lhs_mean, rhs_mean, se)


def stein_haff_check(sigma, n, g, reps, rng, tr_ds=None):
    """Monte Carlo check of the complex Stein-Haff identity for ``S ~ CW_p(sigma, n)``.

    ``g`` maps a Hermitian ``S`` to a ``p x p`` matrix; ``tr_ds(S)`` returns
    ``Tr D_S G(S)`` (finite differences when omitted).
    """
    sigma = cm.as_cmatrix(sigma)
    p = sigma.shape[0]
    root = cm.sqrt_herm(sigma)
    sigma_inv = cm.inv_hpd(sigma)
    lhs = np.empty(reps)
    rhs = np.empty(reps)
    for r in range(reps):
        s = sample_cwishart(sigma, n, rng, sigma_sqrt=root)
        gs = cm.as_cmatrix(g(s))
        div = calculus.fd_divergence_s(g, s) if tr_ds is None else tr_ds(s)
        lhs[r] = np.real(np.trace(gs @ sigma_inv))
        rhs[r] = (n - p) * np.real(np.trace(gs @ cm.inv_hpd(s))) + np.real(div)
    lhs_mean, _ = _mean_se(lhs)
    rhs_mean, _ = _mean_se(rhs)
    _, se = _mean_se(lhs - rhs)
    return IdentityCheck(lhs_mean, rhs_mean, se)
