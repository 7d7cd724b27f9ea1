"""Diagonal shrinkage profiles ``H(f) = diag(h_1(f), ..., h_q(f))``.

A profile carries its own diagonal derivative ``h_kk = dh_k/df_k`` so that
risk estimates never need nested finite differences.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BranchMismatch, ConstraintViolation

KNOWN_KINDS = ("known_crude_em", "known_ordered")
UNKNOWN_KINDS = ("unknown_em", "unknown_as")


@dataclass(frozen=True)
class ShrinkageProfile:
    q: int
    h: Callable[[np.ndarray], np.ndarray]
    h_deriv: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    # constant numerators when h_k = -c_k / f_k, for reporting
    coefficients: Optional[np.ndarray] = None

    def __call__(self, f):
        return self.values(f)

    def values(self, f):
        f = np.asarray(f, dtype=float)
        self._check_len(f)
        return np.asarray(self.h(f), dtype=float)

    def derivs(self, f):
        f = np.asarray(f, dtype=float)
        self._check_len(f)
        return np.asarray(self.h_deriv(f), dtype=float)

    def _check_len(self, f):
        if f.shape != (self.q,):
            raise ValueError(f"profile '{self.name}' expects {self.q} eigenvalues, got shape {f.shape}")


def zero_profile(q):
    return ShrinkageProfile(q, lambda f: np.zeros_like(f), lambda f: np.zeros_like(f), "zero",
                            np.zeros(q))


def inverse_profile(coefficients, name="custom"):
    """``h_k = -c_k / f_k`` with constant ``c_k``."""
    c = np.array(coefficients, dtype=float)
    c.setflags(write=False)
    return ShrinkageProfile(len(c), lambda f: -c / f, lambda f: c / f**2, name, c)


def em_coefficient(m, p, n):
    """Common Efron-Morris factor for the unknown-covariance case."""
    if m > p:
        return (m - p) / (n + p)
    if p > m:
        return (p - m) / (n + 2 * m - p)
    raise BranchMismatch("m == p has no Efron-Morris shrinkage")


def as_coefficients(m, p, n):
    """``c_k = (m + p - 2k) / (n - p + 2k)`` for k = 1..min(m, p)."""
    k = np.arange(1, min(m, p) + 1)
    return (m + p - 2 * k) / (n - p + 2 * k)


def make_profile(kind, m, p, n=None):
    """Built-in profile for ``kind``; ``n`` is required for the unknown kinds."""
    if m == p:
        raise BranchMismatch(f"'{kind}' needs m != p, got m = p = {m}")
    if kind in KNOWN_KINDS:
        if m < p:
            raise BranchMismatch(f"'{kind}' needs m > p, got m={m}, p={p}")
        if kind == "known_crude_em":
            return inverse_profile(np.full(p, float(m - p)), kind)
        return inverse_profile(m + p - 2.0 * np.arange(1, p + 1), kind)
    if kind in UNKNOWN_KINDS:
        if n is None:
            raise ValueError(f"'{kind}' needs the Wishart degrees of freedom n")
        q = min(m, p)
        if kind == "unknown_em":
            return inverse_profile(np.full(q, em_coefficient(m, p, n)), kind)
        return inverse_profile(as_coefficients(m, p, n), kind)
    raise ValueError(f"unknown profile kind '{kind}'")


def known_gamma_bound(m, p):
    if m <= p:
        raise BranchMismatch(f"known-covariance gamma class needs m > p, got m={m}, p={p}")
    return 2.0 * (m - p)


def unknown_gamma_bound(m, p, n):
    if m == p:
        raise BranchMismatch("unknown-covariance gamma class needs m != p")
    return max(2.0 * (m - p) / (n + p), 2.0 * (p - m) / (n + 2 * m - p))


def check_gamma(g, dg, bound, rtol=1e-12, deriv_slack=None):
    """Raise ConstraintViolation unless ``0 <= g <= bound``, ``dg >= 0`` and ``g`` is non-increasing."""
    slack = rtol * max(1.0, bound)
    if np.any(g < -slack) or np.any(g > bound + slack):
        raise ConstraintViolation(f"gamma {g} leaves [0, {bound:g}]")
    if np.any(dg < -(slack if deriv_slack is None else deriv_slack)):
        raise ConstraintViolation(f"d gamma_k / d f_k = {dg} has a negative entry")
    if np.any(np.diff(g) > slack):
        raise ConstraintViolation(f"gamma {g} is not non-increasing")


def gamma_profile(gamma, gamma_deriv, q, bound, name="gamma", check=True):
    """``h_k = -gamma_k(f) / f_k`` for a user-supplied gamma.

    ``gamma_deriv(f)[k]`` must be ``d gamma_k / d f_k``.  With ``check`` the
    minimax constraints are verified at every evaluation point.
    """

    def _gamma(f):
        g = np.asarray(gamma(f), dtype=float)
        if check:
            check_gamma(g, np.asarray(gamma_deriv(f), dtype=float), bound)
            # the sign condition is also audited on a central difference, so a
            # wrong derivative callback cannot hide a decreasing gamma
            check_gamma(g, _fd_diag(gamma, f), bound, deriv_slack=FD_DERIV_SLACK * max(1.0, bound))
        return g

    def h(f):
        return -_gamma(f) / f

    def h_deriv(f):
        g = _gamma(f)
        return -np.asarray(gamma_deriv(f), dtype=float) / f + g / f**2

    return ShrinkageProfile(q, h, h_deriv, name)


FD_DERIV_SLACK = 1e-7


def _fd_diag(func, f, step=1e-6):
    """Central-difference ``d func(f)[k] / d f_k`` for every k."""
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    for k in range(f.size):
        d = step * max(1.0, abs(f[k]))
        up, dn = f.copy(), f.copy()
        up[k] += d
        dn[k] -= d
        out[k] = (np.asarray(func(up), dtype=float)[k] - np.asarray(func(dn), dtype=float)[k]) / (2 * d)
    return out


def fd_profile_derivative(profile, f, step=1e-6):
    """Central-difference estimate of ``dh_k/df_k``; used to audit ``h_deriv``."""
    return _fd_diag(profile.values, f, step)
