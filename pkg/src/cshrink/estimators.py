"""Shrinkage estimators of the mean matrix.

Known covariance (m > p):   ``Z (I_p + U H(L) U^H)`` with ``Z^H Z = U L U^H``.
Unknown covariance:
    m > p:  ``Z (I_p + A H(F) A^{-1})`` with ``A^H S A = I``, ``A^H Z^H Z A = F``
    p > m:  ``(I_m + U H(F) U^H) Z``  with ``Z S^{-1} Z^H = U F U^H``
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import cmatrix as cm
from .errors import BranchMismatch, ConfigInvalid, DegenerateSpectrum, DimensionMismatch, MissingArgument
from .profiles import (  # noqa: F401  (re-exported)
    KNOWN_KINDS,
    UNKNOWN_KINDS,
    ShrinkageProfile,
    as_coefficients,
    em_coefficient,
    gamma_profile,
    known_gamma_bound,
    make_profile,
    unknown_gamma_bound,
)

ALL_KINDS = ("mle", "known_crude_em", "known_gamma", "known_ordered",
             "unknown_em", "unknown_as", "unknown_gamma", "custom")
JSON_KINDS = ("mle",) + KNOWN_KINDS + UNKNOWN_KINDS
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    covariance: str = None
    profile: Optional[ShrinkageProfile] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ConfigInvalid(f"unknown estimator kind '{self.kind}'")
        cov = self.covariance
        if cov is None:
            cov = "unknown" if self.kind.startswith("unknown") else "known"
            object.__setattr__(self, "covariance", cov)
        if cov not in ("known", "unknown"):
            raise ConfigInvalid(f"covariance must be 'known' or 'unknown', got '{cov}'")
        if self.kind.startswith("known") and cov != "known":
            raise ConfigInvalid(f"'{self.kind}' requires covariance 'known'")
        if self.kind.startswith("unknown") and cov != "unknown":
            raise ConfigInvalid(f"'{self.kind}' requires covariance 'unknown'")
        if self.kind in ("known_gamma", "unknown_gamma", "custom") and self.profile is None:
            raise ConfigInvalid(f"'{self.kind}' needs an explicit profile")

    @property
    def estimator_id(self):
        return self.label or self.kind

    def check_dims(self, m, p):
        if self.kind == "mle":
            return
        if m == p:
            raise BranchMismatch(f"'{self.kind}' is undefined for m = p = {m}")
        if self.covariance == "known" and m < p:
            raise BranchMismatch(f"'{self.kind}' needs m > p, got m={m}, p={p}")

    def resolve_profile(self, m, p, n=None):
        if self.profile is not None:
            q = p if self.covariance == "known" else min(m, p)
            if self.profile.q != q:
                raise DimensionMismatch(f"profile has q={self.profile.q}, expected {q}")
            return self.profile
        return make_profile(self.kind, m, p, n)

    def to_json(self):
        if self.kind not in JSON_KINDS:
            raise ConfigInvalid(f"'{self.kind}' estimators carry code-level profiles and cannot be serialized")
        out = {"kind": self.kind, "covariance": self.covariance}
        if self.label:
            out["id"] = self.label
        return out

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ConfigInvalid(f"estimator entry must be an object with a 'kind', got {obj!r}")
        if obj["kind"] not in JSON_KINDS:
            raise ConfigInvalid(f"estimator kind '{obj['kind']}' is not available from JSON")
        return cls(obj["kind"], obj.get("covariance"), label=obj.get("id"))


def _check_nonsingular(vals, what):
    if vals[-1] <= SINGULAR_RTOL * vals[0]:
        raise DegenerateSpectrum(f"{what} is numerically singular")


def known_shrink(z, profile):
    """Known-covariance estimate plus the eigenvalues of ``Z^H Z``."""
    z = cm.as_cmatrix(z)
    m, p = z.shape
    if m < p:
        raise BranchMismatch(f"known-covariance shrinkage needs m >= p, got m={m}, p={p}")
    eig = cm.herm_eigen(z.conj().T @ z)
    _check_nonsingular(eig.lam, "Z^H Z")
    h = profile.values(eig.lam)
    return z + z @ (eig.u * h[None, :]) @ eig.u.conj().T, eig.lam


def apply_h_known(z, profile):
    return known_shrink(z, profile)[0]


def unknown_shrink(z, s, profile, gap_tol=cm.GAP_TOL):
    """Unknown-covariance estimate plus the eigenvalues ``F`` it acted on."""
    z, s = cm.as_cmatrix(z), cm.as_cmatrix(s)
    m, p = z.shape
    if m == p:
        raise BranchMismatch("unknown-covariance shrinkage needs m != p")
    if s.shape != (p, p):
        raise DimensionMismatch(f"s must be {p}x{p}, got {s.shape}")
    if m > p:
        sd = cm.sim_diag(z.conj().T @ z, s, gap_tol=gap_tol)
        h = profile.values(sd.f)
        return z + z @ (sd.a * h[None, :]) @ np.linalg.inv(sd.a), sd.f
    eig = cm.herm_eigen(z @ cm.inv_hpd(s) @ z.conj().T)
    _check_nonsingular(eig.lam, "Z S^{-1} Z^H")
    if cm.min_relative_gap(eig.lam) < gap_tol:
        raise DegenerateSpectrum(f"relative eigengap {cm.min_relative_gap(eig.lam):.3g} below {gap_tol:g}")
    h = profile.values(eig.lam)
    return z + (eig.u * h[None, :]) @ eig.u.conj().T @ z, eig.lam


def apply_h_unknown(z, s, profile):
    return unknown_shrink(z, s, profile)[0]


def whiten(z, k):
    return cm.inv_sqrt_herm(k) @ cm.as_cmatrix(z)


def unwhiten(xi_hat, k):
    return cm.sqrt_herm(k) @ cm.as_cmatrix(xi_hat)


def estimate(spec, z, s=None, sigma=None, k=None, n=None):
    """Evaluate ``spec`` on data; ``k`` and (known mode) ``sigma`` are whitened out and back."""
    z = cm.as_cmatrix(z)
    m, p = z.shape
    if spec.kind == "mle":
        return z.copy()
    spec.check_dims(m, p)
    zw = whiten(z, k) if k is not None else z
    if spec.covariance == "known":
        if sigma is not None:
            zw = zw @ cm.inv_sqrt_herm(sigma)
        out = apply_h_known(zw, spec.resolve_profile(m, p))
        if sigma is not None:
            out = out @ cm.sqrt_herm(sigma)
    else:
        if s is None:
            raise MissingArgument(f"'{spec.kind}' needs the Wishart matrix s")
        if spec.profile is None and n is None:
            raise MissingArgument(f"'{spec.kind}' needs the degrees of freedom n")
        out = apply_h_unknown(zw, s, spec.resolve_profile(m, p, n))
    return unwhiten(out, k) if k is not None else out
