"""Samplers for the complex matrix normal and complex Wishart laws.

Randomness comes from :class:`RngStream`: a Philox counter-based generator
keyed by ``(seed, stream_index)``.  Complex normals are produced by the
Box-Muller transform, ``z = sqrt(-log u1) * exp(2 pi i u2)``, which gives
independent real and imaginary parts of variance 1/2 each.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from . import cmatrix as cm
from .errors import DegenerateSample, DimensionMismatch

_U64 = 1 << 64


@dataclass
class RngStream:
    """Deterministic random stream; one per Monte Carlo replicate."""

    seed: int
    stream_index: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("seed", "stream_index"):
            value = int(getattr(self, name))
            if not 0 <= value < _U64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
            setattr(self, name, value)
        key = np.array([self.seed, self.stream_index], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniform_open(self, size):
        """Uniforms on (0, 1]."""
        return 1.0 - self._gen.random(size)

    def standard_cn(self, shape):
        """Array of iid standard complex normals, ``E|z|^2 = 1``."""
        n = int(np.prod(shape))
        u1 = self.uniform_open(n)
        u2 = self._gen.random(n)
        z = np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)
        return z.reshape(shape)


@dataclass(eq=False)
class ModelParams:
    """Z ~ CN_{m x p}(xi, k (x) sigma) and, independently, S ~ CW_p(sigma, n)."""

    m: int
    p: int
    n: int
    xi: np.ndarray = None
    sigma: np.ndarray = None
    k: np.ndarray = None

    def __post_init__(self):
        self.m, self.p, self.n = int(self.m), int(self.p), int(self.n)
        if self.m < 1 or self.p < 1:
            raise DimensionMismatch(f"m and p must be positive, got m={self.m}, p={self.p}")
        if self.n <= self.p:
            raise DimensionMismatch(f"need n > p for a nonsingular Wishart, got n={self.n}, p={self.p}")
        self.xi = np.zeros((self.m, self.p), complex) if self.xi is None else cm.as_cmatrix(self.xi)
        self.sigma = np.eye(self.p, dtype=complex) if self.sigma is None else cm.as_cmatrix(self.sigma)
        self.k = np.eye(self.m, dtype=complex) if self.k is None else cm.as_cmatrix(self.k)
        if self.xi.shape != (self.m, self.p):
            raise DimensionMismatch(f"xi must be {self.m}x{self.p}, got {self.xi.shape}")
        if self.sigma.shape != (self.p, self.p):
            raise DimensionMismatch(f"sigma must be {self.p}x{self.p}, got {self.sigma.shape}")
        if self.k.shape != (self.m, self.m):
            raise DimensionMismatch(f"k must be {self.m}x{self.m}, got {self.k.shape}")
        # factor once up front so bad inputs fail at construction
        _ = self.sigma_sqrt, self.k_sqrt

    @cached_property
    def sigma_sqrt(self):
        return cm.sqrt_herm(self.sigma)

    @cached_property
    def k_sqrt(self):
        return cm.sqrt_herm(self.k)

    @property
    def sigma_is_identity(self):
        return np.array_equal(self.sigma, np.eye(self.p))

    @property
    def k_is_identity(self):
        return np.array_equal(self.k, np.eye(self.m))


def sample_cn_matrix(params, rng):
    """One draw ``Z = xi + K^{1/2} E Sigma^{1/2}`` with E standard complex normal."""
    e = rng.standard_cn((params.m, params.p))
    return params.xi + params.k_sqrt @ e @ params.sigma_sqrt


def sample_cwishart(sigma, n, rng, sigma_sqrt=None):
    """``S = Sigma^{1/2} (sum_i x_i x_i^H) Sigma^{1/2}`` over n standard vectors."""
    sigma = cm.as_cmatrix(sigma)
    p = sigma.shape[0]
    if sigma.shape != (p, p):
        raise DimensionMismatch(f"sigma must be square, got {sigma.shape}")
    n = int(n)
    if n < p:
        raise DegenerateSample(f"n={n} < p={p} gives a singular Wishart matrix")
    if sigma_sqrt is not None:
        root = sigma_sqrt
    elif np.array_equal(sigma, np.eye(p)):
        root = None
    else:
        root = cm.sqrt_herm(sigma)
    x = rng.standard_cn((n, p))
    y = x if root is None else x @ root
    s = y.conj().T @ y
    s = 0.5 * (s + s.conj().T)
    # s is Hermitian by construction, so go straight to the factorization
    if not _kernels.cholesky_lower(s)[1]:
        raise DegenerateSample("Wishart draw is numerically singular")
    return s
