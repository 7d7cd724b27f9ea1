"""Compiled kernels agree with their pure-numpy source."""
import os
import subprocess
import sys

import numpy as np
import pytest

from cshrink import _accel, _kernels

from conftest import crandn, random_hpd


@pytest.mark.parametrize("n", [1, 2, 3, 5, 9])
def test_jacobi_compiled_matches_python(n):
    rng = np.random.default_rng(n)
    x = crandn(rng, n, n)
    h = x + x.conj().T
    w1, v1, s1, c1 = _kernels.jacobi_herm(h, 100)
    w2, v2, s2, c2 = _kernels.jacobi_herm.py_func(h, 100)
    assert c1 and c2 and s1 == s2
    assert np.allclose(w1, w2, atol=1e-12)
    assert np.allclose(v1, v2, atol=1e-10)


def test_jacobi_reports_nonconvergence():
    rng = np.random.default_rng(0)
    x = crandn(rng, 6, 6)
    *_, converged = _kernels.jacobi_herm.py_func(x + x.conj().T, 1)
    assert not converged


def test_cholesky_kernels_match():
    h = random_hpd(np.random.default_rng(2), 4)
    low1, ok1 = _kernels.cholesky_lower(h)
    low2, ok2 = _kernels.cholesky_lower.py_func(h)
    assert ok1 and ok2 and np.allclose(low1, low2)
    assert np.allclose(_kernels.lower_tri_inverse(low1), _kernels.lower_tri_inverse.py_func(low1))
    assert np.allclose(_kernels.lower_tri_inverse(low1) @ low1, np.eye(4))
    _, ok = _kernels.cholesky_lower.py_func(np.diag([1.0, -1.0]).astype(complex))
    assert not ok


def test_env_flag_selects_fallback():
    code = "from cshrink import _accel, _kernels; print(_accel.NUMBA_ENABLED, hasattr(_kernels.jacobi_herm, 'signatures'))"
    env = dict(os.environ, CSHRINK_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "False"]


@pytest.mark.skipif(not _accel.NUMBA_ENABLED, reason="numba disabled")
def test_compiled_by_default():
    assert hasattr(_kernels.jacobi_herm, "signatures")
