import numpy as np
import pytest

from cshrink import calculus as calc
from cshrink import cmatrix as cm
from cshrink.errors import BranchMismatch, DegenerateSpectrum, NonFiniteResult, NotHermitian
from cshrink.profiles import ShrinkageProfile, inverse_profile, zero_profile
from cshrink.sampling import RngStream
from cshrink.verify import calculus_instances, rel_err

from conftest import crandn, random_hpd


def const_profile(q, c):
    return ShrinkageProfile(q, lambda f: np.full(q, float(c)), lambda f: np.zeros(q), "const")


def identity_profile(q):
    return ShrinkageProfile(q, lambda f: np.array(f, dtype=float), lambda f: np.ones(q), "id")


# -- finite-difference oracles ----------------------------------------------


def test_fd_wirtinger_basics():
    z = np.array([[2 + 3j, 1j]])
    assert abs(calc.fd_wirtinger(lambda x: x[0, 0], z, 0, 0) - 1) < 1e-9
    assert abs(calc.fd_wirtinger(lambda x: np.conj(x[0, 0]), z, 0, 0)) < 1e-9
    assert abs(calc.fd_wirtinger(lambda x: abs(x[0, 0]) ** 2, z, 0, 0) - (2 - 3j)) < 1e-8
    assert abs(calc.fd_wirtinger(lambda x: x[0, 0], z, 0, 1)) < 1e-12


def test_conjugation_law():
    # d conj(g) / d z = conj(d g / d zbar); with g = z zbar^2 this is conj(2 z zbar) = 2|z|^2
    z = np.array([[0.7 - 1.2j]])
    g = lambda x: x[0, 0] * np.conj(x[0, 0]) ** 2
    lhs = calc.fd_wirtinger(lambda x: np.conj(g(x)), z, 0, 0)
    assert abs(lhs - 2 * abs(z[0, 0]) ** 2) < 1e-8


def test_fd_nonfinite():
    with pytest.raises(NonFiniteResult):
        calc.fd_wirtinger(lambda x: np.inf, np.zeros((1, 1)), 0, 0)


def test_fd_hermitian_basics():
    s = np.array([[2, 0.5j], [-0.5j, 3]])
    assert abs(calc.fd_hermitian(lambda x: x[1, 0], s, 0, 1) - 1) < 1e-9
    assert abs(calc.fd_hermitian(lambda x: x[0, 1], s, 0, 1)) < 1e-9
    assert abs(calc.fd_hermitian(lambda x: np.trace(x), s, 0, 0) - 1) < 1e-9
    with pytest.raises(NotHermitian):
        calc.fd_hermitian(lambda x: x[0, 0], np.array([[1, 1], [0, 1]]), 0, 0)


def test_fd_hermitian_rule_on_products(nprng):
    # d s_kl / d s_ij = delta_il delta_jk for every index combination
    s = random_hpd(nprng, 3)
    d = calc.fd_hermitian_all(lambda x: x, s)
    expect = np.einsum("il,jk->klij", np.eye(3), np.eye(3))
    assert np.allclose(d, expect, atol=1e-8)


# -- analytic tensors: spec hand values ---------------------------------------


def test_known_scalar():
    d = calc.eig_derivs_known(np.array([[3 + 4j]]))
    assert np.allclose(d.dl[0, 0, 0], 3 - 4j)
    assert np.all(d.du == 0)


def test_known_dl_scales_linearly(nprng):
    z = crandn(nprng, 4, 2)
    assert np.allclose(calc.eig_derivs_known(2.5 * z).dl, 2.5 * calc.eig_derivs_known(z).dl)


def test_mgtp_scalar():
    z = np.array([[1 + 1j], [2 - 1j], [0.5j], [1.0]])
    s = np.array([[2.5]])
    d = calc.eig_derivs_unknown_mgtp(z, s)
    w = np.vdot(z, z).real
    f = w / 2.5
    assert np.isclose(d.f[0], f)
    assert np.isclose(d.df_ds[0, 0, 0], -f / 2.5)
    assert np.allclose(d.df_dz[0, :, 0], np.conj(z[:, 0]) / 2.5)


def test_pgtm_single_row():
    rng = np.random.default_rng(3)
    z = crandn(rng, 1, 2)
    s = random_hpd(rng, 2)
    d = calc.eig_derivs_unknown_pgtm(z, s)
    assert np.all(d.du == 0) and np.all(d.dubar == 0)
    f = lambda ss: (z @ np.linalg.inv(ss) @ z.conj().T)[0, 0]
    fd = calc.fd_hermitian_all(lambda ss: np.array([f(ss)]), s)
    assert rel_err(d.df_ds, fd) < 1e-5


def test_branch_errors(nprng):
    with pytest.raises(BranchMismatch):
        calc.eig_derivs_unknown_mgtp(crandn(nprng, 2, 3), np.eye(3))
    with pytest.raises(BranchMismatch):
        calc.eig_derivs_unknown_pgtm(crandn(nprng, 3, 2), np.eye(2))
    with pytest.raises(BranchMismatch):
        calc.divergence_unknown_z(crandn(nprng, 2, 2), np.eye(2), zero_profile(2))


def test_degenerate_rejected():
    z = np.zeros((3, 2), complex)
    z[0, 0] = z[1, 1] = 1.0
    with pytest.raises(DegenerateSpectrum):
        calc.eig_derivs_known(z)


# -- analytic tensors against FD on random instances --------------------------


@pytest.fixture(scope="module")
def inst_42():
    return calculus_instances(4, 2, 77, 3)


def test_known_tensors_vs_fd(inst_42):
    for z, _ in inst_42:
        d = calc.eig_derivs_known(z)
        u_of = lambda zz: calc.align_columns(d.u.conj().T, cm.herm_eigen(zz.conj().T @ zz).u)
        assert rel_err(d.du, calc.fd_wirtinger_all(u_of, z)) < 1e-5
        assert rel_err(d.dubar, calc.fd_wirtinger_all(lambda zz: np.conj(u_of(zz)), z)) < 1e-5
        lam = lambda zz: cm.herm_eigen(zz.conj().T @ zz).lam.astype(complex)
        assert rel_err(d.dl, calc.fd_wirtinger_all(lam, z)) < 1e-5


def test_mgtp_tensors_vs_fd():
    for z, s in calculus_instances(5, 3, 78, 2):
        d = calc.eig_derivs_unknown_mgtp(z, s)
        a_inv = np.linalg.inv(d.a)
        a_of = lambda zz: calc.align_columns(a_inv, cm.sim_diag(zz.conj().T @ zz, s).a)
        assert rel_err(d.da, calc.fd_wirtinger_all(a_of, z)) < 1e-5
        assert rel_err(d.da_inv, calc.fd_wirtinger_all(lambda zz: np.linalg.inv(a_of(zz)), z)) < 1e-5
        f_s = lambda ss: cm.sim_diag(z.conj().T @ z, ss).f.astype(complex)
        assert rel_err(d.df_ds, calc.fd_hermitian_all(f_s, s)) < 1e-5


def test_pgtm_tensors_vs_fd():
    for z, s in calculus_instances(2, 4, 79, 2):
        d = calc.eig_derivs_unknown_pgtm(z, s)
        u_of = lambda ss: calc.align_columns(d.u.conj().T, cm.herm_eigen(z @ cm.inv_hpd(ss) @ z.conj().T).u)
        assert rel_err(d.du_ds, calc.fd_hermitian_all(u_of, s)) < 1e-5
        assert rel_err(d.dubar_ds, calc.fd_hermitian_all(lambda ss: np.conj(u_of(ss)), s)) < 1e-5


# -- divergence traces ------------------------------------------------------


def test_divergence_hand_values(nprng):
    z = crandn(nprng, 3, 2)
    assert calc.divergence_known(z, zero_profile(2)) == 0
    assert np.isclose(calc.divergence_known(z, const_profile(2, 1.0)), 6.0)
    z1 = crandn(nprng, 3, 1)
    s1 = np.array([[1.7]])
    assert np.isclose(calc.divergence_unknown_z(z1, s1, const_profile(1, 0.4)), 3 * 0.4)
    assert np.isclose(calc.divergence_unknown_s(z1, s1, const_profile(1, 0.4)), 0.4)
    s = random_hpd(nprng, 2)
    assert calc.divergence_unknown_z(z, s, zero_profile(2)) == 0
    assert calc.divergence_unknown_s(z, s, zero_profile(2)) == 0


def test_pair_sum():
    f = np.array([3.0, 2.0, 0.5])
    v = np.array([1.0, 4.0, -2.0])
    slow = sum((v[k] - v[b]) / (f[k] - f[b]) for k in range(3) for b in range(k + 1, 3))
    assert np.isclose(calc.pair_sum(f, v), slow)
    assert calc.pair_sum(f[:1], v[:1]) == 0.0


def test_known_divergence_vs_fd(inst_42):
    phi = identity_profile(2)
    for z, _ in inst_42:
        fd = calc.fd_divergence_z(lambda zz: calc.field_known(zz, phi), z)
        assert rel_err(calc.divergence_known(z, phi), fd) < 1e-5


@pytest.mark.parametrize("shape", [(5, 3), (2, 4)])
def test_unknown_divergences_vs_fd(shape):
    m, p = shape
    phi = inverse_profile(np.ones(min(m, p)))
    for z, s in calculus_instances(m, p, 80, 2):
        fd_z = calc.fd_divergence_z(lambda zz: calc.field_unknown_z(zz, s, phi), z)
        assert rel_err(calc.divergence_unknown_z(z, s, phi), fd_z) < 1e-5
        fd_s = calc.fd_divergence_s(lambda ss: calc.field_unknown_s(z, ss, phi), s)
        assert abs(fd_s.imag) < 1e-6 * max(1, abs(fd_s))
        assert rel_err(calc.divergence_unknown_s(z, s, phi), fd_s.real) < 1e-5
