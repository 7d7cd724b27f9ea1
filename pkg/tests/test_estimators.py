import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cshrink import cmatrix as cm
from cshrink.errors import BranchMismatch, ConfigInvalid, ConstraintViolation, DimensionMismatch, MissingArgument
from cshrink.estimators import (
    EstimatorSpec,
    apply_h_known,
    apply_h_unknown,
    as_coefficients,
    em_coefficient,
    estimate,
    gamma_profile,
    known_gamma_bound,
    make_profile,
    unknown_gamma_bound,
    unwhiten,
    whiten,
)
from cshrink.profiles import fd_profile_derivative, inverse_profile, zero_profile

from conftest import crandn, random_hpd


def test_coefficients_by_hand():
    assert np.isclose(as_coefficients(5, 2, 6)[0], 5 / 6)
    assert np.isclose(em_coefficient(6, 3, 8), 3 / 11)
    assert np.isclose(em_coefficient(2, 5, 7), 3 / 6)
    assert make_profile("known_ordered", 3, 1).coefficients[0] == 2
    assert np.all(make_profile("known_crude_em", 5, 2).coefficients == 3)
    with pytest.raises(BranchMismatch):
        em_coefficient(3, 3, 5)


@pytest.mark.parametrize("m,p,n", [(6, 2, 10), (2, 6, 10), (7, 4, 9), (3, 5, 8)])
def test_ordered_coefficients_decrease(m, p, n):
    assert np.all(np.diff(as_coefficients(m, p, n)) < 0)
    if m > p:
        assert np.all(np.diff(make_profile("known_ordered", m, p).coefficients) < 0)


@pytest.mark.parametrize("kind,m,p", [("known_crude_em", 5, 2), ("known_ordered", 4, 3),
                                      ("unknown_em", 6, 2), ("unknown_as", 2, 5)])
def test_profile_derivative_consistent(kind, m, p):
    prof = make_profile(kind, m, p, 10)
    f = np.sort(np.random.default_rng(1).uniform(0.5, 5, prof.q))[::-1]
    assert np.allclose(fd_profile_derivative(prof, f), prof.derivs(f), rtol=1e-6)


def test_make_profile_branch_checks():
    with pytest.raises(BranchMismatch):
        make_profile("known_ordered", 2, 3)
    with pytest.raises(BranchMismatch):
        make_profile("unknown_em", 3, 3, 5)
    with pytest.raises(ValueError):
        make_profile("unknown_as", 4, 2)


def test_zero_profile_is_identity(nprng):
    z = crandn(nprng, 4, 2)
    s = random_hpd(nprng, 2)
    assert np.allclose(apply_h_known(z, zero_profile(2)), z)
    assert np.allclose(apply_h_unknown(z, s, zero_profile(2)), z)
    assert np.allclose(apply_h_unknown(z.T, random_hpd(nprng, 4), zero_profile(2)), z.T)


def test_known_scalar_hand_values():
    z = np.ones((3, 1), complex)
    assert np.allclose(apply_h_known(z, make_profile("known_crude_em", 3, 1)), z / 3)
    z = np.array([[2.0], [0.0], [0.0]], complex)  # l = 4
    assert np.allclose(apply_h_known(z, make_profile("known_ordered", 3, 1)), z / 2)


def test_unknown_scalar_hand_values():
    z = np.array([[1.0], [2.0], [2.0], [np.sqrt(1.0)]], complex)  # z^H z = 10
    s = np.array([[5.0]])
    out = apply_h_unknown(z, s, make_profile("unknown_em", 4, 1, 6))
    assert np.allclose(out, z * 11 / 14)
    c1 = (4 - 1) / (6 + 1)
    out = apply_h_unknown(z, s, make_profile("unknown_as", 4, 1, 6))
    assert np.allclose(out, z * (1 - c1 * 5 / 10))


def test_em_direct_formulas(nprng):
    m, p, n = 5, 2, 9
    z, s = crandn(nprng, m, p), random_hpd(nprng, p)
    direct = z @ (np.eye(p) - (m - p) / (n + p) * np.linalg.inv(z.conj().T @ z) @ s)
    assert np.allclose(estimate(EstimatorSpec("unknown_em"), z, s=s, n=n), direct, atol=1e-10)
    m, p = 2, 5
    z, s = crandn(nprng, m, p), random_hpd(nprng, p)
    t = z @ np.linalg.inv(s) @ z.conj().T
    direct = (np.eye(m) - (p - m) / (n + 2 * m - p) * np.linalg.inv(t)) @ z
    assert np.allclose(estimate(EstimatorSpec("unknown_em"), z, s=s, n=n), direct, atol=1e-10)


def test_known_crude_em_with_sigma(nprng):
    m, p = 5, 2
    z, sigma = crandn(nprng, m, p), random_hpd(nprng, p)
    direct = z @ (np.eye(p) - (m - p) * np.linalg.inv(z.conj().T @ z) @ sigma)
    assert np.allclose(estimate(EstimatorSpec("known_crude_em"), z, sigma=sigma), direct, atol=1e-10)


def test_k_whitening_matches_manual(nprng):
    m, p, n = 4, 2, 8
    z, s, k = crandn(nprng, m, p), random_hpd(nprng, p), random_hpd(nprng, m)
    spec = EstimatorSpec("unknown_as")
    manual = cm.sqrt_herm(k) @ apply_h_unknown(cm.inv_sqrt_herm(k) @ z, s, make_profile("unknown_as", m, p, n))
    assert np.allclose(estimate(spec, z, s=s, k=k, n=n), manual)


def test_whiten_roundtrip(nprng):
    z = crandn(nprng, 3, 2)
    assert np.allclose(whiten(z, np.eye(3)), z)
    k = np.diag([4.0, 4.0, 4.0])
    assert np.allclose(whiten(z, k), z / 2) and np.allclose(unwhiten(z, k), 2 * z)
    k = random_hpd(nprng, 3)
    assert np.max(np.abs(unwhiten(whiten(z, k), k) - z)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(["unknown_em", "unknown_as"]))
def test_unitary_equivariance(seed, kind):
    rng = np.random.default_rng(seed)
    m, p, n = 5, 3, 9
    z, s = crandn(rng, m, p), random_hpd(rng, p)
    q, _ = np.linalg.qr(crandn(rng, p, p))
    spec = EstimatorSpec(kind)
    lhs = estimate(spec, z @ q, s=q.conj().T @ s @ q, n=n)
    assert np.max(np.abs(lhs - estimate(spec, z, s=s, n=n) @ q)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_shrinkage_direction(seed):
    rng = np.random.default_rng(seed)
    m, p = 6, 2
    z = 3 * crandn(rng, m, p)
    prof = make_profile("known_ordered", m, p)
    ell = cm.herm_eigen(z.conj().T @ z).lam
    assert np.all(prof.values(ell) <= 0)
    if np.all(ell >= prof.coefficients):
        assert np.linalg.norm(apply_h_known(z, prof)) <= np.linalg.norm(z) + 1e-12


def test_mle_passthrough(nprng):
    z = crandn(nprng, 2, 3)
    assert np.array_equal(estimate(EstimatorSpec("mle"), z), z)


def test_spec_validation():
    with pytest.raises(ConfigInvalid):
        EstimatorSpec("nope")
    with pytest.raises(ConfigInvalid):
        EstimatorSpec("known_ordered", "unknown")
    with pytest.raises(ConfigInvalid):
        EstimatorSpec("known_gamma")
    with pytest.raises(BranchMismatch):
        EstimatorSpec("known_ordered").check_dims(2, 4)
    with pytest.raises(BranchMismatch):
        EstimatorSpec("unknown_em").check_dims(3, 3)
    EstimatorSpec("mle").check_dims(3, 3)
    spec = EstimatorSpec("unknown_as", label="as")
    assert EstimatorSpec.from_json(spec.to_json()) == spec
    with pytest.raises(ConfigInvalid):
        EstimatorSpec("custom", profile=zero_profile(2)).to_json()


def test_estimate_missing_arguments(nprng):
    z = crandn(nprng, 4, 2)
    with pytest.raises(MissingArgument):
        estimate(EstimatorSpec("unknown_em"), z, n=5)
    with pytest.raises(MissingArgument):
        estimate(EstimatorSpec("unknown_em"), z, s=np.eye(2))
    with pytest.raises(DimensionMismatch):
        estimate(EstimatorSpec("custom", "unknown", profile=zero_profile(3)), z, s=np.eye(2), n=5)


def test_gamma_profile_constraints():
    bound = known_gamma_bound(5, 2)
    good = gamma_profile(lambda f: bound * f / (f + 1), lambda f: bound / (f + 1) ** 2, 2, bound)
    f = np.array([3.0, 1.0])
    assert np.all(good.values(f) <= 0)
    assert np.allclose(fd_profile_derivative(good, f), good.derivs(f), rtol=1e-6)
    too_big = gamma_profile(lambda f: np.full(2, bound + 1), lambda f: np.zeros(2), 2, bound)
    with pytest.raises(ConstraintViolation):
        too_big.values(f)
    # ordered and in range, but gamma_k falls as f_k grows; the callback lies about it
    decreasing = gamma_profile(lambda f: np.array([bound, bound / 4]) / (1 + f), lambda f: np.zeros(2), 2, bound)
    with pytest.raises(ConstraintViolation):  # caught by the finite-difference audit
        decreasing.values(f)
    unordered = gamma_profile(lambda f: np.array([0.1, 0.2]), lambda f: np.zeros(2), 2, bound)
    with pytest.raises(ConstraintViolation):
        unordered.values(f)
    assert np.isclose(unknown_gamma_bound(6, 2, 10), 2 * 4 / 12)
    assert np.isclose(unknown_gamma_bound(2, 6, 10), 2 * 4 / 8)
