"""Verification suites behind the ``verify-*`` commands.

Each suite returns a list of :class:`SuiteRow`.  Calculus rows report the
largest entrywise error ``|analytic - fd| / max(|fd|, 1e-3)`` over all
instances, which is below ``1e-5`` exactly when every entry meets the
``1e-5`` relative / ``1e-8`` absolute rule.  Monte Carlo rows report
``|lhs - rhs| / se`` against a threshold of 3.
"""
from dataclasses import dataclass

import numpy as np

from . import calculus
from . import cmatrix as cm
from .errors import ConfigInvalid, DegenerateSpectrum
from .profiles import ShrinkageProfile
from .risk import stein_haff_check, stein_identity_check
from .sampling import RngStream, sample_cwishart

REL_TOL = 1e-5
ABS_FLOOR = 1e-8
MC_SIGMAS = 3.0
CALC_GAP = 1e-4  # relative eigengap below which a calculus instance is redrawn


@dataclass(frozen=True)
class SuiteRow:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""


def format_rows(rows):
    width = max([len(r.name) for r in rows] + [4])
    lines = [f"{'row':<{width}}  {'value':>11}  {'threshold':>9}  result"]
    for r in rows:
        verdict = "PASS" if r.passed else "FAIL"
        tail = f"  {r.detail}" if r.detail else ""
        lines.append(f"{r.name:<{width}}  {r.value:11.3e}  {r.threshold:9.1e}  {verdict}{tail}")
    return "\n".join(lines)


def all_passed(rows):
    return all(r.passed for r in rows)


# -- calculus ----------------------------------------------------------------


def rel_err(analytic, fd):
    analytic, fd = np.asarray(analytic), np.asarray(fd)
    if analytic.shape != fd.shape:
        raise ValueError(f"shape mismatch {analytic.shape} vs {fd.shape}")
    floor = ABS_FLOOR / REL_TOL
    return float(np.max(np.abs(analytic - fd) / np.maximum(np.abs(fd), floor)))


def coupled_phi(q):
    """A smooth test profile whose entries depend on every eigenvalue.

    The traces only use the diagonal derivative, so coupling checks that the
    off-diagonal dependence really drops out.
    """

    def h(f):
        return f / (1.0 + f.sum()) + 1.0 / f

    def dh(f):
        t = 1.0 + f.sum()
        return 1.0 / t - f / t**2 - 1.0 / f**2

    return ShrinkageProfile(q, h, dh, "coupled")


def random_instance(m, p, rng, extra_df=4):
    """``(z, s)`` with ``z`` standard complex normal and ``s ~ CW_p(I, p + extra_df)``."""
    z = rng.standard_cn((m, p))
    s = sample_cwishart(np.eye(p, dtype=complex), p + extra_df, rng)
    return z, s


def _gap_ok(z, s):
    m, p = z.shape
    zk = z if m > p else z.conj().T
    if cm.min_relative_gap(cm.herm_eigen(zk.conj().T @ zk).lam) < CALC_GAP:
        return False
    try:
        calculus.unknown_spectrum(z, s, gap_tol=CALC_GAP)
    except DegenerateSpectrum:
        return False
    return True


def calculus_instances(m, p, seed, count):
    """Deterministic gap-guarded instances; instance ``i`` uses stream ``(seed, i)`` and redraws."""
    out = []
    index = 0
    while len(out) < count:
        rng = RngStream(seed, index)
        index += 1
        z, s = random_instance(m, p, rng)
        if _gap_ok(z, s):
            out.append((z, s))
        if index > 20 * count + 100:
            raise DegenerateSpectrum("could not draw well-separated instances")
    return out


def _known_rows(z, step):
    """Known-case eigen calculus on ``z`` (rows >= columns)."""
    d = calculus.eig_derivs_known(z, gap_tol=0.0)
    base_inv = d.u.conj().T

    def u_of(zz):
        return calculus.align_columns(base_inv, cm.herm_eigen(zz.conj().T @ zz).u)

    def l_of(zz):
        return cm.herm_eigen(zz.conj().T @ zz).lam.astype(complex)

    phi = coupled_phi(z.shape[1])
    return {
        "eig-known dU/dZ": rel_err(d.du, calculus.fd_wirtinger_all(u_of, z, step)),
        "eig-known dUbar/dZ": rel_err(d.dubar, calculus.fd_wirtinger_all(lambda zz: np.conj(u_of(zz)), z, step)),
        "eig-known dl/dZ": rel_err(d.dl, calculus.fd_wirtinger_all(l_of, z, step)),
        "div-known": rel_err(calculus.divergence_known(z, phi, gap_tol=0.0),
                             calculus.fd_divergence_z(lambda zz: calculus.field_known(zz, phi), z, step)),
    }


def _mgtp_rows(z, s, step):
    d = calculus.eig_derivs_unknown_mgtp(z, s, gap_tol=0.0)
    a_inv = np.linalg.inv(d.a)
    p = s.shape[0]

    def sd(zz, ss):
        return cm.sim_diag(zz.conj().T @ zz, ss, gap_tol=0.0)

    def a_of(zz, ss):
        return calculus.align_columns(a_inv, sd(zz, ss).a)

    def pair(ss):
        b = np.linalg.inv(a_of(z, ss))
        return np.einsum("ki,kj->kij", b, np.conj(b))

    full = calculus.fd_hermitian_all(pair, s, step)
    idx = np.arange(p)
    pair_fd = full[:, idx[:, None], idx[None, :], idx[:, None], idx[None, :]]
    return {
        "simdiag dA^-1/dZ": rel_err(d.da_inv, calculus.fd_wirtinger_all(lambda zz: np.linalg.inv(a_of(zz, s)), z, step)),
        "simdiag dA/dZ": rel_err(d.da, calculus.fd_wirtinger_all(lambda zz: a_of(zz, s), z, step)),
        "simdiag df/dZ": rel_err(d.df_dz, calculus.fd_wirtinger_all(lambda zz: sd(zz, s).f.astype(complex), z, step)),
        "simdiag dpair/dS": rel_err(d.dpair_ds, pair_fd),
        "simdiag df/dS": rel_err(d.df_ds, calculus.fd_hermitian_all(lambda ss: sd(z, ss).f.astype(complex), s, step)),
    }


def _pgtm_rows(z, s, step):
    d = calculus.eig_derivs_unknown_pgtm(z, s, gap_tol=0.0)
    base_inv = d.u.conj().T

    def eig(zz, ss):
        return cm.herm_eigen(zz @ cm.inv_hpd(ss) @ zz.conj().T)

    def u_of(zz, ss):
        return calculus.align_columns(base_inv, eig(zz, ss).u)

    def f_of(zz, ss):
        return eig(zz, ss).lam.astype(complex)

    return {
        "ratio-eig dU/dZ": rel_err(d.du, calculus.fd_wirtinger_all(lambda zz: u_of(zz, s), z, step)),
        "ratio-eig dUbar/dZ": rel_err(d.dubar, calculus.fd_wirtinger_all(lambda zz: np.conj(u_of(zz, s)), z, step)),
        "ratio-eig df/dZ": rel_err(d.df_dz, calculus.fd_wirtinger_all(lambda zz: f_of(zz, s), z, step)),
        "ratio-eig dU/dS": rel_err(d.du_ds, calculus.fd_hermitian_all(lambda ss: u_of(z, ss), s, step)),
        "ratio-eig dUbar/dS": rel_err(d.dubar_ds, calculus.fd_hermitian_all(lambda ss: np.conj(u_of(z, ss)), s, step)),
        "ratio-eig df/dS": rel_err(d.df_ds, calculus.fd_hermitian_all(lambda ss: f_of(z, ss), s, step)),
    }


def _unknown_div_rows(z, s, step):
    phi = coupled_phi(min(z.shape))
    div_z = calculus.fd_divergence_z(lambda zz: calculus.field_unknown_z(zz, s, phi), z, step)
    div_s = calculus.fd_divergence_s(lambda ss: calculus.field_unknown_s(z, ss, phi), s, step)
    return {
        "div-unknown Z": rel_err(calculus.divergence_unknown_z(z, s, phi, gap_tol=0.0), div_z),
        "div-unknown S": rel_err(calculus.divergence_unknown_s(z, s, phi, gap_tol=0.0), div_s),
    }


def calculus_suite(m, p, seed=0, instances=50, step=calculus.FD_STEP, divergences=True, derivatives=True):
    """Analytic eigen-calculus and divergence traces against finite differences.

    The known-case rows run on ``Z`` when ``m > p`` and on ``Z^H`` otherwise;
    the unknown-case branch follows the sign of ``m - p``.
    """
    if m < 1 or p < 1 or m == p:
        raise ConfigInvalid(f"calculus suite needs positive m != p, got m={m}, p={p}")
    if instances < 1:
        raise ConfigInvalid("instances must be positive")
    if not step > 0:
        raise ConfigInvalid("fd step must be positive")
    worst = {}
    for z, s in calculus_instances(m, p, seed, instances):
        errs = {}
        errs.update(_known_rows(z if m > p else z.conj().T, step))
        errs.update(_mgtp_rows(z, s, step) if m > p else _pgtm_rows(z, s, step))
        errs.update(_unknown_div_rows(z, s, step))
        for name, err in errs.items():
            is_div = name.startswith("div")
            if (is_div and not divergences) or (not is_div and not derivatives):
                continue
            worst[name] = max(worst.get(name, 0.0), err)
    return [SuiteRow(name, err, REL_TOL, bool(err <= REL_TOL), f"{instances} instances")
            for name, err in worst.items()]


# -- Monte Carlo identities --------------------------------------------------


def _mc_row(name, check):
    z = check.gap / check.se if check.se > 0 else (0.0 if check.gap == 0 else float("inf"))
    return SuiteRow(name, z, MC_SIGMAS, bool(z <= MC_SIGMAS),
                    f"lhs={check.lhs:.6g} rhs={check.rhs:.6g} se={check.se:.3g}")


def _random_hpd(p, rng, df=None):
    s = sample_cwishart(np.eye(p, dtype=complex), df or 2 * p + 2, rng)
    return s / np.real(np.trace(s)) * p + 0.5 * np.eye(p)


def stein_suite(p=2, reps=100_000, seed=0):
    """Stein identity ``2 Re E (Z - theta)^H Sigma^{-1} g(Z) = E div g`` for three fields."""
    if p < 1 or reps < 2:
        raise ConfigInvalid("stein suite needs p >= 1 and reps >= 2")
    setup = RngStream(seed, 0)
    sigma = _random_hpd(p, setup)
    theta = setup.standard_cn(p)
    const = setup.standard_cn(p)
    div_lin = 2.0 * float(np.real(np.trace(sigma)))  # g(z) = Sigma z
    rows = []

    def run(name, th, sg, g, div, stream):
        check = stein_identity_check(th, sg, g, reps, RngStream(seed, stream), divergence=lambda z: div)
        rows.append(_mc_row(name, check))
        return check

    run("stein g=identity", theta, sigma, lambda z: z, 2.0 * p, 1)
    run("stein g=constant", theta, sigma, lambda z: np.broadcast_to(const, z.shape), 0.0, 2)
    run("stein g=linear-sigma", theta, sigma, lambda z: z @ sigma.T, div_lin, 3)
    # with Sigma = I both sides have the closed value 2p
    check = run("stein g=identity, Sigma=I", theta, np.eye(p), lambda z: z, 2.0 * p, 4)
    lhs_z = abs(check.lhs - 2.0 * p) / check.se if check.se > 0 else float("inf")
    rows.append(SuiteRow(f"stein identity lhs vs 2p={2 * p}", lhs_z, MC_SIGMAS, bool(lhs_z <= MC_SIGMAS),
                         f"lhs={check.lhs:.6g}"))
    return rows


def stein_haff_suite(p=2, n=8, reps=100_000, seed=0):
    """Stein-Haff identity ``E Tr G Sigma^{-1} = E[(n - p) Tr G S^{-1} + Tr D_S G]``."""
    if p < 1 or n <= p or reps < 2:
        raise ConfigInvalid(f"stein-haff suite needs n > p >= 1 and reps >= 2, got n={n}, p={p}")
    sigma = _random_hpd(p, RngStream(seed, 0))
    rows = []
    check = stein_haff_check(sigma, n, lambda s: s, reps, RngStream(seed, 1), tr_ds=lambda s: float(p * p))
    closed = abs(check.rhs - n * p)
    rows.append(SuiteRow(f"stein-haff G=S rhs vs np={n * p}", closed, 1e-9 * n * p, bool(closed <= 1e-9 * n * p),
                         f"rhs={check.rhs:.12g}"))
    rows.append(_mc_row("stein-haff G=S", check))
    check = stein_haff_check(sigma, n, lambda s: np.eye(p, dtype=complex), reps, RngStream(seed, 2),
                             tr_ds=lambda s: 0.0)
    rows.append(_mc_row("stein-haff G=I", check))
    return rows
