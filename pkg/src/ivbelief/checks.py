"""Oracle cross-checks of the closed forms, runnable on demand.

Each check returns a :class:`CheckResult`; :func:`run_checks` runs them all
with a fixed seed so that repeated runs give identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import binary, identified_set as ids, oracle


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name:<28} max_error={self.max_error:.3e} tol={self.tolerance:.0e}"


def check_forward_inverse(rng, n=1000):
    """Closed-form surface and the tilde moment identities on random configs."""
    err_f, err_m = 0.0, 0.0
    for _ in range(n):
        c = oracle.random_config(rng)
        fr = oracle.forward_sigma(c)
        s = fr.sigma
        r = ids.correlations(s)
        err_f = max(err_f, abs(ids.rho_uzeta(*r, fr.kappa_tilde, fr.rho_uxistar) - fr.rho_uzeta))
        sc = 1.0 + c.psi
        bt, pt, sut, kt = fr.beta_tilde, fr.pi_tilde, sc * fr.sigma_uxistar, fr.kappa_tilde
        resid = [
            s[1, 2] - pt * s[2, 2],
            s[0, 2] - (c.sigma_uzeta + bt * pt * s[2, 2]),
            s[1, 1] - (kt * s[1, 1] + fr.sigma_w_sq),
            s[0, 1] - (sut + bt * kt * s[1, 1]),
            s[0, 0] - (c.sigma_u**2 + bt * (2 * sut + bt * kt * s[1, 1])),
        ]
        scale = max(1.0, float(np.max(np.abs(s))))
        err_m = max(err_m, max(abs(x) for x in resid) / scale)
    return [CheckResult("forward_inverse_surface", err_f, 1e-10),
            CheckResult("tilde_moment_identities", err_m, 1e-12)]


def check_lower_bound(rng, n=1000, l_func=None):
    """``L`` brackets and feasibility-scan boundary."""
    l_func = l_func or ids.kappa_lower_bound
    err_scan, err_bracket = 0.0, 0.0
    for _ in range(n):
        r12, r13, r23 = oracle.random_correlation_triple(rng)
        big_l = l_func(r12, r13, r23)
        err_bracket = max(err_bracket, max(r12**2, r23**2) - big_l + 1e-15, big_l - 1.0 + 1e-15, 0.0)
        err_scan = max(err_scan, abs(big_l - oracle.kappa_lower_bound_scan(r12, r13, r23)))
    return [CheckResult("kappa_lower_bound_bracket", err_bracket, 0.0),
            CheckResult("kappa_lower_bound_scan", err_scan, 1e-6)]


def random_rectangle(rng, big_l, rho_range=(-0.95, 0.95)):
    a = rng.uniform(0.8 * big_l, 1.0)
    b = max(rng.uniform(a, 1.0), big_l + 1e-3)
    a = min(a, b)
    c, d = np.sort(rng.uniform(*rho_range, size=2))
    return ids.Restrictions(float(a), float(b), float(c), float(d))


def check_bound_extrema(rng, n=100, resolution=2000):
    """Candidate-set bounds against dense-grid extrema."""
    err_f, err_g = 0.0, 0.0
    for _ in range(n):
        s = oracle.random_sigma(rng)
        r = ids.correlations(s)
        rect = random_rectangle(rng, ids.kappa_lower_bound(*r))
        lo, hi = ids.rho_uzeta_bounds(*r, rect)
        glo, ghi = oracle.grid_extrema("f_rho_uzeta", s, rect, resolution)
        err_f = max(err_f, abs(lo - glo), abs(hi - ghi))
        lo, hi = ids.beta_tilde_bounds(s, rect)
        glo, ghi = oracle.grid_extrema("g_beta", s, rect, resolution)
        err_g = max(err_g, abs(lo - glo) / max(abs(glo), 1.0), abs(hi - ghi) / max(abs(ghi), 1.0))
    return [CheckResult("rho_uzeta_bounds_vs_grid", err_f, 1e-5),
            CheckResult("beta_tilde_bounds_vs_grid", err_g, 1e-5)]


def random_binary_case(rng):
    """Random ``(Sigma, R, p)`` whose treatment variance is binary-compatible."""
    while True:
        s = oracle.random_sigma(rng)
        p = float(rng.uniform(0.2, 0.8))
        scale = np.sqrt(rng.uniform(0.5, 1.0) * p * (1 - p) / s[1, 1])
        d = np.diag([1.0, scale, 1.0])
        s = d @ s @ d
        big_l = ids.kappa_lower_bound(*ids.correlations(s))
        rect = random_rectangle(rng, big_l, (-0.9, 0.9))
        if rect.kappa_tilde_hi > max(big_l, binary.binary_kappa_floor(s[1, 1], p)) + 1e-3:
            return s, rect, p


def check_binary_beta(rng, n=50, n_kappa=2000, n_rho=2000):
    err = 0.0
    for _ in range(n):
        s, rect, p = random_binary_case(rng)
        lo, hi = binary.beta_bounds_binary(s, rect, p)
        blo, bhi = oracle.beta_binary_bruteforce(s, rect, p, n_kappa, n_rho)
        err = max(err, abs(lo - blo) / max(abs(blo), 1.0), abs(hi - bhi) / max(abs(bhi), 1.0))
    return [CheckResult("binary_beta_vs_bruteforce", err, 1e-4)]


def random_alphas(rng):
    while True:
        a0, a1 = rng.uniform(0.0, 0.5, size=2)
        if a0 + a1 < 0.95:
            return float(a0), float(a1)


def check_binary_identities(rng, n=1000):
    """Four-cell enumeration against the mis-classification identities."""
    err_id, err_contain, err_attain = 0.0, 0.0, 0.0
    for i in range(n):
        a0, a1 = random_alphas(rng)
        p_star = float(rng.uniform(0.05, 0.95))
        e = oracle.forward_binary(p_star, a0, a1)
        psi, tau = binary.psi_tau_from_alphas(a0, a1)
        sw2 = binary.sigma_w_sq_binary(a0, a1, e.p)
        mom = binary.BinaryMoments.from_alphas(a0, a1, e.p)
        var_decomp = (1 - a0 - a1) ** 2 * p_star * (1 - p_star) + sw2
        err_id = max(err_id, abs(e.psi - psi), abs(e.tau - tau), abs(e.sigma_w_sq - sw2),
                     abs(mom.p_star - p_star), abs(e.var_t - var_decomp), abs(e.cov_w_tstar))
        s22 = e.var_t
        kappa = 1.0 - sw2 / s22
        lo, hi = binary.psi_bounds(s22, kappa, e.p)
        err_contain = max(err_contain, lo - psi, psi - hi, 0.0)
        if i < 100:
            blo, bhi, _, _ = oracle.psi_bounds_bruteforce(s22, kappa, e.p)
            err_attain = max(err_attain, abs(blo - lo), abs(bhi - hi))
    return [CheckResult("binary_enumeration_identities", err_id, 1e-12),
            CheckResult("psi_bounds_contain_truth", err_contain, 0.0),
            CheckResult("psi_bounds_attained", err_attain, 1e-4)]


def check_sharpness(rng, n=200):
    err = 0.0
    for _ in range(n):
        s = oracle.random_sigma(rng)
        big_l = ids.kappa_lower_bound(*ids.correlations(s))
        k = float(rng.uniform(big_l + 1e-6 * (1 - big_l), 1.0))
        rho = float(rng.uniform(-0.99, 0.99))
        psi = float(rng.uniform(-0.6, 0.6))
        cert = oracle.sharpness_construction(s, k, rho, psi, float(rng.normal()))
        scale = max(1.0, float(np.max(np.abs(s))))
        err = max(err, cert.max_error / scale)
    return [CheckResult("sharpness_construction", err, 1e-10)]


def run_checks(seed=0, quick=True, l_func=None):
    """Run every oracle check; ``quick`` shrinks the sample sizes."""
    rng = np.random.default_rng(seed)
    f = 5 if quick else 1
    out = []
    out += check_forward_inverse(rng, 1000 // f)
    out += check_lower_bound(rng, 10_000 // (10 * f), l_func)
    out += check_bound_extrema(rng, 100 // (5 * f))
    out += check_binary_beta(rng, 50 // (5 * f))
    out += check_binary_identities(rng, 1000 // f)
    out += check_sharpness(rng, 200 // f)
    return out
