"""Independent ground-truth generators used to validate the closed forms.

Nothing here calls the candidate-set machinery of :mod:`identified_set` or
:mod:`binary`; the functions build covariances from structural primitives,
enumerate discrete distributions exactly, or brute-force extrema on grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    EmptyIdentifiedSet,
    InfeasibleBinaryError,
    OutsideIdentifiedSetError,
)

KAPPA_EPS = 1e-12
RHO_CLAMP = 1e-9


@dataclass(frozen=True)
class StructuralConfig:
    """Primitive parameters of the linear IV model with measurement error."""

    beta: float
    pi: float
    psi: float
    tau: float
    sigma_u: float
    sigma_v: float
    sigma_zeta: float
    sigma_w: float
    sigma_uv: float
    sigma_uzeta: float

    def omega11(self) -> np.ndarray:
        """Covariance of ``(u, v, zeta)``."""
        return np.array([
            [self.sigma_u**2, self.sigma_uv, self.sigma_uzeta],
            [self.sigma_uv, self.sigma_v**2, 0.0],
            [self.sigma_uzeta, 0.0, self.sigma_zeta**2],
        ])

    def omega(self) -> np.ndarray:
        out = np.zeros((4, 4))
        out[:3, :3] = self.omega11()
        out[3, 3] = self.sigma_w**2
        return out

    def gamma(self) -> np.ndarray:
        b, p, s = self.beta, self.pi, 1.0 + self.psi
        return np.array([
            [1.0, b, b * p, 0.0],
            [0.0, s, s * p, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ])


@dataclass(frozen=True)
class ForwardResult:
    sigma: np.ndarray
    kappa: float
    kappa_tilde: float
    rho_uxistar: float
    rho_uzeta: float
    rho_uv: float
    beta_tilde: float
    pi_tilde: float
    sigma_uxistar: float
    sigma_w_sq: float


def _is_pd(m) -> bool:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def forward_sigma(config: StructuralConfig) -> ForwardResult:
    """Reduced-form covariance ``Gamma Omega Gamma'`` and derived summaries."""
    if config.psi <= -1.0 or not _is_pd(config.omega11()):
        raise DegenerateConfigurationError()
    g = config.gamma()
    sigma = g @ config.omega() @ g.T
    sigma = 0.5 * (sigma + sigma.T)
    if not _is_pd(sigma):
        raise DegenerateConfigurationError()
    c = config
    s = 1.0 + c.psi
    s22 = sigma[1, 1]
    var_xistar = c.pi**2 * c.sigma_zeta**2 + c.sigma_v**2
    kappa = var_xistar / s22
    kappa_tilde = s**2 * kappa
    s_uxi = c.sigma_uv + c.pi * c.sigma_uzeta
    return ForwardResult(
        sigma=sigma,
        kappa=kappa,
        kappa_tilde=kappa_tilde,
        rho_uxistar=s * s_uxi / (c.sigma_u * math.sqrt(kappa_tilde * s22)),
        rho_uzeta=c.sigma_uzeta / (c.sigma_u * c.sigma_zeta),
        rho_uv=c.sigma_uv / (c.sigma_u * c.sigma_v),
        beta_tilde=c.beta / s,
        pi_tilde=s * c.pi,
        sigma_uxistar=s_uxi,
        sigma_w_sq=c.sigma_w**2,
    )


def rescale_psi(config: StructuralConfig, psi_new: float) -> StructuralConfig:
    """Observationally equivalent configuration with a different ``psi``."""
    ratio = (1.0 + config.psi) / (1.0 + psi_new)
    return replace(
        config,
        psi=psi_new,
        pi=config.pi * ratio,
        beta=config.beta / ratio,
        sigma_v=config.sigma_v * ratio,
        sigma_uv=config.sigma_uv * ratio,
    )


def random_config(rng: np.random.Generator, psi_range=(-0.6, 0.5)) -> StructuralConfig:
    """Random admissible configuration.

    ``(rho_uv, rho_uzeta)`` is uniform on the disk of radius 0.99, which keeps
    ``Omega_11`` positive definite while reaching near its boundary.
    """
    r = 0.99 * math.sqrt(rng.uniform())
    th = rng.uniform(0.0, 2.0 * math.pi)
    rho_uv, rho_uz = r * math.cos(th), r * math.sin(th)
    su, sv, sz = rng.uniform(0.5, 2.0, size=3)
    pi = rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 2.0)
    return StructuralConfig(
        beta=float(rng.normal(0.0, 2.0)),
        pi=float(pi),
        psi=float(rng.uniform(*psi_range)),
        tau=float(rng.normal()),
        sigma_u=float(su),
        sigma_v=float(sv),
        sigma_zeta=float(sz),
        sigma_w=float(rng.uniform(0.0, 1.5)),
        sigma_uv=float(rho_uv * su * sv),
        sigma_uzeta=float(rho_uz * su * sz),
    )


def random_correlation_triple(rng: np.random.Generator) -> tuple[float, float, float]:
    """Correlations of a random positive definite 3x3 matrix."""
    while True:
        a = rng.normal(size=(3, 5))
        c = a @ a.T
        d = np.sqrt(np.diag(c))
        r = c / np.outer(d, d)
        r12, r13, r23 = r[0, 1], r[0, 2], r[1, 2]
        if 1 - r12**2 - r13**2 - r23**2 + 2 * r12 * r13 * r23 > 1e-6:
            return float(r12), float(r13), float(r23)


def random_sigma(rng: np.random.Generator) -> np.ndarray:
    """Random positive definite reduced-form covariance with ``s23 != 0``."""
    while True:
        a = rng.normal(size=(3, 6)) * rng.uniform(0.5, 2.0, size=(3, 1))
        s = a @ a.T / 6.0
        d = np.sqrt(np.diag(s))
        if abs(s[1, 2] / (d[1] * d[2])) > 0.05:
            return s


# ---------------------------------------------------------------------------
# binary mis-classification


@dataclass(frozen=True)
class BinaryEnumeration:
    p: float
    p_star: float
    psi: float
    tau: float
    sigma_w_sq: float
    var_t: float
    cov_w_tstar: float


def forward_binary(p_star: float, alpha0: float, alpha1: float) -> BinaryEnumeration:
    """Exact moments of ``(T, T*)`` by enumerating the four cells."""
    if not (0.0 < p_star < 1.0 and 0.0 <= alpha0 and 0.0 <= alpha1 and alpha0 + alpha1 < 1.0):
        raise InfeasibleBinaryError("invalid binary configuration")
    cells = []  # (tstar, t, prob)
    for ts, pts in ((0, 1.0 - p_star), (1, p_star)):
        p1 = alpha0 if ts == 0 else 1.0 - alpha1
        cells.append((ts, 1, pts * p1))
        cells.append((ts, 0, pts * (1.0 - p1)))
    ts = np.array([c[0] for c in cells], dtype=float)
    t = np.array([c[1] for c in cells], dtype=float)
    pr = np.array([c[2] for c in cells])
    if np.any(pr < 0.0):
        raise InfeasibleBinaryError("invalid binary configuration")
    e_ts = pr @ ts
    e_t = pr @ t
    err = t - ts
    var_ts = pr @ (ts - e_ts) ** 2
    psi = (pr @ ((ts - e_ts) * (err - pr @ err))) / var_ts
    tau = pr @ err - psi * e_ts
    w = err - tau - psi * ts
    return BinaryEnumeration(
        p=float(e_t),
        p_star=float(e_ts),
        psi=float(psi),
        tau=float(tau),
        sigma_w_sq=float(pr @ w**2),
        var_t=float(pr @ (t - e_t) ** 2),
        cov_w_tstar=float(pr @ (w * (ts - e_ts))),
    )


def psi_bounds_bruteforce(s22, kappa_tilde, p, n=200_001):
    """Extremes of ``-(alpha0 + alpha1)`` on the feasible constraint curve.

    Feasible pairs satisfy ``alpha1 = (sw2 - (1-p) alpha0) / (p - alpha0)``
    with ``alpha0 in [0, p)``, ``alpha1 in [0, 1-p)``.
    Returns ``(psi_low, psi_high, argmin_pair, argmax_pair)``.
    """
    sw2 = s22 * (1.0 - kappa_tilde)
    if sw2 == 0.0:
        return 0.0, 0.0, (0.0, 0.0), (0.0, 0.0)
    a0 = np.linspace(0.0, min(p, sw2 / (1.0 - p)), n)
    a0 = a0[a0 < p]
    a1 = (sw2 - (1.0 - p) * a0) / (p - a0)
    # the alpha1 = 0 endpoint can round to a tiny negative number
    a1 = np.where((a1 < 0.0) & (a1 > -1e-12), 0.0, a1)
    ok = (a1 >= 0.0) & (a1 < 1.0 - p) & (a0 + a1 < 1.0)
    if not np.any(ok):
        raise InfeasibleBinaryError("no feasible mis-classification rates")
    a0, a1 = a0[ok], a1[ok]
    psi = -(a0 + a1)
    i, j = int(np.argmin(psi)), int(np.argmax(psi))
    return float(psi[i]), float(psi[j]), (a0[i], a1[i]), (a0[j], a1[j])


# ---------------------------------------------------------------------------
# sharpness construction


@dataclass(frozen=True)
class SharpnessCertificate:
    config: StructuralConfig
    kappa_tilde: float
    rho_uxistar: float
    rho_uzeta: float
    residuals: dict
    sigma_roundtrip: np.ndarray

    @property
    def max_error(self) -> float:
        return max(self.residuals.values())


def _corr_triple(sigma):
    d = np.sqrt(np.diag(sigma))
    return sigma[0, 1] / (d[0] * d[1]), sigma[0, 2] / (d[0] * d[2]), sigma[1, 2] / (d[1] * d[2])


def sharpness_construction(sigma, kappa_tilde, rho, psi_target=0.0, tau_target=0.0):
    """Build structural covariances attaining a target point of the set.

    Variables are represented as coefficient vectors on the basis
    ``(eps, xi, zeta, W)`` whose covariance is ``blockdiag(Sigma, 1)``; every
    covariance follows by linear propagation.
    """
    s = np.asarray(sigma, dtype=float)
    r12, r13, r23 = _corr_triple(s)
    big_l = (r12**2 + r23**2 - 2 * r12 * r23 * r13) / (1 - r13**2)
    k = float(kappa_tilde)
    if not (big_l + KAPPA_EPS < k <= 1.0) or abs(rho) >= 1.0 or psi_target <= -1.0:
        raise OutsideIdentifiedSetError("target not in identified set")
    g = np.zeros((4, 4))
    g[:3, :3] = s
    g[3, 3] = 1.0

    def cov(a, b):
        return float(a @ g @ b)

    eps, xi, zeta, aux = np.eye(4)
    ab = np.linalg.solve(s[np.ix_([0, 2], [0, 2])], np.array([s[0, 1], s[1, 2]]))
    chi = xi - ab[0] * eps - ab[1] * zeta
    s22 = s[1, 1]
    w = ((1 - k) / (1 - big_l)) * chi + math.sqrt(max(s22 * (1 - k) * (k - big_l) / (1 - big_l), 0.0)) * aux
    scale = 1.0 + psi_target
    xistar = (xi - w) / scale

    # closed-form targets at (k, rho)
    su = math.sqrt(s[0, 0] * (k - r12**2) / (k * (1 - rho**2)))
    f = r23 * rho / math.sqrt(k) - (r12 * r23 - r13 * k) * math.sqrt((1 - rho**2) / (k * (k - r12**2)))
    s_uz = su * f * math.sqrt(s[2, 2])
    bt = (s[0, 2] - s_uz) / s[1, 2]
    beta = scale * bt
    pi = s[1, 2] / (scale * s[2, 2])
    v = xistar - pi * zeta
    u = eps - beta * xistar

    om = np.array([[cov(a, b) for b in (u, v, zeta)] for a in (u, v, zeta)])
    var_w = cov(w, w)
    config = StructuralConfig(
        beta=beta,
        pi=pi,
        psi=float(psi_target),
        tau=float(tau_target),
        sigma_u=math.sqrt(om[0, 0]),
        sigma_v=math.sqrt(om[1, 1]),
        sigma_zeta=math.sqrt(om[2, 2]),
        sigma_w=math.sqrt(max(var_w, 0.0)),
        sigma_uv=om[0, 1],
        sigma_uzeta=om[0, 2],
    )
    xt = xi - w
    k_hat = cov(xt, xt) / s22
    rho_hat = cov(u, xt) / math.sqrt(cov(u, u) * cov(xt, xt))
    rho_uz_hat = cov(u, zeta) / math.sqrt(cov(u, u) * s[2, 2])
    eig_min = float(np.linalg.eigvalsh(om)[0])
    fwd = forward_sigma(config)
    res = {
        "cov_w_eps": abs(cov(w, eps)),
        "cov_w_zeta": abs(cov(w, zeta)),
        "cov_w_u": abs(cov(w, u)),
        "cov_w_xistar": abs(cov(w, xistar)),
        "cov_v_zeta": abs(cov(v, zeta)),
        "sigma_w_sq": abs(var_w - s22 * (1 - k)),
        "cov_w_xi": abs(cov(w, xi) - var_w),
        "omega11_pd": 0.0 if eig_min > 0 else abs(eig_min) + 1.0,
        "kappa_tilde": abs(k_hat - k),
        "rho_uxistar": abs(rho_hat - rho),
        "rho_uzeta": abs(rho_uz_hat - f),
        "sigma_roundtrip": float(np.max(np.abs(fwd.sigma - s))),
    }
    return SharpnessCertificate(config, k_hat, rho_hat, rho_uz_hat, res, fwd.sigma)


# ---------------------------------------------------------------------------
# brute-force extrema


def kappa_lower_bound_scan(r12, r13, r23, coarse=1001, fine=2001):
    """Smallest ``kappa`` beyond which the feasibility inequality holds strictly.

    Scans ``(r12 r23 - k r13)^2 - (k - r12^2)(k - r23^2) < 0`` on ``[0, 1]``,
    first on a coarse grid and then on a fine grid between the last failing
    coarse point and its successor (resolution ~5e-7).
    """

    def q(k):
        return (r12 * r23 - k * r13) ** 2 - (k - r12**2) * (k - r23**2)

    def last_fail(grid):
        bad = np.nonzero(q(grid) >= 0.0)[0]
        return int(bad[-1]) if bad.size else -1

    ks = np.linspace(0.0, 1.0, coarse)
    # Q(0) = 0 up to rounding, so a boundary inside the first cell can hide
    # behind a spuriously negative Q(0); always refine that cell in that case
    i = max(last_fail(ks), 0)
    if i == coarse - 1:
        return 1.0
    ks2 = np.linspace(ks[i], ks[i + 1], fine)
    j = last_fail(ks2)
    return float(ks2[j + 1]) if j + 1 < fine else float(ks[i + 1])


def _window(big_l, restrictions, floor=None):
    lo = max(restrictions.kappa_tilde_lo, big_l + KAPPA_EPS)
    if floor is not None:
        lo = max(lo, floor)
    hi = restrictions.kappa_tilde_hi
    if hi <= big_l + KAPPA_EPS or hi < lo:
        raise EmptyIdentifiedSet()
    return lo, hi


def _grid_f(r12, r13, r23, k, rho):
    rad = np.sqrt(np.clip(1 - rho**2, 0, None) / (k * (k - r12**2)))
    return r23 * rho / np.sqrt(k) - (r12 * r23 - r13 * k) * rad


def _grid_beta_tilde(s, r12, r13, r23, k, rho):
    t = rho / np.sqrt(1 - rho**2)
    g = math.sqrt(s[0, 0] * s[2, 2]) / (k * s[1, 2]) * (
        r23 * np.sqrt(k - r12**2) * t - (r12 * r23 - k * r13)
    )
    return s[0, 2] / s[1, 2] - g


def _rho_grid(c, d, res, clamp):
    if clamp:
        c = max(c, -1 + RHO_CLAMP)
        d = min(d, 1 - RHO_CLAMP)
    return np.linspace(c, d, res)


def grid_extrema(target, sigma, restrictions, resolution=2000, kappa_floor=None):
    """Dense-grid ``(min, max)`` of ``target`` over the restricted set.

    ``target`` is ``"f_rho_uzeta"`` (instrument-invalidity correlation) or
    ``"g_beta"`` (rescaled causal effect ``s13/s23 - g``).  The ``rho`` axis is
    clamped away from +-1 only for ``g_beta``, where the target diverges.
    """
    if resolution < 100:
        raise ValueError("resolution must be at least 100")
    s = np.asarray(sigma, dtype=float)
    r12, r13, r23 = _corr_triple(s)
    big_l = (r12**2 + r23**2 - 2 * r12 * r23 * r13) / (1 - r13**2)
    lo, hi = _window(big_l, restrictions, kappa_floor)
    ks = np.linspace(lo, hi, resolution)[:, None]
    if target == "f_rho_uzeta":
        rho = _rho_grid(restrictions.rho_lo, restrictions.rho_hi, resolution, False)[None, :]
        vals = _grid_f(r12, r13, r23, ks, rho)
    elif target == "g_beta":
        rho = _rho_grid(restrictions.rho_lo, restrictions.rho_hi, resolution, True)[None, :]
        vals = _grid_beta_tilde(s, r12, r13, r23, ks, rho)
    else:
        raise ValueError(f"unknown target {target!r}")
    return float(vals.min()), float(vals.max())


def beta_binary_bruteforce(sigma, restrictions, p, n_kappa=2000, n_rho=2000, n_psi=41, n_curve=2001):
    """Brute-force bounds on ``beta = (1 + psi) beta_tilde`` for binary treatment.

    For each ``kappa`` on the grid: ``beta_tilde`` is evaluated on the ``rho``
    grid and reduced to its min and max (``beta`` is linear in ``beta_tilde``
    for fixed positive ``1 + psi``, so only those two matter); the feasible
    ``psi`` range comes from a constraint-curve scan over ``alpha0`` and is
    covered by ``n_psi`` points.  Only ``binary_equality = "none"``.
    """
    s = np.asarray(sigma, dtype=float)
    r12, r13, r23 = _corr_triple(s)
    big_l = (r12**2 + r23**2 - 2 * r12 * r23 * r13) / (1 - r13**2)
    s22 = s[1, 1]
    floor = 1.0 - p * (1.0 - p) / s22 + 1e-12
    lo, hi = _window(big_l, restrictions, floor)
    ks = np.linspace(lo, hi, n_kappa)
    rho = _rho_grid(restrictions.rho_lo, restrictions.rho_hi, n_rho, True)
    bt = _grid_beta_tilde(s, r12, r13, r23, ks[:, None], rho[None, :])
    bmin, bmax = bt.min(axis=1), bt.max(axis=1)
    lo_all, hi_all = math.inf, -math.inf
    for k, b0, b1 in zip(ks, bmin, bmax):
        pl, ph, _, _ = psi_bounds_bruteforce(s22, k, p, n=n_curve)
        scale = 1.0 + np.linspace(pl, ph, n_psi)
        vals = np.concatenate([scale * b0, scale * b1])
        lo_all = min(lo_all, float(vals.min()))
        hi_all = max(hi_all, float(vals.max()))
    return lo_all, hi_all


# ---------------------------------------------------------------------------
# synthetic data


def simulate(config: StructuralConfig, n: int, rng: np.random.Generator, x_dim: int = 0):
    """Draw ``(y, T, z, x)`` from the Gaussian structural model.

    Controls, when requested, enter every equation with random slopes; they
    do not change the population reduced-form covariance.
    """
    om = config.omega11()
    uvz = rng.multivariate_normal(np.zeros(3), om, size=n)
    u, v, zeta = uvz.T
    w = config.sigma_w * rng.standard_normal(n)
    x = rng.standard_normal((n, x_dim))
    gz, gt, gy = (rng.normal(size=x_dim) for _ in range(3))
    z = zeta + x @ gz
    tstar = config.pi * z + v + x @ gt
    t = (1.0 + config.psi) * tstar + config.tau + w
    y = config.beta * tstar + u + x @ gy
    return y, t, z, x


def synthetic_study_config(kappa=0.85, rho=0.3, beta=1.0) -> StructuralConfig:
    """Valid-instrument configuration with classical error of signal share ``kappa``.

    ``pi = sigma_v = sigma_zeta = sigma_u = 1`` so the signal variance is 2.
    """
    sw2 = 2.0 / kappa - 2.0
    return StructuralConfig(
        beta=beta, pi=1.0, psi=0.0, tau=0.0, sigma_u=1.0, sigma_v=1.0, sigma_zeta=1.0,
        sigma_w=math.sqrt(sw2), sigma_uv=rho * math.sqrt(2.0), sigma_uzeta=0.0,
    )
