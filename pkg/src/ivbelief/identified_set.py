"""Closed-form geometry of the identified set.

All quantities are expressed through the reduced-form correlations
``r12 = Cor(eps, xi)``, ``r13 = Cor(eps, zeta)`` and ``r23 = Cor(xi, zeta)``
together with the two elicited coordinates ``kappa`` (signal share of the
treatment residual, after absorbing any non-classical slope) and ``rho``
(correlation between the outcome error and the treatment signal).  On the
identified set the instrument-invalidity correlation ``rho_uzeta`` is an
explicit function of ``(kappa, rho)``; :func:`rho_uzeta` evaluates it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyIdentifiedSet,
    InconsistentRestrictionError,
    InvalidCorrelationError,
    OutsideIdentifiedSetError,
)

KAPPA_EPS = 1e-12
ROOT_IMAG_TOL = 1e-9

BINARY_EQUALITIES = (
    "none",
    "symmetric",
    "one_sided_alpha0_zero",
    "one_sided_alpha1_zero",
    "prevalence_preserving",
)


@dataclass(frozen=True)
class Restrictions:
    """Rectangle ``[kappa_tilde_lo, kappa_tilde_hi] x [rho_lo, rho_hi]``.

    ``binary_equality`` optionally adds a linear equality restriction on the
    two mis-classification rates; it is ignored for continuous treatments.
    """

    kappa_tilde_lo: float
    kappa_tilde_hi: float = 1.0
    rho_lo: float = -1.0
    rho_hi: float = 1.0
    binary_equality: str = "none"

    def __post_init__(self):
        a, b = self.kappa_tilde_lo, self.kappa_tilde_hi
        c, d = self.rho_lo, self.rho_hi
        if not (0.0 < a <= b <= 1.0):
            raise InconsistentRestrictionError(
                f"kappa interval must satisfy 0 < lo <= hi <= 1, got [{a}, {b}]"
            )
        if not (-1.0 <= c <= d <= 1.0):
            raise InconsistentRestrictionError(
                f"rho interval must satisfy -1 <= lo <= hi <= 1, got [{c}, {d}]"
            )
        if self.binary_equality not in BINARY_EQUALITIES:
            raise InconsistentRestrictionError(
                f"unknown binary equality {self.binary_equality!r}"
            )

    @property
    def rho_unrestricted(self) -> bool:
        return self.rho_lo == -1.0 and self.rho_hi == 1.0

    def contains(self, other: "Restrictions") -> bool:
        return (
            self.kappa_tilde_lo <= other.kappa_tilde_lo
            and self.kappa_tilde_hi >= other.kappa_tilde_hi
            and self.rho_lo <= other.rho_lo
            and self.rho_hi >= other.rho_hi
        )


@dataclass(frozen=True)
class SetBounds:
    """Bounds of the restricted conditional identified set for one ``Sigma``."""

    rho_uzeta_lo: float
    rho_uzeta_hi: float
    beta_lo: float
    beta_hi: float
    empty: bool
    contains_valid: bool

    @classmethod
    def empty_set(cls) -> "SetBounds":
        nan = float("nan")
        return cls(nan, nan, nan, nan, True, False)


def _scalar_or_array(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def correlations(sigma) -> tuple[float, float, float]:
    """Return ``(r12, r13, r23)`` from a 3x3 covariance matrix."""
    s = np.asarray(sigma, dtype=float)
    sd = np.sqrt(np.diag(s))
    return (
        float(s[0, 1] / (sd[0] * sd[1])),
        float(s[0, 2] / (sd[0] * sd[2])),
        float(s[1, 2] / (sd[1] * sd[2])),
    )


def _check_triple(r12, r13, r23):
    det = 1.0 - r12**2 - r13**2 - r23**2 + 2.0 * r12 * r13 * r23
    if not (abs(r12) < 1 and abs(r13) < 1 and abs(r23) < 1 and det > 0):
        raise InvalidCorrelationError()


def kappa_lower_bound(r12, r13, r23) -> float:
    """Smallest admissible ``kappa`` (exclusive) implied by the correlations.

    Examples
    --------
    >>> kappa_lower_bound(0.5, 0.0, 0.5)
    0.5
    """
    _check_triple(r12, r13, r23)
    return (r12**2 + r23**2 - 2.0 * r12 * r23 * r13) / (1.0 - r13**2)


def kappa_window(big_l: float, restrictions: Restrictions, floor: float | None = None):
    """Effective ``kappa`` interval ``[lo, hi]`` of the restricted set.

    The set is open at ``L``; ``lo`` is pushed to ``L + KAPPA_EPS``.  Raises
    :class:`EmptyIdentifiedSet` when nothing remains.
    """
    lo = max(restrictions.kappa_tilde_lo, big_l + KAPPA_EPS)
    if floor is not None:
        lo = max(lo, floor)
    hi = restrictions.kappa_tilde_hi
    if hi <= big_l + KAPPA_EPS or hi < lo:
        raise EmptyIdentifiedSet()
    return lo, hi


def _f(r12, r13, r23, k, rho):
    with np.errstate(invalid="ignore"):
        rad = np.sqrt(np.clip(1.0 - rho**2, 0.0, None) / (k * (k - r12**2)))
    return r23 * rho / np.sqrt(k) - (r12 * r23 - r13 * k) * rad


def rho_uzeta(r12, r13, r23, kappa_tilde, rho):
    """Instrument-invalidity correlation implied by ``(kappa_tilde, rho)``.

    Accepts scalars or broadcastable arrays.
    """
    big_l = kappa_lower_bound(r12, r13, r23)
    k = np.asarray(kappa_tilde, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(k <= big_l + KAPPA_EPS) or np.any(k > 1.0):
        raise OutsideIdentifiedSetError()
    if np.any(np.abs(rho) > 1.0):
        raise OutsideIdentifiedSetError("rho must lie in [-1, 1]")
    return _scalar_or_array(_f(r12, r13, r23, k, rho))


def sigma_u(s11, r12, kappa_tilde, rho):
    """Standard deviation of the structural outcome error."""
    k = np.asarray(kappa_tilde, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) >= 1.0):
        raise OutsideIdentifiedSetError("endogeneity correlation at boundary")
    if np.any(k <= r12**2) or s11 <= 0:
        raise OutsideIdentifiedSetError()
    return _scalar_or_array(np.sqrt(s11 * (k - r12**2) / (k * (1.0 - rho**2))))


def beta_tilde(sigma, sigma_uzeta):
    """Rescaled causal effect given the instrument-error covariance."""
    s = np.asarray(sigma, dtype=float)
    return _scalar_or_array((s[0, 2] - np.asarray(sigma_uzeta, dtype=float)) / s[1, 2])


def rho_uv(kappa_tilde, rho, rho_uzeta_, r23):
    """Correlation between the outcome error and the first-stage error."""
    k = np.asarray(kappa_tilde, dtype=float)
    if np.any(k <= r23**2):
        raise OutsideIdentifiedSetError()
    out = (np.asarray(rho) * np.sqrt(k) - np.asarray(rho_uzeta_) * r23) / np.sqrt(k - r23**2)
    return _scalar_or_array(out)


def rho_uzeta_unrestricted_bounds(r12, r13, r23) -> tuple[float, float]:
    """One-sided bound on ``rho_uzeta`` with no elicited restrictions."""
    big_l = kappa_lower_bound(r12, r13, r23)
    edge = abs(r23) / math.sqrt(big_l)
    if r12 * r23 < big_l * r13:
        return -edge, 1.0
    return -1.0, edge


def interior_rho_stationary(r12, r13, r23, k):
    """``rho`` solving d f / d rho = 0 at fixed ``k``; ``None`` if f is linear."""
    a = r12 * r23 - r13 * k
    if a == 0.0:
        return None
    q = k - r12**2
    return -r23 * math.sqrt(q) * math.copysign(1.0, a) / math.sqrt(a * a + r23 * r23 * q)


def kappa_stationary_roots(r12, r13, r23, rho, lo, hi):
    """Real roots in ``[lo, hi]`` of the kappa first-order condition at fixed rho.

    The condition ``(1 - rho^2) [(2 r12 r23 - r13 r12^2) k - r23 r12^3]^2
    = rho^2 r23^2 (k - r12^2)^3`` is a cubic in ``k``; roots come from the
    companion-matrix eigenvalues.  Squaring admits spurious roots, which are
    harmless as extra candidates.
    """
    alpha = 2.0 * r12 * r23 - r13 * r12**2
    gamma = r23 * r12**3
    q = r12**2
    one = 1.0 - rho**2
    w = rho**2 * r23**2
    coef = np.array([
        one * gamma**2 + w * q**3,
        -2.0 * one * alpha * gamma - 3.0 * w * q**2,
        one * alpha**2 + 3.0 * w * q,
        -w,
    ])
    scale = np.max(np.abs(coef))
    if scale == 0.0:
        return []
    nz = np.nonzero(np.abs(coef) > 1e-14 * scale)[0]
    coef = coef[: nz[-1] + 1]
    if coef.size < 2:
        return []
    roots = np.polynomial.polynomial.polyroots(coef)
    out = []
    for r in roots:
        if abs(r.imag) <= ROOT_IMAG_TOL * max(1.0, abs(r.real)) and lo <= r.real <= hi:
            out.append(float(r.real))
    return out


def rho_uzeta_candidates(r12, r13, r23, restrictions, kappa_floor=None):
    """Finite candidate set whose image under ``f`` spans the ``rho_uzeta`` bounds."""
    big_l = kappa_lower_bound(r12, r13, r23)
    lo, hi = kappa_window(big_l, restrictions, kappa_floor)
    c, d = restrictions.rho_lo, restrictions.rho_hi
    pts = [(lo, c), (lo, d), (hi, c), (hi, d)]
    for k in (lo, hi):
        r = interior_rho_stationary(r12, r13, r23, k)
        if r is not None and c <= r <= d:
            pts.append((k, r))
    for rho in (c, d):
        pts.extend((k, rho) for k in kappa_stationary_roots(r12, r13, r23, rho, lo, hi))
    return pts


def rho_uzeta_bounds(r12, r13, r23, restrictions: Restrictions, kappa_floor=None):
    """Sharp bounds ``(lo, hi)`` of ``rho_uzeta`` over the restricted set.

    The identified set for ``rho_uzeta`` is the open interval between these
    endpoints.  Raises :class:`EmptyIdentifiedSet` if the rectangle misses the
    set entirely.
    """
    pts = np.array(rho_uzeta_candidates(r12, r13, r23, restrictions, kappa_floor))
    vals = _f(r12, r13, r23, pts[:, 0], pts[:, 1])
    return float(vals.min()), float(vals.max())


def g_shift(sigma, k, rho):
    """``s13/s23 - beta_tilde`` as a function of ``(kappa, rho)``.

    Strictly increasing in ``rho``; infinite at ``rho = +-1``.
    """
    s = np.asarray(sigma, dtype=float)
    r12, r13, r23 = correlations(s)
    k = np.asarray(k, dtype=float)
    rho = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(np.abs(rho) >= 1.0, np.sign(rho) * np.inf, rho / np.sqrt(1.0 - rho**2))
        core = r23 * np.sqrt(k - r12**2) * t - (r12 * r23 - k * r13)
    return math.sqrt(s[0, 0] * s[2, 2]) / (k * s[1, 2]) * core


def psi_roots(r12, rho):
    """Interior kappa stationary points of ``g`` at fixed ``rho``."""
    if rho == 0.0 or abs(rho) >= 1.0:
        return []
    root = math.sqrt(1.0 - rho**2)
    return [2.0 * r12**2 * (1.0 - root) / rho**2, 2.0 * r12**2 * (1.0 + root) / rho**2]


def g_candidates(sigma, restrictions, kappa_floor=None):
    r12, r13, r23 = correlations(sigma)
    big_l = kappa_lower_bound(r12, r13, r23)
    lo, hi = kappa_window(big_l, restrictions, kappa_floor)
    c, d = restrictions.rho_lo, restrictions.rho_hi
    pts = [(lo, c), (lo, d), (hi, c), (hi, d)]
    for rho in (c, d):
        pts.extend((k, rho) for k in psi_roots(r12, rho) if lo <= k <= hi)
    return pts


def beta_tilde_bounds(sigma, restrictions: Restrictions, kappa_floor=None):
    """Sharp bounds for the rescaled causal effect under ``restrictions``.

    Returns ``(-inf, inf)`` when ``rho`` is unrestricted.
    """
    s = np.asarray(sigma, dtype=float)
    pts = np.array(g_candidates(s, restrictions, kappa_floor))
    if restrictions.rho_unrestricted:
        return -math.inf, math.inf
    vals = g_shift(s, pts[:, 0], pts[:, 1])
    iv = s[0, 2] / s[1, 2]
    return float(iv - vals.max()), float(iv - vals.min())


def conditional_set_bounds(draw, restrictions: Restrictions, treatment_kind="continuous") -> SetBounds:
    """Bounds of the restricted identified set at one covariance draw.

    ``draw`` needs ``sigma`` and, for binary treatments, ``p_hat``.
    """
    sigma = np.asarray(draw.sigma, dtype=float)
    r12, r13, r23 = correlations(sigma)
    try:
        if treatment_kind == "binary":
            from .binary import beta_bounds_binary, binary_kappa_floor

            floor = binary_kappa_floor(sigma[1, 1], draw.p_hat, restrictions.binary_equality)
            lo_r, hi_r = rho_uzeta_bounds(r12, r13, r23, restrictions, floor)
            lo_b, hi_b = beta_bounds_binary(sigma, restrictions, draw.p_hat)
        else:
            lo_r, hi_r = rho_uzeta_bounds(r12, r13, r23, restrictions)
            lo_b, hi_b = beta_tilde_bounds(sigma, restrictions)
    except EmptyIdentifiedSet:
        return SetBounds.empty_set()
    return SetBounds(lo_r, hi_r, lo_b, hi_b, False, lo_r < 0.0 < hi_r)
