"""Binary treatment with mis-classification.

With a binary true treatment, the measurement error ``T - T*`` has slope
``psi = -(alpha0 + alpha1)`` on ``T*`` and intercept ``tau = alpha0``, where
``alpha0 = P(T=1 | T*=0)`` and ``alpha1 = P(T=0 | T*=1)``.  The observed
prevalence ``p`` and the classicalised error variance ``s22 (1 - kappa_tilde)``
then restrict ``psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InfeasibleBinaryError
from .identified_set import (
    KAPPA_EPS,
    Restrictions,
    correlations,
    g_shift,
    kappa_lower_bound,
    kappa_window,
    psi_roots,
)

BETA_GRID_SIZE = 10_001


@dataclass(frozen=True)
class BinaryMoments:
    """Mis-classification rates and the implied error decomposition."""

    p: float
    alpha0: float
    alpha1: float
    p_star: float
    psi: float
    tau: float
    sigma_w_sq: float

    @classmethod
    def from_alphas(cls, alpha0: float, alpha1: float, p: float) -> "BinaryMoments":
        psi, tau = psi_tau_from_alphas(alpha0, alpha1)
        sw2 = sigma_w_sq_binary(alpha0, alpha1, p)
        p_star = (p - alpha0) / (1.0 - alpha0 - alpha1)
        if not (0.0 < p_star < 1.0):
            raise InfeasibleBinaryError("infeasible prevalence")
        return cls(p, alpha0, alpha1, p_star, psi, tau, sw2)


def psi_tau_from_alphas(alpha0: float, alpha1: float) -> tuple[float, float]:
    """Slope and intercept of the mis-classification error on ``T*``."""
    if alpha0 < 0.0 or alpha1 < 0.0:
        raise InfeasibleBinaryError("mis-classification rates must be non-negative")
    if alpha0 + alpha1 >= 1.0:
        raise InfeasibleBinaryError("mis-classification worse than coin flip")
    return -(alpha0 + alpha1), alpha0


def sigma_w_sq_binary(alpha0: float, alpha1: float, p: float) -> float:
    """Variance of the classicalised error ``w``.

    Examples
    --------
    >>> round(sigma_w_sq_binary(0.1, 0.2, 0.6), 12)
    0.14
    """
    psi_tau_from_alphas(alpha0, alpha1)
    if not (0.0 < p < 1.0 and alpha0 < p and alpha1 < 1.0 - p):
        raise InfeasibleBinaryError("infeasible prevalence")
    return alpha1 * (1.0 - alpha0) + (1.0 - p) * (alpha0 - alpha1)


def _m(p):
    return max((1.0 - p) * (2.0 * p - 1.0), p * (1.0 - 2.0 * p))


def psi_bounds_array(s22, kappa_tilde, p):
    """Vectorised ``(psi_low, psi_high)``; no feasibility check."""
    v = s22 * (1.0 - np.asarray(kappa_tilde, dtype=float))
    high = -v / max(p, 1.0 - p)
    low_corner = -v / min(p, 1.0 - p)
    low_tangent = 2.0 * np.sqrt(np.clip(p * (1.0 - p) - v, 0.0, None)) - 1.0
    low = np.where(v <= _m(p), low_corner, low_tangent)
    return low + 0.0, high + 0.0  # no negative zeros


def psi_bounds(s22: float, kappa_tilde: float, p: float) -> tuple[float, float]:
    """Range of ``psi`` compatible with ``(s22, kappa_tilde, p)``.

    Examples
    --------
    >>> [round(x, 4) for x in psi_bounds(0.2, 0.8, 0.6)]
    [-0.1, -0.0667]
    """
    if not (0.0 < p < 1.0):
        raise InfeasibleBinaryError("prevalence must lie in (0, 1)")
    if not (0.0 < kappa_tilde <= 1.0):
        raise InfeasibleBinaryError("kappa_tilde must lie in (0, 1]")
    if s22 * (1.0 - kappa_tilde) >= p * (1.0 - p):
        raise InfeasibleBinaryError("measurement-error variance exceeds binary variance")
    low, high = psi_bounds_array(s22, kappa_tilde, p)
    return float(low), float(high)


def alpha_bounds(s22: float, big_l: float, p: float) -> tuple[float, float, float]:
    """Largest mis-classification rates and most negative ``psi`` at ``kappa = L``."""
    v = s22 * (1.0 - big_l)
    psi_min = psi_bounds(s22, big_l, p)[0]
    return v / (1.0 - p), v / p, psi_min


def _equality_alphas(sw2: float, p: float, constraint: str) -> tuple[float, float]:
    if constraint == "one_sided_alpha0_zero":
        return 0.0, sw2 / p
    if constraint == "one_sided_alpha1_zero":
        return sw2 / (1.0 - p), 0.0
    if constraint == "symmetric":
        c = 1.0
    elif constraint == "prevalence_preserving":
        c = (1.0 - p) / p
    else:
        raise ValueError(f"unknown equality constraint {constraint!r}")
    b = c * p + 1.0 - p
    disc = b * b - 4.0 * c * sw2
    if disc < 0.0:
        raise InfeasibleBinaryError("equality restriction infeasible at this kappa_tilde")
    # smaller root, written to avoid cancellation
    a0 = 2.0 * sw2 / (b + math.sqrt(disc)) if sw2 > 0 else 0.0
    return a0, c * a0


def psi_under_equality(kappa_tilde: float, s22: float, p: float, constraint: str) -> float:
    """``psi`` pinned down by a linear equality between the two rates."""
    if constraint == "none":
        raise ValueError("psi_under_equality needs an equality constraint")
    sw2 = s22 * (1.0 - kappa_tilde)
    if sw2 < 0.0:
        raise InfeasibleBinaryError("equality restriction infeasible at this kappa_tilde")
    a0, a1 = _equality_alphas(sw2, p, constraint)
    try:
        mom = BinaryMoments.from_alphas(a0, a1, p)
    except InfeasibleBinaryError as exc:
        raise InfeasibleBinaryError("equality restriction infeasible at this kappa_tilde") from exc
    return mom.psi


def binary_kappa_floor(s22: float, p: float, constraint: str = "none") -> float:
    """Smallest admissible ``kappa_tilde`` for binary treatment (inclusive).

    Feasible rates exist iff ``s22 (1 - kappa_tilde) < p (1 - p)``; this holds
    for every equality constraint as well, since each constraint line meets the
    feasible region all the way to that limit.
    """
    if constraint not in ("none", "symmetric", "one_sided_alpha0_zero",
                          "one_sided_alpha1_zero", "prevalence_preserving"):
        raise ValueError(f"unknown equality constraint {constraint!r}")
    return 1.0 - p * (1.0 - p) / s22 + KAPPA_EPS


def _psi_arrays(s22, ks, p, constraint):
    if constraint == "none":
        return psi_bounds_array(s22, ks, p)
    psi = np.array([psi_under_equality(k, s22, p, constraint) for k in ks])
    return psi, psi


def beta_bounds_binary(sigma, restrictions: Restrictions, p: float):
    """Bounds on ``beta = (1 + psi) beta_tilde`` for a mis-classified binary treatment.

    The one-dimensional search over ``kappa_tilde`` combines a dense grid, the
    analytic stationary points of ``g``, the branch point of ``psi_low`` and a
    bounded local refinement around the best grid points.
    """
    s = np.asarray(sigma, dtype=float)
    r12, r13, r23 = correlations(s)
    big_l = kappa_lower_bound(r12, r13, r23)
    s22 = s[1, 1]
    eq = restrictions.binary_equality
    lo, hi = kappa_window(big_l, restrictions, binary_kappa_floor(s22, p, eq))
    if restrictions.rho_unrestricted:
        return -math.inf, math.inf
    c, d = restrictions.rho_lo, restrictions.rho_hi
    iv = s[0, 2] / s[1, 2]
    extra = [k for rho in (c, d) for k in psi_roots(r12, rho)]
    extra.append(1.0 - _m(p) / s22)
    ks = np.linspace(lo, hi, BETA_GRID_SIZE)
    ks = np.unique(np.concatenate([ks, [k for k in extra if lo <= k <= hi]]))

    def envelope(kv):
        kv = np.atleast_1d(kv)
        pl, ph = _psi_arrays(s22, kv, p, eq)
        with np.errstate(invalid="ignore"):
            bt = np.stack([iv - g_shift(s, kv, c), iv - g_shift(s, kv, d)])
            vals = np.concatenate([(1.0 + pl) * bt, (1.0 + ph) * bt])
        return vals.min(axis=0), vals.max(axis=0)

    vmin, vmax = envelope(ks)
    out_lo, out_hi = float(np.min(vmin)), float(np.max(vmax))
    for sign, arr, best in ((1.0, vmin, out_lo), (-1.0, vmax, out_hi)):
        if not math.isfinite(best):
            continue
        i = int(np.argmin(sign * arr))
        a, b = ks[max(i - 1, 0)], ks[min(i + 1, ks.size - 1)]
        if b <= a:
            continue
        pick = 0 if sign > 0 else 1
        res = minimize_scalar(lambda k: sign * envelope(k)[pick][0], bounds=(a, b),
                              method="bounded", options={"xatol": 1e-13})
        val = sign * float(res.fun)
        if sign > 0:
            out_lo = min(out_lo, val)
        else:
            out_hi = max(out_hi, val)
    return out_lo, out_hi
