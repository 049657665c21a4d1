"""Area-uniform sampling on the conditional identified set.

The identified set for ``(kappa_tilde, rho, rho_uzeta)`` is the graph of the
surface ``rho_uzeta = f(kappa_tilde, rho)``.  A uniform draw with respect to
surface area is obtained by proposing ``(kappa_tilde, rho)`` uniformly on the
restricted rectangle and accepting with probability ``M / M_sup``, where ``M``
is the local area element.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .binary import binary_kappa_floor, psi_bounds, psi_under_equality
from .errors import EmptyIdentifiedSet, NumericalError, OutsideIdentifiedSetError
from .identified_set import (
    Restrictions,
    _f,
    kappa_lower_bound,
    kappa_window,
)
from .posterior import CovDraw, stream

PRESCAN = 64
SAFETY = 1.1
MAX_ATTEMPTS = 100_000
BATCH = 64
SAMPLER_TAG = 1


@dataclass(frozen=True)
class ParamDraw:
    """One structural point on the conditional identified set."""

    kappa_tilde: float
    rho_uxistar: float
    rho_uzeta: float
    rho_uv: float
    sigma_u: float
    psi: float
    beta: float
    beta_tilde: float
    source_draw: int


def _partials(r12, r13, r23, k, rho):
    a = r12 * r23 - r13 * k
    q = k - r12**2
    one = 1.0 - rho**2
    d_rho = r23 / np.sqrt(k) + rho * a / np.sqrt(k * q * one)
    d_kappa = -rho * r23 / (2.0 * k**1.5) + np.sqrt(one / (k * q)) * (
        r13 + 0.5 * a * (1.0 / k + 1.0 / q)
    )
    return d_rho, d_kappa


def surface_partials(r12, r13, r23, kappa, rho):
    """``(d f / d rho, d f / d kappa)`` of the instrument-invalidity surface."""
    k = np.asarray(kappa, dtype=float)
    rho = np.asarray(rho, dtype=float)
    _check_interior(r12, r13, r23, k, rho)
    d_rho, d_kappa = _partials(r12, r13, r23, k, rho)
    if d_rho.ndim == 0:
        return float(d_rho), float(d_kappa)
    return d_rho, d_kappa


def _check_interior(r12, r13, r23, k, rho):
    big_l = kappa_lower_bound(r12, r13, r23)
    if np.any(np.abs(rho) >= 1.0) or np.any(k <= big_l) or np.any(k > 1.0):
        raise OutsideIdentifiedSetError("surface measure undefined at boundary")


def surface_measure(r12, r13, r23, kappa, rho):
    """Local area element ``sqrt(1 + f_rho^2 + f_kappa^2) >= 1``."""
    k = np.asarray(kappa, dtype=float)
    rho = np.asarray(rho, dtype=float)
    _check_interior(r12, r13, r23, k, rho)
    d_rho, d_kappa = _partials(r12, r13, r23, k, rho)
    m = np.sqrt(1.0 + d_rho**2 + d_kappa**2)
    return float(m) if m.ndim == 0 else m


class SurfaceSampler:
    """Accept/reject sampler for one covariance draw and rectangle.

    The envelope ``M_sup`` starts at ``1.1`` times the largest area element on
    a 64 x 64 grid of cell midpoints and is raised to ``1.1 M`` whenever a
    proposal exceeds it; that proposal is then decided under the new envelope.
    A rectangle that is degenerate in one coordinate is sampled by arc length.
    """

    def __init__(self, r12, r13, r23, restrictions: Restrictions, kappa_floor=None):
        self.r = (r12, r13, r23)
        self.big_l = kappa_lower_bound(r12, r13, r23)
        self.k_lo, self.k_hi = kappa_window(self.big_l, restrictions, kappa_floor)
        self.rho_lo, self.rho_hi = restrictions.rho_lo, restrictions.rho_hi
        self.vary_k = self.k_hi > self.k_lo
        self.vary_rho = self.rho_hi > self.rho_lo
        self.envelope = SAFETY * self._prescan()
        self.raises = 0

    def weight(self, k, rho):
        """Area (or arc-length) element at proposals ``(k, rho)``."""
        k = np.asarray(k, dtype=float)
        rho = np.asarray(rho, dtype=float)
        if not (self.vary_k or self.vary_rho):
            return np.ones(np.broadcast(k, rho).shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            d_rho, d_kappa = _partials(*self.r, k, rho)
        tot = 1.0
        if self.vary_rho:
            tot = tot + d_rho**2
        if self.vary_k:
            tot = tot + d_kappa**2
        w = np.sqrt(tot)
        return np.where(np.isfinite(w), w, np.inf)

    def _prescan(self):
        def mids(a, b, on):
            if not on:
                return np.array([a])
            e = np.linspace(a, b, PRESCAN + 1)
            return 0.5 * (e[1:] + e[:-1])

        kk, rr = np.meshgrid(mids(self.k_lo, self.k_hi, self.vary_k),
                             mids(self.rho_lo, self.rho_hi, self.vary_rho), indexing="ij")
        w = self.weight(kk, rr)
        w = w[np.isfinite(w)]
        return float(w.max()) if w.size else 1.0

    def _propose(self, rng, size):
        k = self.k_lo + (self.k_hi - self.k_lo) * rng.random(size)
        rho = self.rho_lo + (self.rho_hi - self.rho_lo) * rng.random(size)
        u = rng.random(size)
        return k, rho, u

    def decide(self, rng, size):
        """Propose ``size`` points and decide each in sequence.

        Returns ``(kappa, rho, weight, accepted, envelope_used)`` arrays.
        """
        k, rho, u = self._propose(rng, size)
        w = self.weight(k, rho)
        acc = np.zeros(size, dtype=bool)
        env = np.empty(size)
        for i in range(size):
            if w[i] > self.envelope:
                if not math.isfinite(w[i]):
                    env[i] = self.envelope
                    continue
                self.envelope = SAFETY * w[i]
                self.raises += 1
            env[i] = self.envelope
            acc[i] = u[i] * self.envelope < w[i]
        return k, rho, w, acc, env

    def sample(self, rng, max_attempts=MAX_ATTEMPTS):
        """One accepted ``(kappa_tilde, rho)`` pair."""
        attempts = 0
        while attempts < max_attempts:
            size = min(BATCH, max_attempts - attempts)
            k, rho, _, acc, _ = self.decide(rng, size)
            hit = np.flatnonzero(acc)
            if hit.size:
                i = int(hit[0])
                return float(k[i]), float(rho[i])
            attempts += size
        raise NumericalError("acceptance failure")


def _complete(draw: CovDraw, k, rho, psi):
    s = draw.sigma
    r12, r13, r23 = draw.r12, draw.r13, draw.r23
    if abs(rho) >= 1.0:
        raise OutsideIdentifiedSetError("endogeneity correlation at boundary")
    ruz = float(_f(r12, r13, r23, k, rho))
    su = math.sqrt(s[0, 0] * (k - r12**2) / (k * (1.0 - rho**2)))
    bt = (s[0, 2] - su * ruz * math.sqrt(s[2, 2])) / s[1, 2]
    ruv = (rho * math.sqrt(k) - ruz * r23) / math.sqrt(k - r23**2)
    return ParamDraw(k, rho, ruz, ruv, su, psi, (1.0 + psi) * bt, bt, draw.index)


def draw_structural(draw: CovDraw, restrictions: Restrictions, treatment_kind, rng):
    """One area-uniform structural point, or ``None`` when the set is empty."""
    floor = None
    if treatment_kind == "binary":
        floor = binary_kappa_floor(draw.sigma[1, 1], draw.p_hat, restrictions.binary_equality)
    try:
        sampler = SurfaceSampler(draw.r12, draw.r13, draw.r23, restrictions, floor)
    except EmptyIdentifiedSet:
        return None
    k, rho = sampler.sample(rng)
    psi = 0.0
    if treatment_kind == "binary":
        s22 = draw.sigma[1, 1]
        if restrictions.binary_equality == "none":
            lo, hi = psi_bounds(s22, k, draw.p_hat)
            psi = float(rng.uniform(lo, hi)) if hi > lo else hi
        else:
            psi = psi_under_equality(k, s22, draw.p_hat, restrictions.binary_equality)
        psi = psi + 0.0  # normalise -0.0
    return _complete(draw, k, rho, psi)


def sample_structural(draws, restrictions, treatment_kind, seed, workers=1):
    """One structural point per covariance draw; ``None`` marks empty draws."""

    def run(d):
        return draw_structural(d, restrictions, treatment_kind, stream(seed, d.index, SAMPLER_TAG))

    draws = list(draws)
    if workers <= 1:
        return [run(d) for d in draws]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(run, draws))

