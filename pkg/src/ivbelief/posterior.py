"""Inverse-Wishart posterior for the reduced-form covariance.

Draw ``j`` is generated from its own counter-based stream keyed by
``(seed, j)``, so any subset of draws can be produced in any order (or in
parallel) with bit-identical results.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .reduced_form import RELEVANCE_TOL, ReducedFormFit

log = logging.getLogger(__name__)

L_TOL = 1e-12
REDRAW_FACTOR = 10


@dataclass(frozen=True)
class CovDraw:
    sigma: np.ndarray
    r12: float
    r13: float
    r23: float
    big_l: float
    index: int
    p_hat: float | None = None

    @classmethod
    def from_sigma(cls, sigma, index=0, p_hat=None) -> "CovDraw":
        sigma = np.asarray(sigma, dtype=float)
        d = np.sqrt(np.diag(sigma))
        r12 = float(sigma[0, 1] / (d[0] * d[1]))
        r13 = float(sigma[0, 2] / (d[0] * d[2]))
        r23 = float(sigma[1, 2] / (d[1] * d[2]))
        big_l = (r12**2 + r23**2 - 2 * r12 * r23 * r13) / (1 - r13**2)
        return cls(sigma, r12, r13, r23, float(big_l), index, p_hat)

    def is_regular(self) -> bool:
        """Relevance holds and ``L`` satisfies its bracketing invariant."""
        if abs(self.r23) < RELEVANCE_TOL:
            return False
        lo = max(self.r12**2, self.r23**2)
        return self.big_l > lo - L_TOL and self.big_l < 1.0 + L_TOL


@dataclass(frozen=True)
class PosteriorDraws:
    """Sequence of :class:`CovDraw` plus the number of rejected draws."""

    draws: tuple
    redraws: int
    nu: float

    def __len__(self):
        return len(self.draws)

    def __iter__(self):
        return iter(self.draws)

    def __getitem__(self, i):
        return self.draws[i]


def stream(seed: int, index: int, tag: int = 0) -> np.random.Generator:
    """Independent generator for draw ``index`` under ``seed``."""
    return np.random.Generator(np.random.Philox(key=[seed, tag], counter=[0, index, 0, 0]))


def _raw_draw(rng: np.random.Generator, nu: float, chol_inv: np.ndarray) -> np.ndarray:
    # Bartlett factor of a Wishart(nu, S^{-1}) draw, then invert
    chi = np.sqrt(rng.chisquare(np.array([nu, nu - 1.0, nu - 2.0])))
    off = rng.standard_normal(3)
    a = np.array([[chi[0], 0.0, 0.0], [off[0], chi[1], 0.0], [off[1], off[2], chi[2]]])
    b = chol_inv @ a
    b_inv = np.linalg.solve(b, np.eye(3))
    sigma = b_inv.T @ b_inv
    return 0.5 * (sigma + sigma.T)


def _chol_inv(scale) -> np.ndarray:
    scale = np.asarray(scale, dtype=float)
    return np.linalg.cholesky(np.linalg.inv(scale))


def sample_inverse_wishart(nu: float, scale, seed: int, count: int, start: int = 0) -> np.ndarray:
    """``count`` draws from Inverse-Wishart(``nu``, ``scale``) as a ``(count, 3, 3)`` array."""
    if nu <= 2:
        raise ValueError("nu must exceed 2")
    c = _chol_inv(scale)
    return np.stack([_raw_draw(stream(seed, j), nu, c) for j in range(start, start + count)])


def posterior_mean(fit: ReducedFormFit) -> np.ndarray:
    """Posterior mean ``S / (n - k)`` of the reduced-form covariance."""
    return fit.s / (fit.n - fit.k)


def _draw_range(indices, nu, c, seed, p_hat, budget):
    out, redraws = [], 0
    for j in indices:
        rng = stream(seed, j)
        while True:
            d = CovDraw.from_sigma(_raw_draw(rng, nu, c), j, p_hat)
            try:
                np.linalg.cholesky(d.sigma)
                ok = d.is_regular()
            except np.linalg.LinAlgError:
                ok = False
            if ok:
                break
            redraws += 1
            if redraws > budget:
                raise NumericalError("posterior concentrated on degenerate region")
        out.append(d)
    return out, redraws


def draw_sigma(fit: ReducedFormFit, seed: int, count: int, workers: int = 1) -> PosteriorDraws:
    """Posterior draws of ``Sigma`` from Inverse-Wishart(``n - k + 4``, ``S``).

    Degenerate draws (irrelevant instrument or a broken ``L`` invariant) are
    rejected and redrawn from the same stream.
    """
    if count < 1:
        raise ValueError("count must be positive")
    nu = fit.n - fit.k + 4
    if nu <= 5:
        warnings.warn("sample too small for posterior mean identity", RuntimeWarning, stacklevel=2)
    c = _chol_inv(fit.s)
    workers = max(1, int(workers))
    if workers == 1:
        draws, redraws = _draw_range(range(count), nu, c, seed, fit.p_hat, REDRAW_FACTOR * count)
    else:
        size = math.ceil(count / workers)
        chunks = [range(i, min(i + size, count)) for i in range(0, count, size)]
        budget = REDRAW_FACTOR * count
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda r: _draw_range(r, nu, c, seed, fit.p_hat, budget), chunks))
        draws = [d for part, _ in parts for d in part]
        redraws = sum(r for _, r in parts)
        if redraws > REDRAW_FACTOR * count:
            raise NumericalError("posterior concentrated on degenerate region")
    if redraws:
        log.info("redrew %d degenerate posterior draws", redraws)
    return PosteriorDraws(tuple(draws), redraws, nu)
