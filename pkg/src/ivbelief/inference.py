"""Posterior summaries for the identified set and for the parameter itself."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSampleError
from .identified_set import Restrictions, SetBounds, conditional_set_bounds
from .posterior import CovDraw

MIN_DRAWS = 100


@dataclass(frozen=True)
class SetInferenceSummary:
    p_empty: float
    p_valid: float
    p_valid_nonempty: float
    ci_rho_uzeta: tuple
    ci_beta: tuple
    anchor_bounds: SetBounds
    anchor_fallback: bool
    coverage: float
    draw_count: int
    nonempty_count: int


@dataclass(frozen=True)
class ParamInferenceSummary:
    median_rho_uzeta: float
    median_beta: float
    hpd_rho_uzeta: tuple
    hpd_beta: tuple
    kept_draws: int
    coverage: float


def set_bounds_for_draws(draws, restrictions: Restrictions, treatment_kind="continuous", workers=1):
    """Per-draw :class:`SetBounds` in draw order."""

    def run(d):
        return conditional_set_bounds(d, restrictions, treatment_kind)

    draws = list(draws)
    if workers <= 1:
        return [run(d) for d in draws]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(run, draws))


def expand_to_cover(anchor_lo, anchor_hi, lo, hi, coverage):
    """Smallest symmetric expansion of an anchor interval covering the draws.

    Returns ``(ci_lo, ci_hi, delta)`` such that at least ``ceil(coverage m)``
    of the ``m`` intervals ``[lo_j, hi_j]`` are subsets of the result.  A side
    is opened to infinity only when too many draws are unbounded on it for
    the finite expansion to reach the target.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m = lo.size
    need = math.ceil(coverage * m - 1e-9)
    lo_inf = np.isneginf(lo) & math.isfinite(anchor_lo)
    hi_inf = np.isposinf(hi) & math.isfinite(anchor_hi)

    best = None
    for open_lo, open_hi in ((False, False), (True, False), (False, True), (True, True)):
        ok = (~lo_inf | open_lo) & (~hi_inf | open_hi)
        if ok.sum() >= need:
            cand = (open_lo + open_hi, -int(ok.sum()), open_lo, open_hi)
            if best is None or cand[:2] < best[:2]:
                best = cand
    _, _, open_lo, open_hi = best
    ok = (~lo_inf | open_lo) & (~hi_inf | open_hi)

    with np.errstate(invalid="ignore"):
        d_lo = np.where(lo_inf | ~np.isfinite(anchor_lo), 0.0, anchor_lo - lo)
        d_hi = np.where(hi_inf | ~np.isfinite(anchor_hi), 0.0, hi - anchor_hi)
    delta_j = np.maximum(np.maximum(d_lo, d_hi), 0.0)[ok]
    delta = float(np.sort(delta_j)[need - 1])
    ci_lo = -math.inf if open_lo else anchor_lo - delta
    ci_hi = math.inf if open_hi else anchor_hi + delta
    return ci_lo, ci_hi, delta


def _anchor_draw(draws, anchor):
    if anchor is None:
        mean = np.mean([d.sigma for d in draws], axis=0)
        return CovDraw.from_sigma(mean, -1, draws[0].p_hat)
    if isinstance(anchor, CovDraw):
        return anchor
    return CovDraw.from_sigma(anchor, -1, draws[0].p_hat)


def infer_set(draws, restrictions: Restrictions, treatment_kind="continuous", coverage=0.9,
              anchor=None, bounds=None, workers=1) -> SetInferenceSummary:
    """Credible sets for the identified set of ``rho_uzeta`` and ``beta``.

    Parameters
    ----------
    draws : sequence of CovDraw
    restrictions : Restrictions
    treatment_kind : {"continuous", "binary"}
    coverage : float
        Nominal level in (0.5, 1).
    anchor : CovDraw or array, optional
        Covariance at which the starting interval is computed; normally the
        posterior mean.  Defaults to the average of the draws.
    bounds : list of SetBounds, optional
        Precomputed per-draw bounds.
    """
    draws = list(draws)
    if len(draws) < MIN_DRAWS:
        raise InsufficientSampleError(f"need at least {MIN_DRAWS} draws, got {len(draws)}")
    if not (0.5 < coverage < 1.0):
        raise ValueError("coverage must lie in (0.5, 1)")
    if bounds is None:
        bounds = set_bounds_for_draws(draws, restrictions, treatment_kind, workers)
    n = len(bounds)
    full = [b for b in bounds if not b.empty]
    m = len(full)
    n_valid = sum(b.contains_valid for b in bounds)
    anchor_bounds = conditional_set_bounds(_anchor_draw(draws, anchor), restrictions, treatment_kind)
    nan_pair = (math.nan, math.nan)
    if m == 0:
        return SetInferenceSummary(1.0, 0.0, math.nan, nan_pair, nan_pair, anchor_bounds,
                                   False, coverage, n, 0)
    cols = {name: np.array([getattr(b, name) for b in full])
            for name in ("rho_uzeta_lo", "rho_uzeta_hi", "beta_lo", "beta_hi")}
    fallback = anchor_bounds.empty
    if fallback:
        a_r = (float(np.median(cols["rho_uzeta_lo"])), float(np.median(cols["rho_uzeta_hi"])))
        a_b = (float(np.median(cols["beta_lo"])), float(np.median(cols["beta_hi"])))
    else:
        a_r = (anchor_bounds.rho_uzeta_lo, anchor_bounds.rho_uzeta_hi)
        a_b = (anchor_bounds.beta_lo, anchor_bounds.beta_hi)
    ci_r = expand_to_cover(*a_r, cols["rho_uzeta_lo"], cols["rho_uzeta_hi"], coverage)[:2]
    ci_b = expand_to_cover(*a_b, cols["beta_lo"], cols["beta_hi"], coverage)[:2]
    return SetInferenceSummary(
        p_empty=(n - m) / n,
        p_valid=n_valid / n,
        p_valid_nonempty=n_valid / m,
        ci_rho_uzeta=ci_r,
        ci_beta=ci_b,
        anchor_bounds=anchor_bounds,
        anchor_fallback=fallback,
        coverage=coverage,
        draw_count=n,
        nonempty_count=m,
    )


def hpd_interval(values, coverage=0.9) -> tuple[float, float]:
    """Shortest window containing ``ceil(coverage m)`` sorted values."""
    x = np.sort(np.asarray(values, dtype=float))
    m = x.size
    need = math.ceil(coverage * m - 1e-9)
    widths = x[need - 1:] - x[: m - need + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + need - 1])


def equal_tailed_interval(values, coverage=0.9) -> tuple[float, float]:
    a = (1.0 - coverage) / 2.0
    lo, hi = np.quantile(np.asarray(values, dtype=float), [a, 1.0 - a])
    return float(lo), float(hi)


def infer_parameter(paramdraws, coverage=0.9, min_draws=MIN_DRAWS) -> ParamInferenceSummary:
    """Medians and HPD intervals under the uniform prior on the identified set.

    ``None`` entries (empty draws) are discarded.
    """
    kept = [d for d in paramdraws if d is not None]
    if len(kept) < min_draws:
        raise InsufficientSampleError()
    ruz = np.array([d.rho_uzeta for d in kept])
    beta = np.array([d.beta for d in kept])
    return ParamInferenceSummary(
        median_rho_uzeta=float(np.median(ruz)),
        median_beta=float(np.median(beta)),
        hpd_rho_uzeta=hpd_interval(ruz, coverage),
        hpd_beta=hpd_interval(beta, coverage),
        kept_draws=len(kept),
        coverage=coverage,
    )
