import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ivbelief import identified_set as ids
from ivbelief.errors import InsufficientSampleError
from ivbelief.inference import (
    equal_tailed_interval,
    expand_to_cover,
    hpd_interval,
    infer_parameter,
    infer_set,
    set_bounds_for_draws,
)
from ivbelief.manifold import SurfaceSampler, _complete
from ivbelief.posterior import CovDraw, sample_inverse_wishart

SIGMA = np.array([[3.0, 2.0, 1.0], [2.0, 2.0, 1.0], [1.0, 1.0, 1.0]])


def _draws(count=300, nu=200, seed=0):
    mats = sample_inverse_wishart(nu, SIGMA * (nu - 4), seed, count)
    return [CovDraw.from_sigma(m, j) for j, m in enumerate(mats)]


def test_identical_draws_give_zero_expansion():
    draws = [CovDraw.from_sigma(SIGMA, j) for j in range(100)]
    restr = ids.Restrictions(0.8, 1.0, -0.5, 0.5)
    s = infer_set(draws, restr, anchor=SIGMA)
    b = ids.conditional_set_bounds(draws[0], restr)
    assert s.ci_beta == (b.beta_lo, b.beta_hi)
    assert s.ci_rho_uzeta == (b.rho_uzeta_lo, b.rho_uzeta_hi)
    assert s.p_empty == 0.0 and not s.anchor_fallback


def test_unrestricted_continuous_is_always_valid():
    s = infer_set(_draws(), ids.Restrictions(1e-12))
    assert s.p_valid == 1.0 and s.p_empty == 0.0
    assert s.ci_beta == (-math.inf, math.inf)


def test_probabilities_move_with_restrictions():
    draws = _draws(400, nu=30)
    bounds = {}
    for a in (0.76, 0.8, 0.9):
        bounds[a] = infer_set(draws, ids.Restrictions(a, 1.0, -0.3, 0.3))
    for small, big in ((0.9, 0.8), (0.8, 0.76)):
        assert bounds[big].p_empty <= bounds[small].p_empty
        assert bounds[big].p_valid >= bounds[small].p_valid


def test_ci_covers_required_share():
    draws = _draws(500, nu=40)
    restr = ids.Restrictions(0.8, 1.0, -0.4, 0.4)
    s = infer_set(draws, restr, coverage=0.9)
    bs = [b for b in set_bounds_for_draws(draws, restr) if not b.empty]
    inside = sum(s.ci_beta[0] <= b.beta_lo and b.beta_hi <= s.ci_beta[1] for b in bs)
    assert inside >= math.ceil(0.9 * len(bs))
    lo, hi = s.ci_beta
    assert lo <= s.anchor_bounds.beta_lo and s.anchor_bounds.beta_hi <= hi


def test_high_coverage_approaches_hull():
    draws = _draws(200, nu=40)
    restr = ids.Restrictions(0.8, 1.0, -0.4, 0.4)
    s = infer_set(draws, restr, coverage=0.999)
    bs = [b for b in set_bounds_for_draws(draws, restr) if not b.empty]
    hull = (min(b.beta_lo for b in bs), max(b.beta_hi for b in bs))
    lo, hi = s.ci_beta
    assert lo <= hull[0] and hi >= hull[1]
    assert lo == pytest.approx(hull[0], rel=1e-12) or hi == pytest.approx(hull[1], rel=1e-12)


def test_expand_to_cover_infinite_sides():
    lo = np.array([-1.0] * 95 + [-math.inf] * 5)
    hi = np.ones(100)
    assert expand_to_cover(-0.5, 0.5, lo, hi, 0.9) == (-1.0, 1.0, 0.5)
    lo[:20] = -math.inf
    ci_lo, ci_hi, _ = expand_to_cover(-0.5, 0.5, lo, hi, 0.9)
    assert ci_lo == -math.inf and ci_hi == 1.0
    inf_anchor = expand_to_cover(-math.inf, math.inf, np.full(100, -math.inf), np.full(100, math.inf), 0.9)
    assert inf_anchor[:2] == (-math.inf, math.inf)


def test_empty_anchor_falls_back_to_median_endpoints():
    draws = _draws(200, nu=40)
    restr = ids.Restrictions(0.8, 0.85, -0.4, 0.4)
    # anchor lower bound on kappa is about 0.92, above the restricted window
    anchor = np.array([[3.0, 2.3, 1.0], [2.3, 2.0, 1.0], [1.0, 1.0, 1.0]])
    s = infer_set(draws, restr, anchor=anchor)
    assert s.anchor_bounds.empty and s.anchor_fallback
    assert math.isfinite(s.ci_beta[0]) and math.isfinite(s.ci_beta[1])


def test_all_empty_draws():
    s = infer_set(_draws(150), ids.Restrictions(0.1, 0.6))
    assert s.p_empty == 1.0 and s.p_valid == 0.0 and math.isnan(s.ci_beta[0])


def test_input_validation():
    with pytest.raises(InsufficientSampleError):
        infer_set(_draws(50), ids.Restrictions(0.5))
    with pytest.raises(ValueError):
        infer_set(_draws(120), ids.Restrictions(0.5), coverage=1.0)
    with pytest.raises(InsufficientSampleError):
        infer_parameter([None] * 200)


def test_hpd_properties(rng):
    assert hpd_interval(np.full(50, 2.5)) == (2.5, 2.5)
    x = rng.normal(size=20_000)
    lo, hi = hpd_interval(x, 0.9)
    elo, ehi = equal_tailed_interval(x, 0.9)
    assert hi - lo <= ehi - elo + 1e-12
    assert lo == pytest.approx(elo, abs=0.05) and hi == pytest.approx(ehi, abs=0.05)
    assert lo <= np.median(x) <= hi
    y = rng.exponential(size=20_000)
    ylo, yhi = hpd_interval(y, 0.9)
    assert ylo < equal_tailed_interval(y, 0.9)[0]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=5, max_size=200), st.floats(0.51, 0.99))
def test_hpd_holds_enough_points(values, coverage):
    lo, hi = hpd_interval(values, coverage)
    x = np.asarray(values)
    assert np.sum((x >= lo) & (x <= hi)) >= math.ceil(coverage * x.size - 1e-9)


def test_pushforward_median_matches_quadrature():
    r12, r13, r23 = ids.correlations(SIGMA)
    restr = ids.Restrictions(0.8, 1.0, -0.6, 0.6)
    samp = SurfaceSampler(r12, r13, r23, restr)
    draw = CovDraw.from_sigma(SIGMA)
    rng = np.random.default_rng(4)
    pds = [_complete(draw, *samp.sample(rng), 0.0) for _ in range(10_000)]
    med = infer_parameter(pds).median_beta
    # P(beta <= median) under the area measure, by midpoint quadrature
    n = 1000
    k = 0.8 + 0.2 * (np.arange(n) + 0.5) / n
    rho = -0.6 + 1.2 * (np.arange(n) + 0.5) / n
    kk, rr = np.meshgrid(k, rho, indexing="ij")
    m = samp.weight(kk, rr)
    beta = SIGMA[0, 2] / SIGMA[1, 2] - ids.g_shift(SIGMA, kk, rr)
    share = float(m[beta <= med].sum() / m.sum())
    assert abs(share - 0.5) <= 3 * 0.5 / math.sqrt(len(pds))
