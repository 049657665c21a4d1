import math

import numpy as np
import pytest

from ivbelief import posterior
from ivbelief.errors import NumericalError
from ivbelief.posterior import CovDraw, draw_sigma, posterior_mean, sample_inverse_wishart, stream
from ivbelief.reduced_form import ReducedFormFit, fit_reduced_form, make_dataset


def _fit(n=120, seed=0):
    r = np.random.default_rng(seed)
    z = r.normal(size=n)
    t = 0.8 * z + r.normal(size=n)
    y = 0.5 * t + r.normal(size=n)
    return fit_reduced_form(make_dataset(y, t, z, r.normal(size=(n, 2))))


def _manual_fit(s, n, k):
    d = np.sqrt(np.diag(s))
    c = s / np.outer(d, d)
    return ReducedFormFit(s / (n - k), s, n, k, c[0, 1], c[0, 2], c[1, 2], 0.0, None, "continuous")


def test_draws_are_valid_and_reproducible():
    fit = _fit()
    a = draw_sigma(fit, seed=3, count=300)
    b = draw_sigma(fit, seed=3, count=300, workers=4)
    assert len(a) == 300 and a.nu == fit.n - fit.k + 4
    for da, db in zip(a, b):
        assert np.array_equal(da.sigma, db.sigma)
        assert np.array_equal(da.sigma, da.sigma.T)
        assert np.all(np.diag(np.linalg.cholesky(da.sigma)) > 0)
        assert max(da.r12**2, da.r23**2) < da.big_l < 1.0
        big_l = (da.r12**2 + da.r23**2 - 2 * da.r12 * da.r23 * da.r13) / (1 - da.r13**2)
        assert da.big_l == big_l


def test_draw_depends_only_on_seed_and_index():
    fit = _fit()
    full = draw_sigma(fit, seed=11, count=50)
    c = np.linalg.cholesky(np.linalg.inv(fit.s))
    j = 37
    alone = posterior._raw_draw(stream(11, j), full.nu, c)
    assert np.array_equal(alone, full[j].sigma)
    other = draw_sigma(fit, seed=12, count=50)
    assert not np.array_equal(other[j].sigma, full[j].sigma)


def test_posterior_mean_is_sigma_hat():
    fit = _fit()
    assert np.array_equal(posterior_mean(fit), fit.sigma_hat)
    n, k = 40, 2
    assert np.array_equal(posterior_mean(_manual_fit((n - k) * np.eye(3), n, k)), np.eye(3))


def test_inverse_wishart_variance():
    nu, p = 20, 3
    draws = sample_inverse_wishart(nu, np.eye(3), seed=8, count=100_000)
    diag = draws[:, [0, 1, 2], [0, 1, 2]]
    var_target = 2.0 / ((nu - p - 1) ** 2 * (nu - p - 3))
    dev = (diag - diag.mean(axis=0)) ** 2
    se = dev.std(axis=0, ddof=1) / math.sqrt(dev.shape[0])
    assert np.all(np.abs(dev.mean(axis=0) - var_target) <= 5 * se)


def test_small_sample_warning():
    fit = _manual_fit(np.array([[2.0, 0.3, 0.2], [0.3, 1.0, 0.5], [0.2, 0.5, 1.0]]), n=2, k=1)
    with pytest.warns(RuntimeWarning, match="posterior mean identity"):
        draw_sigma(fit, 0, 5)


def test_redraw_budget(monkeypatch):
    monkeypatch.setattr(CovDraw, "is_regular", lambda self: False)
    with pytest.raises(NumericalError, match="degenerate region"):
        draw_sigma(_fit(), 0, 3)


def test_redraws_are_counted(monkeypatch):
    calls = {"n": 0}
    real = CovDraw.is_regular

    def flaky(self):
        calls["n"] += 1
        return real(self) and calls["n"] % 3 != 0

    monkeypatch.setattr(CovDraw, "is_regular", flaky)
    out = draw_sigma(_fit(), 0, 30)
    assert out.redraws > 0 and len(out) == 30
