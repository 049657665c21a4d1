import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from ivbelief import oracle
from ivbelief.errors import (
    DataError,
    DegenerateCovarianceError,
    InconsistentRestrictionError,
    IrrelevantInstrumentError,
    SingularDesignError,
)
from ivbelief.reduced_form import (
    fit_reduced_form,
    kappa_from_estimates,
    kappa_from_lambda,
    load_csv,
    make_dataset,
)


def test_duplicated_column_is_degenerate(rng):
    v = rng.normal(size=50)
    with pytest.raises(DegenerateCovarianceError, match="degenerate residual covariance"):
        fit_reduced_form(make_dataset(v, v, v))


def test_intercept_only_gives_sample_covariance(rng):
    y, t, z = rng.normal(size=(3, 200))
    fit = fit_reduced_form(make_dataset(y, t, z))
    assert fit.k == 1
    np.testing.assert_allclose(fit.sigma_hat, np.cov(np.vstack([y, t, z]), ddof=1), atol=1e-13)


def test_large_sample_recovers_population_sigma():
    cfg = oracle.StructuralConfig(beta=0.7, pi=0.8, psi=-0.2, tau=0.3, sigma_u=1.2, sigma_v=0.9,
                                  sigma_zeta=1.1, sigma_w=0.6, sigma_uv=0.4, sigma_uzeta=0.2)
    y, t, z, x = oracle.simulate(cfg, 1_000_000, np.random.default_rng(5), x_dim=2)
    fit = fit_reduced_form(make_dataset(y, t, z, x))
    pop = oracle.forward_sigma(cfg).sigma
    assert np.max(np.abs(fit.sigma_hat - pop)) <= 0.01 * np.max(np.abs(pop))
    np.testing.assert_allclose(np.diag(fit.sigma_hat), np.diag(pop), rtol=0.01)


def test_recoding_controls_leaves_sigma_unchanged(rng):
    n = 300
    x = rng.normal(size=(n, 3))
    y, t, z = rng.normal(size=(3, n)) + x.sum(axis=1)
    a = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    f1 = fit_reduced_form(make_dataset(y, t, z, x))
    f2 = fit_reduced_form(make_dataset(y, t, z, x @ a + 5.0 * rng.normal(size=3)))
    np.testing.assert_allclose(f1.sigma_hat, f2.sigma_hat, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_correlation_determinant_positive(seed):
    r = np.random.default_rng(seed)
    y, t, z = r.normal(size=(3, 40))
    fit = fit_reduced_form(make_dataset(y, t + 0.5 * z, z))
    det = 1 - fit.r12**2 - fit.r13**2 - fit.r23**2 + 2 * fit.r12 * fit.r13 * fit.r23
    assert det > 0
    np.linalg.cholesky(fit.sigma_hat)
    assert np.array_equal(fit.sigma_hat, fit.sigma_hat.T)


def test_singular_design(rng):
    x = rng.normal(size=(30, 1))
    with pytest.raises(SingularDesignError, match="singular design"):
        fit_reduced_form(make_dataset(*rng.normal(size=(3, 30)), np.hstack([x, 2 * x])))


def test_duplicated_constant_columns_rejected(rng):
    with pytest.raises(SingularDesignError):
        make_dataset(*rng.normal(size=(3, 30)), np.ones((30, 2)))


def test_existing_intercept_not_duplicated(rng):
    x = np.column_stack([np.ones(30), rng.normal(size=30)])
    d = make_dataset(*rng.normal(size=(3, 30)), x)
    assert d.k == 2
    d2 = make_dataset(*rng.normal(size=(3, 30)), x[:, 1])
    assert d2.k == 2 and np.all(d2.x[:, 0] == 1.0)


def test_irrelevant_instrument(rng):
    n = 60
    t = rng.normal(size=n)
    z = rng.normal(size=n)
    t, z = t - t.mean(), z - z.mean()
    z = z - (z @ t) / (t @ t) * t
    with pytest.raises(IrrelevantInstrumentError, match="irrelevant instrument"):
        fit_reduced_form(make_dataset(rng.normal(size=n), t, z))


def test_binary_validation(rng):
    y, z = rng.normal(size=(2, 20))
    with pytest.raises(DataError):
        make_dataset(y, np.ones(20), z, treatment_kind="binary")
    with pytest.raises(DataError):
        make_dataset(y, np.full(20, 0.5), z, treatment_kind="binary")
    t = (np.arange(20) % 2).astype(float)
    fit = fit_reduced_form(make_dataset(y, t, z + t, treatment_kind="binary"))
    assert fit.p_hat == 0.5


def test_binary_is_never_inferred(rng):
    t = (np.arange(20) % 2).astype(float)
    fit = fit_reduced_form(make_dataset(rng.normal(size=20), t, rng.normal(size=20) + t))
    assert fit.p_hat is None and fit.treatment_kind == "continuous"


def test_too_few_rows(rng):
    with pytest.raises(DataError):
        make_dataset(*rng.normal(size=(3, 4)))


def test_load_csv_drops_missing_rows(tmp_path, rng):
    frame = pd.DataFrame(rng.normal(size=(30, 4)), columns=["y", "t", "z", "x"])
    frame.loc[3, "t"] = np.nan
    frame.loc[7, "x"] = np.nan
    frame["unused"] = np.nan
    path = tmp_path / "d.csv"
    frame.to_csv(path, index=False)
    data = load_csv(path, "y", "t", "z", ["x"])
    assert data.n == 28 and data.dropped_rows == 2 and data.k == 2
    with pytest.raises(DataError, match="not found"):
        load_csv(path, "y", "t", "nope")


def test_kappa_from_lambda():
    assert kappa_from_lambda(0.7, 0.4) == pytest.approx(0.5)
    assert kappa_from_lambda(1.0, 0.3) == 1.0
    with pytest.raises(InconsistentRestrictionError):
        kappa_from_lambda(0.3, 0.4)


def test_kappa_from_estimates():
    assert kappa_from_estimates(0.52, 0.87) == pytest.approx(0.5977, abs=1e-4)
    assert kappa_from_estimates(1.0, 1.0) == 1.0
    with pytest.raises(InconsistentRestrictionError, match="inconsistent auxiliary estimates"):
        kappa_from_estimates(-0.3, 0.6)
    with pytest.raises(InconsistentRestrictionError):
        kappa_from_estimates(0.9, 0.6)
